use std::collections::BTreeMap;
use std::fs;
use std::ops::RangeInclusive;

use clap::{Args, Parser, Subcommand};
use dtn_core::forward::{
    conjugate_by_gauge, factorization_residual, factorization_symbols, forward_expansion, xi_samples,
};
use dtn_core::jet::MatrixJet;
use dtn_core::laplacian::assemble_coefficients;
use dtn_core::numeric::{compare_with_symbols, conformal_check_2d, Field, StripProblem};
use dtn_core::random::phase_gauge;
use dtn_core::reconstruction::{reconstruct_all, ReconstructionOptions};
use dtn_core::symbol::SymbolTerm;
use dtn_core::{BoundaryGeometry64, ReconstructionResult64, SymbolExpansion64};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::report::{dump_term, jet_coefficients, Report, Table, Verdict};
use crate::spec::GeometrySpec;

#[derive(Debug, Parser)]
#[command(name = "dtn", version, about = "Boundary symbols of Dirichlet-to-Neumann maps and their inversion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full symbol λ₁ … λ_{1−depth} of the DtN map.
    Forward(Common),
    /// Recover the metric and connection jets from the forward symbol.
    Reconstruct(Common),
    /// Forward then reconstruct, compared with the input geometry.
    Roundtrip(Common),
    /// Sampled residual of the factorization identity, degree by degree.
    Residual(Common),
    /// Finite-difference DtN on the strip against the summed symbol.
    NumericCheck(NumericArgs),
    /// Conformal invariance of the two-dimensional DtN map.
    ConformalCheck(ConformalArgs),
    /// Gauge-transformed symbols and their reconstruction.
    GaugeCheck(GaugeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Geometry file.
    #[arg(long)]
    pub geometry: String,
    /// Number of symbol terms below the principal one.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Tolerance of the algebraic verdicts.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed of the random covector samples.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Report path; standard output when absent.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct NumericArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tangential nodes per direction (and normal intervals).
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    /// Modes `a..b` along the first tangential axis.
    #[arg(long, default_value = "1..8", value_parser = parse_range)]
    pub k: RangeInclusive<i64>,
    /// Discretization allowance added to the `k(coth k − 1)` tail bound.
    #[arg(long, default_value_t = 2e-3)]
    pub numeric_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 512)]
    pub resolution: usize,
    /// Amplitude of `μ = a·sin(x′)·t(1−t)` and of the constant factor.
    #[arg(long, default_value_t = 0.3)]
    pub amplitude: f64,
    /// Largest boundary mode in the projected comparison.
    #[arg(long, default_value_t = 4)]
    pub max_mode: i64,
    #[arg(long, default_value_t = 5e-3)]
    pub numeric_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GaugeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Phase rate of `u = exp(i c x¹)`.
    #[arg(long, default_value_t = 0.45)]
    pub c: f64,
}

fn parse_range(s: &str) -> std::result::Result<RangeInclusive<i64>, String> {
    let parsed = match s.split_once("..") {
        Some((a, b)) => a.trim().parse::<i64>().ok().zip(b.trim().trim_start_matches('=').parse::<i64>().ok()),
        None => s.trim().parse::<i64>().ok().map(|k| (k, k)),
    };
    match parsed {
        Some((a, b)) if 0 < a && a <= b => Ok(a..=b),
        _ => Err(format!("`{s}` is not a range `a..b` with 0 < a ≤ b")),
    }
}

struct Loaded {
    spec: GeometrySpec,
    geometry: BoundaryGeometry64,
    report: Report,
}

fn load(name: &str, common: &Common, extra: &[(&str, String)]) -> Result<Loaded> {
    let bytes = fs::read(&common.geometry).map_err(|source| CliError::Io { path: common.geometry.clone(), source })?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not valid UTF-8", common.geometry)))?;
    let spec = GeometrySpec::parse(&text)?;
    let geometry = spec.to_geometry()?;
    let mut options: BTreeMap<String, String> = [
        ("depth", common.depth.to_string()),
        ("geometry", common.geometry.clone()),
        ("seed", common.seed.to_string()),
        ("tol", format!("{:e}", common.tol)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    options.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
    let report = Report::new(name, options, &common.geometry, &bytes, &spec);
    Ok(Loaded { spec, geometry, report })
}

fn expansion(loaded: &Loaded, depth: usize) -> Result<SymbolExpansion64> {
    Ok(forward_expansion(&loaded.geometry, depth)?)
}

fn options(common: &Common) -> ReconstructionOptions {
    ReconstructionOptions { seed: common.seed, ..ReconstructionOptions::default() }
}

fn recovered_tables(report: &mut Report, res: &ReconstructionResult64) {
    let n = res.n;
    let m = n - 1;
    let mut metric = Table::new(&["normal_order", "k", "l", "x", "re", "im"]);
    for (p, slice) in res.inverse_metric_jets.iter().enumerate() {
        for (e, jet) in slice.iter().enumerate() {
            let (k, l) = (e / m + 1, e % m + 1);
            if k > l {
                continue;
            }
            for (x, re, im) in jet_coefficients(jet, n) {
                metric.rows.push(vec![json!(p), json!(k), json!(l), json!(x), json!(re), json!(im)]);
            }
        }
    }
    let mut connection = Table::new(&["normal_order", "k", "row", "col", "x", "re", "im"]);
    for (p, slice) in res.connection_jets.iter().enumerate() {
        for (k, w) in slice.iter().enumerate() {
            for row in 0..res.r {
                for col in 0..res.r {
                    for (x, re, im) in jet_coefficients(w.get(row, col), n) {
                        connection.rows.push(vec![
                            json!(p),
                            json!(k + 1),
                            json!(row + 1),
                            json!(col + 1),
                            json!(x),
                            json!(re),
                            json!(im),
                        ]);
                    }
                }
            }
        }
    }
    let mut steps = Table::new(&["step", "consistency_residual"]);
    for (i, r) in res.residuals.iter().enumerate() {
        steps.rows.push(vec![json!(i + 1), json!(r)]);
    }
    report.tables.insert("inverse_metric".into(), metric);
    report.tables.insert("connection".into(), connection);
    report.tables.insert("peeling".into(), steps);
    report.tables.insert(
        "obstruction".into(),
        Table { columns: vec!["conformal_obstruction".into()], rows: vec![vec![json!(res.conformal_obstruction)]] },
    );
}

fn forward(common: &Common) -> Result<Report> {
    let mut loaded = load("forward", common, &[])?;
    let e = expansion(&loaded, common.depth)?;
    loaded.report.symbols = e.terms().iter().map(dump_term).collect();
    Ok(loaded.report)
}

fn reconstruct(common: &Common) -> Result<Report> {
    let mut loaded = load("reconstruct", common, &[])?;
    let e = expansion(&loaded, common.depth)?;
    let res = reconstruct_all(&e, loaded.geometry.orthonormal_frame(), &options(common))?;
    recovered_tables(&mut loaded.report, &res);
    let worst = res.residuals.iter().copied().fold(0.0, f64::max);
    loaded.report.verdict(Verdict::at_most("peeling_consistency", worst, common.tol));
    Ok(loaded.report)
}

fn roundtrip(common: &Common) -> Result<Report> {
    let mut loaded = load("roundtrip", common, &[])?;
    let e = expansion(&loaded, common.depth)?;
    let res = reconstruct_all(&e, loaded.geometry.orthonormal_frame(), &options(common))?;
    recovered_tables(&mut loaded.report, &res);
    let dev = res.max_relative_deviation(&loaded.geometry)?;
    loaded.report.verdict(Verdict::at_most("max_relative_deviation", dev, common.tol));
    Ok(loaded.report)
}

fn residual(common: &Common) -> Result<Report> {
    let mut loaded = load("residual", common, &[])?;
    dtn_core::forward::check_orders(&loaded.geometry, common.depth)?;
    let coeffs = assemble_coefficients(&loaded.geometry)?;
    let a = factorization_symbols(&coeffs, common.depth)?;
    let samples = xi_samples(loaded.spec.n - 1, 16, common.seed);
    let entries = factorization_residual(&coeffs, &a, common.depth, &samples)?;
    let mut table = Table::new(&["degree", "sampled_norm"]);
    for r in &entries {
        table.rows.push(vec![json!(r.degree), json!(r.norm)]);
    }
    loaded.report.tables.insert("factorization_residual".into(), table);
    let worst = entries.iter().map(|r| r.norm).fold(0.0, f64::max);
    loaded.report.verdict(Verdict::at_most("factorization_residual", worst, common.tol));
    Ok(loaded.report)
}

fn complex_pair(z: Complex64) -> [Value; 2] {
    [json!(z.re), json!(z.im)]
}

fn numeric_check(args: &NumericArgs) -> Result<Report> {
    let common = &args.common;
    let extra = [
        ("k", format!("{}..{}", args.k.start(), args.k.end())),
        ("numeric_tol", format!("{:e}", args.numeric_tol)),
        ("resolution", args.resolution.to_string()),
    ];
    let mut loaded = load("numeric-check", common, &extra)?;
    let e = expansion(&loaded, common.depth)?;
    let problem = StripProblem::from_geometry(&loaded.geometry, args.resolution)?;
    let ks: Vec<i64> = args.k.clone().collect();
    let cmp = compare_with_symbols(&problem, &e, &ks)?;
    let mut table = Table::new(&["k", "numeric_re", "numeric_im", "symbolic_re", "symbolic_im", "error", "bound"]);
    let mut worst_excess = f64::NEG_INFINITY;
    for row in &cmp.rows {
        let k = row.k as f64;
        // on the flat unit strip Λ(k) = −k coth k, which the symbol −k misses by this tail
        let bound = k * (1.0 / k.tanh() - 1.0) + args.numeric_tol;
        worst_excess = worst_excess.max(row.error - bound);
        let [nr, ni] = complex_pair(row.numeric[0]);
        let [sr, si] = complex_pair(row.symbolic[0]);
        table.rows.push(vec![json!(row.k), nr, ni, sr, si, json!(row.error), json!(bound)]);
    }
    loaded.report.tables.insert("dtn_vs_symbol".into(), table);
    loaded.report.tables.insert(
        "decay".into(),
        Table { columns: vec!["decay_exponent".into()], rows: vec![vec![json!(cmp.decay_exponent)]] },
    );
    // every row within its own bound ⇔ the largest excess is ≤ 0
    loaded.report.verdict(Verdict::at_most("error_minus_bound", worst_excess, 0.0));
    Ok(loaded.report)
}

fn conformal_check(args: &ConformalArgs) -> Result<Report> {
    let common = &args.common;
    let extra = [
        ("amplitude", format!("{:e}", args.amplitude)),
        ("max_mode", args.max_mode.to_string()),
        ("numeric_tol", format!("{:e}", args.numeric_tol)),
        ("resolution", args.resolution.to_string()),
    ];
    let mut loaded = load("conformal-check", common, &extra)?;
    if loaded.spec.n != 2 {
        return Err(CliError::Input(format!("conformal-check needs dimension 2, the geometry has {}", loaded.spec.n)));
    }
    let problem = StripProblem::from_geometry(&loaded.geometry, args.resolution)?;
    let a = args.amplitude;
    let bump = Field::general(move |x: &[f64], t| a * x[0].sin() * t * (1.0 - t));
    let constant = Field::profile(move |_| a);
    let mut table = Table::new(&["factor", "max_projected_difference"]);
    for (name, mu) in [("sin_bump", bump), ("constant", constant)] {
        let v = conformal_check_2d(&problem, mu, args.max_mode)?;
        table.rows.push(vec![json!(name), json!(v)]);
        loaded.report.verdict(Verdict::at_most(format!("conformal_{name}"), v, args.numeric_tol));
    }
    loaded.report.tables.insert("conformal".into(), table);
    Ok(loaded.report)
}

fn gauge_check(args: &GaugeArgs) -> Result<Report> {
    let common = &args.common;
    let mut loaded = load("gauge-check", common, &[("c", format!("{:e}", args.c))])?;
    let geom = &loaded.geometry;
    let (n, r, trunc) = (geom.n(), geom.r(), geom.truncation());
    let e = expansion(&loaded, common.depth)?;

    // exp(i c x¹) shifts ω₁ by i c
    let u = phase_gauge(n, r, trunc, args.c);
    let conj = conjugate_by_gauge(&e, &u)?;
    let res = reconstruct_all(&conj, geom.orthonormal_frame(), &options(common))?;
    let mut connection = geom.connection_entries().to_vec();
    let shift = MatrixJet::from_constant(r, n, trunc, &identity(r, Complex64::new(0.0, args.c)));
    connection[0] = connection[0].try_add(&shift)?;
    let shifted = BoundaryGeometry64::new(n, r, geom.metric_entries().to_vec(), connection, geom.orthonormal_frame())?;
    let dev = res.max_relative_deviation(&shifted)?;
    recovered_tables(&mut loaded.report, &res);

    // constant unitary U: the symbol of U⁻¹ΛU is U⁻¹ λ_j U term by term
    let unitary = givens(r);
    let uj = MatrixJet::from_constant(r, n, trunc.boundary(), &unitary);
    let uinv = MatrixJet::from_constant(r, n, trunc.boundary(), &adjoint(r, &unitary));
    let ctx = e.ctx();
    let conj_u = conjugate_by_gauge(&e, &uj)?;
    let mut worst = 0.0f64;
    let mut table = Table::new(&["degree", "max_coefficient_difference"]);
    for (t, c) in e.terms().iter().zip(conj_u.terms()) {
        let left = SymbolTerm::multiplication(ctx, &uinv);
        let right = SymbolTerm::multiplication(ctx, &uj);
        let direct = left.mul(&t.mul(&right, ctx)?, ctx)?;
        let d = direct.max_diff(c, ctx)?;
        worst = worst.max(d);
        table.rows.push(vec![json!(t.degree()), json!(d)]);
    }
    loaded.report.tables.insert("constant_unitary".into(), table);
    loaded.report.verdict(Verdict::at_most("phase_gauge_connection", dev, common.tol));
    loaded.report.verdict(Verdict::at_most("constant_unitary_conjugation", worst, common.tol));
    Ok(loaded.report)
}

fn identity(r: usize, c: Complex64) -> Vec<Complex64> {
    (0..r * r).map(|e| if e / r == e % r { c } else { Complex64::new(0.0, 0.0) }).collect()
}

/// A fixed unitary mixing the first two frame vectors with a phase
/// (a pure phase when `r = 1`).
fn givens(r: usize) -> Vec<Complex64> {
    let (theta, phi) = (0.7f64, 0.3f64);
    if r == 1 {
        return vec![Complex64::from_polar(1.0, theta)];
    }
    let mut u = identity(r, Complex64::new(1.0, 0.0));
    let (c, s) = (theta.cos(), theta.sin());
    u[0] = Complex64::new(c, 0.0);
    u[1] = -Complex64::from_polar(s, -phi);
    u[r] = Complex64::from_polar(s, phi);
    u[r + 1] = Complex64::new(c, 0.0);
    u
}

fn adjoint(r: usize, a: &[Complex64]) -> Vec<Complex64> {
    (0..r * r).map(|e| a[(e % r) * r + e / r].conj()).collect()
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Forward(c) | Command::Reconstruct(c) | Command::Roundtrip(c) | Command::Residual(c) => c,
            Command::NumericCheck(a) => &a.common,
            Command::ConformalCheck(a) => &a.common,
            Command::GaugeCheck(a) => &a.common,
        }
    }
}

/// Runs one subcommand and writes its report. `Ok(true)` when every
/// verdict passed.
pub fn execute(cli: &Cli) -> Result<bool> {
    let report = match &cli.command {
        Command::Forward(c) => forward(c)?,
        Command::Reconstruct(c) => reconstruct(c)?,
        Command::Roundtrip(c) => roundtrip(c)?,
        Command::Residual(c) => residual(c)?,
        Command::NumericCheck(a) => numeric_check(a)?,
        Command::ConformalCheck(a) => conformal_check(a)?,
        Command::GaugeCheck(a) => gauge_check(a)?,
    };
    let text = report.to_json();
    match &cli.command.common().out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.clone(), source })?,
        None => print!("{text}"),
    }
    Ok(report.pass)
}
