use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::discrete::{coefficients_at, normal_derivative_taps, PointCoefficients, Tap};
use super::solve::{column_points, mode_operator, plane_wave, BoundaryData, DirichletSolver, GridFunction};
use super::strip::{Field, StripProblem};
use crate::error::{Error, Result};
use crate::forward::evaluate_sum;
use crate::scalar::Scalar;
use crate::symbol::SymbolExpansion;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The numeric DtN map on one tangential Fourier mode.
#[derive(Clone, Debug, PartialEq)]
pub struct DtnSample {
    /// Integer tangential frequency (`n − 1` components).
    pub mode: Vec<i64>,
    /// `r × r`: column `c` is the mode-`k` coefficient of `Λ(e^{i k·x′} e_c)`.
    pub value: DMatrix<Complex64>,
}

/// `(1/√g^{nn}) Σ_j g^{nj} B_j` with `B_j = Σ_taps (d + e ω_j) u(tap)`.
fn flux(coeffs: &PointCoefficients, dirs: &[(usize, Vec<Tap>)], r: usize, n: usize, u: impl Fn(&Tap) -> DMatrix<Complex64>) -> DMatrix<Complex64> {
    let normal = n - 1;
    let gnn = coeffs.inverse_metric[normal * n + normal];
    let mut out: Option<DMatrix<Complex64>> = None;
    for (dir, taps) in dirs {
        let w = coeffs.inverse_metric[normal * n + dir] / gnn.sqrt();
        if w == 0.0 {
            continue;
        }
        let omega = DMatrix::from_row_slice(r, r, &coeffs.omega[*dir]);
        for tap in taps {
            let b = DMatrix::<Complex64>::identity(r, r) * Complex64::from(tap.d) + &omega * Complex64::from(tap.e);
            let term = b * u(tap) * Complex64::from(w);
            out = Some(match out {
                Some(acc) => acc + term,
                None => term,
            });
        }
    }
    out.unwrap_or_else(|| DMatrix::zeros(r, 0))
}

/// Applies the numeric DtN map to boundary data: the covariant derivative
/// of the harmonic extension along the inward unit normal at `t = 0`.
pub fn boundary_dtn(problem: &StripProblem, sigma: &BoundaryData) -> Result<BoundaryData> {
    let u = DirichletSolver::new(problem)?.solve(sigma)?;
    flux_of(problem, &u)
}

/// Inward normal flux of a grid function at `t = 0`.
pub(crate) fn flux_of(problem: &StripProblem, u: &GridFunction) -> Result<BoundaryData> {
    edge_flux(problem, u, false)
}

/// Normal flux at `t = 0` (inward) or `t = 1` (along `+t`).
pub(crate) fn edge_flux(problem: &StripProblem, u: &GridFunction, top: bool) -> Result<BoundaryData> {
    let (n, r, l) = (problem.n(), problem.r(), problem.layer_size());
    let dirs = normal_derivative_taps(problem, top);
    let t = if top { 1.0 } else { 0.0 };
    let mut out = vec![ZERO; l * r];
    for a in 0..l {
        let base = problem.layer_multi_index(a);
        let coeffs = coefficients_at(problem, &problem.node_position(a), t)?;
        let f = flux(&coeffs, &dirs, r, n, |tap| {
            let idx: Vec<i64> = base.iter().zip(&tap.offset).map(|(&b, &o)| b as i64 + o).collect();
            DMatrix::from_column_slice(r, 1, u.at(problem.layer_index(&idx), tap.j))
        });
        for p in 0..r {
            out[a * r + p] = f[(p, 0)];
        }
    }
    Ok(out)
}

/// Fourier coefficient of boundary data on mode `k`: `(1/L) Σ_a e^{−i k·x_a} f_a`.
pub(crate) fn project(problem: &StripProblem, f: &BoundaryData, k: &[i64]) -> Vec<Complex64> {
    let r = problem.r();
    let wave = plane_wave(problem, k, 0);
    let mut out = vec![ZERO; r];
    for a in 0..problem.layer_size() {
        for (p, o) in out.iter_mut().enumerate() {
            *o += wave[a * r].conj() * f[a * r + p];
        }
    }
    let s = 1.0 / problem.layer_size() as f64;
    out.iter_mut().for_each(|v| *v *= s);
    out
}

fn check_mode(problem: &StripProblem, k: &[i64]) -> Result<()> {
    if k.len() != problem.n() - 1 {
        return Err(Error::Shape(format!("mode needs {} components", problem.n() - 1)));
    }
    let limit = (problem.tangential_nodes() / 2) as i64;
    if k.iter().any(|v| v.abs() >= limit) {
        return Err(Error::Shape(format!("mode {k:?} is not resolved by {} nodes", problem.tangential_nodes())));
    }
    Ok(())
}

/// Numeric DtN map on several modes, reusing one factorization.
pub fn dtn_samples(problem: &StripProblem, modes: &[Vec<i64>]) -> Result<Vec<DtnSample>> {
    for k in modes {
        check_mode(problem, k)?;
    }
    let (n, r) = (problem.n(), problem.r());
    if problem.is_translation_invariant() {
        // Plane waves are exact eigenvectors: solve each mode on its own.
        let column = column_points(problem)?;
        let dirs = normal_derivative_taps(problem, false);
        let coeffs = coefficients_at(problem, &vec![0.0; n - 1], 0.0)?;
        let dx = problem.tangential_spacing();
        return modes
            .par_iter()
            .map(|k| {
                let kf: Vec<f64> = k.iter().map(|&v| v as f64).collect();
                let layers = mode_operator(problem, &column, &kf).factor()?.solve_dirichlet(&DMatrix::identity(r, r));
                let value = flux(&coeffs, &dirs, r, n, |tap| {
                    let s: f64 = kf.iter().zip(&tap.offset).map(|(a, &o)| a * o as f64).sum();
                    &layers[tap.j] * Complex64::from_polar(1.0, s * dx)
                });
                Ok(DtnSample { mode: k.clone(), value })
            })
            .collect();
    }
    let mut solver = DirichletSolver::new(problem)?;
    let mut out = Vec::with_capacity(modes.len());
    for k in modes {
        let mut value = DMatrix::zeros(r, r);
        for c in 0..r {
            let u = solver.solve(&plane_wave(problem, k, c))?;
            let coeffs = project(problem, &flux_of(problem, &u)?, k);
            for p in 0..r {
                value[(p, c)] = coeffs[p];
            }
        }
        out.push(DtnSample { mode: k.clone(), value });
    }
    Ok(out)
}

/// Numeric DtN map on the tangential mode `k`.
pub fn dtn_apply_numeric(problem: &StripProblem, k: &[i64]) -> Result<DtnSample> {
    Ok(dtn_samples(problem, &[k.to_vec()])?.remove(0))
}

/// One row of a symbol comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub k: i64,
    pub numeric: Vec<Complex64>,
    pub symbolic: Vec<Complex64>,
    /// Largest entry of `|numeric − symbolic|`.
    pub error: f64,
}

/// Numeric DtN against the summed symbol expansion at `ξ′ = (k, 0, …)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolComparison {
    pub rows: Vec<ComparisonRow>,
    /// Least-squares slope of `log e(k)` against `log k` (`NaN` with fewer
    /// than two positive errors).
    pub decay_exponent: f64,
}

/// Compares the numeric DtN with `Σ_j λ_j(k)` for each `k` (along the first
/// tangential axis, `k > 0`).
pub fn compare_with_symbols<T: Scalar>(
    problem: &StripProblem,
    expansion: &SymbolExpansion<T>,
    ks: &[i64],
) -> Result<SymbolComparison> {
    if expansion.rank() != problem.r() || expansion.ctx().n() != problem.n() {
        return Err(Error::Shape("expansion and problem disagree on dimension or rank".into()));
    }
    let m = problem.n() - 1;
    let modes: Vec<Vec<i64>> = ks
        .iter()
        .map(|&k| {
            let mut v = vec![0; m];
            v[0] = k;
            v
        })
        .collect();
    let samples = dtn_samples(problem, &modes)?;
    let mut rows = Vec::with_capacity(ks.len());
    for (&k, s) in ks.iter().zip(samples) {
        let mut xi = vec![0.0; m];
        xi[0] = k as f64;
        let symbolic = evaluate_sum(expansion, &xi)?;
        let r = problem.r();
        let numeric: Vec<Complex64> = (0..r * r).map(|e| s.value[(e / r, e % r)]).collect();
        let error = numeric.iter().zip(&symbolic).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        rows.push(ComparisonRow { k, numeric, symbolic, error });
    }
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|row| row.error > 0.0 && row.k > 0).map(|row| ((row.k as f64).ln(), row.error.ln())).collect();
    let decay_exponent = if pts.len() < 2 {
        f64::NAN
    } else {
        let c = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / c, pts.iter().map(|p| p.1).sum::<f64>() / c);
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    };
    Ok(SymbolComparison { rows, decay_exponent })
}

/// Largest entry of `Λ_{e^μ g} − e^{−μ/2}|_{t=0} Λ_g` between modes `|k|, |k′| ≤ K`
/// of a two-dimensional strip.
pub fn conformal_check_2d(problem: &StripProblem, mu: Field<f64>, max_mode: i64) -> Result<f64> {
    if problem.n() != 2 {
        return Err(Error::Shape("the conformal check needs n = 2".into()));
    }
    let r = problem.r();
    let scaled = problem.conformally_scaled(mu.clone());
    let mut base_solver = DirichletSolver::new(problem)?;
    let mut scaled_solver = DirichletSolver::new(&scaled)?;
    let factor: Vec<f64> =
        (0..problem.layer_size()).map(|a| (-0.5 * mu.at(&problem.node_position(a), 0.0)).exp()).collect();
    let mut worst = 0.0f64;
    for k in -max_mode..=max_mode {
        check_mode(problem, &[k])?;
        for c in 0..r {
            let sigma = plane_wave(problem, &[k], c);
            let base = flux_of(problem, &base_solver.solve(&sigma)?)?;
            let conf = flux_of(&scaled, &scaled_solver.solve(&sigma)?)?;
            let diff: BoundaryData =
                conf.iter().enumerate().map(|(i, v)| v - base[i] * factor[i / r]).collect();
            for kk in -max_mode..=max_mode {
                for v in project(problem, &diff, &[kk]) {
                    worst = worst.max(v.norm());
                }
            }
        }
    }
    Ok(worst)
}
