//! Line-oriented geometry files.
//!
//! ```text
//! # comment
//! dimension 3
//! rank 1
//! orders 5 3
//! orthonormal_frame true
//! metric 1 1 (0,0,0) 1
//! metric 1 1 (0,0,1) -2
//! connection 1 1 1 (0,0,0) 0 0.35
//! ```
//!
//! `orders K_t K_n` is the rectangular truncation: tangential total degree
//! `≤ K_t`, normal exponent `≤ K_n`. A `metric k l (α) v` line sets the
//! coefficient of `x^α` in `g_{kl}` (`1 ≤ k ≤ l ≤ n−1`; the lower triangle
//! is filled in by symmetry). A `connection k i j (α) re im` line sets the
//! coefficient of `x^α` in entry `(i, j)` of `ω_k`. Indices are 1-based,
//! multi-indices list the exponents of `x¹ … xⁿ`, absent coefficients are
//! zero. `orthonormal_frame` defaults to `true`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dtn_core::jet::{Jet, MatrixJet, MultiIndex, Truncation, MAX_NORMAL_ORDER, MAX_VARS};
use dtn_core::BoundaryGeometry64;
use num_complex::Complex64;

use crate::error::{CliError, ParseError};

/// `(k, l, α)` with `k ≤ l`, 1-based.
pub type MetricKey = (usize, usize, Vec<u32>);
/// `(k, row, col, α)`, 1-based.
pub type ConnectionKey = (usize, usize, usize, Vec<u32>);

#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    pub n: usize,
    pub r: usize,
    pub tangential_order: usize,
    pub normal_order: usize,
    pub orthonormal_frame: bool,
    pub metric: BTreeMap<MetricKey, f64>,
    pub connection: BTreeMap<ConnectionKey, Complex64>,
}

struct Line<'a> {
    number: usize,
    fields: Vec<&'a str>,
}

impl Line<'_> {
    fn error(&self, field: &str, message: impl Into<String>) -> ParseError {
        ParseError { line: self.number, field: field.to_string(), message: message.into() }
    }

    fn arity(&self, count: usize, usage: &str) -> Result<(), ParseError> {
        if self.fields.len() == count {
            Ok(())
        } else {
            Err(self.error(self.fields[0], format!("expected `{usage}`")))
        }
    }

    fn integer(&self, pos: usize, field: &str) -> Result<usize, ParseError> {
        self.fields[pos].parse().map_err(|_| self.error(field, format!("`{}` is not a non-negative integer", self.fields[pos])))
    }

    fn index(&self, pos: usize, field: &str, max: usize) -> Result<usize, ParseError> {
        let v = self.integer(pos, field)?;
        if (1..=max).contains(&v) {
            Ok(v)
        } else {
            Err(self.error(field, format!("{v} is outside 1..={max}")))
        }
    }

    fn real(&self, pos: usize, field: &str) -> Result<f64, ParseError> {
        match self.fields[pos].parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(field, format!("`{}` is not a finite number", self.fields[pos]))),
        }
    }

    fn multi_index(&self, pos: usize, n: usize) -> Result<Vec<u32>, ParseError> {
        let raw = self.fields[pos];
        let inner = raw
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| self.error("multi_index", format!("`{raw}` is not a parenthesized tuple")))?;
        let exps = inner
            .split(',')
            .map(|e| e.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| self.error("multi_index", format!("`{raw}` has a non-integer exponent")))?;
        if exps.len() != n {
            return Err(self.error("multi_index", format!("`{raw}` has {} exponents, expected {n}", exps.len())));
        }
        Ok(exps)
    }
}

/// Splits a line into whitespace-separated fields, keeping a
/// parenthesized multi-index together even if it contains spaces.
fn split_fields(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = None;
    let mut depth = 0usize;
    for (i, c) in text.char_indices() {
        match c {
            '(' => {
                depth += 1;
                start.get_or_insert(i);
            }
            ')' => depth = depth.saturating_sub(1),
            c if c.is_whitespace() && depth == 0 => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
            }
            _ => {
                start.get_or_insert(i);
            }
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    out
}

impl GeometrySpec {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let lines: Vec<Line> = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let body = raw.split('#').next().unwrap_or("");
                let fields = split_fields(body);
                (!fields.is_empty()).then_some(Line { number: i + 1, fields })
            })
            .collect();

        let mut n = None;
        let mut r = None;
        let mut orders = None;
        let mut frame = None;
        let once = |line: &Line, slot: bool| {
            if slot {
                Err(line.error(line.fields[0], "given more than once"))
            } else {
                Ok(())
            }
        };
        for line in &lines {
            match line.fields[0] {
                "dimension" => {
                    once(line, n.is_some())?;
                    line.arity(2, "dimension <n>")?;
                    let v = line.integer(1, "dimension")?;
                    if !(2..=MAX_VARS).contains(&v) {
                        return Err(line.error("dimension", format!("n = {v} is outside 2..={MAX_VARS}")));
                    }
                    n = Some(v);
                }
                "rank" => {
                    once(line, r.is_some())?;
                    line.arity(2, "rank <r>")?;
                    let v = line.integer(1, "rank")?;
                    if v == 0 {
                        return Err(line.error("rank", "the bundle rank must be positive"));
                    }
                    r = Some(v);
                }
                "orders" => {
                    once(line, orders.is_some())?;
                    line.arity(3, "orders <K_t> <K_n>")?;
                    let kt = line.integer(1, "K_t")?;
                    let kn = line.integer(2, "K_n")?;
                    if kn > MAX_NORMAL_ORDER {
                        return Err(line.error("K_n", format!("normal order {kn} exceeds {MAX_NORMAL_ORDER}")));
                    }
                    if kt > u8::MAX as usize {
                        return Err(line.error("K_t", format!("tangential order {kt} is too large")));
                    }
                    orders = Some((kt, kn));
                }
                "orthonormal_frame" => {
                    once(line, frame.is_some())?;
                    line.arity(2, "orthonormal_frame <true|false>")?;
                    frame = Some(match line.fields[1] {
                        "true" => true,
                        "false" => false,
                        other => return Err(line.error("orthonormal_frame", format!("`{other}` is not true or false"))),
                    });
                }
                "metric" | "connection" => {}
                other => return Err(line.error("keyword", format!("unknown keyword `{other}`"))),
            }
        }
        let missing = |what: &str| ParseError { line: 0, field: what.to_string(), message: "missing header line".into() };
        let n = n.ok_or_else(|| missing("dimension"))?;
        let r = r.ok_or_else(|| missing("rank"))?;
        let (kt, kn) = orders.ok_or_else(|| missing("orders"))?;
        let trunc = Truncation::rect(kt, kn);

        let mut spec = GeometrySpec {
            n,
            r,
            tangential_order: kt,
            normal_order: kn,
            orthonormal_frame: frame.unwrap_or(true),
            metric: BTreeMap::new(),
            connection: BTreeMap::new(),
        };
        let admitted = |line: &Line, exps: &[u32]| {
            if trunc.admits(&MultiIndex::new(exps)) {
                Ok(())
            } else {
                Err(line.error("multi_index", format!("{exps:?} lies outside orders ({kt}, {kn})")))
            }
        };
        for line in &lines {
            match line.fields[0] {
                "metric" => {
                    line.arity(5, "metric <k> <l> (<α>) <value>")?;
                    let k = line.index(1, "k", n - 1)?;
                    let l = line.index(2, "l", n - 1)?;
                    if k > l {
                        return Err(line.error("k", format!("only upper-triangle entries are accepted (k = {k} > l = {l})")));
                    }
                    let exps = line.multi_index(3, n)?;
                    admitted(line, &exps)?;
                    let v = line.real(4, "value")?;
                    if spec.metric.insert((k, l, exps), v).is_some() {
                        return Err(line.error("metric", "duplicate entry"));
                    }
                }
                "connection" => {
                    line.arity(7, "connection <k> <row> <col> (<α>) <re> <im>")?;
                    let k = line.index(1, "k", n - 1)?;
                    let row = line.index(2, "row", r)?;
                    let col = line.index(3, "col", r)?;
                    let exps = line.multi_index(4, n)?;
                    admitted(line, &exps)?;
                    let v = Complex64::new(line.real(5, "re")?, line.real(6, "im")?);
                    if spec.connection.insert((k, row, col, exps), v).is_some() {
                        return Err(line.error("connection", "duplicate entry"));
                    }
                }
                _ => {}
            }
        }
        Ok(spec)
    }

    /// Canonical text: header, then metric and connection lines in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let tuple = |exps: &[u32]| format!("({})", exps.iter().map(u32::to_string).collect::<Vec<_>>().join(","));
        let _ = writeln!(out, "dimension {}", self.n);
        let _ = writeln!(out, "rank {}", self.r);
        let _ = writeln!(out, "orders {} {}", self.tangential_order, self.normal_order);
        let _ = writeln!(out, "orthonormal_frame {}", self.orthonormal_frame);
        for ((k, l, exps), v) in &self.metric {
            let _ = writeln!(out, "metric {k} {l} {} {v:?}", tuple(exps));
        }
        for ((k, row, col, exps), v) in &self.connection {
            let _ = writeln!(out, "connection {k} {row} {col} {} {:?} {:?}", tuple(exps), v.re, v.im);
        }
        out
    }

    pub fn truncation(&self) -> Truncation {
        Truncation::rect(self.tangential_order, self.normal_order)
    }

    pub fn to_geometry(&self) -> Result<BoundaryGeometry64, CliError> {
        let (n, r, m) = (self.n, self.r, self.n - 1);
        let trunc = self.truncation();
        let mut metric = vec![Jet::zero(n, trunc); m * m];
        for ((k, l, exps), v) in &self.metric {
            let c = Complex64::new(*v, 0.0);
            metric[(k - 1) * m + (l - 1)].set(MultiIndex::new(exps), c);
            if k != l {
                metric[(l - 1) * m + (k - 1)].set(MultiIndex::new(exps), c);
            }
        }
        let mut connection = vec![MatrixJet::zero(r, n, trunc); m];
        for ((k, row, col, exps), v) in &self.connection {
            let w = &mut connection[k - 1];
            let mut entry = w.get(row - 1, col - 1).clone();
            entry.set(MultiIndex::new(exps), *v);
            w.set(row - 1, col - 1, entry);
        }
        Ok(BoundaryGeometry64::new(n, r, metric, connection, self.orthonormal_frame)?)
    }

    /// Inverse of [`Self::to_geometry`] for rectangular truncations.
    pub fn from_geometry(geom: &BoundaryGeometry64) -> Result<Self, CliError> {
        let trunc = geom.truncation();
        let (kt, kn) = (trunc.tangential_order().unwrap_or(0), trunc.normal_order().unwrap_or(0));
        if trunc.is_exhausted() || trunc != Truncation::rect(kt, kn) {
            return Err(CliError::Input("only rectangular truncations can be written to a geometry file".into()));
        }
        let (n, m) = (geom.n(), geom.n() - 1);
        let mut metric = BTreeMap::new();
        for k in 0..m {
            for l in k..m {
                for (mi, c) in geom.metric(k, l).coeffs() {
                    metric.insert((k + 1, l + 1, exponents(mi, n)), c.re);
                }
            }
        }
        let mut connection = BTreeMap::new();
        for k in 0..m {
            let w = geom.connection(k);
            for row in 0..geom.r() {
                for col in 0..geom.r() {
                    for (mi, c) in w.get(row, col).coeffs() {
                        connection.insert((k + 1, row + 1, col + 1, exponents(mi, n)), *c);
                    }
                }
            }
        }
        Ok(GeometrySpec {
            n,
            r: geom.r(),
            tangential_order: kt,
            normal_order: kn,
            orthonormal_frame: geom.orthonormal_frame(),
            metric,
            connection,
        })
    }
}

pub(crate) fn exponents(mi: &MultiIndex, len: usize) -> Vec<u32> {
    (0..len).map(|v| mi.get(v)).collect()
}
