//! JSON reports.
//!
//! Every field is emitted in a fixed order (struct order, or sorted keys for
//! maps) and floats use the shortest round-trip representation, so identical
//! inputs give byte-identical reports.

use std::collections::BTreeMap;

use dtn_core::jet::{Jet, MatrixJet};
use dtn_core::SymbolTerm64;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::spec::{exponents, GeometrySpec};

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: String,
    pub command: CommandEcho,
    pub input: InputEcho,
    pub symbols: Vec<TermDump>,
    pub tables: BTreeMap<String, Table>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandEcho {
    pub name: String,
    pub options: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputEcho {
    pub path: String,
    pub sha256: String,
    pub n: usize,
    pub r: usize,
    pub orders: [usize; 2],
}

/// One homogeneous term `λ_j`, as its two `q₂`-power parts.
#[derive(Clone, Debug, Serialize)]
pub struct TermDump {
    pub degree: i32,
    pub parts: Vec<PartDump>,
}

/// `Σ_m N_m(x) ξ^m · q₂^{twice_power/2}`; one coefficient per
/// `(ξ-monomial, row, col, x-monomial)`.
#[derive(Clone, Debug, Serialize)]
pub struct PartDump {
    pub twice_power: i32,
    pub coefficients: Vec<Coefficient>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Coefficient {
    pub xi: Vec<u32>,
    pub row: usize,
    pub col: usize,
    pub x: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    /// Passes when `value ≤ tolerance` (a `NaN` value fails).
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }
}

impl Report {
    pub fn new(name: &str, options: BTreeMap<String, String>, path: &str, bytes: &[u8], spec: &GeometrySpec) -> Self {
        Self {
            tool: format!("dtn {}", env!("CARGO_PKG_VERSION")),
            command: CommandEcho { name: name.to_string(), options },
            input: InputEcho {
                path: path.to_string(),
                sha256: sha256_hex(bytes),
                n: spec.n,
                r: spec.r,
                orders: [spec.tangential_order, spec.normal_order],
            },
            symbols: Vec::new(),
            tables: BTreeMap::new(),
            verdicts: Vec::new(),
            pass: true,
        }
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.pass &= v.pass;
        self.verdicts.push(v);
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn dump_term(t: &SymbolTerm64) -> TermDump {
    let n = t.dim();
    let parts = (0..2)
        .map(|parity| {
            let part = t.part(parity);
            let mut coefficients = Vec::new();
            for (xi, m) in &part.numerator {
                let xi = exponents(xi, xi.len());
                coefficients.extend(matrix_coefficients(m, n).into_iter().map(|(row, col, x, re, im)| Coefficient {
                    xi: xi.clone(),
                    row,
                    col,
                    x,
                    re,
                    im,
                }));
            }
            PartDump { twice_power: part.twice_power, coefficients }
        })
        .filter(|p| !p.coefficients.is_empty())
        .collect();
    TermDump { degree: t.degree(), parts }
}

/// Non-zero coefficients of a jet as `(x-exponents, re, im)`.
pub fn jet_coefficients(j: &Jet<f64>, n: usize) -> Vec<(Vec<u32>, f64, f64)> {
    j.coeffs().map(|(mi, c)| (exponents(mi, n), c.re, c.im)).collect()
}

fn matrix_coefficients(m: &MatrixJet<f64>, n: usize) -> Vec<(usize, usize, Vec<u32>, f64, f64)> {
    let r = m.rank();
    let mut out = Vec::new();
    for row in 0..r {
        for col in 0..r {
            for (x, re, im) in jet_coefficients(m.get(row, col), n) {
                out.push((row + 1, col + 1, x, re, im));
            }
        }
    }
    out
}
