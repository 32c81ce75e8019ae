//! Variational discretization of `Δᴱ = (∇ᴱ)*∇ᴱ`.
//!
//! The discrete energy is a weighted sum over quadrature points of
//! `Σ_{ij} A^{ij} ⟨D_j u, D_i v⟩` with `A = √det g · g^{-1}` and
//! `D_i = ∂_i + ω_i`. Three families of points are used:
//!
//! * normal cells `(x_a, t_{j+½})`: second-order normal differences, plus
//!   the mixed normal–tangential terms;
//! * staggered tangential points `(x_a + ½Δ e_s, t_j)`: fourth-order
//!   staggered differences and interpolation along `e_s`;
//! * nodes `(x_a, t_j)` (three dimensions only): mixed tangential terms from
//!   fourth-order centred differences.
//!
//! The stiffness matrix is Hermitian by construction and positive definite
//! on functions vanishing at `t = 0, 1` whenever `g` is.

use num_complex::Complex64;

use super::strip::StripProblem;
use crate::error::{Error, Result};

/// Fourth-order staggered derivative at `a + ½` (multiply by `1/Δ`).
pub(crate) const STAGGERED_DERIVATIVE: [(i64, f64); 4] =
    [(-1, 1.0 / 24.0), (0, -27.0 / 24.0), (1, 27.0 / 24.0), (2, -1.0 / 24.0)];
/// Fourth-order interpolation to `a + ½`.
pub(crate) const STAGGERED_INTERPOLATION: [(i64, f64); 4] =
    [(-1, -1.0 / 16.0), (0, 9.0 / 16.0), (1, 9.0 / 16.0), (2, -1.0 / 16.0)];
/// Fourth-order centred derivative at a node (multiply by `1/Δ`).
pub(crate) const CENTRED_DERIVATIVE: [(i64, f64); 4] =
    [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];

/// Local coefficients at one point.
#[derive(Clone, Debug)]
pub(crate) struct PointCoefficients {
    /// `√det g · g^{ij}`, row-major `n × n`.
    pub a: Vec<f64>,
    /// `g^{ij}`, row-major.
    pub inverse_metric: Vec<f64>,
    pub sqrt_det: f64,
    /// `ω_i` blocks, each `r × r` row-major.
    pub omega: Vec<Vec<Complex64>>,
}

fn det(n: usize, g: &[f64]) -> f64 {
    match n {
        2 => g[0] * g[3] - g[1] * g[2],
        _ => {
            g[0] * (g[4] * g[8] - g[5] * g[7]) - g[1] * (g[3] * g[8] - g[5] * g[6]) + g[2] * (g[3] * g[7] - g[4] * g[6])
        }
    }
}

fn inverse(n: usize, g: &[f64], d: f64) -> Vec<f64> {
    match n {
        2 => vec![g[3] / d, -g[1] / d, -g[2] / d, g[0] / d],
        _ => {
            let c = |i: usize, j: usize| g[i * 3 + j];
            let mut out = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    out[i * 3 + j] = (c(r0, c0) * c(r1, c1) - c(r0, c1) * c(r1, c0)) / d;
                }
            }
            out
        }
    }
}

/// Ratio of extreme eigenvalue magnitudes of a small symmetric matrix.
fn condition_estimate(n: usize, g: &[f64]) -> f64 {
    let m = nalgebra::DMatrix::from_row_slice(n, n, g);
    let eig = m.symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Evaluates and validates the coefficients at `(x, t)`.
pub(crate) fn coefficients_at(problem: &StripProblem, x: &[f64], t: f64) -> Result<PointCoefficients> {
    let (n, r) = (problem.n(), problem.r());
    let g = problem.metric().at(x, t);
    let symmetric = (0..n).all(|i| (0..n).all(|j| (g[i * n + j] - g[j * n + i]).abs() <= 1e-12 * (1.0 + g[i * n + j].abs())));
    let minors_positive = g[0] > 0.0 && (n == 2 || g[0] * g[n + 1] - g[1] * g[n] > 0.0) && det(n, &g) > 0.0;
    if !symmetric || !minors_positive || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver {
            reason: format!("metric is not symmetric positive definite at x′ = {x:?}, t = {t}"),
            condition_estimate: condition_estimate(n, &g),
        });
    }
    let d = det(n, &g);
    let inverse_metric = inverse(n, &g, d);
    let sqrt_det = d.sqrt();
    let a = inverse_metric.iter().map(|v| v * sqrt_det).collect();
    let w = problem.connection().at(x, t);
    let omega: Vec<Vec<Complex64>> = (0..n).map(|i| w[i * r * r..(i + 1) * r * r].to_vec()).collect();
    for (i, block) in omega.iter().enumerate() {
        let size = block.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for p in 0..r {
            for q in 0..r {
                if (block[p * r + q] + block[q * r + p].conj()).norm() > 1e-10 * (1.0 + size) {
                    return Err(Error::Gauge(format!("ω_{} is not skew-Hermitian at x′ = {x:?}, t = {t}", i + 1)));
                }
            }
        }
    }
    Ok(PointCoefficients { a, inverse_metric, sqrt_det, omega })
}

/// One stencil entry of a covariant derivative: contributes
/// `(d · Id + e · ω_i) u(base + offset, j)`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Tap {
    pub offset: [i64; 2],
    pub j: usize,
    pub d: f64,
    pub e: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    NormalCell,
    Staggered(usize),
    NodalMixed,
}

impl Family {
    fn includes(self, i: usize, j: usize, normal: usize) -> bool {
        match self {
            Family::NormalCell => i == normal || j == normal,
            Family::Staggered(s) => i == s && j == s,
            Family::NodalMixed => i != j && i != normal && j != normal,
        }
    }
}

/// A quadrature point with its covariant-derivative stencils.
pub(crate) struct QuadPoint {
    pub weight: f64,
    pub coeffs: PointCoefficients,
    /// `(direction, taps)`.
    pub dirs: Vec<(usize, Vec<Tap>)>,
    family: Family,
}

impl QuadPoint {
    /// Calls `emit(tap_i, tap_j, block)` for every stiffness contribution
    /// `w A^{ij} (B_{i,α})ᴴ B_{j,β}`, `block` row-major `r × r`.
    pub fn for_each_block(&self, r: usize, mut emit: impl FnMut(&Tap, &Tap, &[Complex64])) {
        let n = (self.coeffs.a.len() as f64).sqrt() as usize;
        let normal = n - 1;
        let mut block = vec![Complex64::new(0.0, 0.0); r * r];
        let b_of = |dir: usize, tap: &Tap| -> Vec<Complex64> {
            let w = &self.coeffs.omega[dir];
            (0..r * r)
                .map(|e| {
                    let id = if e / r == e % r { tap.d } else { 0.0 };
                    w[e] * tap.e + id
                })
                .collect()
        };
        for (i, taps_i) in &self.dirs {
            for (j, taps_j) in &self.dirs {
                if !self.family.includes(*i, *j, normal) {
                    continue;
                }
                let aij = self.coeffs.a[i * n + j] * self.weight;
                if aij == 0.0 {
                    continue;
                }
                for ta in taps_i {
                    let ba = b_of(*i, ta);
                    for tb in taps_j {
                        let bb = b_of(*j, tb);
                        // block = aij · baᴴ bb
                        for p in 0..r {
                            for q in 0..r {
                                let mut s = Complex64::new(0.0, 0.0);
                                for k in 0..r {
                                    s += ba[k * r + p].conj() * bb[k * r + q];
                                }
                                block[p * r + q] = s * aij;
                            }
                        }
                        emit(ta, tb, &block);
                    }
                }
            }
        }
    }
}

fn unit_offset(s: usize, o: i64) -> [i64; 2] {
    let mut v = [0i64; 2];
    v[s] = o;
    v
}

/// Quadrature points attached to layer node `base` (tangential multi-index)
/// in normal layer `j`. Normal cells exist for `j < N`.
pub(crate) fn points_at(problem: &StripProblem, base: &[usize], j: usize) -> Result<Vec<QuadPoint>> {
    let n = problem.n();
    let m = n - 1;
    let nt = problem.normal_intervals();
    let (dx, h) = (problem.tangential_spacing(), problem.normal_spacing());
    let cell = dx.powi(m as i32);
    let x: Vec<f64> = base.iter().map(|&a| a as f64 * dx).collect();
    let t = j as f64 * h;
    let layer_weight = if j == 0 || j == nt { 0.5 * h } else { h };
    let mut out = Vec::new();

    if j < nt {
        let coeffs = coefficients_at(problem, &x, t + 0.5 * h)?;
        let mut dirs = vec![(
            n - 1,
            vec![
                Tap { offset: [0, 0], j: j + 1, d: 1.0 / h, e: 0.5 },
                Tap { offset: [0, 0], j, d: -1.0 / h, e: 0.5 },
            ],
        )];
        for s in 0..m {
            if coeffs.a[s * n + n - 1] == 0.0 {
                continue;
            }
            let mut taps = Vec::new();
            for jj in [j, j + 1] {
                for &(o, c) in &CENTRED_DERIVATIVE {
                    taps.push(Tap { offset: unit_offset(s, o), j: jj, d: 0.5 * c / dx, e: 0.0 });
                }
                taps.push(Tap { offset: [0, 0], j: jj, d: 0.0, e: 0.5 });
            }
            dirs.push((s, taps));
        }
        out.push(QuadPoint { weight: h * cell, coeffs, dirs, family: Family::NormalCell });
    }

    for s in 0..m {
        let mut xs = x.clone();
        xs[s] += 0.5 * dx;
        let coeffs = coefficients_at(problem, &xs, t)?;
        let taps = STAGGERED_DERIVATIVE
            .iter()
            .zip(&STAGGERED_INTERPOLATION)
            .map(|(&(o, c), &(_, e))| Tap { offset: unit_offset(s, o), j, d: c / dx, e })
            .collect();
        out.push(QuadPoint { weight: layer_weight * cell, coeffs, dirs: vec![(s, taps)], family: Family::Staggered(s) });
    }

    if m == 2 {
        let coeffs = coefficients_at(problem, &x, t)?;
        if coeffs.a[1] != 0.0 {
            let dirs = (0..2)
                .map(|s| {
                    let mut taps: Vec<Tap> = CENTRED_DERIVATIVE
                        .iter()
                        .map(|&(o, c)| Tap { offset: unit_offset(s, o), j, d: c / dx, e: 0.0 })
                        .collect();
                    taps.push(Tap { offset: [0, 0], j, d: 0.0, e: 1.0 });
                    (s, taps)
                })
                .collect();
            out.push(QuadPoint { weight: layer_weight * cell, coeffs, dirs, family: Family::NodalMixed });
        }
    }
    Ok(out)
}

/// Covariant normal flux `(1/√g^{nn}) Σ_j g^{nj} D_j` at a boundary node,
/// as taps on the normal-layer index (`offset` in the tangential directions).
/// `top` selects the edge `t = 1`, where the one-sided difference points down.
pub(crate) fn normal_derivative_taps(problem: &StripProblem, top: bool) -> Vec<(usize, Vec<Tap>)> {
    let n = problem.n();
    let m = n - 1;
    let (dx, h) = (problem.tangential_spacing(), problem.normal_spacing());
    let nt = problem.normal_intervals();
    let (j0, j1, j2, sign) = if top { (nt, nt - 1, nt - 2, -1.0) } else { (0, 1, 2, 1.0) };
    let mut dirs = vec![(
        n - 1,
        vec![
            Tap { offset: [0, 0], j: j0, d: sign * -1.5 / h, e: 1.0 },
            Tap { offset: [0, 0], j: j1, d: sign * 2.0 / h, e: 0.0 },
            Tap { offset: [0, 0], j: j2, d: sign * -0.5 / h, e: 0.0 },
        ],
    )];
    for s in 0..m {
        let mut taps: Vec<Tap> =
            CENTRED_DERIVATIVE.iter().map(|&(o, c)| Tap { offset: unit_offset(s, o), j: j0, d: c / dx, e: 0.0 }).collect();
        taps.push(Tap { offset: [0, 0], j: j0, d: 0.0, e: 1.0 });
        dirs.push((s, taps));
    }
    dirs
}
