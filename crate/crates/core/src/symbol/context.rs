use num_complex::Complex;

use super::poly::{ScalarPoly, XiMonomial};
use crate::error::{Error, Result};
use crate::jet::{Jet, Truncation};
use crate::scalar::{ratio, Scalar};

/// Inverse metric `g^{kl}(x)` generating `q₂(x, ξ′) = Σ g^{kl} ξ_k ξ_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryContext<T: Scalar> {
    n: usize,
    r: usize,
    inverse_metric: Vec<Jet<T>>,
    q2: ScalarPoly<T>,
    dq2_dxi: Vec<ScalarPoly<T>>,
    dq2_dx: Vec<ScalarPoly<T>>,
    lead_inv: Jet<T>,
    trunc: Truncation,
}

impl<T: Scalar> GeometryContext<T> {
    /// `inverse_metric` is row-major `(n−1) × (n−1)`; jets have dimension `n`.
    pub fn new(n: usize, r: usize, inverse_metric: Vec<Jet<T>>) -> Result<Self> {
        let m = n.checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| Error::Shape(format!("dimension n = {n} < 2")))?;
        if inverse_metric.len() != m * m || inverse_metric.iter().any(|j| j.dim() != n) {
            return Err(Error::Shape(format!("inverse metric must be {m}×{m} jets of dimension {n}")));
        }
        for k in 0..m {
            for l in k + 1..m {
                let (a, b) = (&inverse_metric[k * m + l], &inverse_metric[l * m + k]);
                let scale = a.max_abs().max(b.max_abs()).max(1.0);
                if a.max_diff(b) > T::zero_threshold() * scale {
                    return Err(Error::Metric(format!("inverse metric not symmetric at ({k},{l})")));
                }
            }
        }
        check_positive_definite(m, &inverse_metric.iter().map(Jet::constant_term).collect::<Vec<_>>())?;
        let trunc = inverse_metric.iter().fold(inverse_metric[0].truncation(), |t, j| t.meet(&j.truncation()));
        let inverse_metric: Vec<Jet<T>> = inverse_metric.into_iter().map(|j| j.truncated(trunc)).collect();
        let q2 = quadratic_form(m, &inverse_metric);
        let dq2_dxi = (0..m)
            .map(|l| {
                let mut p = ScalarPoly::new();
                for k in 0..m {
                    let c = inverse_metric[k * m + l].scale(&ratio(2, 1));
                    if !c.is_zero() {
                        p.insert(XiMonomial::unit(m, k), c);
                    }
                }
                p
            })
            .collect();
        let dq2_dx = (0..n)
            .map(|j| {
                let d: Vec<Jet<T>> = inverse_metric.iter().map(|g| g.derive(j)).collect();
                quadratic_form(m, &d)
            })
            .collect();
        let lead_inv = inverse_metric[0].inverse()?;
        Ok(Self { n, r, inverse_metric, q2, dq2_dxi, dq2_dx, lead_inv, trunc })
    }

    /// Euclidean context `g^{kl} = δ^{kl}`.
    pub fn flat(n: usize, r: usize, trunc: Truncation) -> Self {
        let m = n - 1;
        let g = (0..m * m).map(|i| if i / m == i % m { Jet::one(n, trunc) } else { Jet::zero(n, trunc) }).collect();
        Self::new(n, r, g).expect("flat metric is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Number of covector components, `n − 1`.
    pub fn xi_dim(&self) -> usize {
        self.n - 1
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn inverse_metric(&self, k: usize, l: usize) -> &Jet<T> {
        &self.inverse_metric[k * self.xi_dim() + l]
    }

    pub fn inverse_metric_entries(&self) -> &[Jet<T>] {
        &self.inverse_metric
    }

    pub fn q2(&self) -> &ScalarPoly<T> {
        &self.q2
    }

    /// `∂q₂/∂ξ_l = 2 Σ_k g^{kl} ξ_k`.
    pub fn dq2_dxi(&self, l: usize) -> &ScalarPoly<T> {
        &self.dq2_dxi[l]
    }

    /// `∂q₂/∂x^j = Σ (∂_j g^{kl}) ξ_k ξ_l`.
    pub fn dq2_dx(&self, j: usize) -> &ScalarPoly<T> {
        &self.dq2_dx[j]
    }

    /// `1 / g^{11}`, the inverse leading coefficient used by division by `q₂`.
    pub(crate) fn lead_inv(&self) -> &Jet<T> {
        &self.lead_inv
    }

    /// Context with every `g^{kl}` restricted to `xⁿ = 0`.
    pub fn restrict_to_boundary(&self) -> Self {
        Self::new(self.n, self.r, self.inverse_metric.iter().map(Jet::restrict_to_boundary).collect())
            .expect("restriction keeps a valid metric")
    }

    /// Same metric, reduced reliable orders.
    pub fn truncated(&self, trunc: Truncation) -> Self {
        Self::new(self.n, self.r, self.inverse_metric.iter().map(|g| g.truncated(trunc)).collect())
            .expect("truncation keeps a valid metric")
    }

    /// `q₂(0, ξ)` as a real number.
    pub fn q2_at_origin(&self, xi: &[f64]) -> f64 {
        let m = self.xi_dim();
        let mut acc = 0.0;
        for k in 0..m {
            for l in 0..m {
                acc += self.inverse_metric(k, l).constant_term().re.to_f64_lossy() * xi[k] * xi[l];
            }
        }
        acc
    }

    /// Maximum coefficient difference of the inverse metrics.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.inverse_metric.iter().zip(&other.inverse_metric).map(|(a, b)| a.max_diff(b)).fold(0.0, f64::max)
    }
}

fn quadratic_form<T: Scalar>(m: usize, g: &[Jet<T>]) -> ScalarPoly<T> {
    let mut p = ScalarPoly::new();
    for k in 0..m {
        for l in k..m {
            let c = if k == l { g[k * m + l].clone() } else { g[k * m + l].scale(&ratio(2, 1)) };
            if !c.is_zero() {
                p.insert(XiMonomial::unit(m, k).add(&XiMonomial::unit(m, l)), c);
            }
        }
    }
    p
}

/// Cholesky test on the real part of a Hermitian constant matrix (row-major).
pub(crate) fn check_positive_definite<T: Scalar>(m: usize, a: &[Complex<T>]) -> Result<()> {
    let scale = a.iter().map(|c| c.re.to_f64_lossy().abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if a.iter().any(|c| c.im.to_f64_lossy().abs() > 1e-12 * scale) {
        return Err(Error::Metric("metric has a non-real constant term".into()));
    }
    let mut l = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j].re.to_f64_lossy();
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if !(s > 1e-12 * scale) {
                    return Err(Error::Metric(format!("constant term not positive definite (pivot {s:.3e})")));
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(())
}
