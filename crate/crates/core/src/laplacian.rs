//! Boundary-normal-gauge geometry and the coefficients of
//! `−L = D_n² + iF·D_n + Q(x, D_{x′})`, where `L` is the (non-positive)
//! connection Laplacian.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::jet::{Jet, MatrixJet, MultiIndex, Truncation};
use crate::scalar::{imag_unit, magnitude, ratio, Scalar};
use crate::symbol::{check_positive_definite, GeometryContext, SymbolTerm, XiMonomial};

/// Jets of `g_{kl}` (tangential block) and `ω_k` at a boundary point.
///
/// The gauge is structural: `g_{nn} = 1`, `g_{kn} = 0` and `ω_n = 0` are
/// never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryGeometry<T: Scalar> {
    n: usize,
    r: usize,
    metric: Vec<Jet<T>>,
    connection: Vec<MatrixJet<T>>,
    orthonormal_frame: bool,
}

impl<T: Scalar> BoundaryGeometry<T> {
    /// `metric` is row-major `(n−1) × (n−1)`, `connection` holds `ω_1 … ω_{n−1}`.
    pub fn new(
        n: usize,
        r: usize,
        metric: Vec<Jet<T>>,
        connection: Vec<MatrixJet<T>>,
        orthonormal_frame: bool,
    ) -> Result<Self> {
        let m = n.checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| Error::Shape(format!("dimension n = {n} < 2")))?;
        if metric.len() != m * m || metric.iter().any(|g| g.dim() != n) {
            return Err(Error::Shape(format!("metric must be {m}×{m} jets of dimension {n}")));
        }
        if connection.len() != m || connection.iter().any(|w| w.rank() != r || w.dim() != n) {
            return Err(Error::Shape(format!("connection must be {m} matrix jets of rank {r}, dimension {n}")));
        }
        for k in 0..m {
            for l in k + 1..m {
                let (a, b) = (&metric[k * m + l], &metric[l * m + k]);
                if a.max_diff(b) > T::zero_threshold() * a.max_abs().max(1.0) {
                    return Err(Error::Metric(format!("metric not symmetric at ({}, {})", k + 1, l + 1)));
                }
            }
        }
        check_positive_definite(m, &metric.iter().map(Jet::constant_term).collect::<Vec<_>>())?;
        if orthonormal_frame {
            for (k, w) in connection.iter().enumerate() {
                let c = w.constant_matrix();
                for i in 0..r {
                    for j in 0..r {
                        let s = c[i * r + j].clone() + c[j * r + i].conj();
                        if magnitude(&s) > 1e-10 {
                            return Err(Error::Gauge(format!("ω_{} is not skew-Hermitian at the base point", k + 1)));
                        }
                    }
                }
            }
        }
        Ok(Self { n, r, metric, connection, orthonormal_frame })
    }

    /// `g = δ`, `ω = 0`.
    pub fn flat(n: usize, r: usize, trunc: Truncation) -> Self {
        let m = n - 1;
        let metric = (0..m * m).map(|i| if i / m == i % m { Jet::one(n, trunc) } else { Jet::zero(n, trunc) }).collect();
        let connection = vec![MatrixJet::zero(r, n, trunc); m];
        Self::new(n, r, metric, connection, true).expect("flat geometry is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn orthonormal_frame(&self) -> bool {
        self.orthonormal_frame
    }

    /// `g_{kl}`, zero-based tangential indices.
    pub fn metric(&self, k: usize, l: usize) -> &Jet<T> {
        &self.metric[k * (self.n - 1) + l]
    }

    pub fn metric_entries(&self) -> &[Jet<T>] {
        &self.metric
    }

    /// `ω_k`, zero-based tangential index.
    pub fn connection(&self, k: usize) -> &MatrixJet<T> {
        &self.connection[k]
    }

    pub fn connection_entries(&self) -> &[MatrixJet<T>] {
        &self.connection
    }

    /// Common reliable orders of all jets.
    pub fn truncation(&self) -> Truncation {
        let t = self.metric.iter().fold(self.metric[0].truncation(), |t, g| t.meet(&g.truncation()));
        self.connection.iter().fold(t, |t, w| t.meet(&w.truncation()))
    }

    pub fn truncated(&self, trunc: Truncation) -> Self {
        Self {
            n: self.n,
            r: self.r,
            metric: self.metric.iter().map(|g| g.truncated(trunc)).collect(),
            connection: self.connection.iter().map(|w| w.truncated(trunc)).collect(),
            orthonormal_frame: self.orthonormal_frame,
        }
    }

    pub fn to_f64(&self) -> BoundaryGeometry<f64> {
        BoundaryGeometry {
            n: self.n,
            r: self.r,
            metric: self.metric.iter().map(Jet::to_f64).collect(),
            connection: self.connection.iter().map(MatrixJet::to_f64).collect(),
            orthonormal_frame: self.orthonormal_frame,
        }
    }
}

/// Inverse metric `g^{kl}` (row-major) and volume density `ϱ = det g_{kl}`.
pub fn invert_metric_jet<T: Scalar>(geom: &BoundaryGeometry<T>) -> Result<(Vec<Jet<T>>, Jet<T>)> {
    let m = geom.n - 1;
    let g = MatrixJet::from_fn(m, |k, l| geom.metric(k, l).clone());
    let inv = g.inverse().map_err(|e| Error::Metric(e.to_string()))?;
    let rho = determinant(m, geom.metric_entries());
    if !(rho.constant_term().re.to_f64_lossy() > 0.0) {
        return Err(Error::Metric("volume density is not positive".into()));
    }
    Ok((inv.entries().to_vec(), rho))
}

/// Leibniz expansion; fine for the small sizes used here.
fn determinant<T: Scalar>(m: usize, a: &[Jet<T>]) -> Jet<T> {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut total = Jet::zero(a[0].dim(), a.iter().fold(a[0].truncation(), |t, j| t.meet(&j.truncation())));
    permute(&mut perm, 0, &mut |p, sign| {
        let mut prod = a[p[0]].clone();
        for (i, &pi) in p.iter().enumerate().skip(1) {
            prod = &prod * &a[i * m + pi];
        }
        total = if sign { &total + &prod } else { &total - &prod };
    });
    total
}

fn permute(p: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize], bool)) {
    fn parity(p: &[usize]) -> bool {
        let mut even = true;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    even = !even;
                }
            }
        }
        even
    }
    if start == p.len() {
        f(p, parity(p));
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, f);
        p.swap(start, i);
    }
}

/// Levi-Civita symbols `Γ^k_{ij}` over all `n` indices.
#[derive(Clone, Debug)]
pub struct Christoffel<T: Scalar> {
    n: usize,
    gamma: Vec<Jet<T>>,
}

impl<T: Scalar> Christoffel<T> {
    /// `Γ^k_{ij}`, zero-based; index `n − 1` is the normal direction.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &Jet<T> {
        &self.gamma[(k * self.n + i) * self.n + j]
    }
}

/// Full `n × n` metric (or inverse) with the boundary-normal block structure.
fn full_matrix<T: Scalar>(n: usize, block: &[Jet<T>], trunc: Truncation) -> Vec<Jet<T>> {
    let m = n - 1;
    (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i < m && j < m {
                block[i * m + j].clone()
            } else if i == j {
                Jet::one(n, trunc)
            } else {
                Jet::zero(n, trunc)
            }
        })
        .collect()
}

pub fn compute_christoffel<T: Scalar>(geom: &BoundaryGeometry<T>) -> Result<Christoffel<T>> {
    let (ginv, _) = invert_metric_jet(geom)?;
    Ok(christoffel_from(geom, &ginv))
}

fn christoffel_from<T: Scalar>(geom: &BoundaryGeometry<T>, ginv: &[Jet<T>]) -> Christoffel<T> {
    let n = geom.n;
    let trunc = geom.truncation();
    let g = full_matrix(n, geom.metric_entries(), trunc);
    let gi = full_matrix(n, ginv, trunc);
    // dg[(c * n + a) * n + b] = ∂_c g_{ab}
    let dg: Vec<Jet<T>> = (0..n * n * n).map(|idx| g[idx % (n * n)].derive(idx / (n * n))).collect();
    let d = |c: usize, a: usize, b: usize| &dg[(c * n + a) * n + b];
    let half = ratio::<T>(1, 2);
    let mut gamma = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc: Option<Jet<T>> = None;
                for mm in 0..n {
                    let gk = &gi[k * n + mm];
                    if gk.is_zero() {
                        continue;
                    }
                    let inner = &(d(i, mm, j) + d(j, mm, i)) - d(mm, i, j);
                    let term = gk * &inner;
                    acc = Some(match acc {
                        Some(a) => &a + &term,
                        None => term,
                    });
                }
                let val = acc.unwrap_or_else(|| Jet::zero(n, trunc.after_tangential_derivative().meet(&trunc.after_normal_derivative())));
                gamma.push(val.scale(&half));
            }
        }
    }
    Christoffel { n, gamma }
}

/// Coefficient data of `−L = D_n² + iF·D_n + Q(x, D_{x′})`.
#[derive(Clone, Debug)]
pub struct LaplacianCoefficients<T: Scalar> {
    pub n: usize,
    pub r: usize,
    pub ctx: GeometryContext<T>,
    pub inverse_metric: Vec<Jet<T>>,
    pub rho: Jet<T>,
    pub f: Jet<T>,
    pub v: Vec<MatrixJet<T>>,
    pub q_tilde: MatrixJet<T>,
    /// `q₁ = −i Σ_l c_l ξ_l`; these are the `c_l`.
    pub first_order: Vec<MatrixJet<T>>,
    pub q2: SymbolTerm<T>,
    pub q1: SymbolTerm<T>,
    pub q0: SymbolTerm<T>,
    pub christoffel: Christoffel<T>,
}

pub fn assemble_coefficients<T: Scalar>(geom: &BoundaryGeometry<T>) -> Result<LaplacianCoefficients<T>> {
    let (n, r, m) = (geom.n, geom.r, geom.n - 1);
    let trunc = geom.truncation();
    let (ginv, rho) = invert_metric_jet(geom)?;
    let ctx = GeometryContext::new(n, r, ginv.clone())?;
    let gi = |k: usize, l: usize| &ginv[k * m + l];

    // F = −½ Σ g^{kl} ∂_n g_{kl}
    let mut f = Jet::zero(n, trunc.after_normal_derivative());
    for k in 0..m {
        for l in 0..m {
            f = &f + &(gi(k, l) * &geom.metric(k, l).derive(n - 1));
        }
    }
    let f = f.scale(&ratio(-1, 2));

    let v: Vec<MatrixJet<T>> = (0..m)
        .map(|l| {
            (0..m).fold(MatrixJet::zero(r, n, trunc), |acc, k| {
                acc.try_add(&geom.connection(k).scale_jet(gi(l, k))).expect("shapes agree")
            })
            .scale(&ratio(2, 1))
        })
        .collect();

    let rho_inv = rho.inverse()?;
    let first_order: Vec<MatrixJet<T>> = (0..m)
        .map(|l| {
            let mut b = Jet::zero(n, trunc.after_tangential_derivative());
            for k in 0..m {
                let dlog = &rho.derive(k) * &rho_inv;
                b = &(&b + &(gi(k, l) * &dlog).scale(&ratio(1, 2))) + &gi(k, l).derive(k);
            }
            MatrixJet::scalar(r, &b).try_add(&v[l]).expect("shapes agree")
        })
        .collect();

    let christoffel = christoffel_from(geom, &ginv);
    let mut q_tilde = MatrixJet::zero(r, n, trunc.after_tangential_derivative());
    for i in 0..m {
        for j in 0..m {
            let mut inner = geom.connection(j).derive(i);
            for mm in 0..m {
                inner = inner.try_sub(&geom.connection(mm).scale_jet(christoffel.get(mm, i, j)))?;
            }
            inner = inner.try_add(&geom.connection(i).try_mul(geom.connection(j))?)?;
            q_tilde = q_tilde.try_add(&inner.scale_jet(gi(i, j)))?;
        }
    }

    let q2 = SymbolTerm::q2_power(&ctx, Complex::new(T::one(), T::zero()), 2, r, trunc);
    let minus_i = -imag_unit::<T>();
    let q1 = SymbolTerm::from_parts(
        &ctx,
        1,
        r,
        trunc,
        first_order.iter().enumerate().map(|(l, c)| (XiMonomial::unit(m, l), 0, c.scale(&minus_i))),
    )?;
    let q0 = SymbolTerm::from_parts(&ctx, 0, r, trunc, [(XiMonomial::zero(m), 0, q_tilde.neg())])?;
    Ok(LaplacianCoefficients { n, r, ctx, inverse_metric: ginv, rho, f, v, q_tilde, first_order, q2, q1, q0, christoffel })
}

/// `(D_n² + iF·D_n + Q(x, D_{x′})) u` for a section given as a column of jets.
///
/// With `include_normal = false` only `Q(x, D_{x′}) u` is returned.
pub fn apply_operator<T: Scalar>(coeffs: &LaplacianCoefficients<T>, u: &[Jet<T>], include_normal: bool) -> Vec<Jet<T>> {
    let (n, r, m) = (coeffs.n, coeffs.r, coeffs.n - 1);
    assert_eq!(u.len(), r, "section has the wrong rank");
    let minus_one = ratio::<T>(-1, 1);
    let mut out: Vec<Jet<T>> = coeffs.q_tilde.apply(u).iter().map(|j| j.scale(&minus_one)).collect();
    for k in 0..m {
        for l in 0..m {
            let g = &coeffs.inverse_metric[k * m + l];
            for (o, ui) in out.iter_mut().zip(u) {
                *o = &*o - &(g * &ui.derive(l).derive(k));
            }
        }
    }
    for l in 0..m {
        let du: Vec<Jet<T>> = u.iter().map(|ui| ui.derive(l)).collect();
        for (o, v) in out.iter_mut().zip(coeffs.first_order[l].apply(&du)) {
            *o = &*o - &v;
        }
    }
    if include_normal {
        for (o, ui) in out.iter_mut().zip(u) {
            let d1 = ui.derive(n - 1);
            *o = &(&*o - &d1.derive(n - 1)) + &(&coeffs.f * &d1);
        }
    }
    out
}

/// Constant-coefficient jet helper: `c · (x^{var})^{power}`.
pub fn monomial_jet<T: Scalar>(dim: usize, trunc: Truncation, exps: &[u32], c: Complex<T>) -> Jet<T> {
    Jet::from_coeffs(dim, trunc, [(MultiIndex::new(exps), c)])
}
