//! Inverse problem: recovery of the normal-derivative jets of `g^{kl}` and
//! `ω_k` at a boundary point from the boundary symbol `λ₁, λ₀, …` of the
//! Dirichlet-to-Neumann map.
//!
//! The metric comes from the principal symbol, `q₂ = (Tr λ₁ / r)²`, by
//! polarization. Everything else is obtained by *peeling*: the forward
//! recursion is re-run on the partially known geometry (unknown orders set
//! to zero) and the prediction is subtracted from the given term. What is
//! left of `λ_{−p}` has the normal form
//!
//! ```text
//! −(ξᵀ κ ξ) / (2‖ξ‖)^{p+2} · Id  +  i Σ_l W^l ξ_l / (2‖ξ‖)^{p+1}
//! ```
//!
//! with `κ = ∂_n^{p+1} g^{kl} − (g_{ab} ∂_n^{p+1} g^{ab}) g^{kl}` and
//! `W^l = 2 g^{lk} ∂_n^p ω_k`, both evaluated at `xⁿ = 0`.

use crate::error::{Error, Result};
use crate::forward::{forward_expansion, xi_samples, DEFAULT_SEED};
use crate::jet::{Jet, MatrixJet, Truncation};
use crate::laplacian::{invert_metric_jet, BoundaryGeometry};
use crate::scalar::{imag_unit, ratio, real, RealScalar};
use crate::symbol::{GeometryContext, SymbolExpansion, SymbolTerm};

/// Tolerances and the covector sample set used by the extraction.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionOptions {
    /// Allowed deviation of `λ₁` from a scalar matrix.
    pub scalar_tolerance: f64,
    /// Allowed mismatch between a peeled residual and its normal form,
    /// relative to the size of the symbol term.
    pub consistency_tolerance: f64,
    /// Number of random unit covectors added to `±e_k` for consistency checks.
    pub extra_samples: usize,
    pub seed: u64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        Self { scalar_tolerance: 1e-6, consistency_tolerance: 1e-6, extra_samples: 8, seed: DEFAULT_SEED }
    }
}

/// Normal derivatives known so far, as boundary `x′`-jets.
///
/// `inverse_metric[p]` holds `∂_n^p g^{kl}` (row-major), `connection[p]`
/// holds `∂_n^p ω_k` for `k = 1 … n−1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialGeometry<T: RealScalar> {
    pub n: usize,
    pub r: usize,
    pub orthonormal_frame: bool,
    pub inverse_metric: Vec<Vec<Jet<T>>>,
    pub connection: Vec<Vec<MatrixJet<T>>>,
}

/// Output of one peeling step on `λ_{−p}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalOrderStep<T: RealScalar> {
    pub p: usize,
    /// `∂_n^{p+1} g^{kl}`; absent in dimension two.
    pub inverse_metric: Option<Vec<Jet<T>>>,
    /// `∂_n^p ω_k`.
    pub connection: Vec<MatrixJet<T>>,
    /// Trace-modified `∂_n^{p+1} κ^{kl}` read from the even part.
    pub kappa: Vec<Jet<T>>,
    /// Largest mismatch between the peeled residual and its normal form.
    pub residual: f64,
}

/// Everything recovered from an expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult<T: RealScalar> {
    pub n: usize,
    pub r: usize,
    /// `inverse_metric_jets[p]` = `∂_n^p g^{kl}` at the boundary.
    pub inverse_metric_jets: Vec<Vec<Jet<T>>>,
    /// `connection_jets[p]` = `∂_n^p ω_k` at the boundary.
    pub connection_jets: Vec<Vec<MatrixJet<T>>>,
    /// `κ^{kl}` read at each peeling step.
    pub kappa_trace: Vec<Vec<Jet<T>>>,
    /// Normal-form mismatch at each peeling step.
    pub residuals: Vec<f64>,
    /// Set in dimension two, where only boundary values are determined.
    pub conformal_obstruction: bool,
}

fn to_t<T: RealScalar>(xi: &[f64]) -> Vec<T> {
    xi.iter().map(|&x| T::from_f64(x).expect("finite covector")).collect()
}

fn unit(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}

fn sum_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn neg_vec(a: &[f64]) -> Vec<f64> {
    a.iter().map(|x| -x).collect()
}

/// Symmetric matrix of a quadratic form by polarization in the frame `b`:
/// `M_{kl} = Σ_{ab} b_a[k] b_b[l] · ½[Q(b_a + b_b) − Q(b_a) − Q(b_b)]`.
fn polarize<T: RealScalar>(frame: &[Vec<f64>], mut form: impl FnMut(&[f64]) -> Result<Jet<T>>) -> Result<Vec<Jet<T>>> {
    let m = frame.len();
    let diag = frame.iter().map(|b| form(b)).collect::<Result<Vec<_>>>()?;
    let mut in_frame = vec![diag[0].clone(); m * m];
    for a in 0..m {
        in_frame[a * m + a] = diag[a].clone();
        for b in a + 1..m {
            let both = form(&sum_vec(&frame[a], &frame[b]))?;
            let v = both.try_sub(&diag[a])?.try_sub(&diag[b])?.scale(&ratio(1, 2));
            in_frame[a * m + b] = v.clone();
            in_frame[b * m + a] = v;
        }
    }
    let standard = frame.iter().enumerate().all(|(a, b)| *b == unit(m, a));
    if standard {
        return Ok(in_frame);
    }
    let mut out = Vec::with_capacity(m * m);
    for k in 0..m {
        for l in 0..m {
            let mut acc = Jet::zero(in_frame[0].dim(), in_frame[0].truncation());
            for a in 0..m {
                for b in 0..m {
                    let w = frame[a][k] * frame[b][l];
                    if w != 0.0 {
                        let c = real(T::from_f64(w).expect("finite frame"));
                        acc = acc.try_add(&in_frame[a * m + b].scale(&c))?;
                    }
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

/// `g^{kl}` at the boundary from the principal symbol.
pub fn recover_metric<T: RealScalar>(
    lambda1: &SymbolTerm<T>,
    ctx: &GeometryContext<T>,
    opts: &ReconstructionOptions,
) -> Result<Vec<Jet<T>>> {
    let m = ctx.xi_dim();
    let frame: Vec<Vec<f64>> = (0..m).map(|k| unit(m, k)).collect();
    recover_metric_in_frame(lambda1, ctx, &frame, opts)
}

/// Same as [`recover_metric`], polarizing in the orthonormal covector frame `frame`.
pub fn recover_metric_in_frame<T: RealScalar>(
    lambda1: &SymbolTerm<T>,
    ctx: &GeometryContext<T>,
    frame: &[Vec<f64>],
    opts: &ReconstructionOptions,
) -> Result<Vec<Jet<T>>> {
    if lambda1.degree() != 1 {
        return Err(Error::InvalidSymbol(format!("principal term has degree {}, expected 1", lambda1.degree())));
    }
    let m = ctx.xi_dim();
    if frame.len() != m || frame.iter().any(|b| b.len() != m) {
        return Err(Error::Shape(format!("polarization frame must hold {m} covectors of length {m}")));
    }
    let r = lambda1.rank();
    let inv_r = real(T::one() / T::from_usize(r).expect("rank"));
    let g = polarize(frame, |xi| {
        let v = lambda1.evaluate_jet(&to_t(xi), ctx)?;
        if !v.is_scalar_within(opts.scalar_tolerance * v.max_abs().max(1.0)) {
            return Err(Error::InvalidSymbol("principal symbol is not a scalar matrix".into()));
        }
        let t = v.trace().scale(&inv_r);
        t.try_mul(&t)
    })?;
    GeometryContext::new(ctx.n(), r, g.clone())?;
    Ok(g)
}

/// `ω_k` at the boundary from `λ₀`, given the recovered boundary `g^{kl}`.
///
/// Only the part of `λ₀` that is odd in `ξ` is used, after removing what
/// the metric alone predicts.
pub fn recover_connection<T: RealScalar>(
    lambda0: &SymbolTerm<T>,
    ctx: &GeometryContext<T>,
    inverse_metric: &[Jet<T>],
    orthonormal_frame: bool,
    opts: &ReconstructionOptions,
) -> Result<Vec<MatrixJet<T>>> {
    let partial = PartialGeometry {
        n: ctx.n(),
        r: lambda0.rank(),
        orthonormal_frame,
        inverse_metric: vec![inverse_metric.to_vec()],
        connection: Vec::new(),
    };
    Ok(peel(&partial, lambda0, ctx, opts)?.connection)
}

/// Next normal order from `λ_{−p}`, where `p` is the number of known
/// connection orders: returns `∂_n^{p+1} g^{kl}` and `∂_n^p ω_k`.
pub fn recover_next_normal_order<T: RealScalar>(
    partial: &PartialGeometry<T>,
    lambda: &SymbolTerm<T>,
    ctx: &GeometryContext<T>,
    opts: &ReconstructionOptions,
) -> Result<NormalOrderStep<T>> {
    if partial.n == 2 {
        return Err(Error::ConformalObstruction("the metric is determined only up to a conformal factor".into()));
    }
    peel(partial, lambda, ctx, opts)
}

/// Candidate geometry: known orders, zeros above, on a staircase that keeps
/// the predicted `λ_{−p}` as precise as the known data allows.
fn candidate<T: RealScalar>(partial: &PartialGeometry<T>) -> Result<BoundaryGeometry<T>> {
    let (n, r) = (partial.n, partial.r);
    let m = n - 1;
    let p = partial.connection.len();
    let mut orders = Vec::with_capacity(p + 2);
    for q in 0..=p {
        let own = partial.inverse_metric[q].iter().filter_map(|g| g.truncation().tangential_order()).min().unwrap_or(0);
        let o = if q == 0 { own } else { own.min(orders[q - 1] - 1) };
        orders.push(o);
    }
    let last = orders[p];
    if last == 0 {
        return Err(Error::OrderExhausted {
            required_tangential: p + 3,
            required_normal: p + 1,
            context: format!("known data is too short to peel order {p}"),
        });
    }
    orders.push(last - 1);
    let trunc = Truncation::staircase(&orders);
    let lift = |slices: &dyn Fn(usize) -> Jet<T>, upto: usize| -> Result<Jet<T>> {
        let mut acc = Jet::zero(n, trunc);
        let mut fact = 1i64;
        for q in 0..upto {
            if q > 0 {
                fact *= q as i64;
            }
            acc = acc.try_add(&slices(q).scale(&ratio(1, fact)).lift_to_normal_power(q, trunc))?.with_truncation(trunc);
        }
        Ok(acc)
    };
    let mut inverse = Vec::with_capacity(m * m);
    for i in 0..m * m {
        inverse.push(lift(&|q| partial.inverse_metric[q][i].clone(), p + 1)?);
    }
    let lower = MatrixJet::from_fn(m, |k, l| inverse[k * m + l].clone())
        .inverse()
        .map_err(|e| Error::Metric(format!("recovered inverse metric is singular: {e}")))?;
    let mut connection = Vec::with_capacity(m);
    for k in 0..m {
        let mut w = MatrixJet::zero(r, n, trunc);
        for a in 0..r {
            for b in 0..r {
                w.set(a, b, lift(&|q| partial.connection[q][k].get(a, b).clone(), p)?);
            }
        }
        connection.push(w);
    }
    BoundaryGeometry::new(n, r, lower.entries().to_vec(), connection, partial.orthonormal_frame)
}

/// One peeling step. In dimension two the even part carries no information
/// and only the connection is returned.
fn peel<T: RealScalar>(
    partial: &PartialGeometry<T>,
    lambda: &SymbolTerm<T>,
    ctx: &GeometryContext<T>,
    opts: &ReconstructionOptions,
) -> Result<NormalOrderStep<T>> {
    let (n, r) = (partial.n, partial.r);
    let m = n - 1;
    let p = partial.connection.len();
    if partial.inverse_metric.len() != p + 1 {
        return Err(Error::Shape(format!(
            "peeling order {p} needs {} metric orders, got {}",
            p + 1,
            partial.inverse_metric.len()
        )));
    }
    if lambda.degree() != -(p as i32) {
        return Err(Error::InvalidSymbol(format!("peeling order {p} needs the degree {} term", -(p as i32))));
    }
    let cand = candidate(partial)?;
    let predicted = forward_expansion(&cand, p + 1)?;
    let pctx = predicted.ctx();
    let pred = predicted.lambda(-(p as i32)).expect("depth p + 1 holds λ_{−p}");

    // residual D(ξ) = λ(ξ) − λ_pred(ξ) and 2‖ξ‖ as jets in x′
    let residual_at = |xi: &[f64]| -> Result<MatrixJet<T>> {
        let xt = to_t(xi);
        lambda.evaluate_jet(&xt, ctx)?.try_sub(&pred.evaluate_jet(&xt, pctx)?)
    };
    let root = SymbolTerm::q2_power(pctx, ratio(2, 1), 1, 1, pctx.truncation());
    let two_norm = |xi: &[f64]| -> Result<Jet<T>> { Ok(root.evaluate_jet(&to_t(xi), pctx)?.get(0, 0).clone()) };
    let half = ratio::<T>(1, 2);
    let inv_r = real(T::one() / T::from_usize(r).expect("rank"));

    // K(ξ) = −tr(D_even)/r · (2‖ξ‖)^{p+2}
    let kappa_form = |xi: &[f64]| -> Result<Jet<T>> {
        let even = residual_at(xi)?.try_add(&residual_at(&neg_vec(xi))?)?.scale(&half);
        even.trace().scale(&(-inv_r)).try_mul(&two_norm(xi)?.powi(p as i32 + 2)?)
    };
    // W(ξ) = −i · D_odd · (2‖ξ‖)^{p+1}
    let w_form = |xi: &[f64]| -> Result<MatrixJet<T>> {
        let odd = residual_at(xi)?.try_sub(&residual_at(&neg_vec(xi))?)?.scale(&half);
        Ok(odd.scale(&(-imag_unit::<T>())).scale_jet(&two_norm(xi)?.powi(p as i32 + 1)?))
    };

    let frame: Vec<Vec<f64>> = (0..m).map(|k| unit(m, k)).collect();
    let kappa = polarize(&frame, kappa_form)?;
    let w: Vec<MatrixJet<T>> = frame.iter().map(|e| w_form(e)).collect::<Result<_>>()?;

    let upper0 = &partial.inverse_metric[0];
    let lower0 = MatrixJet::from_fn(m, |k, l| upper0[k * m + l].clone())
        .inverse()
        .map_err(|e| Error::Metric(format!("recovered inverse metric is singular: {e}")))?;
    // ∂^p ω_k = ½ g_{kl} W^l
    let mut connection = Vec::with_capacity(m);
    for k in 0..m {
        let mut acc = MatrixJet::zero(r, n, w[0].truncation());
        for (l, wl) in w.iter().enumerate() {
            acc = acc.try_add(&wl.scale_jet(lower0.get(k, l)))?;
        }
        connection.push(acc.scale(&half));
    }
    let inverse_metric = if n >= 3 { Some(h_from_kappa(n, &kappa, lower0.entries(), upper0)?) } else { None };

    // the residual must be exactly the normal form on every sample
    let samples = xi_samples(m, opts.extra_samples, opts.seed);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for xi in &samples {
        let xt = to_t(xi);
        scale = scale.max(lambda.evaluate_jet(&xt, ctx)?.max_abs());
        let s = two_norm(xi)?;
        let mut quad = Jet::zero(n, kappa[0].truncation());
        let mut lin = MatrixJet::zero(r, n, w[0].truncation());
        for k in 0..m {
            for l in 0..m {
                let c = real(T::from_f64(xi[k] * xi[l]).expect("finite"));
                quad = quad.try_add(&kappa[k * m + l].scale(&c))?;
            }
            lin = lin.try_add(&w[k].scale(&real(T::from_f64(xi[k]).expect("finite"))))?;
        }
        let even = MatrixJet::scalar(r, &-&quad.try_mul(&s.powi(-(p as i32) - 2)?)?);
        let odd = lin.scale(&imag_unit()).scale_jet(&s.powi(-(p as i32) - 1)?);
        let model = even.try_add(&odd)?;
        worst = worst.max(residual_at(xi)?.max_diff(&model));
    }
    if worst > opts.consistency_tolerance * scale.max(1.0) {
        return Err(Error::InconsistentSymbol(format!(
            "degree {} term deviates from its normal form by {worst:.3e}",
            -(p as i32)
        )));
    }
    Ok(NormalOrderStep { p, inverse_metric, connection, kappa, residual: worst })
}

fn trace_against<T: RealScalar>(lower: &[Jet<T>], upper: &[Jet<T>]) -> Result<Jet<T>> {
    let mut acc = Jet::zero(upper[0].dim(), upper[0].truncation());
    for (a, b) in lower.iter().zip(upper) {
        acc = acc.try_add(&a.try_mul(b)?)?;
    }
    Ok(acc)
}

/// `κ^{kl} = h^{kl} − (g_{ab} h^{ab}) g^{kl}`.
pub fn kappa_from_h<T: RealScalar>(h: &[Jet<T>], metric: &[Jet<T>], inverse_metric: &[Jet<T>]) -> Result<Vec<Jet<T>>> {
    let tr = trace_against(metric, h)?;
    h.iter().zip(inverse_metric).map(|(hk, g)| hk.try_sub(&tr.try_mul(g)?)).collect()
}

/// Inverse of [`kappa_from_h`]: `h^{kl} = κ^{kl} + (g_{ab} κ^{ab}) g^{kl} / (2 − n)`, `n ≥ 3`.
pub fn h_from_kappa<T: RealScalar>(
    n: usize,
    kappa: &[Jet<T>],
    metric: &[Jet<T>],
    inverse_metric: &[Jet<T>],
) -> Result<Vec<Jet<T>>> {
    if n < 3 {
        return Err(Error::ConformalObstruction("the trace correction divides by 2 − n".into()));
    }
    let tr = trace_against(metric, kappa)?.scale(&ratio(1, 2 - n as i64));
    kappa.iter().zip(inverse_metric).map(|(k, g)| k.try_add(&tr.try_mul(g)?)).collect()
}

/// Recovers every order the expansion determines.
///
/// For `n ≥ 3` and depth `d` this is `∂_n^p g^{kl}` for `p ≤ d` and
/// `∂_n^p ω_k` for `p < d`. For `n = 2` only the boundary values are
/// returned and `conformal_obstruction` is set.
pub fn reconstruct_all<T: RealScalar>(
    expansion: &SymbolExpansion<T>,
    orthonormal_frame: bool,
    opts: &ReconstructionOptions,
) -> Result<ReconstructionResult<T>> {
    let ctx = expansion.ctx();
    let (n, r) = (ctx.n(), expansion.rank());
    let metric0 = recover_metric(expansion.terms().first().expect("principal term"), ctx, opts)?;
    let mut partial =
        PartialGeometry { n, r, orthonormal_frame, inverse_metric: vec![metric0], connection: Vec::new() };
    let mut kappa_trace = Vec::new();
    let mut residuals = Vec::new();
    if n == 2 {
        if let Some(l0) = expansion.lambda(0) {
            let step = peel(&partial, l0, ctx, opts)?;
            partial.connection.push(step.connection);
            residuals.push(step.residual);
        }
    } else {
        for p in 0..expansion.depth() {
            let step = recover_next_normal_order(&partial, expansion.lambda(-(p as i32)).expect("within depth"), ctx, opts)?;
            partial.inverse_metric.push(step.inverse_metric.expect("n ≥ 3"));
            partial.connection.push(step.connection);
            kappa_trace.push(step.kappa);
            residuals.push(step.residual);
        }
    }
    Ok(ReconstructionResult {
        n,
        r,
        inverse_metric_jets: partial.inverse_metric,
        connection_jets: partial.connection,
        kappa_trace,
        residuals,
        conformal_obstruction: n == 2,
    })
}

/// Boundary `x′`-jets of `∂_n^p g^{kl}` (`p ≤ metric_orders`) and
/// `∂_n^p ω_k` (`p ≤ connection_orders`) of a geometry, for comparison with
/// a reconstruction.
#[allow(clippy::type_complexity)]
pub fn normal_derivative_slices<T: RealScalar>(
    geom: &BoundaryGeometry<T>,
    metric_orders: usize,
    connection_orders: usize,
) -> Result<(Vec<Vec<Jet<T>>>, Vec<Vec<MatrixJet<T>>>)> {
    let (inverse, _) = invert_metric_jet(geom)?;
    let factorial = |p: usize| real::<T>(T::from_u64((1..=p as u64).product()).expect("small factorial"));
    let metric = (0..=metric_orders)
        .map(|p| inverse.iter().map(|g| g.normal_slice(p).scale(&factorial(p))).collect())
        .collect();
    let connection = (0..=connection_orders)
        .map(|p| geom.connection_entries().iter().map(|w| w.normal_slice(p).scale(&factorial(p))).collect())
        .collect();
    Ok((metric, connection))
}

impl<T: RealScalar> ReconstructionResult<T> {
    /// Largest deviation from `geom` over all recovered orders, each jet
    /// compared on its recovered truncation and measured relative to
    /// `max(1, size of the reference jet)`.
    pub fn max_relative_deviation(&self, geom: &BoundaryGeometry<T>) -> Result<f64> {
        let km = self.inverse_metric_jets.len().saturating_sub(1);
        let kc = self.connection_jets.len().saturating_sub(1);
        let (metric, connection) = normal_derivative_slices(geom, km, kc)?;
        let mut worst = 0.0f64;
        for (got, want) in self.inverse_metric_jets.iter().zip(&metric) {
            for (a, b) in got.iter().zip(want) {
                let b = b.truncated(a.truncation());
                worst = worst.max(a.max_diff(&b) / b.max_abs().max(1.0));
            }
        }
        for (got, want) in self.connection_jets.iter().zip(&connection) {
            for (a, b) in got.iter().zip(want) {
                let b = b.truncated(a.truncation());
                worst = worst.max(a.max_diff(&b) / b.max_abs().max(1.0));
            }
        }
        Ok(worst)
    }
}
