//! Factorization `−L ≡ (D_n + iF − iA)(D_n + iA)` and the boundary symbol
//! of the Dirichlet-to-Neumann map.

use num_complex::Complex;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::jet::{MatrixJet, MultiIndex};
use crate::laplacian::{assemble_coefficients, BoundaryGeometry, LaplacianCoefficients};
use crate::scalar::{ratio, RealScalar, Scalar};
use crate::symbol::{compose_formal, FormalSymbol, GeometryContext, SymbolExpansion, SymbolTerm};

/// Seed of the default covector sample set.
pub const DEFAULT_SEED: u64 = 42;

/// `a₁ = −√q₂ · Id`.
pub fn principal_symbol<T: Scalar>(coeffs: &LaplacianCoefficients<T>) -> SymbolTerm<T> {
    SymbolTerm::q2_power(&coeffs.ctx, ratio(-1, 1), 1, coeffs.r, coeffs.ctx.truncation())
}

/// Orders `(K_t, K_n)` a geometry needs for symbols through `λ_{1−depth}`.
pub fn required_orders(depth: usize) -> (usize, usize) {
    (depth + 2, depth)
}

/// Computes `a_{m−1}` from `known = [a₁, a₀, …, a_m]`.
pub fn next_symbol<T: Scalar>(coeffs: &LaplacianCoefficients<T>, known: &[SymbolTerm<T>], m: i32) -> Result<SymbolTerm<T>> {
    let ctx = &coeffs.ctx;
    if m > 1 || known.len() != (2 - m) as usize {
        return Err(Error::InvalidSymbol(format!("next_symbol at m = {m} needs a₁ … a_m ({} terms given)", known.len())));
    }
    let a = |j: i32| &known[(1 - j) as usize];
    let xi_dim = ctx.xi_dim();
    let n = coeffs.n;
    let mut acc = SymbolTerm::zero(m, coeffs.r, n, known[known.len() - 1].truncation());
    let mut first = true;
    let mut push = |t: SymbolTerm<T>, acc: &mut SymbolTerm<T>| -> Result<()> {
        *acc = if first { t } else { acc.add(&t, ctx)? };
        first = false;
        Ok(())
    };
    // Σ_{j,k ∈ [m,1]} Σ_{|K| = j+k−m} (1/K!) ∂_ξ^K a_j · D_{x′}^K a_k
    for j in m..=1 {
        for k in m..=1 {
            let order = j + k - m;
            if order < 0 {
                continue;
            }
            for kk in MultiIndex::all_of_degree(xi_dim, order as u32) {
                let mut left = a(j).clone();
                let mut right = a(k).clone();
                for l in 0..xi_dim {
                    for _ in 0..kk.get(l) {
                        left = left.dxi(l, ctx);
                        right = right.dx(l, ctx);
                    }
                }
                if left.is_zero() || right.is_zero() {
                    // still record the reliable orders of the vanishing product
                    let t = left.truncation().meet(&right.truncation());
                    push(SymbolTerm::zero(m, coeffs.r, n, t), &mut acc)?;
                    continue;
                }
                let prod = left.mul(&right, ctx)?.scale(&ratio(1, kk.factorial() as i64));
                push(prod, &mut acc)?;
            }
        }
    }
    match m {
        1 => push(coeffs.q1.neg(), &mut acc)?,
        0 => push(coeffs.q0.neg(), &mut acc)?,
        _ => {}
    }
    let am = a(m);
    push(am.partial_x(n - 1, ctx), &mut acc)?;
    push(am.scale_jet(&coeffs.f).neg(), &mut acc)?;
    let half_inv_root = SymbolTerm::q2_power(ctx, ratio(1, 2), -1, coeffs.r, ctx.truncation());
    let out = half_inv_root.mul(&acc, ctx)?;
    if out.truncation().is_exhausted() {
        let depth = (2 - m) as usize;
        let (kt, kn) = required_orders(depth);
        return Err(Error::OrderExhausted {
            required_tangential: kt,
            required_normal: kn,
            context: format!("computing the degree-{} factorization symbol", m - 1),
        });
    }
    Ok(out)
}

/// Checks that `geom` carries the orders needed for `depth`.
///
/// Slice `p` of the staircase must reach tangential order `depth + 2 − p`;
/// the rectangular `(depth + 2, depth)` truncation satisfies this.
pub fn check_orders<T: Scalar>(geom: &BoundaryGeometry<T>, depth: usize) -> Result<()> {
    let t = geom.truncation();
    let (kt, kn) = required_orders(depth);
    let ok = (0..=depth).all(|p| t.tangential_order_at(p).is_some_and(|o| o + p >= kt));
    if !ok {
        return Err(Error::OrderExhausted {
            required_tangential: kt,
            required_normal: kn,
            context: format!("geometry orders {:?} are insufficient for depth {depth}", t.orders()),
        });
    }
    Ok(())
}

/// `a₁, a₀, …, a_{1−depth}` as symbols in the full `x` (normal variable included).
pub fn factorization_symbols<T: Scalar>(coeffs: &LaplacianCoefficients<T>, depth: usize) -> Result<Vec<SymbolTerm<T>>> {
    let mut a = vec![principal_symbol(coeffs)];
    for step in 0..depth {
        let m = 1 - step as i32;
        let next = next_symbol(coeffs, &a, m)?;
        a.push(next);
    }
    Ok(a)
}

/// Full boundary symbol `λ₁ … λ_{1−depth}` of the DtN map, with `x′`-jets.
pub fn forward_expansion<T: Scalar>(geom: &BoundaryGeometry<T>, depth: usize) -> Result<SymbolExpansion<T>> {
    check_orders(geom, depth)?;
    let coeffs = assemble_coefficients(geom)?;
    let a = factorization_symbols(&coeffs, depth)?;
    restrict_expansion(&coeffs.ctx, &a)
}

pub(crate) fn restrict_expansion<T: Scalar>(ctx: &GeometryContext<T>, a: &[SymbolTerm<T>]) -> Result<SymbolExpansion<T>> {
    let bctx = ctx.restrict_to_boundary();
    let lambdas = a.iter().map(|t| t.restrict_to_boundary(&bctx)).collect();
    SymbolExpansion::new(bctx, lambdas)
}

/// Covector samples: `±e_k` followed by `extra` seeded random unit covectors.
pub fn xi_samples(xi_dim: usize, extra: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..xi_dim {
        for s in [1.0, -1.0] {
            let mut v = vec![0.0; xi_dim];
            v[k] = s;
            out.push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < 2 * xi_dim + extra {
        let v: Vec<f64> = (0..xi_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 {
            out.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    out
}

/// Largest jet coefficient of a term over the sample set.
pub fn sampled_norm<T: RealScalar>(t: &SymbolTerm<T>, ctx: &GeometryContext<T>, samples: &[Vec<f64>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for xi in samples {
        let xi_t: Vec<T> = xi.iter().map(|&x| T::from_f64(x).expect("finite")).collect();
        worst = worst.max(t.evaluate_jet(&xi_t, ctx)?.max_abs());
    }
    Ok(worst)
}

/// Residual norm of one degree of `AA − q + ∂_n a − F·a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub degree: i32,
    pub norm: f64,
}

/// Evaluates the factorization residual for degrees `2 … 2 − depth`
/// through the general composition law.
pub fn factorization_residual<T: RealScalar>(
    coeffs: &LaplacianCoefficients<T>,
    a: &[SymbolTerm<T>],
    depth: usize,
    samples: &[Vec<f64>],
) -> Result<Vec<ResidualEntry>> {
    let ctx = &coeffs.ctx;
    let m_min = 2 - depth as i32;
    let fa = FormalSymbol::from_terms(ctx, a.iter().cloned())?;
    let aa = compose_formal(&fa, &fa, m_min, ctx)?;
    let q = FormalSymbol::from_terms(ctx, [coeffs.q2.clone(), coeffs.q1.clone(), coeffs.q0.clone()])?;
    let dn = fa.map(|t| t.partial_x(coeffs.n - 1, ctx));
    let fa_f = fa.map(|t| t.scale_jet(&coeffs.f));
    let minus = |s: &FormalSymbol<T>| s.map(SymbolTerm::neg);
    let total = aa.add(&minus(&q), ctx)?.add(&dn, ctx)?.add(&minus(&fa_f), ctx)?;
    let mut out = Vec::new();
    for d in (m_min..=2).rev() {
        let norm = match total.term(d) {
            Some(t) => sampled_norm(t, ctx, samples)?,
            None => 0.0,
        };
        out.push(ResidualEntry { degree: d, norm });
    }
    Ok(out)
}

/// Symbol of `u⁻¹ ∘ Λ ∘ u` for a boundary gauge transformation `u(x′)`.
pub fn conjugate_by_gauge<T: Scalar>(expansion: &SymbolExpansion<T>, u: &MatrixJet<T>) -> Result<SymbolExpansion<T>> {
    let ctx = expansion.ctx();
    if u.entries().iter().any(|e| e.coeffs().any(|(m, _)| m.normal_exponent() > 0)) {
        return Err(Error::Gauge("gauge transformation must not depend on the normal variable".into()));
    }
    if u.rank() != expansion.rank() || u.dim() != ctx.n() {
        return Err(Error::Gauge("gauge transformation has the wrong shape".into()));
    }
    let u_inv = u.inverse().map_err(|e| Error::Gauge(format!("u is not invertible: {e}")))?;
    let depth = expansion.depth();
    let m_min = 1 - depth as i32;
    let right = FormalSymbol::from_terms(ctx, [SymbolTerm::multiplication(ctx, u)])?;
    let left = FormalSymbol::from_terms(ctx, [SymbolTerm::multiplication(ctx, &u_inv)])?;
    let lu = compose_formal(&expansion.to_formal(), &right, m_min, ctx)?;
    let conj = compose_formal(&left, &lu, m_min, ctx)?;
    SymbolExpansion::from_formal(ctx.clone(), &conj, depth)
}

/// Evaluates `Σ_j λ_j(0, ξ)` at a numeric covector.
pub fn evaluate_sum<T: Scalar>(expansion: &SymbolExpansion<T>, xi: &[f64]) -> Result<Vec<Complex<f64>>> {
    let r = expansion.rank();
    let mut acc = vec![Complex::new(0.0, 0.0); r * r];
    for t in expansion.terms() {
        for (a, v) in acc.iter_mut().zip(t.evaluate(xi, expansion.ctx())?) {
            *a += v;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Jet, Truncation};

    #[test]
    fn flat_expansion_is_minus_norm() {
        let g = BoundaryGeometry::<f64>::flat(3, 2, Truncation::rect(5, 3));
        let e = forward_expansion(&g, 3).unwrap();
        let v = e.lambda(1).unwrap().evaluate(&[3.0, 4.0], e.ctx()).unwrap();
        assert_eq!(v, vec![Complex::new(-5.0, 0.0), Complex::new(0.0, 0.0), Complex::new(0.0, 0.0), Complex::new(-5.0, 0.0)]);
        for j in [0, -1, -2] {
            assert!(e.lambda(j).unwrap().is_zero(), "λ_{j} should vanish");
        }
    }

    #[test]
    fn insufficient_orders() {
        let g = BoundaryGeometry::<f64>::flat(3, 1, Truncation::rect(3, 1));
        match forward_expansion(&g, 3) {
            Err(Error::OrderExhausted { required_tangential, required_normal, .. }) => {
                assert_eq!((required_tangential, required_normal), (5, 3));
            }
            other => panic!("expected order error, got {other:?}"),
        }
    }

    #[test]
    fn sample_set_shape() {
        let s = xi_samples(2, 8, DEFAULT_SEED);
        assert_eq!(s.len(), 12);
        assert_eq!(s[1], vec![-1.0, 0.0]);
        assert!(s.iter().all(|v| (v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14));
        assert_eq!(s, xi_samples(2, 8, DEFAULT_SEED));
    }

    #[test]
    fn identity_gauge_is_neutral() {
        let g = BoundaryGeometry::<f64>::flat(3, 1, Truncation::rect(4, 2));
        let e = forward_expansion(&g, 2).unwrap();
        let u = MatrixJet::scalar(1, &Jet::one(3, e.ctx().truncation()));
        let c = conjugate_by_gauge(&e, &u).unwrap();
        assert_eq!(c.depth(), e.depth());
        for (a, b) in c.terms().iter().zip(e.terms()) {
            assert!(a.max_diff(b, e.ctx()).unwrap() < 1e-15);
        }
    }
}
