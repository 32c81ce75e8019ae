use dtn_core::forward::*;
use dtn_core::jet::{Jet, MatrixJet, MultiIndex, Truncation};
use dtn_core::laplacian::{assemble_coefficients, BoundaryGeometry};
use dtn_core::random::random_geometry;
use dtn_core::symbol::{compose_formal, FormalSymbol, GeometryContext, SymbolTerm, XiMonomial};
use dtn_core::{Error, Rational};
use num_bigint::BigInt;
use num_complex::{Complex, Complex64};

const I: Complex64 = Complex64::new(0.0, 1.0);

fn rect() -> Truncation {
    Truncation::rect(5, 3)
}

/// `g^{11} = 1 + 2xⁿ`, i.e. `g_{11} = 1 − 2xⁿ + 4(xⁿ)² − 8(xⁿ)³`, in three dimensions.
fn a_example() -> BoundaryGeometry<f64> {
    let t = Jet::<f64>::variable(3, rect(), 2);
    let mut g11 = Jet::one(3, rect());
    let mut power = Jet::one(3, rect());
    for _ in 0..3 {
        power = power.try_mul(&t.scale(&Complex64::from(-2.0))).unwrap();
        g11 = g11.try_add(&power).unwrap();
    }
    let metric = vec![g11, Jet::zero(3, rect()), Jet::zero(3, rect()), Jet::one(3, rect())];
    BoundaryGeometry::new(3, 1, metric, vec![MatrixJet::zero(1, 3, rect()); 2], true).unwrap()
}

/// Flat metric, `r = 1`, `ω₁ = i b`.
fn b_connection(n: usize, b: f64) -> BoundaryGeometry<f64> {
    let flat = BoundaryGeometry::<f64>::flat(n, 1, rect());
    let mut connection = flat.connection_entries().to_vec();
    connection[0] = MatrixJet::from_constant(1, n, rect(), &[I * b]);
    BoundaryGeometry::new(n, 1, flat.metric_entries().to_vec(), connection, true).unwrap()
}

fn value(e: &dtn_core::symbol::SymbolExpansion<f64>, j: i32, xi: &[f64]) -> Complex64 {
    e.lambda(j).unwrap().evaluate(xi, e.ctx()).unwrap()[0]
}

#[test]
fn flat_expansion_is_exact() {
    for n in 2..=4 {
        for r in 1..=2 {
            let e = forward_expansion(&BoundaryGeometry::<f64>::flat(n, r, rect()), 3).unwrap();
            assert_eq!(e.depth(), 3);
            let expected = SymbolTerm::q2_power(e.ctx(), Complex::new(-1.0, 0.0), 1, r, e.ctx().truncation());
            assert_eq!(e.lambda(1).unwrap().max_diff(&expected, e.ctx()).unwrap(), 0.0);
            for j in [0, -1, -2] {
                assert!(e.lambda(j).unwrap().is_zero(), "n = {n}, r = {r}, λ_{j}");
            }
        }
    }
}

#[test]
fn flat_expansion_over_rationals() {
    let e = forward_expansion(&BoundaryGeometry::<Rational>::flat(3, 2, rect()), 3).unwrap();
    for j in [0, -1, -2] {
        assert!(e.lambda(j).unwrap().is_zero());
    }
}

#[test]
fn principal_symbol_evaluation() {
    let tr = Truncation::rect(2, 0);
    let two = Jet::<f64>::constant(3, tr, Complex::new(2.0, 0.0));
    let ctx = GeometryContext::new(3, 1, vec![two, Jet::zero(3, tr), Jet::zero(3, tr), Jet::one(3, tr)]).unwrap();
    let root = SymbolTerm::q2_power(&ctx, Complex::new(1.0, 0.0), 1, 1, tr);
    assert!((root.neg().evaluate(&[1.0, 1.0], &ctx).unwrap()[0].re + 3f64.sqrt()).abs() < 1e-15);
    // ∂_{ξ₁}√q₂ = g^{11} ξ₁ / √q₂ = 2/√3 at ξ = (1, 1)
    let d = root.dxi(0, &ctx);
    assert_eq!(d.degree(), 0);
    assert!((d.evaluate(&[1.0, 1.0], &ctx).unwrap()[0].re - 2.0 / 3f64.sqrt()).abs() < 1e-15);
    // the same derivative by central differences of √(2ξ₁² + ξ₂²)
    let f = |x: f64| (2.0 * x * x + 1.0).sqrt();
    let h = 1e-5;
    assert!(((f(1.0 + h) - f(1.0 - h)) / (2.0 * h) - 2.0 / 3f64.sqrt()).abs() < 1e-9);
    // homogeneity
    let v1 = root.evaluate(&[0.3, -0.7], &ctx).unwrap()[0];
    let v2 = root.evaluate(&[0.6, -1.4], &ctx).unwrap()[0];
    assert!((v2 - v1 * 2.0).norm() < 1e-14);
    assert!((d.evaluate(&[0.6, -1.4], &ctx).unwrap()[0] - d.evaluate(&[0.3, -0.7], &ctx).unwrap()[0]).norm() < 1e-14);
    assert!(matches!(root.evaluate(&[0.0, 0.0], &ctx), Err(Error::HomogeneousSingularity)));
    assert!(matches!(root.evaluate(&[1.0], &ctx), Err(Error::Shape(_))));
}

#[test]
fn normalization_is_canonical() {
    let ctx = GeometryContext::<f64>::flat(3, 1, rect());
    let one = MatrixJet::identity(1, 3, rect());
    let m = |e: &[u32]| XiMonomial::new(e);
    // (ξ₁² + ξ₂²) q₂^{−1/2} = q₂^{1/2}
    let a = SymbolTerm::from_parts(&ctx, 1, 1, rect(), [(m(&[2, 0]), -1, one.clone()), (m(&[0, 2]), -1, one.clone())])
        .unwrap();
    let root = SymbolTerm::q2_power(&ctx, Complex::new(1.0, 0.0), 1, 1, rect());
    assert_eq!(a, root);
    // q₂^{1/2} + ξ₁² q₂^{−1/2} evaluates pointwise
    let b = SymbolTerm::from_parts(&ctx, 1, 1, rect(), [(m(&[0, 0]), 1, one.clone()), (m(&[2, 0]), -1, one.clone())])
        .unwrap();
    let xi = [0.6, 0.8];
    assert!((b.evaluate(&xi, &ctx).unwrap()[0].re - (1.0 + 0.36)).abs() < 1e-15);
    assert!(matches!(
        SymbolTerm::from_parts(&ctx, 1, 1, rect(), [(m(&[1, 0]), 1, one)]),
        Err(Error::Degree(_))
    ));
}

#[test]
fn normal_derivative_of_the_root() {
    // g^{kl} = δ + xⁿ A: D_{xⁿ}√q₂ at xⁿ = 0 is −i ξᵀAξ / (2|ξ|)
    let tr = rect();
    let t = Jet::<f64>::variable(3, tr, 2);
    let a = [[0.5, -0.2], [-0.2, 1.5]];
    let ginv = (0..4)
        .map(|e| {
            let (k, l) = (e / 2, e % 2);
            let base = if k == l { Jet::one(3, tr) } else { Jet::zero(3, tr) };
            base.try_add(&t.scale(&Complex::from(a[k][l]))).unwrap()
        })
        .collect();
    let ctx = GeometryContext::new(3, 1, ginv).unwrap();
    let root = SymbolTerm::q2_power(&ctx, Complex::new(1.0, 0.0), 1, 1, tr);
    let d = root.dx(2, &ctx);
    for xi in [[1.0f64, 0.0], [0.3, 0.9], [-1.2, 0.4]] {
        let norm = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
        let quad = a[0][0] * xi[0] * xi[0] + 2.0 * a[0][1] * xi[0] * xi[1] + a[1][1] * xi[1] * xi[1];
        let got = d.evaluate(&xi, &ctx).unwrap()[0];
        assert!((got - (-I) * quad / (2.0 * norm)).norm() < 1e-14);
    }
    // x-independent terms have no x-derivative
    let flat = GeometryContext::<f64>::flat(3, 1, tr);
    assert!(SymbolTerm::q2_power(&flat, Complex::new(1.0, 0.0), 1, 1, tr).dx(0, &flat).is_zero());
}

#[test]
fn a_example_matches_riccati_oracle() {
    // λ_j from the Riccati equation w' + w² + F w − q₂ = 0 along xⁿ, expanded
    // in homogeneity and evaluated at xⁿ = 0 by an independent computer-algebra run.
    let e = forward_expansion(&a_example(), 3).unwrap();
    let cases: [([f64; 2], [f64; 4]); 4] = [
        ([1.0, 0.0], [-1.0, 0.0, 0.0, 0.0]),
        ([0.0, 1.0], [-1.0, 0.5, -0.625, 1.25]),
        ([1.0, 1.0], [-std::f64::consts::SQRT_2, 0.25, -15.0 * std::f64::consts::SQRT_2 / 64.0, 85.0 / 128.0]),
        ([0.6, 0.8], [-1.0, 8.0 / 25.0, -68.0 / 125.0, 4336.0 / 3125.0]),
    ];
    for (xi, expected) in cases {
        for (j, want) in [1, 0, -1, -2].into_iter().zip(expected) {
            let got = value(&e, j, &xi);
            assert!((got.re - want).abs() < 1e-13 && got.im.abs() < 1e-13, "λ_{j}({xi:?}) = {got}, expected {want}");
        }
    }
}

#[test]
fn a_example_lambda_zero_is_exact_over_rationals() {
    let tr = rect();
    let t = Jet::<Rational>::variable(3, tr, 2);
    let mut g11 = Jet::one(3, tr);
    let mut power = Jet::one(3, tr);
    let minus_two = Complex::new(Rational::from_integer(BigInt::from(-2)), Rational::from_integer(BigInt::from(0)));
    for _ in 0..3 {
        power = power.try_mul(&t.scale(&minus_two)).unwrap();
        g11 = g11.try_add(&power).unwrap();
    }
    let geom = BoundaryGeometry::new(3, 1, vec![g11, Jet::zero(3, tr), Jet::zero(3, tr), Jet::one(3, tr)], vec![MatrixJet::zero(1, 3, tr); 2], true)
        .unwrap();
    let e = forward_expansion(&geom, 2).unwrap();
    // λ₀ = ξ₂² / (2 q₂): even part with q₂ power −1 and numerator ½ ξ₂²
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    let part = e.lambda(0).unwrap().part(0);
    assert_eq!(part.twice_power, -2);
    assert_eq!(part.numerator.len(), 1);
    let (m, c) = part.numerator.iter().next().unwrap();
    assert_eq!(*m, XiMonomial::new(&[0, 2]));
    assert_eq!(c.get(0, 0).constant_term().re, half);
    assert!(e.lambda(0).unwrap().part(1).numerator.is_empty());
}

#[test]
fn constant_connection_lambda_zero() {
    let b = 0.7;
    for n in [2, 3] {
        let e = forward_expansion(&b_connection(n, b), 2).unwrap();
        let mut xi = vec![0.0; n - 1];
        xi[0] = 1.0;
        assert!((value(&e, 0, &xi) + b).norm() < 1e-14);
        if n == 3 {
            assert!(value(&e, 0, &[0.0, 1.0]).norm() < 1e-14);
            assert!((value(&e, 0, &[0.6, 0.8]) + 0.6 * b).norm() < 1e-14);
            assert!((value(&e, 0, &[-0.6, 0.8]) - 0.6 * b).norm() < 1e-14);
        }
    }
    let coeffs = assemble_coefficients(&b_connection(3, b)).unwrap();
    assert!((coeffs.q0.evaluate(&[1.0, 0.0], &coeffs.ctx).unwrap()[0] - b * b).norm() < 1e-14);
    assert!((coeffs.q1.evaluate(&[1.0, 0.0], &coeffs.ctx).unwrap()[0] - 2.0 * b).norm() < 1e-14);
}

#[test]
fn two_dimensional_recursion_runs() {
    let g = random_geometry(2, 1, rect(), 0.3, 9);
    let e = forward_expansion(&g, 3).unwrap();
    assert_eq!(e.terms().len(), 4);
}

#[test]
fn insufficient_orders_are_reported() {
    let g = BoundaryGeometry::<f64>::flat(3, 1, Truncation::rect(4, 3));
    match forward_expansion(&g, 3) {
        Err(Error::OrderExhausted { required_tangential, required_normal, .. }) => {
            assert_eq!((required_tangential, required_normal), (5, 3));
        }
        other => panic!("expected an order error, got {other:?}"),
    }
    assert_eq!(required_orders(3), (5, 3));
    // a staircase that loses one tangential order per normal order suffices
    let stair = BoundaryGeometry::<f64>::flat(3, 1, Truncation::staircase(&[5, 4, 3, 2]));
    assert!(forward_expansion(&stair, 3).is_ok());
}

#[test]
fn factorization_residual_vanishes_on_random_geometries() {
    let samples = xi_samples(2, 8, DEFAULT_SEED);
    for seed in 0..5 {
        let g = random_geometry(3, 2, rect(), 0.3, seed);
        let coeffs = assemble_coefficients(&g).unwrap();
        let a = factorization_symbols(&coeffs, 3).unwrap();
        let res = factorization_residual(&coeffs, &a, 3, &samples).unwrap();
        assert_eq!(res.iter().map(|r| r.degree).collect::<Vec<_>>(), vec![2, 1, 0, -1]);
        for r in &res {
            assert!(r.norm <= 1e-9, "seed {seed}: degree {} residual {}", r.degree, r.norm);
        }
        // a₁ alone leaves the degree-1 slice that a₀ cancels
        let short = factorization_residual(&coeffs, &a[..1], 1, &samples).unwrap();
        assert!(short[1].norm > 1e-3, "seed {seed}: {:?}", short);
    }
    let flat = assemble_coefficients(&BoundaryGeometry::<f64>::flat(3, 2, rect())).unwrap();
    let a = factorization_symbols(&flat, 3).unwrap();
    assert!(factorization_residual(&flat, &a, 3, &samples).unwrap().iter().all(|r| r.norm == 0.0));
}

#[test]
fn composition_matches_finite_differences() {
    // D₁² ∘ u(x) has the exact symbol u ξ₁² + 2 (D₁u) ξ₁ + D₁²u; check the
    // composed symbol against e^{−ix·ξ} D₁²(u e^{ix·ξ}) by central differences.
    let tr = Truncation::rect(4, 0);
    let ctx = GeometryContext::<f64>::flat(2, 1, tr);
    let coeffs = [0.3, -0.8, 0.5, 0.2, -0.1];
    let u_jet = Jet::from_coeffs(2, tr, coeffs.iter().enumerate().map(|(d, &c)| (MultiIndex::new(&[d as u32, 0]), Complex::from(c))));
    let u = |x: f64| coeffs.iter().enumerate().map(|(d, c)| c * x.powi(d as i32)).sum::<f64>();
    let one = MatrixJet::identity(1, 2, tr);
    let d2 = SymbolTerm::from_parts(&ctx, 2, 1, tr, [(XiMonomial::new(&[2]), 0, one)]).unwrap();
    let mult = SymbolTerm::multiplication(&ctx, &MatrixJet::scalar(1, &u_jet));
    let a = FormalSymbol::from_terms(&ctx, [d2]).unwrap();
    let b = FormalSymbol::from_terms(&ctx, [mult]).unwrap();
    let composed = compose_formal(&a, &b, 0, &ctx).unwrap();
    for xi in [0.7, 1.9, -2.3] {
        let total: Complex64 = (0..=2).map(|d| composed.term(d).map_or(Complex64::from(0.0), |t| t.evaluate(&[xi], &ctx).unwrap()[0])).sum();
        let f = |x: f64| u(x) * Complex64::from_polar(1.0, x * xi);
        let h = 1e-3;
        let second = (-f(2.0 * h) + f(h) * 16.0 - f(0.0) * 30.0 + f(-h) * 16.0 - f(-2.0 * h)) / (12.0 * h * h);
        let oracle = -second; // D₁² = −∂₁²
        assert!((total - oracle).norm() < 1e-6, "ξ = {xi}: {total} vs {oracle}");
    }
    // identity on the right leaves A unchanged
    let id = FormalSymbol::from_terms(&ctx, [SymbolTerm::multiplication(&ctx, &MatrixJet::identity(1, 2, tr))]).unwrap();
    let same = compose_formal(&a, &id, 0, &ctx).unwrap();
    assert_eq!(same.term(2), a.term(2));
}

#[test]
fn gauge_conjugation() {
    let g = random_geometry(3, 2, rect(), 0.3, 4);
    let e = forward_expansion(&g, 2).unwrap();
    let id = MatrixJet::identity(2, 3, rect());
    let same = conjugate_by_gauge(&e, &id).unwrap();
    for (a, b) in e.terms().iter().zip(same.terms()) {
        assert!(a.max_diff(b, e.ctx()).unwrap() < 1e-15);
    }
    // constant unitary on a flat expansion: λ_j ↦ u⁻¹ λ_j u
    let flat = forward_expansion(&BoundaryGeometry::<f64>::flat(3, 2, rect()), 2).unwrap();
    let (c, s) = (0.6, 0.8);
    let u = MatrixJet::from_constant(2, 3, rect(), &[Complex::from(c), I * s, I * s, Complex::from(c)]);
    let conj = conjugate_by_gauge(&flat, &u).unwrap();
    for (a, b) in flat.terms().iter().zip(conj.terms()) {
        assert!(a.max_diff(b, flat.ctx()).unwrap() < 1e-15);
    }
    let normal = MatrixJet::from_fn(2, |i, j| if i == j { Jet::variable(3, rect(), 2) } else { Jet::zero(3, rect()) });
    assert!(matches!(conjugate_by_gauge(&flat, &normal), Err(Error::Gauge(_))));
}
