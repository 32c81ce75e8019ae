use dtn_core::forward::{conjugate_by_gauge, forward_expansion};
use dtn_core::jet::{Jet, MatrixJet, Truncation};
use dtn_core::laplacian::BoundaryGeometry;
use dtn_core::random::{phase_gauge, random_geometry};
use dtn_core::reconstruction::*;
use dtn_core::symbol::{GeometryContext, SymbolExpansion, SymbolTerm, XiMonomial};
use dtn_core::Error;
use num_complex::{Complex, Complex64};
use proptest::prelude::*;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn rect() -> Truncation {
    Truncation::rect(5, 3)
}

fn opts() -> ReconstructionOptions {
    ReconstructionOptions::default()
}

fn constant(v: f64) -> Jet<f64> {
    Jet::constant(3, rect().boundary(), Complex::from(v))
}

/// `g^{11} = 1 + 2xⁿ` exactly through third order.
fn a_example() -> BoundaryGeometry<f64> {
    let t = Jet::<f64>::variable(3, rect(), 2);
    let mut g11 = Jet::one(3, rect());
    let mut power = Jet::one(3, rect());
    for _ in 0..3 {
        power = power.try_mul(&t.scale(&Complex64::from(-2.0))).unwrap();
        g11 = g11.try_add(&power).unwrap();
    }
    BoundaryGeometry::new(3, 1, vec![g11, Jet::zero(3, rect()), Jet::zero(3, rect()), Jet::one(3, rect())], vec![MatrixJet::zero(1, 3, rect()); 2], true)
        .unwrap()
}

fn b_connection(b: f64) -> BoundaryGeometry<f64> {
    let flat = BoundaryGeometry::<f64>::flat(3, 1, rect());
    let connection = vec![MatrixJet::from_constant(1, 3, rect(), &[I * b]), MatrixJet::zero(1, 3, rect())];
    BoundaryGeometry::new(3, 1, flat.metric_entries().to_vec(), connection, true).unwrap()
}

fn const_value(j: &Jet<f64>) -> Complex64 {
    j.constant_term()
}

#[test]
fn flat_reconstructs_to_flat() {
    let e = forward_expansion(&BoundaryGeometry::<f64>::flat(3, 2, rect()), 3).unwrap();
    let res = reconstruct_all(&e, true, &opts()).unwrap();
    assert_eq!(res.inverse_metric_jets.len(), 4);
    assert_eq!(res.connection_jets.len(), 3);
    for (p, slice) in res.inverse_metric_jets.iter().enumerate() {
        for (i, g) in slice.iter().enumerate() {
            let want = if p == 0 && i % 3 == 0 { 1.0 } else { 0.0 };
            assert!(g.try_sub(&constant(want)).unwrap().max_abs() < 1e-14);
        }
    }
    assert!(res.connection_jets.iter().flatten().all(|w| w.max_abs() < 1e-14));
    assert!(!res.conformal_obstruction);
}

#[test]
fn metric_by_polarization() {
    let tr = rect().boundary();
    let ctx = GeometryContext::new(3, 1, vec![constant(2.0), constant(0.0), constant(0.0), constant(1.0)]).unwrap();
    let lambda1 = SymbolTerm::q2_power(&ctx, Complex::from(-1.0), 1, 1, tr);
    let g = recover_metric(&lambda1, &ctx, &opts()).unwrap();
    let want = [2.0, 0.0, 0.0, 1.0];
    for (got, w) in g.iter().zip(want) {
        assert!((const_value(got) - w).norm() < 1e-14);
    }
}

#[test]
fn non_scalar_principal_symbol_is_invalid() {
    let ctx = GeometryContext::<f64>::flat(3, 2, rect().boundary());
    let off = MatrixJet::from_constant(2, 3, rect().boundary(), &[Complex::from(-1.0), Complex::from(0.5), Complex::from(0.0), Complex::from(-1.0)]);
    let lambda1 = SymbolTerm::from_parts(&ctx, 1, 2, rect().boundary(), [(XiMonomial::zero(2), 1, off)]).unwrap();
    assert!(matches!(recover_metric(&lambda1, &ctx, &opts()), Err(Error::InvalidSymbol(_))));
    let wrong_degree = SymbolTerm::q2_power(&ctx, Complex::from(-1.0), 0, 2, rect().boundary());
    assert!(matches!(recover_metric(&wrong_degree, &ctx, &opts()), Err(Error::InvalidSymbol(_))));
}

#[test]
fn even_lambda_zero_means_no_connection() {
    let tr = rect().boundary();
    let ctx = GeometryContext::<f64>::flat(3, 1, tr);
    let even = SymbolTerm::from_parts(
        &ctx,
        0,
        1,
        tr,
        [(XiMonomial::new(&[0, 2]), -2, MatrixJet::from_constant(1, 3, tr, &[Complex::from(0.5)]))],
    )
    .unwrap();
    let g = vec![constant(1.0), constant(0.0), constant(0.0), constant(1.0)];
    let w = recover_connection(&even, &ctx, &g, true, &ReconstructionOptions { consistency_tolerance: 1e300, ..opts() }).unwrap();
    assert!(w.iter().all(|w| w.max_abs() < 1e-14));
}

#[test]
fn constant_connection_round_trip() {
    let b = 0.35;
    let e = forward_expansion(&b_connection(b), 1).unwrap();
    let g = recover_metric(e.lambda(1).unwrap(), e.ctx(), &opts()).unwrap();
    let w = recover_connection(e.lambda(0).unwrap(), e.ctx(), &g, true, &opts()).unwrap();
    assert!((w[0].get(0, 0).constant_term() - I * b).norm() < 1e-14);
    assert!(w[1].max_abs() < 1e-14);
}

#[test]
fn rank_two_odd_part_gives_half_w() {
    // λ₀ = (i / (2|ξ|)) W ξ₁ with W skew-Hermitian ⇒ ω₁ = W / 2
    let tr = rect().boundary();
    let ctx = GeometryContext::<f64>::flat(3, 2, tr);
    let w = [I, Complex::from(1.0), Complex::from(-1.0), I * 2.0];
    let coeff: Vec<Complex64> = w.iter().map(|v| I * 0.5 * v).collect();
    let lambda0 =
        SymbolTerm::from_parts(&ctx, 0, 2, tr, [(XiMonomial::new(&[1, 0]), -1, MatrixJet::from_constant(2, 3, tr, &coeff))])
            .unwrap();
    let g = vec![constant(1.0), constant(0.0), constant(0.0), constant(1.0)];
    let omega = recover_connection(&lambda0, &ctx, &g, true, &opts()).unwrap();
    for (e, v) in w.iter().enumerate() {
        assert!((omega[0].get(e / 2, e % 2).constant_term() - v * 0.5).norm() < 1e-14);
    }
    assert!(omega[1].max_abs() < 1e-14);
}

#[test]
fn a_example_kappa_and_h() {
    let e = forward_expansion(&a_example(), 2).unwrap();
    // λ₀(e₂) = ½, λ₀(e₁) = 0
    assert!((e.lambda(0).unwrap().evaluate(&[0.0, 1.0], e.ctx()).unwrap()[0] - 0.5).norm() < 1e-14);
    assert!(e.lambda(0).unwrap().evaluate(&[1.0, 0.0], e.ctx()).unwrap()[0].norm() < 1e-14);
    let res = reconstruct_all(&e, true, &opts()).unwrap();
    let kappa: Vec<Complex64> = res.kappa_trace[0].iter().map(const_value).collect();
    let h: Vec<Complex64> = res.inverse_metric_jets[1].iter().map(const_value).collect();
    for (got, want) in kappa.iter().zip([0.0, 0.0, 0.0, -2.0]) {
        assert!((got - want).norm() < 1e-13, "κ = {kappa:?}");
    }
    for (got, want) in h.iter().zip([2.0, 0.0, 0.0, 0.0]) {
        assert!((got - want).norm() < 1e-13, "h = {h:?}");
    }
    // the algebraic identity in isolation
    let g = vec![constant(1.0), constant(0.0), constant(0.0), constant(1.0)];
    let kap = vec![constant(0.0), constant(0.0), constant(0.0), constant(-2.0)];
    let back = h_from_kappa(3, &kap, &g, &g).unwrap();
    assert!((const_value(&back[0]) - 2.0).norm() < 1e-15 && back[3].max_abs() < 1e-15);
    // the second normal derivative of g^{11} = 1 + 2xⁿ vanishes
    assert!(res.inverse_metric_jets[2].iter().all(|j| j.max_abs() < 1e-12));
}

#[test]
fn round_trip_on_random_geometries() {
    for seed in 0..4 {
        let g = random_geometry(3, 2, rect(), 0.3, seed);
        let e = forward_expansion(&g, 3).unwrap();
        let res = reconstruct_all(&e, true, &opts()).unwrap();
        assert_eq!(res.inverse_metric_jets.len(), 4);
        assert_eq!(res.connection_jets.len(), 3);
        let dev = res.max_relative_deviation(&g).unwrap();
        assert!(dev < 1e-8, "seed {seed}: deviation {dev}");
        assert!(res.residuals.iter().all(|r| *r < 1e-9));
    }
}

#[test]
fn round_trip_in_four_dimensions() {
    let g = random_geometry(4, 1, Truncation::rect(4, 2), 0.2, 11);
    let e = forward_expansion(&g, 2).unwrap();
    let res = reconstruct_all(&e, true, &opts()).unwrap();
    assert!(res.max_relative_deviation(&g).unwrap() < 1e-8);
}

#[test]
fn two_dimensions_recover_boundary_values_only() {
    let g = random_geometry(2, 2, rect(), 0.3, 5);
    let e = forward_expansion(&g, 3).unwrap();
    let res = reconstruct_all(&e, true, &opts()).unwrap();
    assert!(res.conformal_obstruction);
    assert_eq!(res.inverse_metric_jets.len(), 1);
    assert_eq!(res.connection_jets.len(), 1);
    assert!(res.max_relative_deviation(&g).unwrap() < 1e-8);
    let partial = PartialGeometry {
        n: 2,
        r: 2,
        orthonormal_frame: true,
        inverse_metric: res.inverse_metric_jets.clone(),
        connection: res.connection_jets.clone(),
    };
    assert!(matches!(
        recover_next_normal_order(&partial, e.lambda(-1).unwrap(), e.ctx(), &opts()),
        Err(Error::ConformalObstruction(_))
    ));
    let one = Jet::<f64>::one(2, rect().boundary());
    assert!(matches!(h_from_kappa(2, std::slice::from_ref(&one), std::slice::from_ref(&one), std::slice::from_ref(&one)), Err(Error::ConformalObstruction(_))));
}

#[test]
fn rotated_polarization_frame_agrees() {
    let g = random_geometry(3, 1, rect(), 0.3, 2);
    let e = forward_expansion(&g, 1).unwrap();
    let (c, s) = (0.6f64, 0.8f64);
    let frame = vec![vec![c, s], vec![-s, c]];
    let a = recover_metric(e.lambda(1).unwrap(), e.ctx(), &opts()).unwrap();
    let b = recover_metric_in_frame(e.lambda(1).unwrap(), e.ctx(), &frame, &opts()).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(x.max_diff(y) < 1e-10);
    }
}

#[test]
fn inconsistent_symbol_is_detected() {
    let g = a_example();
    let e = forward_expansion(&g, 2).unwrap();
    let tr = e.ctx().truncation();
    // ξ₁⁴ / |ξ|⁴ is not of the normal form −ξᵀκξ / (2|ξ|)²
    let bad = SymbolTerm::from_parts(
        e.ctx(),
        0,
        1,
        tr,
        [(XiMonomial::new(&[4, 0]), -4, MatrixJet::from_constant(1, 3, tr, &[Complex::from(0.3)]))],
    )
    .unwrap();
    let mut terms = e.terms().to_vec();
    terms[1] = terms[1].add(&bad, e.ctx()).unwrap();
    let corrupted = SymbolExpansion::new(e.ctx().clone(), terms).unwrap();
    assert!(matches!(reconstruct_all(&corrupted, true, &opts()), Err(Error::InconsistentSymbol(_))));
}

#[test]
fn phase_gauge_gives_imaginary_connection() {
    let c = 0.45;
    let flat = forward_expansion(&BoundaryGeometry::<f64>::flat(3, 1, rect()), 2).unwrap();
    let u = phase_gauge(3, 1, rect().boundary(), c);
    let conj = conjugate_by_gauge(&flat, &u).unwrap();
    let res = reconstruct_all(&conj, true, &opts()).unwrap();
    let w = &res.connection_jets[0];
    assert!((w[0].get(0, 0).constant_term() - I * c).norm() < 1e-8);
    assert!(w[1].max_abs() < 1e-8);
}

fn symmetric_jets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (proptest::collection::vec(-1.0f64..1.0, 6), proptest::collection::vec(-0.3f64..0.3, 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_and_h_are_inverse((h, p) in symmetric_jets()) {
        // n = 4: symmetric 3 × 3 h and a metric g = δ + P near the identity
        let tr = Truncation::rect(0, 0);
        let c = |v: f64| Jet::<f64>::constant(4, tr, Complex::from(v));
        let sym = |v: &[f64], diag: f64| {
            let idx = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
            (0..9).map(|e| c(v[idx[e / 3][e % 3]] + if e % 4 == 0 { diag } else { 0.0 })).collect::<Vec<_>>()
        };
        let hh = sym(&h, 0.0);
        let pp = [p[0], p[1], p[2], p[0] * 0.5, p[1] * 0.5, -p[2]];
        let lower = sym(&pp, 1.0);
        let upper = MatrixJet::from_fn(3, |k, l| lower[k * 3 + l].clone()).inverse().unwrap().entries().to_vec();
        let kappa = kappa_from_h(&hh, &lower, &upper).unwrap();
        let back = h_from_kappa(4, &kappa, &lower, &upper).unwrap();
        for (a, b) in back.iter().zip(&hh) {
            prop_assert!(a.max_diff(b) < 1e-12);
        }
    }
}
