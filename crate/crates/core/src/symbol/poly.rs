//! Polynomials in `ξ′` with scalar- or matrix-jet coefficients.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::jet::{Jet, MatrixJet, MultiIndex, Truncation};
use crate::scalar::{real, Scalar};

/// Exponent vector of a monomial in `ξ₁ … ξ_{n−1}`.
pub type XiMonomial = MultiIndex;

pub type ScalarPoly<T> = BTreeMap<XiMonomial, Jet<T>>;
pub type MatrixPoly<T> = BTreeMap<XiMonomial, MatrixJet<T>>;

pub(crate) fn add_into<T: Scalar>(p: &mut MatrixPoly<T>, m: XiMonomial, c: MatrixJet<T>) {
    if c.is_zero() {
        // keep truncation bookkeeping minimal: zero contributions are dropped
        return;
    }
    let sum = match p.remove(&m) {
        Some(prev) => prev.try_add(&c).expect("matrix jets of one symbol share shape"),
        None => c,
    };
    if !sum.is_zero() {
        p.insert(m, sum);
    }
}

pub(crate) fn add<T: Scalar>(a: &MatrixPoly<T>, b: &MatrixPoly<T>) -> MatrixPoly<T> {
    let mut out = a.clone();
    for (m, c) in b {
        add_into(&mut out, *m, c.clone());
    }
    out
}

pub(crate) fn mul<T: Scalar>(a: &MatrixPoly<T>, b: &MatrixPoly<T>) -> MatrixPoly<T> {
    let mut out = MatrixPoly::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            add_into(&mut out, ma.add(mb), ca.try_mul(cb).expect("matrix jets of one symbol share shape"));
        }
    }
    out
}

pub(crate) fn mul_scalar<T: Scalar>(a: &MatrixPoly<T>, s: &ScalarPoly<T>) -> MatrixPoly<T> {
    let mut out = MatrixPoly::new();
    for (ma, ca) in a {
        for (ms, cs) in s {
            add_into(&mut out, ma.add(ms), ca.scale_jet(cs));
        }
    }
    out
}

pub(crate) fn scale<T: Scalar>(a: &MatrixPoly<T>, c: &Complex<T>) -> MatrixPoly<T> {
    let mut out = MatrixPoly::new();
    for (m, v) in a {
        add_into(&mut out, *m, v.scale(c));
    }
    out
}

pub(crate) fn truncate<T: Scalar>(a: &MatrixPoly<T>, trunc: Truncation) -> MatrixPoly<T> {
    let mut out = MatrixPoly::new();
    for (m, v) in a {
        add_into(&mut out, *m, v.truncated(trunc));
    }
    out
}

/// `∂/∂ξ_l` of a polynomial.
pub(crate) fn dxi<T: Scalar>(a: &MatrixPoly<T>, l: usize) -> MatrixPoly<T> {
    let mut out = MatrixPoly::new();
    for (m, v) in a {
        if let Some(lower) = m.lower(l) {
            let k = T::from_u32(m.get(l)).expect("small integer");
            add_into(&mut out, lower, v.scale(&real(k)));
        }
    }
    out
}

/// `∂/∂x^j` of the coefficients.
pub(crate) fn dx<T: Scalar>(a: &MatrixPoly<T>, j: usize) -> MatrixPoly<T> {
    let mut out = MatrixPoly::new();
    for (m, v) in a {
        add_into(&mut out, *m, v.derive(j));
    }
    out
}

pub(crate) fn max_abs<T: Scalar>(a: &MatrixPoly<T>) -> f64 {
    a.values().map(MatrixJet::max_abs).fold(0.0, f64::max)
}

pub(crate) fn monomial_value(m: &XiMonomial, xi: &[f64]) -> f64 {
    m.exps().iter().zip(xi).map(|(&e, &x)| x.powi(i32::from(e))).product()
}

pub(crate) fn monomial_value_exact<T: Scalar>(m: &XiMonomial, xi: &[T]) -> T {
    let mut acc = T::one();
    for (&e, x) in m.exps().iter().zip(xi) {
        for _ in 0..e {
            acc = acc * x.clone();
        }
    }
    acc
}

/// Scalar polynomial evaluated at `ξ` as a jet in `x`.
pub(crate) fn scalar_eval_jet<T: Scalar>(p: &ScalarPoly<T>, xi: &[T], dim: usize, trunc: Truncation) -> Jet<T> {
    p.iter().fold(Jet::zero(dim, trunc), |acc, (m, c)| &acc + &c.scale(&real(monomial_value_exact(m, xi))))
}
