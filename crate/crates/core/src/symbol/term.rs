use num_complex::Complex;
use num_traits::Zero;

use super::context::GeometryContext;
use super::poly::{self, MatrixPoly, XiMonomial};
use crate::error::{Error, Result};
use crate::jet::{Jet, MatrixJet, Truncation};
use crate::scalar::{imag_unit, ratio, real, RealScalar, Scalar};

/// One parity class of a symbol term: `Σ_m N_m(x) ξ^m · q₂^{P/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerPart<T: Scalar> {
    pub twice_power: i32,
    pub numerator: MatrixPoly<T>,
}

/// Matrix-valued symbol positively homogeneous of one integer degree.
///
/// A term is a sum of two parts, one carrying an integer and one a
/// half-integer power of `q₂`; no single power can represent e.g.
/// `a₀ = (ξᵀAξ)/|ξ|² + const`. Each part is kept in lowest terms: its
/// numerator is not divisible by `q₂`, which makes the representation
/// unique. All coefficient jets share the term's truncation.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolTerm<T: Scalar> {
    degree: i32,
    rank: usize,
    dim: usize,
    trunc: Truncation,
    parts: [PowerPart<T>; 2],
}

fn empty_power(degree: i32, parity: usize) -> i32 {
    degree - (degree - parity as i32).rem_euclid(2)
}

fn parity(twice_power: i32) -> usize {
    twice_power.rem_euclid(2) as usize
}

impl<T: Scalar> SymbolTerm<T> {
    pub fn zero(degree: i32, rank: usize, dim: usize, trunc: Truncation) -> Self {
        Self {
            degree,
            rank,
            dim,
            trunc,
            parts: [
                PowerPart { twice_power: empty_power(degree, 0), numerator: MatrixPoly::new() },
                PowerPart { twice_power: empty_power(degree, 1), numerator: MatrixPoly::new() },
            ],
        }
    }

    /// Canonicalizes a sum of `(monomial, 2·power, coefficient)` triples.
    ///
    /// Every triple must satisfy `deg(m) + power = degree`.
    pub fn from_parts(
        ctx: &GeometryContext<T>,
        degree: i32,
        rank: usize,
        trunc: Truncation,
        pieces: impl IntoIterator<Item = (XiMonomial, i32, MatrixJet<T>)>,
    ) -> Result<Self> {
        let mut out = Self::zero(degree, rank, ctx.n(), trunc);
        for (m, tp, c) in pieces {
            if m.len() != ctx.xi_dim() || c.rank() != rank || c.dim() != ctx.n() {
                return Err(Error::Shape("symbol piece does not match the context".into()));
            }
            if m.degree() as i32 + tp != degree {
                return Err(Error::Degree(format!(
                    "monomial {m:?} with q₂ power {tp}/2 has degree {}, expected {degree}",
                    m.degree() as i32 + tp
                )));
            }
            let mut part = MatrixPoly::new();
            part.insert(m, c.truncated(trunc));
            out.absorb(ctx, PowerPart { twice_power: tp, numerator: part });
        }
        out.normalize(ctx);
        Ok(out)
    }

    /// `c · q₂^{P/2} · Id`, homogeneous of degree `P`.
    pub fn q2_power(ctx: &GeometryContext<T>, c: Complex<T>, twice_power: i32, rank: usize, trunc: Truncation) -> Self {
        let one = MatrixJet::scalar(rank, &Jet::constant(ctx.n(), trunc, c));
        Self::from_parts(ctx, twice_power, rank, trunc, [(XiMonomial::zero(ctx.xi_dim()), twice_power, one)])
            .expect("pure q₂ power is homogeneous")
    }

    /// Degree-zero multiplication symbol `u(x)`.
    pub fn multiplication(ctx: &GeometryContext<T>, u: &MatrixJet<T>) -> Self {
        Self::from_parts(ctx, 0, u.rank(), u.truncation(), [(XiMonomial::zero(ctx.xi_dim()), 0, u.clone())])
            .expect("degree-zero multiplication symbol")
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    /// The integer-power part (`parity = 0`) or the half-integer part (`parity = 1`).
    pub fn part(&self, parity: usize) -> &PowerPart<T> {
        &self.parts[parity]
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(|p| p.numerator.is_empty())
    }

    /// Largest coefficient magnitude over both numerators.
    pub fn max_abs(&self) -> f64 {
        self.parts.iter().map(|p| poly::max_abs(&p.numerator)).fold(0.0, f64::max)
    }

    /// Re-declares the reliable orders (meet with the current ones).
    pub fn truncated(&self, trunc: Truncation) -> Self {
        let t = self.trunc.meet(&trunc);
        let mut out = self.clone();
        out.trunc = t;
        for p in &mut out.parts {
            p.numerator = poly::truncate(&p.numerator, t);
        }
        out
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.rank != other.rank || self.dim != other.dim {
            return Err(Error::Shape("symbol terms of different rank or dimension".into()));
        }
        Ok(())
    }

    /// Adds a part of the matching parity, aligning `q₂` powers (no normalization).
    fn absorb(&mut self, ctx: &GeometryContext<T>, part: PowerPart<T>) {
        if part.numerator.is_empty() {
            return;
        }
        let par = parity(part.twice_power);
        let trunc = self.trunc;
        let own = &mut self.parts[par];
        if own.numerator.is_empty() {
            own.twice_power = part.twice_power;
            own.numerator = poly::truncate(&part.numerator, trunc);
            return;
        }
        let (mut lo, mut hi) = (std::mem::take(&mut own.numerator), part.numerator);
        let (mut tp_lo, mut tp_hi) = (own.twice_power, part.twice_power);
        if tp_lo > tp_hi {
            std::mem::swap(&mut lo, &mut hi);
            std::mem::swap(&mut tp_lo, &mut tp_hi);
        }
        while tp_hi > tp_lo {
            hi = poly::mul_scalar(&hi, ctx.q2());
            tp_hi -= 2;
        }
        own.twice_power = tp_lo;
        own.numerator = poly::truncate(&poly::add(&lo, &hi), trunc);
    }

    /// Divides each numerator by `q₂` as long as the division is exact.
    fn normalize(&mut self, ctx: &GeometryContext<T>) {
        for (par, part) in self.parts.iter_mut().enumerate() {
            while !part.numerator.is_empty() && self.degree - part.twice_power >= 2 {
                match divide_by_q2(&part.numerator, ctx) {
                    Some(q) => {
                        part.numerator = q;
                        part.twice_power += 2;
                    }
                    None => break,
                }
            }
            if part.numerator.is_empty() {
                part.twice_power = empty_power(self.degree, par);
            }
        }
    }

    pub fn add(&self, other: &Self, ctx: &GeometryContext<T>) -> Result<Self> {
        self.check(other)?;
        if self.degree != other.degree {
            return Err(Error::Degree(format!("cannot add degrees {} and {}", self.degree, other.degree)));
        }
        let mut out = self.clone();
        out.trunc = self.trunc.meet(&other.trunc);
        for p in &mut out.parts {
            p.numerator = poly::truncate(&p.numerator, out.trunc);
        }
        for p in &other.parts {
            out.absorb(ctx, p.clone());
        }
        out.normalize(ctx);
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        self.scale(&real(-T::one()))
    }

    pub fn sub(&self, other: &Self, ctx: &GeometryContext<T>) -> Result<Self> {
        self.add(&other.neg(), ctx)
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        let mut out = self.clone();
        for p in &mut out.parts {
            p.numerator = poly::scale(&p.numerator, c);
        }
        if c.is_zero() {
            out = Self::zero(self.degree, self.rank, self.dim, self.trunc);
        }
        out
    }

    /// Product with an `x`-dependent scalar jet.
    pub fn scale_jet(&self, a: &Jet<T>) -> Self {
        let mut out = self.clone();
        out.trunc = self.trunc.meet(&a.truncation());
        for p in &mut out.parts {
            let mut num = MatrixPoly::new();
            for (m, c) in &p.numerator {
                poly::add_into(&mut num, *m, c.scale_jet(a));
            }
            p.numerator = num;
        }
        out.fix_empty();
        out
    }

    fn fix_empty(&mut self) {
        for (par, p) in self.parts.iter_mut().enumerate() {
            if p.numerator.is_empty() {
                p.twice_power = empty_power(self.degree, par);
            }
        }
    }

    /// Pointwise (matrix) product of two symbols.
    pub fn mul(&self, other: &Self, ctx: &GeometryContext<T>) -> Result<Self> {
        self.check(other)?;
        let trunc = self.trunc.meet(&other.trunc);
        let mut out = Self::zero(self.degree + other.degree, self.rank, self.dim, trunc);
        for a in &self.parts {
            if a.numerator.is_empty() {
                continue;
            }
            for b in &other.parts {
                if b.numerator.is_empty() {
                    continue;
                }
                let num = poly::mul(&a.numerator, &b.numerator);
                out.absorb(ctx, PowerPart { twice_power: a.twice_power + b.twice_power, numerator: num });
            }
        }
        out.normalize(ctx);
        Ok(out)
    }

    /// `∂/∂ξ_l`; lowers the degree by one.
    pub fn dxi(&self, l: usize, ctx: &GeometryContext<T>) -> Self {
        assert!(l < ctx.xi_dim(), "covector index {l} out of range");
        let mut out = Self::zero(self.degree - 1, self.rank, self.dim, self.trunc);
        for p in &self.parts {
            if p.numerator.is_empty() {
                continue;
            }
            let d = poly::dxi(&p.numerator, l);
            if p.twice_power == 0 {
                out.absorb(ctx, PowerPart { twice_power: 0, numerator: d });
                continue;
            }
            // ∂(N q^s) = [(∂N) q + s N ∂q] q^{s−1}
            let mut num = poly::mul_scalar(&d, ctx.q2());
            let chain = poly::mul_scalar(&poly::scale(&p.numerator, &ratio(i64::from(p.twice_power), 2)), ctx.dq2_dxi(l));
            num = poly::add(&num, &chain);
            out.absorb(ctx, PowerPart { twice_power: p.twice_power - 2, numerator: num });
        }
        out.normalize(ctx);
        out
    }

    /// `∂/∂x^j` (zero-based `j`, the last index is normal); the degree is unchanged.
    pub fn partial_x(&self, j: usize, ctx: &GeometryContext<T>) -> Self {
        assert!(j < self.dim, "coordinate index {j} out of range");
        let trunc = if j + 1 == self.dim {
            self.trunc.after_normal_derivative()
        } else {
            self.trunc.after_tangential_derivative()
        };
        let mut out = Self::zero(self.degree, self.rank, self.dim, trunc);
        for p in &self.parts {
            if p.numerator.is_empty() {
                continue;
            }
            let d = poly::dx(&p.numerator, j);
            if p.twice_power == 0 {
                out.absorb(ctx, PowerPart { twice_power: 0, numerator: d });
                continue;
            }
            let mut num = poly::mul_scalar(&d, ctx.q2());
            let chain = poly::mul_scalar(&poly::scale(&p.numerator, &ratio(i64::from(p.twice_power), 2)), ctx.dq2_dx(j));
            num = poly::add(&num, &chain);
            out.absorb(ctx, PowerPart { twice_power: p.twice_power - 2, numerator: num });
        }
        out.normalize(ctx);
        out
    }

    /// `D_{x^j} = −i ∂/∂x^j`.
    pub fn dx(&self, j: usize, ctx: &GeometryContext<T>) -> Self {
        self.partial_x(j, ctx).scale(&(-imag_unit::<T>()))
    }

    /// Restriction of every coefficient to `xⁿ = 0`; `boundary_ctx` is the restricted context.
    pub fn restrict_to_boundary(&self, boundary_ctx: &GeometryContext<T>) -> Self {
        let trunc = self.trunc.boundary();
        let mut out = Self::zero(self.degree, self.rank, self.dim, trunc);
        for p in &self.parts {
            let mut num = MatrixPoly::new();
            for (m, c) in &p.numerator {
                poly::add_into(&mut num, *m, c.restrict_to_boundary());
            }
            out.absorb(boundary_ctx, PowerPart { twice_power: p.twice_power, numerator: num });
        }
        out.normalize(boundary_ctx);
        out
    }

    /// Value at `x = 0` and covector `ξ` (row-major `r × r`).
    pub fn evaluate(&self, xi: &[f64], ctx: &GeometryContext<T>) -> Result<Vec<Complex<f64>>> {
        if xi.len() != ctx.xi_dim() {
            return Err(Error::Shape(format!("covector has {} components, expected {}", xi.len(), ctx.xi_dim())));
        }
        if xi.iter().all(|&x| x == 0.0) {
            return Err(Error::HomogeneousSingularity);
        }
        let q = ctx.q2_at_origin(xi);
        if !(q > 0.0) {
            return Err(Error::Metric(format!("q₂(0, ξ) = {q:.3e} is not positive")));
        }
        let r = self.rank;
        let mut out = vec![Complex::new(0.0, 0.0); r * r];
        let origin = crate::jet::MultiIndex::zero(self.dim);
        for p in &self.parts {
            let factor = q.powf(f64::from(p.twice_power) / 2.0);
            for (m, c) in &p.numerator {
                let w = poly::monomial_value(m, xi) * factor;
                for (o, v) in out.iter_mut().zip(c.coeff_matrix(&origin)) {
                    *o += Complex::new(v.re.to_f64_lossy(), v.im.to_f64_lossy()) * w;
                }
            }
        }
        Ok(out)
    }

    /// Maximum coefficient difference after subtraction.
    pub fn max_diff(&self, other: &Self, ctx: &GeometryContext<T>) -> Result<f64> {
        Ok(self.sub(other, ctx)?.max_abs())
    }

    pub fn to_f64(&self) -> SymbolTerm<f64> {
        SymbolTerm {
            degree: self.degree,
            rank: self.rank,
            dim: self.dim,
            trunc: self.trunc,
            parts: [0, 1].map(|i| PowerPart {
                twice_power: self.parts[i].twice_power,
                numerator: self.parts[i].numerator.iter().map(|(m, c)| (*m, c.to_f64())).collect(),
            }),
        }
    }
}

impl<T: RealScalar> SymbolTerm<T> {
    /// Value at the covector `ξ` as a matrix of jets in `x`.
    pub fn evaluate_jet(&self, xi: &[T], ctx: &GeometryContext<T>) -> Result<MatrixJet<T>> {
        if xi.iter().all(|x| x.is_zero()) {
            return Err(Error::HomogeneousSingularity);
        }
        let trunc = self.trunc;
        let q = poly::scalar_eval_jet(ctx.q2(), xi, self.dim, ctx.truncation()).truncated(trunc);
        let root = q.sqrt()?;
        let mut out = MatrixJet::zero(self.rank, self.dim, trunc);
        for p in &self.parts {
            if p.numerator.is_empty() {
                continue;
            }
            let factor = if p.twice_power % 2 == 0 { q.powi(p.twice_power / 2)? } else { root.powi(p.twice_power)? };
            let mut sum = MatrixJet::zero(self.rank, self.dim, trunc);
            for (m, c) in &p.numerator {
                sum = sum.try_add(&c.scale(&real(poly::monomial_value_exact(m, xi))))?;
            }
            out = out.try_add(&sum.scale_jet(&factor))?;
        }
        Ok(out)
    }
}

/// Exact quotient of a homogeneous numerator by `q₂`, if the remainder vanishes.
///
/// Long division in `ξ₁` (leading coefficient `g^{11}`, invertible as a jet).
pub(crate) fn divide_by_q2<T: Scalar>(num: &MatrixPoly<T>, ctx: &GeometryContext<T>) -> Option<MatrixPoly<T>> {
    let scale = poly::max_abs(num);
    let mut rem = num.clone();
    let mut quot = MatrixPoly::new();
    let lead = XiMonomial::unit(ctx.xi_dim(), 0).raise(0);
    let lead_inv = ctx.lead_inv();
    loop {
        let next = rem.keys().filter(|m| m.get(0) >= 2).max_by_key(|m| m.get(0)).copied();
        let Some(m) = next else { break };
        let c = rem.remove(&m).expect("key present");
        let base = m.with(0, m.get(0) - 2);
        let qc = c.scale_jet(lead_inv);
        for (mq, gq) in ctx.q2() {
            if *mq == lead {
                continue;
            }
            poly::add_into(&mut rem, base.add(mq), qc.scale_jet(gq).neg());
        }
        poly::add_into(&mut quot, base, qc);
    }
    let negligible = if T::zero_threshold() == 0.0 {
        rem.is_empty()
    } else {
        poly::max_abs(&rem) <= T::zero_threshold() * scale
    };
    negligible.then_some(quot)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::MultiIndex;

    fn c(v: f64) -> Complex<f64> {
        Complex::new(v, 0.0)
    }

    fn flat3() -> GeometryContext<f64> {
        GeometryContext::flat(3, 1, Truncation::rect(2, 1))
    }

    fn mono(e: &[u32]) -> XiMonomial {
        MultiIndex::new(e)
    }

    fn constant(ctx: &GeometryContext<f64>, v: f64) -> MatrixJet<f64> {
        MatrixJet::scalar(1, &Jet::constant(ctx.n(), ctx.truncation(), c(v)))
    }

    #[test]
    fn q2_over_root_is_root() {
        let ctx = flat3();
        let t = ctx.truncation();
        let a = SymbolTerm::from_parts(&ctx, 1, 1, t, [(mono(&[2, 0]), -1, constant(&ctx, 1.0)), (mono(&[0, 2]), -1, constant(&ctx, 1.0))]).unwrap();
        let b = SymbolTerm::from_parts(&ctx, 1, 1, t, [(mono(&[0, 0]), 1, constant(&ctx, 1.0))]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.part(1).twice_power, 1);
    }

    #[test]
    fn mixed_powers_share_the_lower_power() {
        let ctx = flat3();
        let t = ctx.truncation();
        let a = SymbolTerm::from_parts(&ctx, 1, 1, t, [(mono(&[0, 0]), 1, constant(&ctx, 1.0)), (mono(&[2, 0]), -1, constant(&ctx, 1.0))]).unwrap();
        let p = a.part(1);
        assert_eq!(p.twice_power, -1);
        assert_eq!(p.numerator.len(), 2);
        assert_eq!(p.numerator[&mono(&[2, 0])].constant_matrix(), vec![c(2.0)]);
        assert_eq!(p.numerator[&mono(&[0, 2])].constant_matrix(), vec![c(1.0)]);
    }

    #[test]
    fn degree_mismatch() {
        let ctx = flat3();
        let r = SymbolTerm::from_parts(&ctx, 1, 1, ctx.truncation(), [(mono(&[1, 0]), 1, constant(&ctx, 1.0))]);
        assert!(matches!(r, Err(Error::Degree(_))));
    }

    #[test]
    fn evaluate_flat_root() {
        let ctx = flat3();
        let a = SymbolTerm::from_parts(&ctx, 1, 1, ctx.truncation(), [(mono(&[0, 0]), 1, constant(&ctx, -1.0))]).unwrap();
        assert_eq!(a.evaluate(&[3.0, 4.0], &ctx).unwrap(), vec![c(-5.0)]);
        assert!(matches!(a.evaluate(&[0.0, 0.0], &ctx), Err(Error::HomogeneousSingularity)));
    }

    #[test]
    fn dxi_of_root() {
        let ctx = flat3();
        let a = SymbolTerm::from_parts(&ctx, 1, 1, ctx.truncation(), [(mono(&[0, 0]), 1, constant(&ctx, 1.0))]).unwrap();
        let d = a.dxi(0, &ctx);
        let expect = SymbolTerm::from_parts(&ctx, 0, 1, ctx.truncation(), [(mono(&[1, 0]), -1, constant(&ctx, 1.0))]).unwrap();
        assert_eq!(d, expect);
        let x2 = SymbolTerm::from_parts(&ctx, 1, 1, ctx.truncation(), [(mono(&[0, 1]), 0, constant(&ctx, 1.0))]).unwrap();
        assert!(x2.dxi(0, &ctx).is_zero());
    }
}
