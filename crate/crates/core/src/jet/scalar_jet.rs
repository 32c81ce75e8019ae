use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::index::MultiIndex;
use super::truncation::Truncation;
use crate::error::{Error, Result};
use crate::scalar::{is_positive_real, magnitude, real, RealScalar, Scalar};

/// Truncated Taylor series of a complex function of `x¹…xⁿ` at the origin.
///
/// Coefficients are stored sparsely (absent means zero) in lexicographic
/// index order. Coefficients outside the truncation are never stored.
#[derive(Clone, PartialEq)]
pub struct Jet<T: Scalar> {
    dim: usize,
    trunc: Truncation,
    // sorted by index, no explicit zeros
    coeffs: Vec<(MultiIndex, Complex<T>)>,
}

impl<T: Scalar> Jet<T> {
    pub fn zero(dim: usize, trunc: Truncation) -> Self {
        Self { dim, trunc, coeffs: Vec::new() }
    }

    pub fn constant(dim: usize, trunc: Truncation, c: Complex<T>) -> Self {
        let mut j = Self::zero(dim, trunc);
        j.set(MultiIndex::zero(dim), c);
        j
    }

    pub fn one(dim: usize, trunc: Truncation) -> Self {
        Self::constant(dim, trunc, Complex::one())
    }

    /// The coordinate function `x^{var+1}` (zero-based `var`).
    pub fn variable(dim: usize, trunc: Truncation, var: usize) -> Self {
        let mut j = Self::zero(dim, trunc);
        j.set(MultiIndex::unit(dim, var), Complex::one());
        j
    }

    pub fn from_coeffs(
        dim: usize,
        trunc: Truncation,
        coeffs: impl IntoIterator<Item = (MultiIndex, Complex<T>)>,
    ) -> Self {
        let mut j = Self::zero(dim, trunc);
        for (m, c) in coeffs {
            assert_eq!(m.len(), dim, "multi-index length must equal jet dimension");
            let next = j.coeff(&m) + c;
            j.set(m, next);
        }
        j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn is_exhausted(&self) -> bool {
        self.trunc.is_exhausted()
    }

    pub fn coeff(&self, m: &MultiIndex) -> Complex<T> {
        match self.coeffs.binary_search_by(|(k, _)| k.cmp(m)) {
            Ok(i) => self.coeffs[i].1.clone(),
            Err(_) => Complex::zero(),
        }
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, &Complex<T>)> {
        self.coeffs.iter().map(|(m, c)| (m, c))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    pub fn constant_term(&self) -> Complex<T> {
        self.coeff(&MultiIndex::zero(self.dim))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Stores `c` at `m` if `m` lies inside the truncation; zero removes the entry.
    pub fn set(&mut self, m: MultiIndex, c: Complex<T>) {
        let pos = self.coeffs.binary_search_by(|(k, _)| k.cmp(&m));
        match (pos, !self.trunc.admits(&m) || c.is_zero()) {
            (Ok(i), true) => {
                self.coeffs.remove(i);
            }
            (Ok(i), false) => self.coeffs[i].1 = c,
            (Err(_), true) => {}
            (Err(i), false) => self.coeffs.insert(i, (m, c)),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|(_, c)| magnitude(c)).fold(0.0, f64::max)
    }

    /// Restricts to the common truncation with `trunc`.
    pub fn truncated(&self, trunc: Truncation) -> Self {
        let trunc = self.trunc.meet(&trunc);
        Self {
            dim: self.dim,
            trunc,
            coeffs: self.coeffs.iter().filter(|(m, _)| trunc.admits(m)).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    /// Replaces the truncation without checking reliability. Coefficients outside are dropped.
    pub fn with_truncation(&self, trunc: Truncation) -> Self {
        Self {
            dim: self.dim,
            trunc,
            coeffs: self.coeffs.iter().filter(|(m, _)| trunc.admits(m)).map(|(m, c)| (*m, c.clone())).collect(),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("jet dimensions {} and {} differ", self.dim, other.dim)));
        }
        Ok(())
    }

    /// Sum; the result is reliable on the common truncation.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let trunc = self.trunc.meet(&other.trunc);
        let mut coeffs = Vec::with_capacity(self.coeffs.len().max(other.coeffs.len()));
        let (mut a, mut b) = (self.coeffs.iter().peekable(), other.coeffs.iter().peekable());
        loop {
            let next = match (a.peek(), b.peek()) {
                (Some((ma, ca)), Some((mb, cb))) => match ma.cmp(mb) {
                    std::cmp::Ordering::Less => {
                        a.next();
                        (*ma, ca.clone())
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                        (*mb, cb.clone())
                    }
                    std::cmp::Ordering::Equal => {
                        a.next();
                        b.next();
                        (*ma, ca.clone() + cb.clone())
                    }
                },
                (Some((ma, ca)), None) => {
                    a.next();
                    (*ma, ca.clone())
                }
                (None, Some((mb, cb))) => {
                    b.next();
                    (*mb, cb.clone())
                }
                (None, None) => break,
            };
            if trunc.admits(&next.0) && !next.1.is_zero() {
                coeffs.push(next);
            }
        }
        Ok(Self { dim: self.dim, trunc, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    /// Cauchy product truncated to the common truncation.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let trunc = self.trunc.meet(&other.trunc);
        if self.coeffs.is_empty() || other.coeffs.is_empty() || trunc.is_exhausted() {
            return Ok(Self::zero(self.dim, trunc));
        }
        // dense accumulator keyed by the mixed-radix code of the index;
        // with the first variable most significant, code order is index order
        let radix = trunc.max_total_degree() + 1;
        let size = radix.checked_pow(self.dim as u32).filter(|&s| s <= 1 << 22).expect("jet too large for dense product");
        let encode = |m: &MultiIndex| m.exps().iter().fold(0usize, |acc, &e| acc * radix + e as usize);
        let left: Vec<(usize, &Complex<T>, u32, u32)> = self
            .coeffs
            .iter()
            .filter(|(m, _)| trunc.admits(m))
            .map(|(m, c)| (encode(m), c, m.normal_exponent(), m.tangential_degree()))
            .collect();
        let right: Vec<(usize, &Complex<T>, u32, u32)> = other
            .coeffs
            .iter()
            .filter(|(m, _)| trunc.admits(m))
            .map(|(m, c)| (encode(m), c, m.normal_exponent(), m.tangential_degree()))
            .collect();
        let mut acc: Vec<Option<Complex<T>>> = vec![None; size];
        for (ka, ca, pa, ta) in &left {
            for (kb, cb, pb, tb) in &right {
                let p = (pa + pb) as usize;
                match trunc.tangential_order_at(p) {
                    Some(t) if (ta + tb) as usize <= t => {}
                    _ => continue,
                }
                let prod = (*ca).clone() * (*cb).clone();
                let slot = &mut acc[ka + kb];
                *slot = Some(match slot.take() {
                    Some(v) => v + prod,
                    None => prod,
                });
            }
        }
        let mut coeffs = Vec::new();
        for (code, v) in acc.into_iter().enumerate() {
            if let Some(v) = v {
                if !v.is_zero() {
                    coeffs.push((decode(code, radix, self.dim), v));
                }
            }
        }
        Ok(Self { dim: self.dim, trunc, coeffs })
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        if c.is_zero() {
            return out;
        }
        for (m, v) in &self.coeffs {
            out.set(*m, v.clone() * c.clone());
        }
        out
    }

    fn neg_ref(&self) -> Self {
        Self {
            dim: self.dim,
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            trunc: self.trunc,
            coeffs: self.coeffs.iter().map(|(m, c)| (*m, c.conj())).collect(),
        }
    }

    /// Formal partial derivative `∂/∂x^{var+1}` (zero-based `var`).
    ///
    /// The normal variable is the last one. Differentiating lowers the
    /// recorded reliable order instead of failing; a jet whose normal order
    /// is used up comes back exhausted.
    pub fn derive(&self, var: usize) -> Self {
        assert!(var < self.dim, "derivative index {var} out of range for dimension {}", self.dim);
        let trunc = if var + 1 == self.dim {
            self.trunc.after_normal_derivative()
        } else {
            self.trunc.after_tangential_derivative()
        };
        let mut out = Self::zero(self.dim, trunc);
        for (m, c) in &self.coeffs {
            if let Some(lowered) = m.lower(var) {
                let k = T::from_u32(m.get(var)).expect("small integer");
                out.set(lowered, c.clone() * real(k));
            }
        }
        out
    }

    /// Restriction to `xⁿ = 0`, keeping the full index length.
    pub fn restrict_to_boundary(&self) -> Self {
        self.normal_slice(0)
    }

    /// Coefficient of `(xⁿ)^p` as a jet in the tangential variables (normal exponent 0).
    pub fn normal_slice(&self, p: usize) -> Self {
        let trunc = match self.trunc.tangential_order_at(p) {
            Some(t) => Truncation::rect(t, 0),
            None => Truncation::exhausted(),
        };
        let last = self.dim - 1;
        let mut out = Self::zero(self.dim, trunc);
        for (m, c) in &self.coeffs {
            if m.normal_exponent() as usize == p {
                out.set(m.with(last, 0), c.clone());
            }
        }
        out
    }

    /// Multiplies a tangential-only jet by `(xⁿ)^p` and re-declares it with `trunc`.
    pub fn lift_to_normal_power(&self, p: usize, trunc: Truncation) -> Self {
        let last = self.dim - 1;
        let mut out = Self::zero(self.dim, trunc);
        for (m, c) in &self.coeffs {
            out.set(m.with(last, m.normal_exponent() + p as u32), c.clone());
        }
        out
    }

    /// Inverse series; requires a nonzero constant term.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(Error::SingularJet("constant term is zero".into()));
        }
        let inv_c0 = Complex::<T>::one() / c0;
        // a = c0 (1 + e), 1/a = (1/c0) Σ (-e)^k
        let mut e = self.scale(&inv_c0);
        e.set(MultiIndex::zero(self.dim), Complex::zero());
        let minus_e = e.neg_ref();
        let series = geometric_like(&minus_e, self.trunc, |_| Complex::one());
        Ok(series.scale(&inv_c0))
    }

    /// Evaluates the truncated Taylor polynomial at `point` (length `dim`).
    pub fn eval_polynomial(&self, point: &[f64]) -> Complex<f64> {
        assert_eq!(point.len(), self.dim);
        let mut acc = Complex::new(0.0, 0.0);
        for (m, c) in &self.coeffs {
            let mono: f64 = m.exps().iter().zip(point).map(|(&e, &x)| x.powi(i32::from(e))).product();
            acc += Complex::new(c.re.to_f64_lossy(), c.im.to_f64_lossy()) * mono;
        }
        acc
    }

    /// Lossy conversion of the coefficients to `f64`.
    pub fn to_f64(&self) -> Jet<f64> {
        Jet {
            dim: self.dim,
            trunc: self.trunc,
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, c)| (*m, Complex::new(c.re.to_f64_lossy(), c.im.to_f64_lossy())))
                .collect(),
        }
    }

    /// Maximum coefficient difference on the common truncation.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let trunc = self.trunc.meet(&other.trunc);
        self.truncated(trunc).try_sub(&other.truncated(trunc)).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }
}

fn decode(mut code: usize, radix: usize, dim: usize) -> MultiIndex {
    let mut e = [0u32; super::index::MAX_VARS];
    for v in (0..dim).rev() {
        e[v] = (code % radix) as u32;
        code /= radix;
    }
    MultiIndex::new(&e[..dim])
}

/// Σ_k w(k) e^k for a jet `e` with zero constant term, truncated.
fn geometric_like<T: Scalar>(e: &Jet<T>, trunc: Truncation, weight: impl Fn(usize) -> Complex<T>) -> Jet<T> {
    let max_k = trunc.max_total_degree();
    let mut total = Jet::constant(e.dim, trunc, weight(0));
    let mut power = Jet::one(e.dim, trunc);
    for k in 1..=max_k {
        power = power.try_mul(e).expect("same dimension");
        if power.is_zero() {
            break;
        }
        total = total.try_add(&power.scale(&weight(k))).expect("same dimension");
    }
    total.truncated(trunc)
}

impl<T: RealScalar> Jet<T> {
    /// Positive square root; the constant term must be a positive real.
    pub fn sqrt(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if !is_positive_real(&c0) {
            return Err(Error::Branch(format!("{:?}", c0)));
        }
        let root = c0.re.sqrt();
        let inv_c0 = Complex::<T>::one() / c0;
        let mut e = self.scale(&inv_c0);
        e.set(MultiIndex::zero(self.dim), Complex::zero());
        // binomial coefficients of (1 + e)^{1/2}
        let half = T::from_f64(0.5).expect("float");
        let series = geometric_like(&e, self.trunc, |k| {
            let mut b = T::one();
            for i in 0..k {
                let i = T::from_usize(i).expect("float");
                b = b * (half - i) / (i + T::one());
            }
            real(b)
        });
        Ok(series.scale(&real(root)))
    }

    /// Integer power, negative exponents via [`Jet::inverse`].
    pub fn powi(&self, exp: i32) -> Result<Self> {
        let base = if exp < 0 { self.inverse()? } else { self.clone() };
        let mut out = Jet::one(self.dim, self.trunc);
        for _ in 0..exp.unsigned_abs() {
            out = out.try_mul(&base)?;
        }
        Ok(out)
    }
}

impl<T: Scalar> std::fmt::Debug for Jet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Jet").field("dim", &self.dim).field("trunc", &self.trunc).field("coeffs", &self.coeffs).finish()
    }
}

impl<T: Scalar> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Jet<T> {
        self.try_add(rhs).expect("jet dimensions must agree")
    }
}

impl<T: Scalar> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Jet<T> {
        self.try_sub(rhs).expect("jet dimensions must agree")
    }
}

impl<T: Scalar> Mul for &Jet<T> {
    type Output = Jet<T>;
    fn mul(self, rhs: Self) -> Jet<T> {
        self.try_mul(rhs).expect("jet dimensions must agree")
    }
}

impl<T: Scalar> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.neg_ref()
    }
}
