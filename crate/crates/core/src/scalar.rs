//! Scalar abstraction shared by the jet and symbol layers.
//!
//! Every coefficient is a `Complex<T>`. The ring operations (and therefore
//! the whole forward recursion) only need [`Scalar`]; anything that takes a
//! square root of a jet or evaluates a half-integer power of `q₂` needs
//! [`RealScalar`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::{BigRational, Rational64};
use num_traits::{Float, FromPrimitive, Num, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + PartialEq + Num + std::ops::Neg<Output = Self> + FromPrimitive + Send + Sync + 'static
{
    /// Lossy conversion used for norms, tolerances and reports.
    fn to_f64_lossy(&self) -> f64;

    /// Relative size below which a computed value is treated as an exact
    /// zero when testing divisibility. Zero for exact types.
    fn zero_threshold() -> f64;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num).expect("integer fits scalar") / Self::from_i64(den).expect("integer fits scalar")
    }
}

/// Scalars with square roots; required for evaluation and reconstruction.
pub trait RealScalar: Scalar + Float {}

impl Scalar for f64 {
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
    fn zero_threshold() -> f64 {
        1e-13
    }
}

impl Scalar for f32 {
    fn to_f64_lossy(&self) -> f64 {
        f64::from(*self)
    }
    fn zero_threshold() -> f64 {
        1e-5
    }
}

impl RealScalar for f64 {}
impl RealScalar for f32 {}

impl Scalar for BigRational {
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn zero_threshold() -> f64 {
        0.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Scalar for Rational64 {
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
    fn zero_threshold() -> f64 {
        0.0
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }
}

/// Magnitude of a complex coefficient as `f64`.
pub fn magnitude<T: Scalar>(c: &Complex<T>) -> f64 {
    c.re.to_f64_lossy().hypot(c.im.to_f64_lossy())
}

/// `true` when `c` is negligible relative to `scale` under the scalar's threshold.
pub fn negligible<T: Scalar>(c: &Complex<T>, scale: f64) -> bool {
    let th = T::zero_threshold();
    if th == 0.0 {
        c.is_zero()
    } else {
        magnitude(c) <= th * scale.max(f64::MIN_POSITIVE)
    }
}

pub(crate) fn real<T: Scalar>(v: T) -> Complex<T> {
    Complex::new(v, T::zero())
}

pub(crate) fn imag_unit<T: Scalar>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

pub(crate) fn ratio<T: Scalar>(num: i64, den: i64) -> Complex<T> {
    real(T::from_ratio(num, den))
}

/// Exact test for a strictly positive real part with vanishing imaginary part.
pub(crate) fn is_positive_real<T: Scalar>(c: &Complex<T>) -> bool {
    c.re.to_f64_lossy() > 0.0 && negligible(&Complex::new(c.im.clone(), T::zero()), c.re.to_f64_lossy().abs())
}
