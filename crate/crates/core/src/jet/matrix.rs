use num_complex::Complex;
use num_traits::{One, Zero};

use super::index::MultiIndex;
use super::scalar_jet::Jet;
use super::truncation::Truncation;
use crate::error::{Error, Result};
use crate::scalar::{magnitude, Scalar};

/// Square `r × r` matrix of jets sharing dimension and truncation.
#[derive(Clone, PartialEq)]
pub struct MatrixJet<T: Scalar> {
    rank: usize,
    dim: usize,
    trunc: Truncation,
    entries: Vec<Jet<T>>,
}

impl<T: Scalar> MatrixJet<T> {
    pub fn zero(rank: usize, dim: usize, trunc: Truncation) -> Self {
        Self { rank, dim, trunc, entries: vec![Jet::zero(dim, trunc); rank * rank] }
    }

    pub fn identity(rank: usize, dim: usize, trunc: Truncation) -> Self {
        Self::scalar(rank, &Jet::one(dim, trunc))
    }

    /// `a · Id`.
    pub fn scalar(rank: usize, a: &Jet<T>) -> Self {
        let mut m = Self::zero(rank, a.dim(), a.truncation());
        for i in 0..rank {
            m.entries[i * rank + i] = a.clone();
        }
        m
    }

    /// Builds from a row-major closure; the truncation is the meet of all entries.
    pub fn from_fn(rank: usize, mut f: impl FnMut(usize, usize) -> Jet<T>) -> Self {
        assert!(rank > 0, "rank must be positive");
        let entries: Vec<Jet<T>> = (0..rank * rank).map(|idx| f(idx / rank, idx % rank)).collect();
        let dim = entries[0].dim();
        assert!(entries.iter().all(|e| e.dim() == dim), "entries must share dimension");
        let trunc = entries.iter().fold(entries[0].truncation(), |t, e| t.meet(&e.truncation()));
        Self { rank, dim, trunc, entries: entries.into_iter().map(|e| e.truncated(trunc)).collect() }
    }

    /// Constant matrix jet from row-major values.
    pub fn from_constant(rank: usize, dim: usize, trunc: Truncation, values: &[Complex<T>]) -> Self {
        assert_eq!(values.len(), rank * rank);
        Self::from_fn(rank, |i, j| Jet::constant(dim, trunc, values[i * rank + j].clone()))
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

    pub fn get(&self, i: usize, j: usize) -> &Jet<T> {
        &self.entries[i * self.rank + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Jet<T>) {
        assert_eq!(v.dim(), self.dim);
        self.entries[i * self.rank + j] = v.truncated(self.trunc);
    }

    pub fn entries(&self) -> &[Jet<T>] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Jet::is_zero)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(Jet::max_abs).fold(0.0, f64::max)
    }

    /// Coefficient matrix (row-major) of the monomial `m`.
    pub fn coeff_matrix(&self, m: &MultiIndex) -> Vec<Complex<T>> {
        self.entries.iter().map(|e| e.coeff(m)).collect()
    }

    pub fn constant_matrix(&self) -> Vec<Complex<T>> {
        self.coeff_matrix(&MultiIndex::zero(self.dim))
    }

    fn map(&self, trunc: Truncation, f: impl Fn(&Jet<T>) -> Jet<T>) -> Self {
        Self { rank: self.rank, dim: self.dim, trunc, entries: self.entries.iter().map(f).collect() }
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.rank != other.rank || self.dim != other.dim {
            return Err(Error::Shape(format!(
                "matrix jets of rank {} / dim {} and rank {} / dim {}",
                self.rank, self.dim, other.rank, other.dim
            )));
        }
        Ok(())
    }

    pub fn truncated(&self, trunc: Truncation) -> Self {
        let t = self.trunc.meet(&trunc);
        self.map(t, |e| e.truncated(t))
    }

    pub fn with_truncation(&self, trunc: Truncation) -> Self {
        self.map(trunc, |e| e.with_truncation(trunc))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let trunc = self.trunc.meet(&other.trunc);
        Ok(Self {
            rank: self.rank,
            dim: self.dim,
            trunc,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let r = self.rank;
        let trunc = self.trunc.meet(&other.trunc);
        let mut entries = Vec::with_capacity(r * r);
        for i in 0..r {
            for j in 0..r {
                let mut acc = Jet::zero(self.dim, trunc);
                for k in 0..r {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                entries.push(acc);
            }
        }
        Ok(Self { rank: r, dim: self.dim, trunc, entries })
    }

    /// Entrywise product with a scalar jet.
    pub fn scale_jet(&self, a: &Jet<T>) -> Self {
        let trunc = self.trunc.meet(&a.truncation());
        self.map(trunc, |e| e * a)
    }

    pub fn scale(&self, c: &Complex<T>) -> Self {
        self.map(self.trunc, |e| e.scale(c))
    }

    pub fn neg(&self) -> Self {
        self.map(self.trunc, |e| -e)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.rank, |i, j| self.get(j, i).conj()).with_truncation(self.trunc)
    }

    pub fn trace(&self) -> Jet<T> {
        (0..self.rank).fold(Jet::zero(self.dim, self.trunc), |acc, i| &acc + self.get(i, i))
    }

    pub fn derive(&self, var: usize) -> Self {
        let trunc = if var + 1 == self.dim {
            self.trunc.after_normal_derivative()
        } else {
            self.trunc.after_tangential_derivative()
        };
        self.map(trunc, |e| e.derive(var))
    }

    pub fn normal_slice(&self, p: usize) -> Self {
        let entries: Vec<_> = self.entries.iter().map(|e| e.normal_slice(p)).collect();
        let trunc = entries[0].truncation();
        Self { rank: self.rank, dim: self.dim, trunc, entries }
    }

    pub fn restrict_to_boundary(&self) -> Self {
        self.normal_slice(0)
    }

    pub fn lift_to_normal_power(&self, p: usize, trunc: Truncation) -> Self {
        self.map(trunc, |e| e.lift_to_normal_power(p, trunc))
    }

    pub fn conj(&self) -> Self {
        self.map(self.trunc, Jet::conj)
    }

    pub fn to_f64(&self) -> MatrixJet<f64> {
        MatrixJet { rank: self.rank, dim: self.dim, trunc: self.trunc, entries: self.entries.iter().map(Jet::to_f64).collect() }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.max_diff(b)).fold(0.0, f64::max)
    }

    /// `true` if the matrix is `(tr/r)·Id` up to `tol` (absolute, per coefficient).
    pub fn is_scalar_within(&self, tol: f64) -> bool {
        let mean = self.trace().scale(&Complex::new(T::one() / T::from_usize(self.rank).expect("rank"), T::zero()));
        (0..self.rank).all(|i| {
            (0..self.rank).all(|j| {
                let d = if i == j { self.get(i, j) - &mean } else { self.get(i, j).clone() };
                d.max_abs() <= tol
            })
        })
    }

    /// Inverse via `A⁻¹ = Σ_k (−A₀⁻¹E)^k A₀⁻¹` with `A = A₀ + E`.
    pub fn inverse(&self) -> Result<Self> {
        let r = self.rank;
        let a0 = self.constant_matrix();
        let a0_inv = invert_constant(r, &a0)?;
        let a0_inv_jet = Self::from_constant(r, self.dim, self.trunc, &a0_inv);
        let mut e = self.clone();
        for (idx, entry) in e.entries.iter_mut().enumerate() {
            entry.set(MultiIndex::zero(self.dim), Complex::zero());
            let _ = idx;
        }
        let step = a0_inv_jet.try_mul(&e)?.neg();
        let mut total = a0_inv_jet.clone();
        let mut power = a0_inv_jet;
        for _ in 0..self.trunc.max_total_degree() {
            power = step.try_mul(&power)?;
            if power.is_zero() {
                break;
            }
            total = total.try_add(&power)?;
        }
        Ok(total)
    }

    /// `self · v` for a column of jets.
    pub fn apply(&self, v: &[Jet<T>]) -> Vec<Jet<T>> {
        assert_eq!(v.len(), self.rank);
        (0..self.rank)
            .map(|i| (0..self.rank).fold(Jet::zero(self.dim, self.trunc), |acc, k| &acc + &(self.get(i, k) * &v[k])))
            .collect()
    }
}

/// Gauss–Jordan inverse of a row-major complex matrix with partial pivoting.
pub fn invert_constant<T: Scalar>(r: usize, a: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let scale = a.iter().map(magnitude).fold(0.0, f64::max);
    let mut m: Vec<Complex<T>> = a.to_vec();
    let mut inv: Vec<Complex<T>> = (0..r * r).map(|i| if i / r == i % r { Complex::one() } else { Complex::zero() }).collect();
    for col in 0..r {
        let piv = (col..r)
            .max_by(|&x, &y| magnitude(&m[x * r + col]).total_cmp(&magnitude(&m[y * r + col])))
            .expect("nonempty");
        let pv = m[piv * r + col].clone();
        if pv.is_zero() || magnitude(&pv) <= T::zero_threshold() * scale {
            return Err(Error::SingularJet(format!("constant matrix is singular (pivot {:.3e})", magnitude(&pv))));
        }
        if piv != col {
            for k in 0..r {
                m.swap(piv * r + k, col * r + k);
                inv.swap(piv * r + k, col * r + k);
            }
        }
        let pinv = Complex::<T>::one() / pv;
        for k in 0..r {
            m[col * r + k] = m[col * r + k].clone() * pinv.clone();
            inv[col * r + k] = inv[col * r + k].clone() * pinv.clone();
        }
        for row in 0..r {
            if row == col {
                continue;
            }
            let f = m[row * r + col].clone();
            if f.is_zero() {
                continue;
            }
            for k in 0..r {
                m[row * r + k] = m[row * r + k].clone() - f.clone() * m[col * r + k].clone();
                inv[row * r + k] = inv[row * r + k].clone() - f.clone() * inv[col * r + k].clone();
            }
        }
    }
    Ok(inv)
}

impl<T: Scalar> std::fmt::Debug for MatrixJet<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixJet").field("rank", &self.rank).field("trunc", &self.trunc).field("entries", &self.entries).finish()
    }
}
