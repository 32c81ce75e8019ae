use std::fmt;

use serde::{Deserialize, Serialize};

/// Upper bound on the number of variables a jet or symbol may carry.
pub const MAX_VARS: usize = 6;

/// Exponent vector of a monomial; the last slot of a jet index is the
/// normal variable `xⁿ`, the others are tangential.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex {
    exps: [u8; MAX_VARS],
    len: u8,
}

impl MultiIndex {
    pub fn zero(len: usize) -> Self {
        assert!(len <= MAX_VARS, "at most {MAX_VARS} variables supported");
        Self { exps: [0; MAX_VARS], len: len as u8 }
    }

    pub fn new(exps: &[u32]) -> Self {
        let mut m = Self::zero(exps.len());
        for (slot, &e) in m.exps.iter_mut().zip(exps) {
            *slot = u8::try_from(e).expect("exponent too large");
        }
        m
    }

    pub fn unit(len: usize, var: usize) -> Self {
        let mut m = Self::zero(len);
        m.exps[var] = 1;
        m
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn exps(&self) -> &[u8] {
        &self.exps[..self.len()]
    }

    pub fn get(&self, var: usize) -> u32 {
        u32::from(self.exps[var])
    }

    pub fn degree(&self) -> u32 {
        self.exps().iter().map(|&e| u32::from(e)).sum()
    }

    /// Degree in all variables but the last.
    pub fn tangential_degree(&self) -> u32 {
        self.exps()[..self.len().saturating_sub(1)].iter().map(|&e| u32::from(e)).sum()
    }

    /// Exponent of the last variable.
    pub fn normal_exponent(&self) -> u32 {
        if self.len == 0 {
            0
        } else {
            u32::from(self.exps[self.len() - 1])
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        let mut m = *self;
        for (a, b) in m.exps.iter_mut().zip(other.exps.iter()) {
            *a += *b;
        }
        m
    }

    /// Lowers exponent `var` by one; `None` if it is already zero.
    pub fn lower(&self, var: usize) -> Option<Self> {
        if self.exps[var] == 0 {
            return None;
        }
        let mut m = *self;
        m.exps[var] -= 1;
        Some(m)
    }

    pub fn raise(&self, var: usize) -> Self {
        let mut m = *self;
        m.exps[var] += 1;
        m
    }

    pub fn with(&self, var: usize, exp: u32) -> Self {
        let mut m = *self;
        m.exps[var] = u8::try_from(exp).expect("exponent too large");
        m
    }

    /// Product of factorials of the exponents.
    pub fn factorial(&self) -> u64 {
        self.exps().iter().map(|&e| (1..=u64::from(e)).product::<u64>()).product()
    }

    /// All indices of `len` variables with total degree exactly `degree`,
    /// in lexicographic order.
    pub fn all_of_degree(len: usize, degree: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut cur = Self::zero(len);
        fill(&mut out, &mut cur, 0, degree);
        out.sort();
        out
    }
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut MultiIndex, var: usize, remaining: u32) {
    let len = cur.len();
    if len == 0 {
        if remaining == 0 {
            out.push(*cur);
        }
        return;
    }
    if var + 1 == len {
        cur.exps[var] = remaining as u8;
        out.push(*cur);
        cur.exps[var] = 0;
        return;
    }
    for e in 0..=remaining {
        cur.exps[var] = e as u8;
        fill(out, cur, var + 1, remaining - e);
    }
    cur.exps[var] = 0;
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exps().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.exps().serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        if v.len() > MAX_VARS {
            return Err(serde::de::Error::custom("too many variables in multi-index"));
        }
        Ok(Self::new(&v))
    }
}
