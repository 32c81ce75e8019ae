use serde::{Deserialize, Serialize};

use super::index::MultiIndex;

/// Largest normal order a jet can carry.
pub const MAX_NORMAL_ORDER: usize = 15;

/// Reliable-order bookkeeping for a jet.
///
/// Slice `p` (the coefficient of `(xⁿ)^p`) is known up to tangential total
/// degree `tangential[p]`. The staircase is non-increasing in `p`; a
/// rectangular `(K_t, K_n)` truncation is the constant staircase of length
/// `K_n + 1`. An empty staircase means nothing is known (orders exhausted).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Truncation {
    tangential: [u16; MAX_NORMAL_ORDER + 1],
    len: u8,
}

impl Truncation {
    pub fn rect(tangential_order: usize, normal_order: usize) -> Self {
        assert!(normal_order <= MAX_NORMAL_ORDER, "normal order above {MAX_NORMAL_ORDER}");
        let mut t = Self::exhausted();
        t.len = (normal_order + 1) as u8;
        for slot in &mut t.tangential[..=normal_order] {
            *slot = tangential_order as u16;
        }
        t
    }

    /// Builds a staircase; entries must be non-increasing.
    pub fn staircase(orders: &[usize]) -> Self {
        assert!(orders.len() <= MAX_NORMAL_ORDER + 1);
        assert!(orders.windows(2).all(|w| w[0] >= w[1]), "staircase must be non-increasing");
        let mut t = Self::exhausted();
        t.len = orders.len() as u8;
        for (slot, &o) in t.tangential.iter_mut().zip(orders) {
            *slot = o as u16;
        }
        t
    }

    pub fn exhausted() -> Self {
        Self { tangential: [0; MAX_NORMAL_ORDER + 1], len: 0 }
    }

    pub fn is_exhausted(&self) -> bool {
        self.len == 0
    }

    /// Highest known normal exponent, `None` if exhausted.
    pub fn normal_order(&self) -> Option<usize> {
        (self.len as usize).checked_sub(1)
    }

    /// Tangential order of the boundary slice (`xⁿ = 0`), `None` if exhausted.
    pub fn tangential_order(&self) -> Option<usize> {
        self.tangential_order_at(0)
    }

    pub fn tangential_order_at(&self, p: usize) -> Option<usize> {
        (p < self.len as usize).then(|| self.tangential[p] as usize)
    }

    pub fn orders(&self) -> Vec<usize> {
        self.tangential[..self.len as usize].iter().map(|&o| o as usize).collect()
    }

    pub fn admits(&self, m: &MultiIndex) -> bool {
        let p = m.normal_exponent() as usize;
        p < self.len as usize && m.tangential_degree() as usize <= self.tangential[p] as usize
    }

    /// Largest total degree of any admitted monomial.
    pub fn max_total_degree(&self) -> usize {
        (0..self.len as usize).map(|p| p + self.tangential[p] as usize).max().unwrap_or(0)
    }

    /// Common reliable orders of two jets.
    pub fn meet(&self, other: &Self) -> Self {
        let len = self.len.min(other.len);
        let mut t = Self::exhausted();
        t.len = len;
        for p in 0..len as usize {
            t.tangential[p] = self.tangential[p].min(other.tangential[p]);
        }
        t
    }

    /// Orders left after differentiating in a tangential variable.
    pub fn after_tangential_derivative(&self) -> Self {
        let mut t = Self::exhausted();
        for p in 0..self.len as usize {
            if self.tangential[p] == 0 {
                break;
            }
            t.tangential[p] = self.tangential[p] - 1;
            t.len += 1;
        }
        t
    }

    /// Orders left after differentiating in the normal variable.
    pub fn after_normal_derivative(&self) -> Self {
        let mut t = Self::exhausted();
        if self.len == 0 {
            return t;
        }
        t.len = self.len - 1;
        for p in 0..t.len as usize {
            t.tangential[p] = self.tangential[p + 1];
        }
        t
    }

    /// Orders of the restriction to `xⁿ = 0`.
    pub fn boundary(&self) -> Self {
        let mut t = *self;
        t.len = t.len.min(1);
        t
    }

    /// Caps every slice at `tangential_order` and drops slices above `normal_order`.
    pub fn capped(&self, tangential_order: usize, normal_order: usize) -> Self {
        self.meet(&Self::rect(tangential_order, normal_order.min(MAX_NORMAL_ORDER)))
    }

    /// Appends a slice below the last one (used to declare a newly known normal order).
    pub fn extended(&self, tangential_order: usize) -> Self {
        assert!((self.len as usize) <= MAX_NORMAL_ORDER);
        if let Some(last) = self.normal_order() {
            assert!(tangential_order <= self.tangential[last] as usize, "staircase must be non-increasing");
        }
        let mut t = *self;
        t.tangential[t.len as usize] = tangential_order as u16;
        t.len += 1;
        t
    }
}

impl std::fmt::Debug for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Truncation{:?}", self.orders())
    }
}

impl Serialize for Truncation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.orders().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Truncation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if v.len() > MAX_NORMAL_ORDER + 1 || v.windows(2).any(|w| w[0] < w[1]) {
            return Err(serde::de::Error::custom("invalid truncation staircase"));
        }
        Ok(Self::staircase(&v))
    }
}
