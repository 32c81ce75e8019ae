use std::collections::{BTreeMap, HashMap};

use super::context::GeometryContext;
use super::term::SymbolTerm;
use crate::error::{Error, Result};
use crate::jet::MultiIndex;
use crate::scalar::{ratio, Scalar};

/// Formal sum of homogeneous terms, keyed by degree.
#[derive(Clone, Debug, PartialEq)]
pub struct FormalSymbol<T: Scalar> {
    terms: BTreeMap<i32, SymbolTerm<T>>,
}

impl<T: Scalar> Default for FormalSymbol<T> {
    fn default() -> Self {
        Self { terms: BTreeMap::new() }
    }
}

impl<T: Scalar> FormalSymbol<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(ctx: &GeometryContext<T>, terms: impl IntoIterator<Item = SymbolTerm<T>>) -> Result<Self> {
        let mut s = Self::new();
        for t in terms {
            s.accumulate(t, ctx)?;
        }
        Ok(s)
    }

    /// Adds `t` to the term of the same degree.
    pub fn accumulate(&mut self, t: SymbolTerm<T>, ctx: &GeometryContext<T>) -> Result<()> {
        let sum = match self.terms.remove(&t.degree()) {
            Some(prev) => prev.add(&t, ctx)?,
            None => t,
        };
        self.terms.insert(sum.degree(), sum);
        Ok(())
    }

    pub fn term(&self, degree: i32) -> Option<&SymbolTerm<T>> {
        self.terms.get(&degree)
    }

    /// Terms in decreasing degree.
    pub fn terms(&self) -> impl Iterator<Item = &SymbolTerm<T>> {
        self.terms.values().rev()
    }

    pub fn top_degree(&self) -> Option<i32> {
        self.terms.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self, ctx: &GeometryContext<T>) -> Result<Self> {
        let mut out = self.clone();
        for t in other.terms.values() {
            out.accumulate(t.clone(), ctx)?;
        }
        Ok(out)
    }

    pub fn map(&self, f: impl Fn(&SymbolTerm<T>) -> SymbolTerm<T>) -> Self {
        let mut terms = BTreeMap::new();
        for t in self.terms.values() {
            let v = f(t);
            terms.insert(v.degree(), v);
        }
        Self { terms }
    }

    /// Drops every term of degree below `m_min`.
    pub fn truncated_below(&self, m_min: i32) -> Self {
        Self { terms: self.terms.range(m_min..).map(|(k, v)| (*k, v.clone())).collect() }
    }
}

/// Symbol of the composition `Op(a) ∘ Op(b)`:
/// `Σ_α (1/α!) ∂_ξ^α a · D_{x′}^α b`, gathered by degree, down to `m_min`.
pub fn compose_formal<T: Scalar>(
    a: &FormalSymbol<T>,
    b: &FormalSymbol<T>,
    m_min: i32,
    ctx: &GeometryContext<T>,
) -> Result<FormalSymbol<T>> {
    let mut out = FormalSymbol::new();
    let (Some(ta), Some(tb)) = (a.top_degree(), b.top_degree()) else {
        return Ok(out);
    };
    if ta + tb < m_min {
        return Ok(out);
    }
    let max_order = (ta + tb - m_min) as u32;
    let xi_dim = ctx.xi_dim();
    let mut da: HashMap<MultiIndex, FormalSymbol<T>> = HashMap::new();
    let mut db: HashMap<MultiIndex, FormalSymbol<T>> = HashMap::new();
    for order in 0..=max_order {
        for alpha in MultiIndex::all_of_degree(xi_dim, order) {
            let (a_alpha, b_alpha) = if order == 0 {
                (a.clone(), b.clone())
            } else {
                let l = (0..xi_dim).find(|&l| alpha.get(l) > 0).expect("nonzero index");
                let parent = alpha.lower(l).expect("positive entry");
                let pa = &da[&parent];
                let pb = &db[&parent];
                // only keep terms that can still reach degree m_min
                let keep_a = pa.truncated_below(m_min - tb + 1);
                (keep_a.map(|t| t.dxi(l, ctx)), pb.map(|t| t.dx(l, ctx)))
            };
            let weight = ratio::<T>(1, alpha.factorial() as i64);
            for aj in a_alpha.terms.values() {
                for bk in b_alpha.terms.values() {
                    if aj.degree() + bk.degree() < m_min || aj.is_zero() || bk.is_zero() {
                        continue;
                    }
                    let prod = aj.mul(bk, ctx)?.scale(&weight);
                    out.accumulate(prod, ctx)?;
                }
            }
            da.insert(alpha, a_alpha);
            db.insert(alpha, b_alpha);
        }
    }
    // degrees with only vanishing contributions still appear, as zero terms
    for d in m_min..=(ta + tb) {
        if out.term(d).is_none() {
            let (rank, dim, trunc) = {
                let any = a.terms().next().expect("nonempty");
                (any.rank(), any.dim(), any.truncation().meet(&b.terms().next().expect("nonempty").truncation()))
            };
            out.terms.insert(d, SymbolTerm::zero(d, rank, dim, trunc));
        }
    }
    Ok(out)
}

/// The sequence `λ₁, λ₀, …, λ_{1−d}` of a classical first-order symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolExpansion<T: Scalar> {
    ctx: GeometryContext<T>,
    terms: Vec<SymbolTerm<T>>,
}

impl<T: Scalar> SymbolExpansion<T> {
    /// `terms[i]` must have degree `1 − i`.
    pub fn new(ctx: GeometryContext<T>, terms: Vec<SymbolTerm<T>>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidSymbol("an expansion needs at least the principal term".into()));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.degree() != 1 - i as i32 {
                return Err(Error::InvalidSymbol(format!("term {i} has degree {}, expected {}", t.degree(), 1 - i as i32)));
            }
            if t.dim() != ctx.n() {
                return Err(Error::Shape("term dimension differs from the context".into()));
            }
        }
        Ok(Self { ctx, terms })
    }

    pub fn ctx(&self) -> &GeometryContext<T> {
        &self.ctx
    }

    /// Number of terms below the principal one.
    pub fn depth(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn rank(&self) -> usize {
        self.terms[0].rank()
    }

    pub fn terms(&self) -> &[SymbolTerm<T>] {
        &self.terms
    }

    /// The term `λ_j`, `j ≤ 1`.
    pub fn lambda(&self, j: i32) -> Option<&SymbolTerm<T>> {
        usize::try_from(1 - j).ok().and_then(|i| self.terms.get(i))
    }

    /// Keeps `λ₁ … λ_{1−d}`.
    pub fn with_depth(&self, depth: usize) -> Self {
        Self { ctx: self.ctx.clone(), terms: self.terms.iter().take(depth + 1).cloned().collect() }
    }

    pub fn to_formal(&self) -> FormalSymbol<T> {
        FormalSymbol { terms: self.terms.iter().map(|t| (t.degree(), t.clone())).collect() }
    }

    /// Rebuilds from a formal symbol, reading degrees `1 … 1−depth`.
    pub fn from_formal(ctx: GeometryContext<T>, f: &FormalSymbol<T>, depth: usize) -> Result<Self> {
        let terms = (0..=depth)
            .map(|i| {
                let d = 1 - i as i32;
                f.term(d).cloned().ok_or_else(|| Error::InvalidSymbol(format!("missing degree {d}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ctx, terms)
    }
}
