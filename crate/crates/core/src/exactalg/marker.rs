//! Coefficients carrying commuting leaf markers `ε_n`.
//!
//! Each unit of class multiplicity drawn from the initial point `s_n`
//! contributes one power of `ε_n`. Multiplying two coefficients takes the
//! union of marker multisets; terms whose total marker degree exceeds the
//! degree cap are dropped.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{RatFuncQ, Q};

/// Multiset of initial-point indices, kept sorted with positive
/// multiplicities.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct LeafMultiset(Vec<(i64, u32)>);

impl LeafMultiset {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(n: i64, mult: u32) -> Self {
        if mult == 0 {
            Self::empty()
        } else {
            LeafMultiset(vec![(n, mult)])
        }
    }

    pub fn from_pairs<I: IntoIterator<Item = (i64, u32)>>(pairs: I) -> Self {
        let mut m: BTreeMap<i64, u32> = BTreeMap::new();
        for (n, k) in pairs {
            *m.entry(n).or_default() += k;
        }
        LeafMultiset(m.into_iter().filter(|(_, k)| *k > 0).collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|(_, k)| k).sum()
    }

    pub fn entries(&self) -> &[(i64, u32)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn union(&self, other: &Self) -> Self {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        LeafMultiset(out)
    }

    /// Multiplies every multiplicity by `k`.
    pub fn times(&self, k: u32) -> Self {
        Self::from_pairs(self.0.iter().map(|&(n, m)| (n, m * k)))
    }

    /// Relabels every index `n ↦ f(n)`.
    pub fn relabel(&self, f: impl Fn(i64) -> i64) -> Self {
        Self::from_pairs(self.0.iter().map(|&(n, k)| (f(n), k)))
    }
}

impl fmt::Display for LeafMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (n, k)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n}:{k}")?;
        }
        write!(f, "}}")
    }
}

/// Polynomial in the markers with rational-function coefficients.
///
/// Equality compares terms only; the degree cap is bookkeeping.
#[derive(Clone, Debug)]
pub struct MarkerPoly {
    terms: BTreeMap<LeafMultiset, RatFuncQ>,
    degree_cap: u32,
}

impl PartialEq for MarkerPoly {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for MarkerPoly {}

/// Cap used by constants that should not constrain the result of an
/// operation; binary operations keep the smaller cap of their operands.
pub const UNBOUNDED_DEGREE: u32 = u32::MAX;

impl MarkerPoly {
    pub fn zero(degree_cap: u32) -> Self {
        MarkerPoly {
            terms: BTreeMap::new(),
            degree_cap,
        }
    }

    /// The unmarked coefficient `f`.
    pub fn unmarked(f: RatFuncQ, degree_cap: u32) -> Self {
        Self::term(LeafMultiset::empty(), f, degree_cap)
    }

    pub fn term(leaves: LeafMultiset, f: RatFuncQ, degree_cap: u32) -> Self {
        let mut p = Self::zero(degree_cap);
        if !f.is_zero() && leaves.degree() <= degree_cap {
            p.terms.insert(leaves, f);
        }
        p
    }

    pub fn degree_cap(&self) -> u32 {
        self.degree_cap
    }

    pub fn terms(&self) -> &BTreeMap<LeafMultiset, RatFuncQ> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of all components, forgetting the markers.
    pub fn total(&self) -> RatFuncQ {
        self.terms
            .values()
            .fold(RatFuncQ::zero(), |acc, f| &acc + f)
    }

    fn combine_cap(&self, other: &Self) -> u32 {
        self.degree_cap.min(other.degree_cap)
    }

    pub fn add(&self, other: &Self) -> Self {
        let cap = self.combine_cap(other);
        let mut terms = BTreeMap::new();
        for (k, v) in self.terms.iter().chain(other.terms.iter()) {
            if k.degree() > cap {
                continue;
            }
            let e = terms.entry(k.clone()).or_insert_with(RatFuncQ::zero);
            *e = &*e + v;
        }
        terms.retain(|_, v: &mut RatFuncQ| !v.is_zero());
        MarkerPoly {
            terms,
            degree_cap: cap,
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|f| -f)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cap = self.combine_cap(other);
        let mut terms: BTreeMap<LeafMultiset, RatFuncQ> = BTreeMap::new();
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                if ka.degree() + kb.degree() > cap {
                    continue;
                }
                let k = ka.union(kb);
                let prod = va * vb;
                let e = terms.entry(k).or_insert_with(RatFuncQ::zero);
                *e = &*e + &prod;
            }
        }
        terms.retain(|_, v| !v.is_zero());
        MarkerPoly {
            terms,
            degree_cap: cap,
        }
    }

    /// Applies a coefficientwise map, dropping components that become zero.
    pub fn map(&self, f: impl Fn(&RatFuncQ) -> RatFuncQ) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(k, v)| (k.clone(), f(v)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        MarkerPoly {
            terms,
            degree_cap: self.degree_cap,
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map(|f| f.scale(c))
    }

    /// `q^{1/2} ↦ q^{ℓ/2}` on every component, leaves scaled by `ℓ`.
    pub fn adams(&self, ell: u32) -> Self {
        let cap = self.degree_cap;
        let mut out = Self::zero(cap);
        for (k, v) in &self.terms {
            out = out.add(&Self::term(k.times(ell), v.laurent_scale(ell), cap));
        }
        out
    }

    pub fn relabel(&self, f: impl Fn(i64) -> i64) -> Self {
        let mut out = Self::zero(self.degree_cap);
        for (k, v) in &self.terms {
            let t = Self::term(k.relabel(&f), v.clone(), self.degree_cap);
            out = out.add(&t);
        }
        out
    }
}

impl fmt::Display for MarkerPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{v}]·ε{k}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn union_merges_multiplicities() {
        let a = LeafMultiset::from_pairs([(-1, 2), (0, 1)]);
        let b = LeafMultiset::from_pairs([(0, 2), (3, 1)]);
        assert_eq!(
            a.union(&b),
            LeafMultiset::from_pairs([(-1, 2), (0, 3), (3, 1)])
        );
        assert_eq!(a.union(&b).degree(), 6);
    }

    #[test]
    fn products_respect_the_degree_cap() {
        let x = MarkerPoly::term(LeafMultiset::single(0, 2), RatFuncQ::one(), 3);
        let y = MarkerPoly::term(LeafMultiset::single(1, 2), RatFuncQ::one(), 3);
        assert!(x.mul(&y).is_zero());
        let z = MarkerPoly::term(LeafMultiset::single(1, 1), RatFuncQ::from_int(2), 3);
        let p = x.mul(&z);
        assert_eq!(p.terms().len(), 1);
        assert_eq!(p.total(), RatFuncQ::from_int(2));
    }

    #[test]
    fn zero_cap_collapses_to_unmarked_arithmetic() {
        let f = RatFuncQ::initial_wall(1);
        let g = RatFuncQ::initial_wall(2);
        let a = MarkerPoly::unmarked(f.clone(), 0);
        let b = MarkerPoly::unmarked(g.clone(), 0);
        assert_eq!(a.mul(&b).total(), &f * &g);
        assert_eq!(a.add(&b).total(), &f + &g);
        // a marked term cannot even be stored
        assert!(MarkerPoly::term(LeafMultiset::single(0, 1), f, 0).is_zero());
    }
}
