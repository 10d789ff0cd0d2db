//! The quantum torus of a rank-two lattice, truncated by a grading.
//!
//! Monomials multiply as `z^m · z^{m'} = (-1)^{⟨m,m'⟩} q^{⟨m,m'⟩/2} z^{m+m'}`.
//! A [`TruncationContext`] fixes a finite set of admissible classes (a
//! monoid generated by positive-grade classes, clipped at a cap); products
//! landing outside it are dropped, which is the quotient by the ideal of
//! elements of grade above the cap.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactalg::{Coeff, Q};

/// A lattice class `m = (a, b)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct LatticeClass {
    pub a: i64,
    pub b: i64,
}

impl LatticeClass {
    pub const ZERO: LatticeClass = LatticeClass { a: 0, b: 0 };

    pub const fn new(a: i64, b: i64) -> Self {
        LatticeClass { a, b }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    /// `a·b' − b·a'`.
    pub fn cross(&self, other: &Self) -> i64 {
        self.a * other.b - self.b * other.a
    }

    pub fn is_collinear(&self, other: &Self) -> bool {
        self.cross(other) == 0
    }

    /// Largest `k` with `self / k` integral (zero for the zero class).
    pub fn divisibility(&self) -> i64 {
        num_integer::gcd(self.a, self.b)
    }

    pub fn primitive(&self) -> Self {
        let g = self.divisibility().max(1);
        LatticeClass::new(self.a / g, self.b / g)
    }

    pub fn scaled(&self, k: i64) -> Self {
        LatticeClass::new(self.a * k, self.b * k)
    }
}

impl std::ops::Add for LatticeClass {
    type Output = LatticeClass;
    fn add(self, o: LatticeClass) -> LatticeClass {
        LatticeClass::new(self.a + o.a, self.b + o.b)
    }
}

impl std::ops::Neg for LatticeClass {
    type Output = LatticeClass;
    fn neg(self) -> LatticeClass {
        LatticeClass::new(-self.a, -self.b)
    }
}

impl fmt::Display for LatticeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// `⟨(a,b),(a',b')⟩ = κ (a'b − ab')`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SkewForm {
    pub kappa: i64,
}

impl SkewForm {
    /// The form of the projective plane.
    pub const P2: SkewForm = SkewForm { kappa: 3 };

    pub fn pair(&self, m: &LatticeClass, n: &LatticeClass) -> i64 {
        self.kappa * (n.a * m.b - m.a * n.b)
    }
}

/// Sign convention of the algebra: the `q^-` algebra carries the factor
/// `(-1)^{⟨m,m'⟩}` in products, the `q^+` algebra does not.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    #[default]
    Minus,
    Plus,
}

/// A linear functional `m ↦ ga·a + gb·b`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Grading {
    pub ga: Q,
    pub gb: Q,
}

impl Grading {
    pub fn new(ga: Q, gb: Q) -> Self {
        Grading { ga, gb }
    }

    pub fn grade(&self, m: &LatticeClass) -> Q {
        &self.ga * Q::from_integer(m.a.into()) + &self.gb * Q::from_integer(m.b.into())
    }
}

/// The finite set of admissible classes and their multiplication table.
#[derive(Clone, Debug)]
pub struct TruncationContext {
    form: SkewForm,
    convention: Convention,
    grading: Grading,
    cap: Q,
    /// Sorted by `(grade, class)`; index 0 is the unit class.
    support: Vec<LatticeClass>,
    grades: Vec<Q>,
    index: HashMap<LatticeClass, usize>,
    /// `table[i][j] = (k, negate, e)` when `m_i + m_j = m_k` is admissible;
    /// the product is then `(-1)^negate q^{e/2} z^{m_k}`.
    table: Vec<Vec<Option<(u32, bool, i64)>>>,
}

impl TruncationContext {
    /// The monoid generated by `generators`, clipped at `cap`, found by
    /// breadth-first addition.
    pub fn generated(
        form: SkewForm,
        grading: Grading,
        cap: Q,
        generators: &[LatticeClass],
    ) -> Result<Self> {
        Self::with_convention(form, Convention::Minus, grading, cap, generators)
    }

    pub fn with_convention(
        form: SkewForm,
        convention: Convention,
        grading: Grading,
        cap: Q,
        generators: &[LatticeClass],
    ) -> Result<Self> {
        let mut gens: Vec<(LatticeClass, Q)> = Vec::new();
        for g in generators {
            let w = grading.grade(g);
            if !w.is_positive() {
                return Err(Error::NonNilpotent);
            }
            if w <= cap && !gens.iter().any(|(h, _)| h == g) {
                gens.push((*g, w));
            }
        }
        let mut seen: HashMap<LatticeClass, Q> = HashMap::new();
        seen.insert(LatticeClass::ZERO, Q::zero());
        let mut queue = VecDeque::from([LatticeClass::ZERO]);
        while let Some(m) = queue.pop_front() {
            let w = seen[&m].clone();
            for (g, gw) in &gens {
                let s = m + *g;
                let sw = &w + gw;
                if sw <= cap && !seen.contains_key(&s) {
                    seen.insert(s, sw);
                    queue.push_back(s);
                }
            }
        }
        let mut entries: Vec<(Q, LatticeClass)> = seen.into_iter().map(|(m, w)| (w, m)).collect();
        entries.sort();
        let support: Vec<LatticeClass> = entries.iter().map(|(_, m)| *m).collect();
        let grades: Vec<Q> = entries.into_iter().map(|(w, _)| w).collect();
        let index: HashMap<LatticeClass, usize> =
            support.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let table = support
            .iter()
            .map(|mi| {
                support
                    .iter()
                    .map(|mj| {
                        index.get(&(*mi + *mj)).map(|&k| {
                            let p = form.pair(mi, mj);
                            let neg = convention == Convention::Minus && p.rem_euclid(2) == 1;
                            (k as u32, neg, p)
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(TruncationContext {
            form,
            convention,
            grading,
            cap,
            support,
            grades,
            index,
            table,
        })
    }

    pub fn form(&self) -> SkewForm {
        self.form
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn grading(&self) -> &Grading {
        &self.grading
    }

    pub fn cap(&self) -> &Q {
        &self.cap
    }

    pub fn support(&self) -> &[LatticeClass] {
        &self.support
    }

    pub fn contains(&self, m: &LatticeClass) -> bool {
        self.index.contains_key(m)
    }

    pub fn grade_of_index(&self, i: usize) -> &Q {
        &self.grades[i]
    }

    pub fn index_of(&self, m: &LatticeClass) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Distinct positive grades of the support, ascending.
    pub fn grade_levels(&self) -> Vec<Q> {
        let mut v: Vec<Q> = self.grades.iter().filter(|g| g.is_positive()).cloned().collect();
        v.dedup();
        v
    }
}

/// An element `Σ c_m z^m` with classes inside a truncation context.
#[derive(Clone, PartialEq, Debug)]
pub struct TorusElement<C> {
    terms: BTreeMap<usize, C>,
}

impl<C: Coeff> TorusElement<C> {
    pub fn zero() -> Self {
        TorusElement {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::monomial_at(0, C::one())
    }

    fn monomial_at(i: usize, c: C) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(i, c);
        }
        TorusElement { terms }
    }

    /// `c z^m`; classes outside the support truncate to zero.
    pub fn monomial(ctx: &TruncationContext, m: LatticeClass, c: C) -> Self {
        match ctx.index_of(&m) {
            Some(i) => Self::monomial_at(i, c),
            None => Self::zero(),
        }
    }

    pub fn from_terms<I>(ctx: &TruncationContext, terms: I) -> Self
    where
        I: IntoIterator<Item = (LatticeClass, C)>,
    {
        let mut out = Self::zero();
        for (m, c) in terms {
            out.add_assign(&Self::monomial(ctx, m, c));
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&0).is_some_and(|c| *c == C::one())
    }

    pub fn coeff(&self, ctx: &TruncationContext, m: &LatticeClass) -> C {
        ctx.index_of(m)
            .and_then(|i| self.terms.get(&i).cloned())
            .unwrap_or_else(C::zero)
    }

    pub fn unit_coeff(&self) -> C {
        self.terms.get(&0).cloned().unwrap_or_else(C::zero)
    }

    /// Terms as `(class, coefficient)`, in ascending grade.
    pub fn terms<'a>(
        &'a self,
        ctx: &'a TruncationContext,
    ) -> impl Iterator<Item = (LatticeClass, &'a C)> + 'a {
        self.terms.iter().map(|(i, c)| (ctx.support[*i], c))
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (i, c) in &other.terms {
            let v = match self.terms.get(i) {
                Some(old) => old.add(c),
                None => c.clone(),
            };
            if v.is_zero() {
                self.terms.remove(i);
            } else {
                self.terms.insert(*i, v);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn neg(&self) -> Self {
        TorusElement {
            terms: self.terms.iter().map(|(i, c)| (*i, c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Q) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        TorusElement {
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (*i, c.scale(s)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(LatticeClass, &C) -> C, ctx: &TruncationContext) -> Self {
        TorusElement {
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (*i, f(ctx.support[*i], c)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
        }
    }

    /// Keeps only the terms of the given grade.
    pub fn graded_part(&self, ctx: &TruncationContext, grade: &Q) -> Self {
        TorusElement {
            terms: self
                .terms
                .iter()
                .filter(|(i, _)| ctx.grades[**i] == *grade)
                .map(|(i, c)| (*i, c.clone()))
                .collect(),
        }
    }

    /// Lowest grade carrying a nonzero term, ignoring the unit class.
    pub fn min_positive_grade<'a>(&self, ctx: &'a TruncationContext) -> Option<&'a Q> {
        self.terms
            .keys()
            .find(|i| **i != 0)
            .map(|i| &ctx.grades[*i])
    }
}

impl<C: Coeff> TorusElement<C> {
    /// Sum of `c · z^m` over classes; convenience for tests and display.
    pub fn render(&self, ctx: &TruncationContext) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms(ctx)
            .map(|(m, c)| format!("[{c}]z^{m}"))
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Product in the truncated algebra.
pub fn torus_mul<C: Coeff>(
    a: &TorusElement<C>,
    b: &TorusElement<C>,
    ctx: &TruncationContext,
) -> TorusElement<C> {
    let mut acc: BTreeMap<usize, C> = BTreeMap::new();
    for (i, ci) in &a.terms {
        let gi = &ctx.grades[*i];
        for (j, cj) in &b.terms {
            // both supports are sorted by grade
            if gi + &ctx.grades[*j] > ctx.cap {
                break;
            }
            let Some((k, neg, e)) = ctx.table[*i][*j] else {
                continue;
            };
            let mut p = ci.mul(cj);
            if p.is_zero() {
                continue;
            }
            if neg || e != 0 {
                p = p.mul_monomial(neg, e);
            }
            match acc.get_mut(&(k as usize)) {
                Some(v) => *v = v.add(&p),
                None => {
                    acc.insert(k as usize, p);
                }
            }
        }
    }
    acc.retain(|_, c| !c.is_zero());
    TorusElement { terms: acc }
}

/// `exp(x) = Σ x^k / k!`, finite because every term of `x` has positive
/// grade.
pub fn torus_exp<C: Coeff>(x: &TorusElement<C>, ctx: &TruncationContext) -> Result<TorusElement<C>> {
    if x.terms.contains_key(&0) {
        return Err(Error::NonNilpotent);
    }
    let mut out = TorusElement::one();
    let mut term = TorusElement::one();
    let mut k = 1i64;
    loop {
        term = torus_mul(&term, x, ctx).scale(&Q::new(1.into(), k.into()));
        if term.is_zero() {
            break;
        }
        out.add_assign(&term);
        k += 1;
    }
    Ok(out)
}

/// Inverse of an element with unit coefficient one, by the geometric
/// series.
pub fn torus_inverse<C: Coeff>(
    a: &TorusElement<C>,
    ctx: &TruncationContext,
) -> Result<TorusElement<C>> {
    if a.unit_coeff() != C::one() {
        return Err(Error::UnitNotOne);
    }
    let mut y = a.clone();
    y.terms.remove(&0);
    let minus_y = y.neg();
    let mut out = TorusElement::one();
    let mut term = TorusElement::one();
    loop {
        term = torus_mul(&term, &minus_y, ctx);
        if term.is_zero() {
            break;
        }
        out.add_assign(&term);
    }
    Ok(out)
}

/// Left-to-right product `f_1 · f_2 · … · f_k`.
pub fn ordered_product<C: Coeff>(
    factors: &[TorusElement<C>],
    ctx: &TruncationContext,
) -> TorusElement<C> {
    let mut it = factors.iter();
    let Some(first) = it.next() else {
        return TorusElement::one();
    };
    it.fold(first.clone(), |acc, f| torus_mul(&acc, f, ctx))
}

/// Commutator `ab − ba`.
pub fn commutator<C: Coeff>(
    a: &TorusElement<C>,
    b: &TorusElement<C>,
    ctx: &TruncationContext,
) -> TorusElement<C> {
    torus_mul(a, b, ctx).sub(&torus_mul(b, a, ctx))
}

/// Convenience constructor for gradings used in tests: `grade(a,b) = a + b`.
pub fn sum_grading() -> Grading {
    Grading::new(Q::one(), Q::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{q_int, HalfLaurent, RatFuncQ};

    fn ctx(kappa: i64, cap: i64, gens: &[(i64, i64)]) -> TruncationContext {
        let gens: Vec<LatticeClass> = gens.iter().map(|&(a, b)| LatticeClass::new(a, b)).collect();
        TruncationContext::generated(SkewForm { kappa }, sum_grading(), q_int(cap), &gens).unwrap()
    }

    fn mono(c: &TruncationContext, a: i64, b: i64, f: RatFuncQ) -> TorusElement<RatFuncQ> {
        TorusElement::monomial(c, LatticeClass::new(a, b), f)
    }

    #[test]
    fn basic_product_sign_and_power() {
        let c = ctx(3, 4, &[(1, 0), (0, 1)]);
        let p = torus_mul(&mono(&c, 1, 0, RatFuncQ::one()), &mono(&c, 0, 1, RatFuncQ::one()), &c);
        let want = RatFuncQ::from_laurent(HalfLaurent::from_ints(-3, &[-1]));
        assert_eq!(p, mono(&c, 1, 1, want));
        let sq = torus_mul(&mono(&c, 1, 0, RatFuncQ::one()), &mono(&c, 1, 0, RatFuncQ::one()), &c);
        assert_eq!(sq, mono(&c, 2, 0, RatFuncQ::one()));
    }

    #[test]
    fn commutator_example() {
        // grading a - b keeps both classes positive
        let gens = [LatticeClass::new(-1, -1), LatticeClass::new(1, 0)];
        let g = Grading::new(q_int(1), q_int(-2));
        let c = TruncationContext::generated(SkewForm::P2, g, q_int(4), &gens).unwrap();
        let x = TorusElement::monomial(&c, gens[0], RatFuncQ::one());
        let y = TorusElement::monomial(&c, gens[1], RatFuncQ::one());
        // xy = -q^{-3/2} z, yx = -q^{3/2} z
        let q3 = RatFuncQ::from_laurent(RatFuncQ::quantum_ell(3));
        assert_eq!(commutator(&x, &y, &c), mono(&c, 0, -1, q3.clone()));
        assert_eq!(commutator(&y, &x, &c), mono(&c, 0, -1, -q3));
    }

    #[test]
    fn exp_truncates_and_rejects_units() {
        let c = ctx(3, 1, &[(1, 0)]);
        let x = mono(&c, 1, 0, RatFuncQ::from_int(5));
        assert_eq!(
            torus_exp(&x, &c).unwrap(),
            TorusElement::one().add(&x)
        );
        assert!(torus_exp(&TorusElement::<RatFuncQ>::zero(), &c).unwrap().is_one());
        assert!(matches!(
            torus_exp(&TorusElement::<RatFuncQ>::one(), &c),
            Err(Error::NonNilpotent)
        ));
        let inv = torus_inverse(&TorusElement::one().add(&x), &c).unwrap();
        assert_eq!(inv, TorusElement::one().sub(&x));
        assert!(matches!(
            torus_inverse(&x, &c),
            Err(Error::UnitNotOne)
        ));
    }

    #[test]
    fn baker_campbell_hausdorff_at_order_two() {
        // classes of grade 3 fall outside the support at cap 2
        let c = ctx(3, 2, &[(1, 0), (0, 1)]);
        let h1 = mono(&c, 1, 0, RatFuncQ::initial_wall(1));
        let h2 = mono(&c, 0, 1, RatFuncQ::from_int(2));
        let lhs = torus_mul(&torus_exp(&h1, &c).unwrap(), &torus_exp(&h2, &c).unwrap(), &c);
        let half = commutator(&h1, &h2, &c).scale(&crate::exactalg::q_frac(1, 2));
        let rhs = torus_exp(&h1.add(&h2).add(&half), &c).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn ordered_product_edge_cases() {
        let c = ctx(3, 6, &[(1, 2)]);
        assert!(ordered_product::<RatFuncQ>(&[], &c).is_one());
        let x = mono(&c, 1, 2, RatFuncQ::from_int(3));
        assert_eq!(ordered_product(std::slice::from_ref(&x), &c), x);
        let y = mono(&c, 2, 4, RatFuncQ::initial_wall(2));
        assert_eq!(
            ordered_product(&[x.clone(), y.clone()], &c),
            ordered_product(&[y, x], &c)
        );
    }
}
