//! Laurent polynomials in the half-power variable `t = q^{1/2}`.
//!
//! Exponents are stored in units of `q^{1/2}`: the exponent `e` stands for
//! `q^{e/2}`. Coefficients are exact rationals. The representation is dense
//! between the lowest and the highest nonzero exponent, which keeps the
//! canonical form unique: the zero polynomial has no coefficients, and
//! otherwise both end coefficients are nonzero.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Q;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct HalfLaurent {
    lo: i64,
    coeffs: Vec<Q>,
}

impl HalfLaurent {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::monomial(0, c)
    }

    /// `c · q^{e/2}`.
    pub fn monomial(e: i64, c: Q) -> Self {
        Self::from_dense(e, vec![c])
    }

    /// Builds `Σ_i coeffs[i] · q^{(lo + i)/2}` and trims zero ends.
    pub fn from_dense(lo: i64, coeffs: Vec<Q>) -> Self {
        let mut p = HalfLaurent { lo, coeffs };
        p.trim();
        p
    }

    /// Builds from `(exponent, coefficient)` pairs; repeated exponents add up.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (i64, Q)>,
    {
        let terms: Vec<(i64, Q)> = terms.into_iter().collect();
        let Some(lo) = terms.iter().map(|(e, _)| *e).min() else {
            return Self::zero();
        };
        let hi = terms.iter().map(|(e, _)| *e).max().unwrap();
        let mut coeffs = vec![Q::zero(); (hi - lo + 1) as usize];
        for (e, c) in terms {
            coeffs[(e - lo) as usize] += c;
        }
        Self::from_dense(lo, coeffs)
    }

    /// Integer coefficients for the exponents `lo, lo+1, …`.
    pub fn from_ints(lo: i64, coeffs: &[i64]) -> Self {
        Self::from_dense(lo, coeffs.iter().map(|&c| Q::from_integer(c.into())).collect())
    }

    /// A polynomial in `q` (even exponents only) from its coefficient list,
    /// lowest power first.
    pub fn from_q_poly(coeffs: &[i64]) -> Self {
        Self::from_terms(
            coeffs
                .iter()
                .enumerate()
                .map(|(p, &c)| (2 * p as i64, Q::from_integer(c.into()))),
        )
    }

    fn trim(&mut self) {
        let first = self.coeffs.iter().position(|c| !c.is_zero());
        match first {
            None => {
                self.coeffs.clear();
                self.lo = 0;
            }
            Some(f) => {
                let last = self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap();
                self.coeffs.truncate(last + 1);
                if f > 0 {
                    self.coeffs.drain(..f);
                    self.lo += f as i64;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.lo == 0 && self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// Lowest exponent with a nonzero coefficient (`None` for zero).
    pub fn min_exp(&self) -> Option<i64> {
        (!self.is_zero()).then_some(self.lo)
    }

    pub fn max_exp(&self) -> Option<i64> {
        (!self.is_zero()).then(|| self.lo + self.coeffs.len() as i64 - 1)
    }

    /// Number of stored positions (`max_exp - min_exp + 1`).
    pub fn span(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, e: i64) -> Q {
        if self.is_zero() || e < self.lo {
            return Q::zero();
        }
        self.coeffs
            .get((e - self.lo) as usize)
            .cloned()
            .unwrap_or_else(Q::zero)
    }

    pub fn leading(&self) -> Option<&Q> {
        self.coeffs.last()
    }

    pub fn trailing(&self) -> Option<&Q> {
        self.coeffs.first()
    }

    /// Nonzero `(exponent, coefficient)` pairs in increasing exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Q)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.lo + i as i64, c))
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        HalfLaurent {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    /// Multiplication by `q^{e/2}`.
    pub fn shift(&self, e: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        HalfLaurent {
            lo: self.lo + e,
            coeffs: self.coeffs.clone(),
        }
    }

    /// The substitution `q^{1/2} ↦ q^{ℓ/2}`: every exponent is multiplied by `ℓ`.
    pub fn laurent_scale(&self, ell: u32) -> Self {
        assert!(ell >= 1, "scale factor must be positive");
        if self.is_zero() || ell == 1 {
            return self.clone();
        }
        let ell = ell as i64;
        let mut coeffs = vec![Q::zero(); (self.coeffs.len() - 1) * ell as usize + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i * ell as usize] = c.clone();
        }
        HalfLaurent {
            lo: self.lo * ell,
            coeffs,
        }
    }

    /// The bar involution `q^{1/2} ↦ q^{-1/2}`.
    pub fn bar(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let mut coeffs = self.coeffs.clone();
        coeffs.reverse();
        HalfLaurent {
            lo: -self.max_exp().unwrap(),
            coeffs,
        }
    }

    pub fn is_bar_symmetric(&self) -> bool {
        *self == self.bar()
    }

    /// True when all exponents are even, i.e. the value is a Laurent
    /// polynomial in `q` itself.
    pub fn is_integral_in_q(&self) -> bool {
        self.terms().all(|(e, _)| e % 2 == 0)
    }

    /// True when every coefficient is an integer.
    pub fn has_integer_coeffs(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    /// Substitutes `q^{1/2} = t`. Negative exponents require `t ≠ 0`.
    pub fn evaluate_half(&self, t: &Q) -> Result<Q> {
        if self.is_zero() {
            return Ok(Q::zero());
        }
        if t.is_zero() && self.lo < 0 {
            return Err(Error::Evaluation("negative power at zero".into()));
        }
        let mut acc = Q::zero();
        // Horner from the top, then multiply by t^lo.
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        Ok(acc * pow_q(t, self.lo))
    }

    /// Substitutes `q = value`. Odd half-powers need a rational square root
    /// of `value`; at a negative value they are an error.
    pub fn evaluate(&self, value: &Q) -> Result<Q> {
        if self.is_integral_in_q() {
            if self.is_zero() {
                return Ok(Q::zero());
            }
            if value.is_zero() && self.lo < 0 {
                return Err(Error::Evaluation("negative power at zero".into()));
            }
            let mut acc = Q::zero();
            let lo = self.lo;
            for (e, c) in self.terms() {
                acc += c * pow_q(value, (e - lo) / 2);
            }
            return Ok(acc * pow_q(value, lo / 2));
        }
        if value.is_negative() {
            return Err(Error::Evaluation(
                "odd half-power evaluated at a negative value of q".into(),
            ));
        }
        match rational_sqrt(value) {
            Some(t) => self.evaluate_half(&t),
            None => Err(Error::Evaluation(format!(
                "odd half-power needs a rational square root of {value}"
            ))),
        }
    }

    /// Coefficients of the `q`-powers `q^0, q^1, …` of a polynomial in `q`.
    /// Fails when odd half-powers or negative powers are present.
    pub fn q_coefficients(&self) -> Result<Vec<Q>> {
        if self.is_zero() {
            return Ok(Vec::new());
        }
        if !self.is_integral_in_q() || self.lo < 0 {
            return Err(Error::Evaluation(
                "not a polynomial in q with nonnegative powers".into(),
            ));
        }
        let top = self.max_exp().unwrap() / 2;
        Ok((0..=top).map(|p| self.coeff(2 * p)).collect())
    }

    pub(crate) fn dense(&self) -> &[Q] {
        &self.coeffs
    }

    /// Splits `self = t^lo · P(t)` with `P(0) ≠ 0`.
    pub(crate) fn lo_raw(&self) -> i64 {
        self.lo
    }
}

fn pow_q(base: &Q, e: i64) -> Q {
    if e >= 0 {
        num_traits::pow(base.clone(), e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

fn rational_sqrt(v: &Q) -> Option<Q> {
    let n = v.numer().sqrt();
    let d = v.denom().sqrt();
    (&n * &n == *v.numer() && &d * &d == *v.denom()).then(|| Q::new(n, d))
}

impl Add for &HalfLaurent {
    type Output = HalfLaurent;

    fn add(self, rhs: &HalfLaurent) -> HalfLaurent {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(rhs.lo);
        let hi = self.max_exp().unwrap().max(rhs.max_exp().unwrap());
        let mut coeffs = vec![Q::zero(); (hi - lo + 1) as usize];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[(self.lo - lo) as usize + i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            coeffs[(rhs.lo - lo) as usize + i] += c;
        }
        HalfLaurent::from_dense(lo, coeffs)
    }
}

impl Sub for &HalfLaurent {
    type Output = HalfLaurent;

    fn sub(self, rhs: &HalfLaurent) -> HalfLaurent {
        self + &(-rhs)
    }
}

impl Neg for &HalfLaurent {
    type Output = HalfLaurent;

    fn neg(self) -> HalfLaurent {
        HalfLaurent {
            lo: self.lo,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &HalfLaurent {
    type Output = HalfLaurent;

    fn mul(self, rhs: &HalfLaurent) -> HalfLaurent {
        if self.is_zero() || rhs.is_zero() {
            return HalfLaurent::zero();
        }
        let mut coeffs = vec![Q::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        HalfLaurent::from_dense(self.lo + rhs.lo, coeffs)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for HalfLaurent {
            type Output = HalfLaurent;
            fn $m(self, rhs: HalfLaurent) -> HalfLaurent {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for HalfLaurent {
    type Output = HalfLaurent;
    fn neg(self) -> HalfLaurent {
        -&self
    }
}

impl fmt::Display for HalfLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mono = match e {
                0 => String::new(),
                2 => "q".to_string(),
                e if e % 2 == 0 => format!("q^{}", e / 2),
                e => format!("q^({e}/2)"),
            };
            if mono.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{abs}*{mono}")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Polynomial division and gcd in the variable t = q^{1/2}.
//
// These helpers act on the dense coefficient vectors (index = power of t) of
// ordinary polynomials.

/// Dense polynomial over the rationals, index = power of `t`.
pub(crate) type DensePoly = Vec<Q>;

fn dense_trim(p: &mut DensePoly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

/// Quotient and remainder of `a` by `b` (`b` nonzero).
pub(crate) fn dense_div_rem(a: &[Q], b: &[Q]) -> (DensePoly, DensePoly) {
    let mut r: DensePoly = a.to_vec();
    dense_trim(&mut r);
    let mut b = b.to_vec();
    dense_trim(&mut b);
    assert!(!b.is_empty(), "division by the zero polynomial");
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let db = b.len() - 1;
    let lead_inv = b[db].recip();
    let mut quot = vec![Q::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let k = r.len() - 1 - db;
        let c = &r[r.len() - 1] * &lead_inv;
        for (i, bc) in b.iter().enumerate() {
            let v = &r[k + i] - &c * bc;
            r[k + i] = v;
        }
        quot[k] = c;
        r.pop();
        dense_trim(&mut r);
    }
    dense_trim(&mut quot);
    (quot, r)
}

/// Integer-coefficient primitive part with positive leading coefficient,
/// plus the rational factor `c` such that `p = c · prim`.
pub(crate) fn primitive_part(p: &[Q]) -> (Vec<BigInt>, Q) {
    let mut den_lcm = BigInt::one();
    for c in p {
        den_lcm = den_lcm.lcm(c.denom());
    }
    let ints: Vec<BigInt> = p
        .iter()
        .map(|c| (c * Q::from_integer(den_lcm.clone())).to_integer())
        .collect();
    let mut g = BigInt::zero();
    for c in &ints {
        g = g.gcd(c);
    }
    if g.is_zero() {
        return (Vec::new(), Q::zero());
    }
    if ints.last().is_some_and(|c| c.is_negative()) {
        g = -g;
    }
    let prim: Vec<BigInt> = ints.iter().map(|c| c / &g).collect();
    (prim, Q::new(g, den_lcm))
}

fn int_trim(p: &mut Vec<BigInt>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn int_primitive(p: Vec<BigInt>) -> Vec<BigInt> {
    let mut g = BigInt::zero();
    for c in &p {
        g = g.gcd(c);
    }
    if g.is_zero() {
        return p;
    }
    if p.last().is_some_and(|c| c.is_negative()) {
        g = -g;
    }
    p.into_iter().map(|c| c / &g).collect()
}

/// Pseudo-remainder of integer polynomials: `lc(b)^{δ+1} a mod b`.
fn int_pseudo_rem(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut r = a.to_vec();
    int_trim(&mut r);
    let db = b.len() - 1;
    let lb = &b[db];
    while r.len() > db && !r.is_empty() {
        let k = r.len() - 1 - db;
        let lr = r[r.len() - 1].clone();
        for c in r.iter_mut() {
            *c *= lb;
        }
        for (i, bc) in b.iter().enumerate() {
            r[k + i] -= &lr * bc;
        }
        r.pop();
        int_trim(&mut r);
    }
    r
}

/// Monic-free gcd over the rationals via the primitive polynomial remainder
/// sequence. Returns an integer primitive polynomial with positive leading
/// coefficient (the constant `1` when coprime).
pub(crate) fn dense_gcd(a: &[Q], b: &[Q]) -> Vec<BigInt> {
    let (mut x, _) = primitive_part(a);
    let (mut y, _) = primitive_part(b);
    int_trim(&mut x);
    int_trim(&mut y);
    if x.is_empty() {
        return if y.is_empty() { vec![BigInt::one()] } else { y };
    }
    if y.is_empty() {
        return x;
    }
    if x.len() < y.len() {
        std::mem::swap(&mut x, &mut y);
    }
    while !y.is_empty() {
        if y.len() == 1 {
            return vec![BigInt::one()];
        }
        let r = int_pseudo_rem(&x, &y);
        x = y;
        y = int_primitive(r);
    }
    x
}

pub(crate) fn ints_to_q(p: &[BigInt]) -> DensePoly {
    p.iter().map(|c| Q::from_integer(c.clone())).collect()
}
