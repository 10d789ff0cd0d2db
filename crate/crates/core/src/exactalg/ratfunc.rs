//! Canonical rational functions in `q^{1/2}`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::laurent::{dense_div_rem, dense_gcd, ints_to_q, primitive_part, HalfLaurent};
use super::Q;
use crate::error::{Error, Result};

/// A rational function `numerator / denominator` in the variable `q^{1/2}`.
///
/// Always kept in canonical form: numerator and denominator are coprime,
/// the denominator has integer coefficients with content one, lowest
/// exponent zero and a positive leading coefficient. Two values are equal
/// exactly when their representations are equal.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RatFuncQ {
    num: HalfLaurent,
    den: HalfLaurent,
}

impl Default for RatFuncQ {
    fn default() -> Self {
        Self::zero()
    }
}

impl RatFuncQ {
    pub fn zero() -> Self {
        RatFuncQ {
            num: HalfLaurent::zero(),
            den: HalfLaurent::one(),
        }
    }

    pub fn one() -> Self {
        Self::from_laurent(HalfLaurent::one())
    }

    pub fn from_laurent(p: HalfLaurent) -> Self {
        RatFuncQ {
            num: p,
            den: HalfLaurent::one(),
        }
    }

    pub fn constant(c: Q) -> Self {
        Self::from_laurent(HalfLaurent::constant(c))
    }

    pub fn from_int(c: i64) -> Self {
        Self::constant(Q::from_integer(c.into()))
    }

    /// Brings `n / d` to canonical form.
    pub fn new(n: HalfLaurent, d: HalfLaurent) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::normalize_unchecked(n, d))
    }

    fn normalize_unchecked(n: HalfLaurent, d: HalfLaurent) -> Self {
        if n.is_zero() {
            return Self::zero();
        }
        let shift = n.lo_raw() - d.lo_raw();
        let (mut nd, mut dd) = (n.dense().to_vec(), d.dense().to_vec());
        if dd.len() > 1 && nd.len() > 1 {
            let g = dense_gcd(&nd, &dd);
            if g.len() > 1 {
                let gq = ints_to_q(&g);
                let (qn, rn) = dense_div_rem(&nd, &gq);
                let (qd, rd) = dense_div_rem(&dd, &gq);
                debug_assert!(rn.is_empty() && rd.is_empty());
                nd = qn;
                dd = qd;
            }
        }
        let (dprim, content) = primitive_part(&dd);
        let inv = content.recip();
        let num: Vec<Q> = nd.iter().map(|c| c * &inv).collect();
        RatFuncQ {
            num: HalfLaurent::from_dense(shift, num),
            den: HalfLaurent::from_dense(0, ints_to_q(&dprim)),
        }
    }

    pub fn numer(&self) -> &HalfLaurent {
        &self.num
    }

    pub fn denom(&self) -> &HalfLaurent {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    /// True when the denominator is the constant one.
    pub fn is_laurent(&self) -> bool {
        self.den.is_one()
    }

    /// The quotient Laurent polynomial, when the denominator divides the
    /// numerator exactly.
    pub fn to_laurent(&self) -> Result<HalfLaurent> {
        if self.den.is_one() {
            Ok(self.num.clone())
        } else {
            Err(Error::NotLaurent(self.to_string()))
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RatFuncQ {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    /// Multiplication by `±q^{e/2}`.
    pub fn mul_monomial(&self, negate: bool, e: i64) -> Self {
        let mut num = self.num.shift(e);
        if negate {
            num = -num;
        }
        RatFuncQ {
            num,
            den: self.den.clone(),
        }
    }

    /// The substitution `q^{1/2} ↦ q^{ℓ/2}`.
    pub fn laurent_scale(&self, ell: u32) -> Self {
        Self::normalize_unchecked(self.num.laurent_scale(ell), self.den.laurent_scale(ell))
    }

    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Value at `q^{1/2} = t`; fails at poles.
    pub fn evaluate_half(&self, t: &Q) -> Result<Q> {
        let d = self.den.evaluate_half(t)?;
        if d.is_zero() {
            return Err(Error::Evaluation("pole".into()));
        }
        Ok(self.num.evaluate_half(t)? / d)
    }

    /// `-(1/ℓ) / (q^{ℓ/2} - q^{-ℓ/2})`, the coefficient of the initial wall
    /// of multiplicity `ℓ`.
    pub fn initial_wall(ell: u32) -> Self {
        let l = ell as i64;
        let d = HalfLaurent::from_terms([(l, Q::one()), (-l, -Q::one())]);
        let n = HalfLaurent::constant(-Q::new(1.into(), l.into()));
        Self::normalize_unchecked(n, d)
    }

    /// `q^{ℓ/2} - q^{-ℓ/2}`.
    pub fn quantum_ell(ell: u32) -> HalfLaurent {
        let l = ell as i64;
        HalfLaurent::from_terms([(l, Q::one()), (-l, -Q::one())])
    }
}

impl Add for &RatFuncQ {
    type Output = RatFuncQ;

    fn add(self, rhs: &RatFuncQ) -> RatFuncQ {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        if self.den == rhs.den {
            if self.den.is_one() {
                return RatFuncQ::from_laurent(&self.num + &rhs.num);
            }
            return RatFuncQ::normalize_unchecked(&self.num + &rhs.num, self.den.clone());
        }
        let n = &(&self.num * &rhs.den) + &(&rhs.num * &self.den);
        RatFuncQ::normalize_unchecked(n, &self.den * &rhs.den)
    }
}

impl Sub for &RatFuncQ {
    type Output = RatFuncQ;

    fn sub(self, rhs: &RatFuncQ) -> RatFuncQ {
        self + &(-rhs)
    }
}

impl Neg for &RatFuncQ {
    type Output = RatFuncQ;

    fn neg(self) -> RatFuncQ {
        RatFuncQ {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &RatFuncQ {
    type Output = RatFuncQ;

    fn mul(self, rhs: &RatFuncQ) -> RatFuncQ {
        if self.is_zero() || rhs.is_zero() {
            return RatFuncQ::zero();
        }
        if self.den.is_one() && rhs.den.is_one() {
            return RatFuncQ::from_laurent(&self.num * &rhs.num);
        }
        RatFuncQ::normalize_unchecked(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Div for &RatFuncQ {
    type Output = Result<RatFuncQ>;

    fn div(self, rhs: &RatFuncQ) -> Result<RatFuncQ> {
        if rhs.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RatFuncQ::normalize_unchecked(
            &self.num * &rhs.den,
            &self.den * &rhs.num,
        ))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for RatFuncQ {
            type Output = RatFuncQ;
            fn $m(self, rhs: RatFuncQ) -> RatFuncQ {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for RatFuncQ {
    type Output = RatFuncQ;
    fn neg(self) -> RatFuncQ {
        -&self
    }
}

impl fmt::Display for RatFuncQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

/// Signs of the leading coefficient after canonicalization; exposed for
/// tests that check the denominator convention.
pub fn denominator_is_canonical(f: &RatFuncQ) -> bool {
    let d = f.denom();
    d.min_exp() == Some(0)
        && d.has_integer_coeffs()
        && d.leading().is_some_and(|c| c.is_positive())
        && {
            let (_, content) = primitive_part(d.dense());
            content.is_one()
        }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(lo: i64, c: &[i64]) -> HalfLaurent {
        HalfLaurent::from_ints(lo, c)
    }

    #[test]
    fn normalize_quantum_three_over_one() {
        // (q^{3/2} - q^{-3/2}) / (q^{1/2} - q^{-1/2}) = q + 1 + q^{-1}
        let f = RatFuncQ::new(RatFuncQ::quantum_ell(3), RatFuncQ::quantum_ell(1)).unwrap();
        assert_eq!(f.to_laurent().unwrap(), t(-2, &[1, 0, 1, 0, 1]));
    }

    #[test]
    fn normalize_trivial_cases() {
        let qm1 = t(0, &[-1, 0, 1]);
        assert!(RatFuncQ::new(HalfLaurent::zero(), qm1.clone()).unwrap().is_zero());
        assert!(RatFuncQ::new(qm1.clone(), qm1.clone()).unwrap().is_one());
        assert!(matches!(
            RatFuncQ::new(qm1, HalfLaurent::zero()),
            Err(Error::DivisionByZero)
        ));
    }

    #[test]
    fn to_laurent_examples() {
        let f = RatFuncQ::new(t(0, &[-1, 0, 0, 0, 1]), t(0, &[-1, 0, 1])).unwrap();
        assert_eq!(f.to_laurent().unwrap(), t(0, &[1, 0, 1]));
        let g = RatFuncQ::new(HalfLaurent::one(), t(0, &[-1, 0, 1])).unwrap();
        assert!(matches!(g.to_laurent(), Err(Error::NotLaurent(_))));
    }

    #[test]
    fn canonical_denominator() {
        let f = RatFuncQ::new(t(3, &[2]), t(-1, &[-4, 0, 6])).unwrap();
        assert!(denominator_is_canonical(&f));
        assert_eq!(f.denom(), &t(0, &[-2, 0, 3]));
        assert_eq!(f.numer(), &t(4, &[1]));
        assert!(denominator_is_canonical(&RatFuncQ::initial_wall(3)));
    }

    #[test]
    fn initial_wall_value() {
        // -(1/2) / (q - q^{-1}) = -(1/2) q / (q^2 - 1)
        let f = RatFuncQ::initial_wall(2);
        let want = RatFuncQ::new(
            HalfLaurent::monomial(2, -Q::new(1.into(), 2.into())),
            t(0, &[-1, 0, 0, 0, 1]),
        )
        .unwrap();
        assert_eq!(f, want);
    }
}
