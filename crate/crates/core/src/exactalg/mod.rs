//! Exact coefficient arithmetic.

mod laurent;
mod marker;
mod ratfunc;

use std::fmt;

use num_rational::BigRational;
use serde_json::{json, Value};

pub use laurent::HalfLaurent;
pub use marker::{LeafMultiset, MarkerPoly, UNBOUNDED_DEGREE};
pub use ratfunc::{denominator_is_canonical, RatFuncQ};

use crate::error::{Error, Result};

/// Exact rational numbers.
pub type Q = BigRational;

pub fn q_int(n: i64) -> Q {
    Q::from_integer(n.into())
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Parses `"p"`, `"p/q"` or a finite decimal such as `"-1.25"`, exactly.
pub fn parse_q(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::Invalid(format!("bad rational {s:?}"));
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let n: num_bigint::BigInt = digits.parse().map_err(|_| bad())?;
        let d = num_traits::pow(num_bigint::BigInt::from(10), frac.len());
        return Ok(Q::new(n, d));
    }
    t.parse::<Q>().map_err(|_| bad())
}

/// Coefficient ring of wall functions.
///
/// Implemented by [`RatFuncQ`] for plain runs and by [`MarkerPoly`] when
/// contributions of individual initial points are tracked.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn scale(&self, c: &Q) -> Self;
    /// Multiplication by `±q^{e/2}`.
    fn mul_monomial(&self, negate: bool, e: i64) -> Self;

    fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Coefficient attached to an initial ray at `s_n` of multiplicity `ell`.
    fn initial(f: RatFuncQ, n: i64, ell: u32, degree_cap: u32) -> Self;
    /// The value with markers forgotten.
    fn total(&self) -> RatFuncQ;
    /// Relabels marker indices; a no-op without markers.
    fn relabel_markers(&self, f: &dyn Fn(i64) -> i64) -> Self;
    fn map_ratfunc(&self, f: &dyn Fn(&RatFuncQ) -> RatFuncQ) -> Self;
    /// The substitution `q^{1/2} ↦ q^{ℓ/2}`; marker multiplicities scale by `ℓ`.
    fn adams(&self, ell: u32) -> Self;
    /// The same value as a marker polynomial (unmarked when there are no markers).
    fn to_marker(&self) -> MarkerPoly;

    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self>;
}

impl Coeff for RatFuncQ {
    fn zero() -> Self {
        RatFuncQ::zero()
    }
    fn one() -> Self {
        RatFuncQ::one()
    }
    fn is_zero(&self) -> bool {
        RatFuncQ::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn scale(&self, c: &Q) -> Self {
        RatFuncQ::scale(self, c)
    }
    fn mul_monomial(&self, negate: bool, e: i64) -> Self {
        RatFuncQ::mul_monomial(self, negate, e)
    }
    fn initial(f: RatFuncQ, _n: i64, _ell: u32, _degree_cap: u32) -> Self {
        f
    }
    fn total(&self) -> RatFuncQ {
        self.clone()
    }
    fn relabel_markers(&self, _f: &dyn Fn(i64) -> i64) -> Self {
        self.clone()
    }
    fn map_ratfunc(&self, f: &dyn Fn(&RatFuncQ) -> RatFuncQ) -> Self {
        f(self)
    }
    fn adams(&self, ell: u32) -> Self {
        self.laurent_scale(ell)
    }
    fn to_marker(&self) -> MarkerPoly {
        MarkerPoly::unmarked(self.clone(), UNBOUNDED_DEGREE)
    }
    fn to_json(&self) -> Value {
        ratfunc_json(self)
    }
    fn from_json(v: &Value) -> Result<Self> {
        ratfunc_from_json(v)
    }
}

impl Coeff for MarkerPoly {
    fn zero() -> Self {
        MarkerPoly::zero(UNBOUNDED_DEGREE)
    }
    fn one() -> Self {
        MarkerPoly::unmarked(RatFuncQ::one(), UNBOUNDED_DEGREE)
    }
    fn is_zero(&self) -> bool {
        MarkerPoly::is_zero(self)
    }
    fn add(&self, other: &Self) -> Self {
        MarkerPoly::add(self, other)
    }
    fn neg(&self) -> Self {
        MarkerPoly::neg(self)
    }
    fn mul(&self, other: &Self) -> Self {
        MarkerPoly::mul(self, other)
    }
    fn scale(&self, c: &Q) -> Self {
        MarkerPoly::scale(self, c)
    }
    fn mul_monomial(&self, negate: bool, e: i64) -> Self {
        self.map(|f| f.mul_monomial(negate, e))
    }
    fn initial(f: RatFuncQ, n: i64, ell: u32, degree_cap: u32) -> Self {
        MarkerPoly::term(LeafMultiset::single(n, ell), f, degree_cap)
    }
    fn total(&self) -> RatFuncQ {
        MarkerPoly::total(self)
    }
    fn relabel_markers(&self, f: &dyn Fn(i64) -> i64) -> Self {
        self.relabel(f)
    }
    fn map_ratfunc(&self, f: &dyn Fn(&RatFuncQ) -> RatFuncQ) -> Self {
        self.map(f)
    }
    fn adams(&self, ell: u32) -> Self {
        MarkerPoly::adams(self, ell)
    }
    fn to_marker(&self) -> MarkerPoly {
        self.clone()
    }
    fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms()
            .iter()
            .map(|(k, v)| {
                let leaves: Vec<Value> = k.entries().iter().map(|(n, m)| json!([n, m])).collect();
                json!({"leaves": leaves, "value": ratfunc_json(v)})
            })
            .collect();
        let cap = (self.degree_cap() != UNBOUNDED_DEGREE).then_some(self.degree_cap());
        json!({"degree_cap": cap, "terms": terms})
    }
    fn from_json(v: &Value) -> Result<Self> {
        let bad = || Error::Invalid("malformed marker polynomial".into());
        let cap = match v.get("degree_cap") {
            Some(Value::Null) | None => UNBOUNDED_DEGREE,
            Some(c) => c.as_u64().ok_or_else(bad)? as u32,
        };
        let mut out = MarkerPoly::zero(cap);
        for t in v.get("terms").and_then(Value::as_array).ok_or_else(bad)? {
            let leaves: Vec<(i64, u32)> = serde_json::from_value(
                t.get("leaves").cloned().ok_or_else(bad)?,
            )?;
            let f = ratfunc_from_json(t.get("value").ok_or_else(bad)?)?;
            out = out.add(&MarkerPoly::term(LeafMultiset::from_pairs(leaves), f, cap));
        }
        Ok(out)
    }
}

/// `[[e, "p/q"], …]`, exponents in units of `q^{1/2}`.
pub fn laurent_json(p: &HalfLaurent) -> Value {
    Value::Array(
        p.terms()
            .map(|(e, c)| json!([e, c.to_string()]))
            .collect(),
    )
}

pub fn laurent_from_json(v: &Value) -> Result<HalfLaurent> {
    let bad = || Error::Invalid("malformed Laurent polynomial".into());
    let mut terms = Vec::new();
    for t in v.as_array().ok_or_else(bad)? {
        let e = t.get(0).and_then(Value::as_i64).ok_or_else(bad)?;
        let c = parse_q(t.get(1).and_then(Value::as_str).ok_or_else(bad)?)?;
        terms.push((e, c));
    }
    Ok(HalfLaurent::from_terms(terms))
}

pub fn ratfunc_json(f: &RatFuncQ) -> Value {
    json!({"num": laurent_json(f.numer()), "den": laurent_json(f.denom())})
}

pub fn ratfunc_from_json(v: &Value) -> Result<RatFuncQ> {
    let bad = || Error::Invalid("malformed rational function".into());
    RatFuncQ::new(
        laurent_from_json(v.get("num").ok_or_else(bad)?)?,
        laurent_from_json(v.get("den").ok_or_else(bad)?)?,
    )
}

/// The quantum integer `[n]_q = 1 + q + … + q^{n-1}`.
pub fn q_integer(n: u32) -> HalfLaurent {
    HalfLaurent::from_q_poly(&vec![1; n as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_q_forms() {
        assert_eq!(parse_q("3/6").unwrap(), q_frac(1, 2));
        assert_eq!(parse_q("0.5").unwrap(), q_frac(1, 2));
        assert_eq!(parse_q("-0.25").unwrap(), q_frac(-1, 4));
        assert_eq!(parse_q(" -7 ").unwrap(), q_int(-7));
        assert!(parse_q("1.").is_err());
        assert!(parse_q("x").is_err());
    }

    #[test]
    fn json_round_trip() {
        let f = RatFuncQ::initial_wall(3);
        assert_eq!(ratfunc_from_json(&ratfunc_json(&f)).unwrap(), f);
        let m = MarkerPoly::term(LeafMultiset::from_pairs([(-1, 2), (4, 1)]), f, 5);
        assert_eq!(<MarkerPoly as Coeff>::from_json(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn evaluate_examples() {
        let p = HalfLaurent::from_q_poly(&[1, 1, 1]);
        assert_eq!(p.evaluate(&q_int(1)).unwrap(), q_int(3));
        assert_eq!(p.evaluate(&q_int(-1)).unwrap(), q_int(1));
        let nine_three = &q_integer(9) * &q_integer(3);
        assert_eq!(nine_three.evaluate(&q_int(1)).unwrap(), q_int(27));
        assert!(HalfLaurent::monomial(1, q_int(1)).evaluate(&q_int(-1)).is_err());
    }
}
