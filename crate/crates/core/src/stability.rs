//! Charges `γ = (r, d, χ)`, central charges on the slice and the lines
//! `L_γ = {Re Z_γ = 0, Im Z_γ > 0}` where the ray data of class `m_γ` lives.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::diagram::PointQ;
use crate::error::{Error, Result};
use crate::exactalg::{q_frac, q_int, Q};
use crate::qtorus::LatticeClass;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct ChargeVector {
    pub r: i64,
    pub d: i64,
    pub chi: i64,
}

impl ChargeVector {
    pub const fn new(r: i64, d: i64, chi: i64) -> Self {
        ChargeVector { r, d, chi }
    }

    /// `m_γ = (r, −d)`.
    pub fn class(&self) -> LatticeClass {
        LatticeClass::new(self.r, -self.d)
    }

    pub fn divisibility(&self) -> i64 {
        num_integer::gcd(num_integer::gcd(self.r, self.d), self.chi)
    }

    pub fn is_primitive(&self) -> bool {
        self.divisibility() == 1
    }

    /// `γ / ℓ`, when `ℓ` divides every entry.
    pub fn divide(&self, ell: i64) -> Option<Self> {
        (ell != 0 && self.r % ell == 0 && self.d % ell == 0 && self.chi % ell == 0)
            .then(|| ChargeVector::new(self.r / ell, self.d / ell, self.chi / ell))
    }

    /// Classes of zero-dimensional support `(0, 0, χ)`.
    pub fn in_gamma0(&self) -> bool {
        self.r == 0 && self.d == 0
    }

    /// Charge of `E ⊗ O(1)`.
    pub fn twist(&self) -> Self {
        let ChargeVector { r, d, chi } = *self;
        ChargeVector::new(r, d + r, chi + d + 2 * r)
    }

    /// Charge of `E ⊗ O(−1)`: `(r, d − r, χ − r − d)`.
    pub fn untwist(&self) -> Self {
        let ChargeVector { r, d, chi } = *self;
        ChargeVector::new(r, d - r, chi - r - d)
    }

    /// Charge of `O(n)`: `(1, n, n²/2 + 3n/2 + 1)`.
    pub fn line_bundle(n: i64) -> Self {
        ChargeVector::new(1, n, (n * n + 3 * n) / 2 + 1)
    }
}

impl fmt::Display for ChargeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.r, self.d, self.chi)
    }
}

impl FromStr for ChargeVector {
    type Err = Error;

    /// Parses `r,d,chi`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Invalid(format!("expected r,d,chi integers, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let v: Vec<i64> = parts
            .iter()
            .map(|p| p.parse::<i64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        Ok(ChargeVector::new(v[0], v[1], v[2]))
    }
}

/// `(γ, γ') = −3dr' − rr' − dd' + rχ' + χr'`.
pub fn euler_form(g: &ChargeVector, h: &ChargeVector) -> i64 {
    -3 * g.d * h.r - g.r * h.r - g.d * h.d + g.r * h.chi + g.chi * h.r
}

/// Dimension `1 − (γ, γ)` of the stable moduli space.
pub fn moduli_dimension(g: &ChargeVector) -> Result<i64> {
    if g.in_gamma0() {
        return if g.chi == 1 {
            Ok(2)
        } else {
            Err(Error::NoStableObjects)
        };
    }
    Ok(1 - euler_form(g, g))
}

/// `Z = re + i·im_coeff·√(x² + 2y)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChargeValue {
    pub re: Q,
    pub im_coeff: Q,
}

impl ChargeValue {
    pub fn is_positive_imaginary(&self) -> bool {
        self.re.is_zero() && self.im_coeff.is_positive()
    }
}

/// `Re Z = ry + dx + r + 3d/2 − χ`, `Im Z = (d − rx)·√(x² + 2y)`.
pub fn central_charge(g: &ChargeVector, sigma: &PointQ) -> ChargeValue {
    let re = q_int(g.r) * &sigma.y + q_int(g.d) * &sigma.x + q_int(g.r) + q_frac(3 * g.d, 2)
        - q_int(g.chi);
    let im_coeff = q_int(g.d) - q_int(g.r) * &sigma.x;
    ChargeValue { re, im_coeff }
}

/// True when `σ ∈ L_γ`.
pub fn on_ray_locus(g: &ChargeVector, sigma: &PointQ) -> bool {
    sigma.in_u() && central_charge(g, sigma).is_positive_imaginary()
}

/// Rational `t ≥ √v` within `2^-20`, for `v ≥ 0`.
fn sqrt_upper(v: &Q) -> Q {
    if !v.is_positive() {
        return Q::zero();
    }
    let scale: i64 = 1 << 20;
    let approx = v.to_f64().unwrap_or(f64::MAX).sqrt();
    let mut num = (approx * scale as f64).ceil() as i64;
    loop {
        let t = Q::new(BigInt::from(num), BigInt::from(scale));
        if &t * &t >= *v {
            return t;
        }
        num += 1;
    }
}

/// A rational point of `L_γ` with `x² + 2y ≥ s_target`.
///
/// For `r = 0` the line is vertical at `x = χ/d − 3/2` and the point is
/// placed at exactly `s_target`. Otherwise the line is `y = (χ − r − 3d/2 − dx)/r`
/// on the side `rx < d`, where `x² + 2y` grows towards infinity; `x` is chosen
/// as the rounded-out root.
pub fn probe_point(g: &ChargeVector, s_target: &Q) -> Result<PointQ> {
    if g.r == 0 {
        if g.d <= 0 {
            return Err(Error::EmptyRayLocus);
        }
        let x = q_frac(g.chi, g.d) - q_frac(3, 2);
        let y = ((s_target - &x * &x) / q_int(2)).max(q_frac(1, 8) - &x * &x / q_int(2));
        return Ok(PointQ::new(x, y));
    }
    let r = q_int(g.r);
    let c = q_int(g.chi) - &r - q_frac(3 * g.d, 2);
    let y_of = |x: &Q| (&c - q_int(g.d) * x) / &r;
    // s(x) = (x − d/r)² − (d/r)² + 2c/r
    let x0 = q_int(g.d) / &r;
    let rest = &x0 * &x0 - &c * q_int(2) / &r;
    let margin = sqrt_upper(&(s_target + &rest)).max(Q::new(1.into(), 8.into()));
    let mut dist = margin;
    loop {
        let x = if g.r > 0 { &x0 - &dist } else { &x0 + &dist };
        let p = PointQ::new(x.clone(), y_of(&x));
        if p.s() >= *s_target && p.in_u() {
            return Ok(p);
        }
        dist *= q_int(2);
    }
}

/// The conic `F(x, y) = (d₁ − r₁x)·Re Z₂ − (d₂ − r₂x)·Re Z₁` on which the
/// phases of the two charges agree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct PotentialWall {
    /// Coefficients of `1, x, y, x², xy` (there is no `y²` term).
    pub coeffs: [Q; 5],
}

impl PotentialWall {
    pub fn eval(&self, p: &PointQ) -> Q {
        let c = &self.coeffs;
        &c[0] + &c[1] * &p.x + &c[2] * &p.y + &c[3] * &p.x * &p.x + &c[4] * &p.x * &p.y
    }

    /// Gradient `(∂F/∂x, ∂F/∂y)`; the tangent line at `p` is orthogonal to it.
    pub fn gradient(&self, p: &PointQ) -> (Q, Q) {
        let c = &self.coeffs;
        (
            &c[1] + &c[3] * &p.x * q_int(2) + &c[4] * &p.y,
            &c[2] + &c[4] * &p.x,
        )
    }

    /// Slope `dy/dx` of the tangent line at `p`, if not vertical.
    pub fn tangent_slope(&self, p: &PointQ) -> Option<Q> {
        let (fx, fy) = self.gradient(p);
        (!fy.is_zero()).then(|| -fx / fy)
    }
}

pub fn potential_wall(g1: &ChargeVector, g2: &ChargeVector) -> Result<PotentialWall> {
    if g1.class().is_collinear(&g2.class()) {
        return Err(Error::NoWall);
    }
    // Re Z = r y + d x + k with k = r + 3d/2 − χ; Im part (d − r x)
    let k = |g: &ChargeVector| q_int(g.r) + q_frac(3 * g.d, 2) - q_int(g.chi);
    let (k1, k2) = (k(g1), k(g2));
    let (r1, d1, r2, d2) = (q_int(g1.r), q_int(g1.d), q_int(g2.r), q_int(g2.d));
    // (d1 − r1 x)(r2 y + d2 x + k2) − (d2 − r2 x)(r1 y + d1 x + k1)
    let c0 = &d1 * &k2 - &d2 * &k1;
    let cx = &d1 * &d2 - &r1 * &k2 - &d2 * &d1 + &r2 * &k1;
    let cy = &d1 * &r2 - &d2 * &r1;
    let cxx = -(&r1 * &d2) + &r2 * &d1;
    let cxy = -(&r1 * &r2) + &r2 * &r1;
    Ok(PotentialWall {
        coeffs: [c0, cx, cy, cxx, cxy],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{m_minus, m_plus, phi, tangency_point};
    use proptest::prelude::*;

    #[test]
    fn euler_form_examples() {
        let a = ChargeVector::new(0, 3, 1);
        assert_eq!(euler_form(&a, &a), -9);
        let o = ChargeVector::new(1, 0, 1);
        assert_eq!(euler_form(&o, &o), 1);
    }

    #[test]
    fn dimensions() {
        assert_eq!(moduli_dimension(&ChargeVector::new(0, 1, 1)).unwrap(), 2);
        assert_eq!(moduli_dimension(&ChargeVector::new(1, 0, 1)).unwrap(), 0);
        assert_eq!(moduli_dimension(&ChargeVector::new(0, 4, 1)).unwrap(), 17);
        assert_eq!(moduli_dimension(&ChargeVector::new(0, 0, 1)).unwrap(), 2);
        assert!(matches!(
            moduli_dimension(&ChargeVector::new(0, 0, 2)),
            Err(Error::NoStableObjects)
        ));
    }

    #[test]
    fn central_charge_examples() {
        let sigma = PointQ::new(q_frac(3, 7), q_int(5));
        let z = central_charge(&ChargeVector::new(0, 0, 1), &sigma);
        assert_eq!((z.re, z.im_coeff), (q_int(-1), q_int(0)));
        for n in -10..=10 {
            let z = central_charge(&ChargeVector::line_bundle(n), &tangency_point(n));
            assert!(z.re.is_zero() && z.im_coeff.is_zero(), "O({n})");
        }
        let z = central_charge(&ChargeVector::new(1, 0, 1), &PointQ::from_ints(0, 1));
        assert_eq!((z.re, z.im_coeff), (q_int(1), q_int(0)));
    }

    #[test]
    fn line_bundles_sit_on_initial_lines() {
        for n in -10..=10 {
            let g = ChargeVector::line_bundle(n);
            let s = tangency_point(n);
            for m in [m_plus(n), m_minus(n)] {
                // Re Z vanishes along s_n + t·m
                let p = s.along(&m, &q_frac(-3, 5));
                assert!(central_charge(&g, &p).re.is_zero());
                assert!(g.class().is_collinear(&m));
            }
        }
    }

    #[test]
    fn probe_examples() {
        let p = probe_point(&ChargeVector::new(0, 1, 1), &q_int(3)).unwrap();
        assert_eq!(p.x, q_frac(-1, 2));
        assert_eq!(p.s(), q_int(3));
        let p = probe_point(&ChargeVector::new(0, 3, 1), &q_int(10)).unwrap();
        assert_eq!(p.x, q_frac(-7, 6));
        let o = ChargeVector::new(1, 0, 1);
        let p = probe_point(&o, &q_int(1)).unwrap();
        assert!(p.y.is_zero() && p.x.is_negative() && p.s() >= q_int(1));
        assert!(on_ray_locus(&o, &p));
        assert!(matches!(
            probe_point(&ChargeVector::new(0, -1, 1), &q_int(1)),
            Err(Error::EmptyRayLocus)
        ));
        let dual = ChargeVector::new(-1, 0, -1);
        let p = probe_point(&dual, &q_int(7)).unwrap();
        assert!(on_ray_locus(&dual, &p) && p.s() >= q_int(7));
    }

    #[test]
    fn potential_wall_examples() {
        let g1 = ChargeVector::new(1, 0, 1);
        let g2 = ChargeVector::new(0, 1, 1);
        let w = potential_wall(&g1, &g2).unwrap();
        let v = potential_wall(&g2, &g1).unwrap();
        for (a, b) in w.coeffs.iter().zip(&v.coeffs) {
            assert_eq!(*a, -b.clone());
        }
        // both charges purely imaginary: x = -1/2 and y = 0
        let p = PointQ::new(q_frac(-1, 2), q_int(0));
        assert!(central_charge(&g2, &p).re.is_zero());
        assert!(central_charge(&g1, &p).re.is_zero());
        assert!(w.eval(&p).is_zero());
        assert_eq!(w.tangent_slope(&p), Some(-p.x.clone()));
        assert!(matches!(
            potential_wall(&g2, &ChargeVector::new(0, 2, 1)),
            Err(Error::NoWall)
        ));
    }

    fn small() -> impl Strategy<Value = i64> {
        -12i64..=12
    }

    fn charge() -> impl Strategy<Value = ChargeVector> {
        (small(), small(), small()).prop_map(|(r, d, c)| ChargeVector::new(r, d, c))
    }

    fn point() -> impl Strategy<Value = PointQ> {
        (-40i64..40, 1i64..9, -40i64..40, 1i64..9)
            .prop_map(|(a, b, c, e)| PointQ::new(q_frac(a, b), q_frac(c, e)))
    }

    proptest! {
        #[test]
        fn skew_part_of_euler_form(g in charge(), h in charge()) {
            prop_assert_eq!(euler_form(&g, &h) - euler_form(&h, &g), 3 * (g.r * h.d - g.d * h.r));
        }

        #[test]
        fn phi_is_twice_the_imaginary_coefficient(g in charge(), p in point()) {
            prop_assert_eq!(phi(&p, &g.class()), central_charge(&g, &p).im_coeff * q_int(2));
        }

        #[test]
        fn real_part_is_affine(g in charge(), p in point(), q in point()) {
            let re = |s: &PointQ| central_charge(&g, s).re;
            let mid = PointQ::new((&p.x + &q.x) / q_int(2), (&p.y + &q.y) / q_int(2));
            prop_assert_eq!(re(&mid) * q_int(2), re(&p) + re(&q));
            let dx = PointQ::new(&p.x + q_int(1), p.y.clone());
            let dy = PointQ::new(p.x.clone(), &p.y + q_int(1));
            prop_assert_eq!(re(&dx) - re(&p), q_int(g.d));
            prop_assert_eq!(re(&dy) - re(&p), q_int(g.r));
        }

        #[test]
        fn twisting_preserves_dimension(g in charge()) {
            prop_assume!(!g.in_gamma0());
            prop_assert_eq!(g.twist().untwist(), g);
            prop_assert_eq!(moduli_dimension(&g.twist()).unwrap(), moduli_dimension(&g).unwrap());
        }

        #[test]
        fn probes_land_on_the_ray_locus(g in charge(), s in 1i64..60) {
            prop_assume!(g.r != 0 || g.d > 0);
            let p = probe_point(&g, &q_int(s)).unwrap();
            prop_assert!(on_ray_locus(&g, &p));
            prop_assert!(p.s() >= q_int(s));
        }
    }
}
