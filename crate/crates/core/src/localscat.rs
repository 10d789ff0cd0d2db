//! Consistent completion at a single point.
//!
//! Ingoing rays of class `m` point along `+m` into the vertex, outgoing
//! rays leave along `−m`. Writing `H = c z^m` for a ray's function, the
//! vertex is consistent when
//!
//! ```text
//!   ∏ exp(H_in)  =  ∏ exp(H_out)
//! ```
//!
//! where the ingoing product puts `m` left of `m'` whenever `⟨m,m'⟩ > 0`
//! and the outgoing product whenever `⟨m,m'⟩ < 0`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::exactalg::{Coeff, Q};
use crate::qtorus::{
    ordered_product, Convention, torus_exp, torus_mul, Grading, LatticeClass, SkewForm, TorusElement,
    TruncationContext,
};

#[derive(Clone, PartialEq, Debug)]
pub struct LocalRay<C> {
    pub class: LatticeClass,
    pub coeff: C,
    pub grade: Q,
}

impl<C: Coeff> LocalRay<C> {
    pub fn new(class: LatticeClass, coeff: C, grading: &Grading) -> Self {
        LocalRay {
            class,
            coeff,
            grade: grading.grade(&class),
        }
    }
}

/// Which side of the vertex a set of rays lives on.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Side {
    Ingoing,
    Outgoing,
}

fn tie_break<C>(x: &LocalRay<C>, y: &LocalRay<C>) -> Ordering {
    x.grade.cmp(&y.grade).then(x.class.cmp(&y.class))
}

/// Sorts rays by the angle of their classes: ingoing rays satisfy
/// `⟨m_a, m_a'⟩ ≤ 0` for `a ≤ a'`, outgoing rays `⟨m_b, m_b'⟩ ≥ 0`.
/// Collinear classes commute and are ordered by `(grade, class)`.
pub fn angular_sort<C: Clone>(rays: &[LocalRay<C>], form: SkewForm, side: Side) -> Vec<LocalRay<C>> {
    let mut v = rays.to_vec();
    v.sort_by(|x, y| {
        let p = form.pair(&x.class, &y.class);
        let by_angle = match side {
            Side::Ingoing => p.cmp(&0),
            Side::Outgoing => 0.cmp(&p),
        };
        by_angle.then_with(|| tie_break(x, y))
    });
    v
}

fn exp_of<C: Coeff>(r: &LocalRay<C>, ctx: &TruncationContext) -> Result<TorusElement<C>> {
    torus_exp(&TorusElement::monomial(ctx, r.class, r.coeff.clone()), ctx)
}

/// `∏ exp(H_in)`, left factor first.
pub fn ingoing_product<C: Coeff>(
    rays: &[LocalRay<C>],
    ctx: &TruncationContext,
) -> Result<TorusElement<C>> {
    let sorted = angular_sort(rays, ctx.form(), Side::Ingoing);
    let factors = sorted
        .iter()
        .rev()
        .map(|r| exp_of(r, ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_product(&factors, ctx))
}

/// `∏ exp(H_out)`, left factor first.
pub fn outgoing_product<C: Coeff>(
    rays: &[LocalRay<C>],
    ctx: &TruncationContext,
) -> Result<TorusElement<C>> {
    let sorted = angular_sort(rays, ctx.form(), Side::Outgoing);
    let factors = sorted
        .iter()
        .rev()
        .map(|r| exp_of(r, ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_product(&factors, ctx))
}

/// Inverse of the outgoing product, as the reversed product of `exp(−H)`.
fn outgoing_inverse<C: Coeff>(
    rays: &[LocalRay<C>],
    ctx: &TruncationContext,
) -> Result<TorusElement<C>> {
    let sorted = angular_sort(rays, ctx.form(), Side::Outgoing);
    let factors = sorted
        .iter()
        .map(|r| {
            torus_exp(
                &TorusElement::monomial(ctx, r.class, r.coeff.neg()),
                ctx,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ordered_product(&factors, ctx))
}

/// Truncation context generated by the ingoing classes at a point.
pub fn vertex_context<C>(
    form: SkewForm,
    grading: Grading,
    cap: Q,
    ingoing: &[LocalRay<C>],
) -> Result<TruncationContext> {
    vertex_context_with(form, Convention::Minus, grading, cap, ingoing)
}

pub fn vertex_context_with<C>(
    form: SkewForm,
    convention: Convention,
    grading: Grading,
    cap: Q,
    ingoing: &[LocalRay<C>],
) -> Result<TruncationContext> {
    let gens: Vec<LatticeClass> = ingoing.iter().map(|r| r.class).collect();
    TruncationContext::with_convention(form, convention, grading, cap, &gens)
}

fn merge_by_class<C: Coeff>(rays: &[LocalRay<C>]) -> BTreeMap<LatticeClass, (C, Q)> {
    let mut out: BTreeMap<LatticeClass, (C, Q)> = BTreeMap::new();
    for r in rays {
        match out.get_mut(&r.class) {
            Some((c, _)) => *c = c.add(&r.coeff),
            None => {
                out.insert(r.class, (r.coeff.clone(), r.grade.clone()));
            }
        }
    }
    out
}

fn to_rays<C: Coeff>(m: &BTreeMap<LatticeClass, (C, Q)>) -> Vec<LocalRay<C>> {
    m.iter()
        .filter(|(_, (c, _))| !c.is_zero())
        .map(|(k, (c, g))| LocalRay {
            class: *k,
            coeff: c.clone(),
            grade: g.clone(),
        })
        .collect()
}

/// Solves for the outgoing rays, grade by grade. The result is sorted by
/// class and contains no zero coefficients.
pub fn complete_vertex<C: Coeff>(
    ingoing: &[LocalRay<C>],
    ctx: &TruncationContext,
) -> Result<Vec<LocalRay<C>>> {
    let one = Q::from_integer(1.into());
    for r in ingoing {
        if r.grade < one {
            return Err(Error::HypothesisViolated(format!(
                "ingoing class {} has grade {} < 1",
                r.class, r.grade
            )));
        }
    }
    let ingoing: Vec<LocalRay<C>> = ingoing
        .iter()
        .filter(|r| ctx.contains(&r.class))
        .cloned()
        .collect();
    let p_in = ingoing_product(&ingoing, ctx)?;
    let mut out = merge_by_class(&ingoing);
    let mut last: Option<Q> = None;
    loop {
        let rays = to_rays(&out);
        let defect = torus_mul(&outgoing_inverse(&rays, ctx)?, &p_in, ctx);
        if defect.is_one() {
            return Ok(rays);
        }
        if defect.unit_coeff() != C::one() {
            return Err(Error::UnitNotOne);
        }
        let g = defect
            .min_positive_grade(ctx)
            .expect("nonunit defect has a positive-grade term")
            .clone();
        if last.as_ref().is_some_and(|l| g <= *l) {
            return Err(Error::NonCausalDefect(g.to_string()));
        }
        for (m, c) in defect.graded_part(ctx, &g).terms(ctx) {
            if m.is_zero() {
                continue;
            }
            match out.get_mut(&m) {
                Some((old, _)) => *old = old.add(c),
                None => {
                    out.insert(m, (c.clone(), g.clone()));
                }
            }
        }
        last = Some(g);
    }
}

/// True iff the ingoing and outgoing products agree exactly.
pub fn loop_check<C: Coeff>(
    ingoing: &[LocalRay<C>],
    outgoing: &[LocalRay<C>],
    ctx: &TruncationContext,
) -> bool {
    let keep = |rs: &[LocalRay<C>]| -> Vec<LocalRay<C>> {
        rs.iter().filter(|r| ctx.contains(&r.class)).cloned().collect()
    };
    match (
        ingoing_product(&keep(ingoing), ctx),
        outgoing_product(&keep(outgoing), ctx),
    ) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

/// True when every class of `rays` has positive grade.
pub fn all_positive<C>(rays: &[LocalRay<C>]) -> bool {
    rays.iter().all(|r| r.grade.is_positive())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{q_int, HalfLaurent, RatFuncQ};
    use crate::qtorus::sum_grading;

    fn ray(a: i64, b: i64, c: RatFuncQ, g: &Grading) -> LocalRay<RatFuncQ> {
        LocalRay::new(LatticeClass::new(a, b), c, g)
    }

    #[test]
    fn angular_sort_sign_example() {
        let g = Grading::new(q_int(-1), q_int(-2));
        let rays = vec![
            ray(1, -1, RatFuncQ::one(), &g),
            ray(-1, 0, RatFuncQ::one(), &g),
        ];
        let s = angular_sort(&rays, SkewForm::P2, Side::Ingoing);
        assert_eq!(s[0].class, LatticeClass::new(-1, 0));
        assert_eq!(angular_sort(&rays[..1], SkewForm::P2, Side::Ingoing).len(), 1);
    }

    #[test]
    fn single_ray_passes_through() {
        let g = sum_grading();
        let r = ray(1, 0, RatFuncQ::initial_wall(1), &g);
        let ctx = vertex_context(SkewForm::P2, g, q_int(5), std::slice::from_ref(&r)).unwrap();
        let out = complete_vertex(std::slice::from_ref(&r), &ctx).unwrap();
        assert_eq!(out, vec![r]);
    }

    #[test]
    fn first_vertex_of_the_plane() {
        // φ at (-1/2, 0) is (a, b) ↦ a - 2b
        let g = Grading::new(q_int(1), q_int(-2));
        let ins = vec![
            ray(-1, -1, RatFuncQ::initial_wall(1), &g),
            ray(1, 0, RatFuncQ::initial_wall(1), &g),
        ];
        let ctx = vertex_context(SkewForm::P2, g, q_int(2), &ins).unwrap();
        let out = complete_vertex(&ins, &ctx).unwrap();
        let new: Vec<_> = out.iter().filter(|r| r.class == LatticeClass::new(0, -1)).collect();
        assert_eq!(new.len(), 1);
        let want = RatFuncQ::new(
            -HalfLaurent::from_q_poly(&[1, 1, 1]).shift(-2),
            RatFuncQ::quantum_ell(1),
        )
        .unwrap();
        assert_eq!(new[0].coeff, want);
        assert_eq!(out.len(), 3);
        assert!(loop_check(&ins, &out, &ctx));
    }

    #[test]
    fn loop_check_detects_perturbation() {
        let g = Grading::new(q_int(1), q_int(-2));
        let ins = vec![
            ray(-1, -1, RatFuncQ::initial_wall(1), &g),
            ray(1, 0, RatFuncQ::initial_wall(1), &g),
        ];
        let ctx = vertex_context(SkewForm::P2, g, q_int(3), &ins).unwrap();
        let mut out = complete_vertex(&ins, &ctx).unwrap();
        assert!(loop_check(&ins, &out, &ctx));
        out[0].coeff = &out[0].coeff + &RatFuncQ::one();
        assert!(!loop_check(&ins, &out, &ctx));
        assert!(loop_check::<RatFuncQ>(&[], &[], &ctx));
    }

    #[test]
    fn low_grade_input_is_rejected() {
        let g = Grading::new(q_int(1), q_int(0));
        let r = LocalRay {
            class: LatticeClass::new(1, 0),
            coeff: RatFuncQ::one(),
            grade: crate::exactalg::q_frac(1, 2),
        };
        let ctx = vertex_context(SkewForm::P2, g, q_int(2), std::slice::from_ref(&r)).unwrap();
        assert!(matches!(
            complete_vertex(&[r], &ctx),
            Err(Error::HypothesisViolated(_))
        ));
    }
}
