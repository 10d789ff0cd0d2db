//! Deterministic SVG rendering of a diagram. Geometry stays exact until the
//! final affine map to the viewport, where coordinates are rounded to three
//! decimals.

use std::fmt::Write;

use num_traits::{ToPrimitive, Zero};
use p2scatter::diagram::{phi, Diagram, Extent, Ray};
use p2scatter::exactalg::{Coeff, Q};

fn f(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Parameter interval `[t0, t1]` of the ray support inside the region, if
/// it is non-degenerate.
fn clip<C>(ray: &Ray<C>, xmin: f64, xmax: f64, smax: f64) -> Option<(f64, f64)> {
    let (x0, y0) = (f(&ray.init.x), f(&ray.init.y));
    let (a, b) = (ray.class.a as f64, ray.class.b as f64);
    let mut lo = 0.0f64;
    let mut hi = match &ray.extent {
        Extent::Unbounded => f64::INFINITY,
        Extent::Bounded(t) => f(t),
    };
    // x(t) = x0 − t·a
    if a == 0.0 {
        if x0 < xmin || x0 > xmax {
            return None;
        }
    } else {
        let (t1, t2) = ((x0 - xmin) / a, (x0 - xmax) / a);
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    // s(t) = a²t² − 2(a·x0 + b)t + s0 ≤ smax
    let (qa, qb, qc) = (a * a, -2.0 * (a * x0 + b), x0 * x0 + 2.0 * y0 - smax);
    if qa == 0.0 {
        if qb == 0.0 {
            if qc > 0.0 {
                return None;
            }
        } else if qb > 0.0 {
            hi = hi.min(-qc / qb);
        } else {
            lo = lo.max(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return None;
        }
        let r = disc.sqrt();
        lo = lo.max((-qb - r) / (2.0 * qa));
        hi = hi.min((-qb + r) / (2.0 * qa));
    }
    (hi - lo > 1e-12).then_some((lo, hi))
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// A fixed colour per primitive direction.
fn colour(a: i64, b: i64) -> String {
    let g = gcd(a, b).max(1);
    let (pa, pb) = (a / g, b / g);
    let hue = (pa * 47 + pb * 113).rem_euclid(360);
    format!("hsl({hue},70%,40%)")
}

/// Stroke width shrinks as the grade `φ` at the initial point grows.
fn width<C>(ray: &Ray<C>) -> f64 {
    let grade = f(&phi(&ray.init, &ray.class)).max(0.0);
    (2.4 / (1.0 + grade)).max(0.3)
}

pub fn render<C: Coeff>(d: &Diagram<C>, scale: &Q) -> String {
    let reg = &d.config.region;
    let (xmin, xmax, smax) = (f(&reg.xmin), f(&reg.xmax), f(&reg.smax));
    let k = f(scale);
    let pad = 10.0;
    let xpeak = if xmin <= 0.0 && xmax >= 0.0 { 0.0 } else if xmax < 0.0 { xmax } else { xmin };
    let ytop = (smax - xpeak * xpeak) / 2.0;
    let ybot = -(xmin * xmin).max(xmax * xmax) / 2.0;
    let w = (xmax - xmin) * k + 2.0 * pad;
    let h = (ytop - ybot) * k + 2.0 * pad;
    let px = |x: f64| (x - xmin) * k + pad;
    let py = |y: f64| (ytop - y) * k + pad;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // boundary parabola and the upper edge of the region
    let steps = 200;
    for (id, offset, style) in [
        ("boundary", 0.0, r#"stroke="black" stroke-width="1""#),
        ("region-edge", smax, r#"stroke="gray" stroke-width="0.5" stroke-dasharray="4 3""#),
    ] {
        let mut pts = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let x = xmin + (xmax - xmin) * i as f64 / steps as f64;
            pts.push(format!("{:.3},{:.3}", px(x), py((offset - x * x) / 2.0)));
        }
        let _ = writeln!(s, r#"<polyline id="{id}" fill="none" {style} points="{}"/>"#, pts.join(" "));
    }

    for ray in &d.rays {
        let Some((t0, t1)) = clip(ray, xmin, xmax, smax) else {
            continue;
        };
        let (x0, y0) = (f(&ray.init.x), f(&ray.init.y));
        let (a, b) = (ray.class.a as f64, ray.class.b as f64);
        let (xa, ya) = (x0 - t0 * a, y0 - t0 * b);
        let (xb, yb) = (x0 - t1 * a, y0 - t1 * b);
        // initial segments start on the boundary parabola
        let kind = if ray.init.s().is_zero() { "initial" } else { "ray" };
        let _ = writeln!(
            s,
            r#"<line class="{kind}" data-class="{},{}" data-init="{},{}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="{}" stroke-width="{:.3}"/>"#,
            ray.class.a,
            ray.class.b,
            ray.init.x,
            ray.init.y,
            px(xa),
            py(ya),
            px(xb),
            py(yb),
            colour(ray.class.a, ray.class.b),
            width(ray),
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use p2scatter::diagram::{PointQ, Region};
    use p2scatter::exactalg::{q_frac, q_int};
    use p2scatter::qtorus::LatticeClass;
    use p2scatter::exactalg::RatFuncQ;

    fn ray(x: Q, y: Q, a: i64, b: i64, extent: Extent) -> Ray<RatFuncQ> {
        Ray {
            init: PointQ::new(x, y),
            class: LatticeClass::new(a, b),
            function: RatFuncQ::initial_wall(1),
            extent,
        }
    }

    #[test]
    fn clip_vertical_ray() {
        // class (0,-1) from (1/2, -1/8) goes up until x² + 2y = 4
        let r = ray(q_frac(1, 2), q_frac(-1, 8), 0, -1, Extent::Unbounded);
        let (t0, t1) = clip(&r, -1.5, 1.5, 4.0).unwrap();
        assert_eq!(t0, 0.0);
        assert!((t1 - 2.0).abs() < 1e-9);
        assert!(clip(&r, 1.0, 2.0, 4.0).is_none());
    }

    #[test]
    fn colour_depends_on_direction_only() {
        assert_eq!(colour(2, -4), colour(1, -2));
        assert_ne!(colour(1, -2), colour(1, -1));
    }

    #[test]
    fn render_is_deterministic() {
        let d = Diagram {
            rays: vec![ray(q_int(0), q_int(0), -1, 0, Extent::Bounded(q_frac(1, 2)))],
            config: p2scatter::diagram::DiagramConfig::new(
                Region::new(q_int(-1), q_int(1), q_int(2)),
                q_int(1),
            ),
            vertex_log: vec![],
        };
        let a = render(&d, &q_int(100));
        assert_eq!(a, render(&d, &q_int(100)));
        assert!(a.contains(r#"data-class="-1,0""#));
    }
}
