//! Global scattering on `U = {x² + 2y > 0}`.
//!
//! A ray of class `m` starting at `σ₀` has support `σ₀ − t·m`. Along it,
//! `x² + 2y` strictly increases, which makes a sweep in that quantity
//! causal: when a point is reached, every ray that can arrive there is
//! already known.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exactalg::{q_frac, q_int, Coeff, RatFuncQ, Q};
use crate::localscat::{complete_vertex, loop_check, vertex_context_with, LocalRay};
use crate::qtorus::{Convention, Grading, LatticeClass, SkewForm};

/// A point `σ = (x, y)` with exact coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PointQ {
    pub x: Q,
    pub y: Q,
}

impl PointQ {
    pub fn new(x: Q, y: Q) -> Self {
        PointQ { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        PointQ::new(q_int(x), q_int(y))
    }

    /// `x² + 2y`.
    pub fn s(&self) -> Q {
        &self.x * &self.x + &self.y * q_int(2)
    }

    pub fn in_u(&self) -> bool {
        self.s().is_positive()
    }

    /// `self − t·m`.
    pub fn along(&self, m: &LatticeClass, t: &Q) -> PointQ {
        PointQ::new(
            &self.x - t * q_int(m.a),
            &self.y - t * q_int(m.b),
        )
    }

    fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.x), to_f64(&self.y))
    }
}

impl fmt::Display for PointQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `φ_σ(a, b) = 2(−a·x − b)`.
pub fn phi(sigma: &PointQ, m: &LatticeClass) -> Q {
    (-(&sigma.x * q_int(m.a)) - q_int(m.b)) * q_int(2)
}

/// The grading `m ↦ φ_σ(m)` at a point.
pub fn grading_at(sigma: &PointQ) -> Grading {
    Grading::new(-(&sigma.x * q_int(2)), q_int(-2))
}

/// The `n`-th tangency point `s_n = (n, −n²/2)`.
pub fn tangency_point(n: i64) -> PointQ {
    PointQ::new(q_int(n), q_frac(-n * n, 2))
}

/// `m_n^+ = (−1, n)`.
pub fn m_plus(n: i64) -> LatticeClass {
    LatticeClass::new(-1, n)
}

/// `m_n^- = (1, −n)`.
pub fn m_minus(n: i64) -> LatticeClass {
    LatticeClass::new(1, -n)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Extent {
    Unbounded,
    /// Support `init − [0, T]·m`.
    Bounded(Q),
}

#[derive(Clone, PartialEq, Debug)]
pub struct Ray<C> {
    pub init: PointQ,
    pub class: LatticeClass,
    pub function: C,
    pub extent: Extent,
}

impl<C> Ray<C> {
    /// The parameter `t` with `p = init − t·m`, if `p` is on the line.
    pub fn param_of(&self, p: &PointQ) -> Option<Q> {
        param_on_line(&self.init, &self.class, p)
    }

    pub fn end_point(&self) -> Option<PointQ> {
        match &self.extent {
            Extent::Unbounded => None,
            Extent::Bounded(t) => Some(self.init.along(&self.class, t)),
        }
    }

    /// True when `p` lies on the support with `0 < t < T`.
    pub fn contains_interior(&self, p: &PointQ) -> bool {
        match self.param_of(p) {
            Some(t) => {
                t.is_positive()
                    && match &self.extent {
                        Extent::Unbounded => true,
                        Extent::Bounded(big) => t < *big,
                    }
            }
            None => false,
        }
    }
}

fn param_on_line(init: &PointQ, m: &LatticeClass, p: &PointQ) -> Option<Q> {
    let dx = &init.x - &p.x;
    let dy = &init.y - &p.y;
    // need (dx, dy) = t·(a, b)
    if &dx * q_int(m.b) != &dy * q_int(m.a) {
        return None;
    }
    Some(if m.a != 0 { dx / q_int(m.a) } else { dy / q_int(m.b) })
}

/// The part of `U` where the diagram is computed: `x ∈ [xmin, xmax]` and
/// `x² + 2y ≤ smax`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Region {
    pub xmin: Q,
    pub xmax: Q,
    pub smax: Q,
}

impl Region {
    pub fn new(xmin: Q, xmax: Q, smax: Q) -> Self {
        Region { xmin, xmax, smax }
    }

    pub fn contains(&self, p: &PointQ) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.s() <= self.smax
    }

    /// Integer range of tangency points whose initial rays can matter.
    pub fn tangency_range(&self) -> (i64, i64) {
        let lo = floor(&self.xmin) - 1;
        let hi = ceil(&self.xmax) + 1;
        (lo, hi)
    }
}

pub(crate) fn floor(q: &Q) -> i64 {
    q.floor().to_integer().to_i64().expect("coordinate fits in i64")
}

pub(crate) fn ceil(q: &Q) -> i64 {
    q.ceil().to_integer().to_i64().expect("coordinate fits in i64")
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct VertexRecord {
    pub point: PointQ,
    pub ingoing: Vec<LatticeClass>,
    pub outgoing: Vec<LatticeClass>,
    pub loop_ok: bool,
}

/// Settings shared by the initial diagram and the sweep.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DiagramConfig {
    pub region: Region,
    pub order_cap: Q,
    pub convention: Convention,
    /// Re-run the loop check at every vertex and fail hard on a mismatch.
    pub verify_vertices: bool,
}

impl DiagramConfig {
    pub fn new(region: Region, order_cap: Q) -> Self {
        DiagramConfig {
            region,
            order_cap,
            convention: Convention::Minus,
            verify_vertices: true,
        }
    }

    /// Marker degree bound: every initial unit carries grade at least one.
    pub fn degree_cap(&self) -> u32 {
        floor(&self.order_cap).max(0) as u32
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Diagram<C> {
    pub rays: Vec<Ray<C>>,
    pub config: DiagramConfig,
    pub vertex_log: Vec<VertexRecord>,
}

/// Initial wall function of multiplicity `ell` in the given convention.
pub fn initial_function(ell: u32, convention: Convention) -> RatFuncQ {
    let f = RatFuncQ::initial_wall(ell);
    match convention {
        Convention::Minus => f,
        // (-1)^{ℓ-1}/ℓ / (q^{ℓ/2} - q^{-ℓ/2})
        Convention::Plus if ell.is_multiple_of(2) => f,
        Convention::Plus => -f,
    }
}

/// The initial diagram: for every `n` and `1 ≤ ℓ ≤ ℓ_max`, rays of class
/// `ℓ·m_n^±` on the two half-segments `s_n − [0, ½]·m_n^±`.
pub fn initial_diagram<C: Coeff>(
    n_min: i64,
    n_max: i64,
    ell_max: u32,
    config: &DiagramConfig,
) -> Result<Diagram<C>> {
    if n_min > n_max || ell_max == 0 {
        return Err(Error::Invalid(format!(
            "initial diagram needs n_min ≤ n_max and ℓ_max ≥ 1, got {n_min}..{n_max}, {ell_max}"
        )));
    }
    let cap = config.degree_cap();
    let mut rays = Vec::new();
    for n in n_min..=n_max {
        for ell in 1..=ell_max {
            let f = initial_function(ell, config.convention);
            for m in [m_plus(n), m_minus(n)] {
                rays.push(Ray {
                    init: tangency_point(n),
                    class: m.scaled(ell as i64),
                    function: C::initial(f.clone(), n, ell, cap),
                    extent: Extent::Bounded(q_frac(1, 2 * ell as i64)),
                });
            }
        }
    }
    sort_rays(&mut rays);
    Ok(Diagram {
        rays,
        config: config.clone(),
        vertex_log: Vec::new(),
    })
}

/// Default `ℓ_max = ⌈order_cap⌉`, at least one.
pub fn default_ell_max(order_cap: &Q) -> u32 {
    ceil(order_cap).max(1) as u32
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Clone, Debug)]
struct Piece<C> {
    init: PointQ,
    class: LatticeClass,
    function: C,
    t_end: Q,
    /// Bounding box `(xmin, ymin, xmax, ymax)` in floating point, used only
    /// to discard pairs that clearly do not meet.
    bbox: [f64; 4],
    end_s: f64,
    unbounded: bool,
}

impl<C> Piece<C> {
    fn new(init: PointQ, class: LatticeClass, function: C, t_end: Q, unbounded: bool) -> Self {
        let end = init.along(&class, &t_end);
        let (x0, y0) = init.to_f64();
        let (x1, y1) = end.to_f64();
        let pad = 1e-9 * (1.0 + x0.abs() + y0.abs() + x1.abs() + y1.abs());
        Piece {
            bbox: [
                x0.min(x1) - pad,
                y0.min(y1) - pad,
                x0.max(x1) + pad,
                y0.max(y1) + pad,
            ],
            end_s: to_f64(&end.s()),
            init,
            class,
            function,
            t_end,
            unbounded,
        }
    }

    fn to_ray(&self, t: Q) -> Ray<C>
    where
        C: Clone,
    {
        Ray {
            init: self.init.clone(),
            class: self.class,
            function: self.function.clone(),
            extent: if self.unbounded && t == self.t_end {
                Extent::Unbounded
            } else {
                Extent::Bounded(t)
            },
        }
    }
}

fn boxes_overlap(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

/// Exact intersection of two non-collinear pieces, with parameters
/// `(t_p, t_q)`.
fn intersect<C>(p: &Piece<C>, q: &Piece<C>) -> Option<(PointQ, Q, Q)> {
    let (mp, mq) = (&p.class, &q.class);
    let det = mq.a * mp.b - mp.a * mq.b;
    if det == 0 {
        return None;
    }
    let dx = &p.init.x - &q.init.x;
    let dy = &p.init.y - &q.init.y;
    let det = q_int(det);
    let t = (-(&dx * q_int(mq.b)) + &dy * q_int(mq.a)) / &det;
    let u = (&dy * q_int(mp.a) - &dx * q_int(mp.b)) / &det;
    Some((p.init.along(mp, &t), t, u))
}

/// Rational upper bound of the positive root of `A t² + B t − C`,
/// `A, B, C > 0`.
fn quadratic_root_upper(a: &Q, b: &Q, c: &Q) -> Q {
    let (af, bf, cf) = (to_f64(a), to_f64(b), to_f64(c));
    let disc = (bf * bf + 4.0 * af * cf).sqrt();
    // the stable form of the root
    let root = 2.0 * cf / (bf + disc);
    let scale = 1u64 << 20;
    let mut num = (root * scale as f64).ceil() as i64 + 1;
    let value = |num: i64| Q::new(BigInt::from(num), BigInt::from(scale));
    loop {
        let t = value(num);
        if a * &t * &t + b * &t >= *c {
            return t;
        }
        num = num * 2 + 1;
    }
}

/// Largest `T` keeping `σ − [0, T]·m` inside the region with grade at most
/// `cap`, or `None` when nothing remains.
fn clip_extent(start: &PointQ, m: &LatticeClass, region: &Region, cap: &Q) -> Option<Q> {
    let phi0 = phi(start, m);
    if !phi0.is_positive() || phi0 > *cap {
        return None;
    }
    let s0 = start.s();
    if s0 >= region.smax {
        return None;
    }
    let a2 = q_int(m.a * m.a);
    let mut t = if m.a == 0 {
        (&region.smax - &s0) / &phi0
    } else {
        quadratic_root_upper(&a2, &phi0, &(&region.smax - &s0))
    };
    if m.a != 0 {
        let t_phi = (cap - &phi0) / (&a2 * q_int(2));
        t = t.min(t_phi);
        let t_x = if m.a > 0 {
            (&start.x - &region.xmin) / q_int(m.a)
        } else {
            (&region.xmax - &start.x) / q_int(-m.a)
        };
        t = t.min(t_x);
    }
    t.is_positive().then_some(t)
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
struct EventKey {
    s: Q,
    x: Q,
    y: Q,
}

impl EventKey {
    fn of(p: &PointQ) -> Self {
        EventKey {
            s: p.s(),
            x: p.x.clone(),
            y: p.y.clone(),
        }
    }

    fn point(&self) -> PointQ {
        PointQ::new(self.x.clone(), self.y.clone())
    }
}

struct Sweep<C> {
    config: DiagramConfig,
    active: BTreeMap<usize, Piece<C>>,
    finished: Vec<Ray<C>>,
    events: BTreeMap<EventKey, BTreeSet<usize>>,
    next_line: usize,
    log: Vec<VertexRecord>,
}

impl<C: Coeff> Sweep<C> {
    fn add_event(&mut self, p: PointQ, l1: usize, l2: usize) {
        let e = self.events.entry(EventKey::of(&p)).or_default();
        e.insert(l1);
        e.insert(l2);
    }

    /// Registers the future crossings of the piece on `line` with every
    /// other active piece.
    fn register(&mut self, line: usize, current_s: f64) {
        let piece = &self.active[&line];
        let mut found = Vec::new();
        for (other, q) in &self.active {
            if *other == line || q.class.is_collinear(&piece.class) {
                continue;
            }
            if q.end_s < current_s - 1e-9 || !boxes_overlap(&piece.bbox, &q.bbox) {
                continue;
            }
            if let Some((pt, t, u)) = intersect(piece, q) {
                if t.is_positive() && t <= piece.t_end && !u.is_negative() && u <= q.t_end {
                    found.push((pt, *other));
                }
            }
        }
        for (pt, other) in found {
            self.add_event(pt, line, other);
        }
    }

    fn new_line(&mut self) -> usize {
        self.next_line += 1;
        self.next_line - 1
    }

    fn finish(&mut self, line: usize, t: Q) {
        if let Some(p) = self.active.remove(&line) {
            if t.is_positive() {
                self.finished.push(p.to_ray(t));
            }
        }
    }

    fn prune(&mut self, current_s: &Q) {
        let cs = to_f64(current_s);
        let stale: Vec<usize> = self
            .active
            .iter()
            .filter(|(_, p)| p.end_s < cs - 1e-6)
            .map(|(l, _)| *l)
            .collect();
        for l in stale {
            let p = self.active.remove(&l).unwrap();
            self.finished.push(p.to_ray(p.t_end.clone()));
        }
    }

    fn process(&mut self, key: EventKey, lines: BTreeSet<usize>) -> Result<()> {
        let point = key.point();
        if !self.config.region.contains(&point) || !key.s.is_positive() {
            return Ok(());
        }
        let cap = self.config.order_cap.clone();
        let grading = grading_at(&point);
        let one = Q::one();

        // (line, t, ending)
        let mut ingoing: Vec<(usize, Q, bool)> = Vec::new();
        let mut seeds: Vec<usize> = Vec::new();
        for l in &lines {
            let Some(p) = self.active.get(l) else { continue };
            let Some(t) = param_on_line(&p.init, &p.class, &point) else { continue };
            if t.is_zero() {
                seeds.push(*l);
            } else if t.is_positive() && t <= p.t_end {
                let ending = t == p.t_end;
                ingoing.push((*l, t, ending));
            }
        }
        let mut local = Vec::new();
        let mut in_support = Vec::new();
        for (l, t, ending) in &ingoing {
            let p = &self.active[l];
            let g = grading.grade(&p.class);
            if g > cap {
                continue;
            }
            if g < one {
                return Err(Error::HypothesisViolated(format!(
                    "class {} arrives at {} with grade {}",
                    p.class, point, g
                )));
            }
            local.push(LocalRay {
                class: p.class,
                coeff: p.function.clone(),
                grade: g,
            });
            in_support.push((*l, t.clone(), *ending));
        }
        if local.is_empty() {
            return Ok(());
        }
        let ctx = vertex_context_with(
            SkewForm::P2,
            self.config.convention,
            grading.clone(),
            cap.clone(),
            &local,
        )?;
        let out = complete_vertex(&local, &ctx)?;
        let loop_ok = !self.config.verify_vertices || loop_check(&local, &out, &ctx);
        if !loop_ok {
            return Err(Error::LoopCheckFailed(point.to_string()));
        }
        self.log.push(VertexRecord {
            point: point.clone(),
            ingoing: local.iter().map(|r| r.class).collect(),
            outgoing: out.iter().map(|r| r.class).collect(),
            loop_ok,
        });

        let mut targets: BTreeMap<LatticeClass, C> =
            out.into_iter().map(|r| (r.class, r.coeff)).collect();
        let seed_classes: BTreeSet<LatticeClass> =
            seeds.iter().map(|l| self.active[l].class).collect();
        let current_s = to_f64(&key.s);

        for l in seeds {
            let class = self.active[&l].class;
            match targets.remove(&class) {
                Some(f) => self.active.get_mut(&l).unwrap().function = f,
                None => {
                    self.active.remove(&l);
                }
            }
        }
        for (l, t, ending) in in_support {
            let p = self.active[&l].clone();
            let target = targets.remove(&p.class);
            if seed_classes.contains(&p.class) {
                // an input ray already continues this class
                self.finish(l, t);
                continue;
            }
            if !ending {
                if target.as_ref() == Some(&p.function) {
                    continue;
                }
                self.finish(l, t.clone());
                if let Some(f) = target {
                    let rest = &p.t_end - &t;
                    let piece = Piece::new(point.clone(), p.class, f, rest, p.unbounded);
                    self.active.insert(l, piece);
                }
            } else {
                self.finish(l, t);
                if let Some(f) = target {
                    if let Some(te) = clip_extent(&point, &p.class, &self.config.region, &cap) {
                        self.active
                            .insert(l, Piece::new(point.clone(), p.class, f, te, false));
                        self.register(l, current_s);
                    }
                }
            }
        }
        for (class, f) in targets {
            if let Some(te) = clip_extent(&point, &class, &self.config.region, &cap) {
                let l = self.new_line();
                self.active
                    .insert(l, Piece::new(point.clone(), class, f, te, false));
                self.register(l, current_s);
            }
        }
        Ok(())
    }
}

/// Completes `d` inside its region up to its order cap.
pub fn scatter<C: Coeff>(d: &Diagram<C>) -> Result<Diagram<C>> {
    let config = d.config.clone();
    let mut sweep = Sweep {
        config: config.clone(),
        active: BTreeMap::new(),
        finished: Vec::new(),
        events: BTreeMap::new(),
        next_line: 0,
        log: Vec::new(),
    };
    for ray in &d.rays {
        let (t_end, unbounded) = match &ray.extent {
            Extent::Bounded(t) => (t.clone(), false),
            Extent::Unbounded => {
                // clip to the region, keeping rays that leave it entirely
                let big = clip_extent(&ray.init, &ray.class, &config.region, &config.order_cap);
                match big {
                    Some(t) => (t, true),
                    None => {
                        sweep.finished.push(ray.clone());
                        continue;
                    }
                }
            }
        };
        let l = sweep.new_line();
        sweep
            .active
            .insert(l, Piece::new(ray.init.clone(), ray.class, ray.function.clone(), t_end, unbounded));
    }
    // pairwise crossings of the input, including crossings at a start point
    let lines: Vec<usize> = sweep.active.keys().copied().collect();
    let mut found = Vec::new();
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            let (p, q) = (&sweep.active[a], &sweep.active[b]);
            if p.class.is_collinear(&q.class) || !boxes_overlap(&p.bbox, &q.bbox) {
                continue;
            }
            if let Some((pt, t, u)) = intersect(p, q) {
                let ok = !t.is_negative() && t <= p.t_end && !u.is_negative() && u <= q.t_end;
                if ok && !(t.is_zero() && u.is_zero()) {
                    found.push((pt, *a, *b));
                }
            }
        }
    }
    for (pt, a, b) in found {
        sweep.add_event(pt, a, b);
    }

    let mut processed = 0usize;
    while let Some((key, lines)) = sweep.events.pop_first() {
        let s = key.s.clone();
        sweep.process(key, lines)?;
        processed += 1;
        if processed.is_multiple_of(256) {
            sweep.prune(&s);
        }
    }
    let remaining: Vec<usize> = sweep.active.keys().copied().collect();
    for l in remaining {
        let p = sweep.active.remove(&l).unwrap();
        sweep.finished.push(p.to_ray(p.t_end.clone()));
    }
    let mut rays = sweep.finished;
    sort_rays(&mut rays);
    Ok(Diagram {
        rays,
        config,
        vertex_log: sweep.log,
    })
}

fn ray_key<C>(r: &Ray<C>) -> (Q, Q, Q, LatticeClass) {
    (r.init.s(), r.init.x.clone(), r.init.y.clone(), r.class)
}

/// Deterministic order: by `(x² + 2y, x, y)` of the initial point, then class.
pub fn sort_rays<C>(rays: &mut [Ray<C>]) {
    rays.sort_by_cached_key(ray_key);
}

// ---------------------------------------------------------------------------
// read-out and symmetries

/// Function of the ray of class `m` whose support contains `σ` in its
/// interior; zero when there is none.
pub fn function_at<C: Coeff>(d: &Diagram<C>, sigma: &PointQ, m: &LatticeClass) -> Result<C> {
    let mut found: Option<C> = None;
    for r in d.rays.iter().filter(|r| r.class == *m) {
        let Some(t) = r.param_of(sigma) else { continue };
        if t.is_negative() {
            continue;
        }
        let inside_end = match &r.extent {
            Extent::Unbounded => true,
            Extent::Bounded(big) => t <= *big,
        };
        if !inside_end {
            continue;
        }
        if t.is_zero() || r.extent == Extent::Bounded(t.clone()) {
            return Err(Error::ProbeOnSingularPoint);
        }
        if found.is_some() {
            return Err(Error::Invalid(format!("two rays of class {m} through {sigma}")));
        }
        found = Some(r.function.clone());
    }
    Ok(found.unwrap_or_else(C::zero))
}

/// `ψ(1)^k`: `(x, y) ↦ (x + k, y − kx − k²/2)`, classes `(a, b) ↦ (a, b − ka)`,
/// marker indices `n ↦ n + k`.
pub fn psi_translate<C: Coeff>(d: &Diagram<C>, k: i64) -> Diagram<C> {
    let kq = q_int(k);
    let half_k2 = q_frac(k * k, 2);
    let pt = |p: &PointQ| PointQ::new(&p.x + &kq, &p.y - &kq * &p.x - &half_k2);
    let cl = |m: &LatticeClass| LatticeClass::new(m.a, m.b - k * m.a);
    let shift = move |n: i64| n + k;
    let mut rays: Vec<Ray<C>> = d
        .rays
        .iter()
        .map(|r| Ray {
            init: pt(&r.init),
            class: cl(&r.class),
            function: r.function.relabel_markers(&shift),
            extent: r.extent.clone(),
        })
        .collect();
    sort_rays(&mut rays);
    let mut config = d.config.clone();
    config.region.xmin += &kq;
    config.region.xmax += &kq;
    Diagram {
        rays,
        config,
        vertex_log: d
            .vertex_log
            .iter()
            .map(|v| VertexRecord {
                point: pt(&v.point),
                ingoing: v.ingoing.iter().map(cl).collect(),
                outgoing: v.outgoing.iter().map(cl).collect(),
                loop_ok: v.loop_ok,
            })
            .collect(),
    }
}

/// `x ↦ −x`, `(a, b) ↦ (−a, b)`, `n ↦ −n`.
pub fn mirror<C: Coeff>(d: &Diagram<C>) -> Diagram<C> {
    let pt = |p: &PointQ| PointQ::new(-&p.x, p.y.clone());
    let cl = |m: &LatticeClass| LatticeClass::new(-m.a, m.b);
    let mut rays: Vec<Ray<C>> = d
        .rays
        .iter()
        .map(|r| Ray {
            init: pt(&r.init),
            class: cl(&r.class),
            function: r.function.relabel_markers(&|n| -n),
            extent: r.extent.clone(),
        })
        .collect();
    sort_rays(&mut rays);
    let mut config = d.config.clone();
    config.region.xmin = -&d.config.region.xmax;
    config.region.xmax = -&d.config.region.xmin;
    Diagram {
        rays,
        config,
        vertex_log: d
            .vertex_log
            .iter()
            .map(|v| VertexRecord {
                point: pt(&v.point),
                ingoing: v.ingoing.iter().map(cl).collect(),
                outgoing: v.outgoing.iter().map(cl).collect(),
                loop_ok: v.loop_ok,
            })
            .collect(),
    }
}

/// The quadratic refinement `(−1)^{ab + a + b}`.
pub fn twist_sign(m: &LatticeClass) -> bool {
    (m.a * m.b + m.a + m.b).rem_euclid(2) == 1
}

/// Multiplies every ray function by `(−1)^{ab+a+b}`; swaps the `q^-` and
/// `q^+` conventions.
pub fn sign_twist<C: Coeff>(d: &Diagram<C>) -> Diagram<C> {
    let mut out = d.clone();
    for r in &mut out.rays {
        if twist_sign(&r.class) {
            r.function = r.function.neg();
        }
    }
    out.config.convention = match d.config.convention {
        Convention::Minus => Convention::Plus,
        Convention::Plus => Convention::Minus,
    };
    out
}

// ---------------------------------------------------------------------------
// JSON

fn q_json(q: &Q) -> Value {
    json!([q.numer().to_string(), q.denom().to_string()])
}

fn q_from_json(v: &Value) -> Result<Q> {
    let bad = || Error::Invalid(format!("malformed rational {v}"));
    let arr = v.as_array().ok_or_else(bad)?;
    let part = |i: usize| -> Result<BigInt> {
        let s = arr.get(i).and_then(Value::as_str).ok_or_else(bad)?;
        s.parse::<BigInt>().map_err(|_| bad())
    };
    let (n, d) = (part(0)?, part(1)?);
    if d.is_zero() {
        return Err(Error::DivisionByZero);
    }
    Ok(Q::new(n, d))
}

pub fn point_json(p: &PointQ) -> Value {
    json!([q_json(&p.x), q_json(&p.y)])
}

fn point_from_json(v: &Value) -> Result<PointQ> {
    let bad = || Error::Invalid(format!("malformed point {v}"));
    Ok(PointQ::new(
        q_from_json(v.get(0).ok_or_else(bad)?)?,
        q_from_json(v.get(1).ok_or_else(bad)?)?,
    ))
}

fn class_from_json(v: &Value) -> Result<LatticeClass> {
    let bad = || Error::Invalid(format!("malformed class {v}"));
    Ok(LatticeClass::new(
        v.get(0).and_then(Value::as_i64).ok_or_else(bad)?,
        v.get(1).and_then(Value::as_i64).ok_or_else(bad)?,
    ))
}

impl<C: Coeff> Diagram<C> {
    /// The documented JSON dump: rays as `{init, class, T, function}` with
    /// rationals as `[numerator, denominator]` string pairs, and the vertex
    /// log in processing order.
    pub fn to_json(&self) -> Value {
        let rays: Vec<Value> = self
            .rays
            .iter()
            .map(|r| {
                json!({
                    "init": point_json(&r.init),
                    "class": [r.class.a, r.class.b],
                    "T": match &r.extent {
                        Extent::Unbounded => json!("inf"),
                        Extent::Bounded(t) => q_json(t),
                    },
                    "function": r.function.to_json(),
                })
            })
            .collect();
        let log: Vec<Value> = self
            .vertex_log
            .iter()
            .map(|v| {
                json!({
                    "point": point_json(&v.point),
                    "ingoing": v.ingoing.iter().map(|m| json!([m.a, m.b])).collect::<Vec<_>>(),
                    "outgoing": v.outgoing.iter().map(|m| json!([m.a, m.b])).collect::<Vec<_>>(),
                    "loop_ok": v.loop_ok,
                })
            })
            .collect();
        let c = &self.config;
        json!({
            "region": {"xmin": q_json(&c.region.xmin), "xmax": q_json(&c.region.xmax), "smax": q_json(&c.region.smax)},
            "order_cap": q_json(&c.order_cap),
            "convention": c.convention,
            "rays": rays,
            "vertex_log": log,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Invalid(format!("diagram JSON: missing {what}"));
        let reg = v.get("region").ok_or_else(|| bad("region"))?;
        let region = Region::new(
            q_from_json(reg.get("xmin").ok_or_else(|| bad("xmin"))?)?,
            q_from_json(reg.get("xmax").ok_or_else(|| bad("xmax"))?)?,
            q_from_json(reg.get("smax").ok_or_else(|| bad("smax"))?)?,
        );
        let mut config = DiagramConfig::new(
            region,
            q_from_json(v.get("order_cap").ok_or_else(|| bad("order_cap"))?)?,
        );
        config.convention = serde_json::from_value(
            v.get("convention").cloned().ok_or_else(|| bad("convention"))?,
        )?;
        let mut rays = Vec::new();
        for r in v.get("rays").and_then(Value::as_array).ok_or_else(|| bad("rays"))? {
            let extent = match r.get("T") {
                Some(Value::String(s)) if s == "inf" => Extent::Unbounded,
                Some(t) => Extent::Bounded(q_from_json(t)?),
                None => return Err(bad("T")),
            };
            rays.push(Ray {
                init: point_from_json(r.get("init").ok_or_else(|| bad("init"))?)?,
                class: class_from_json(r.get("class").ok_or_else(|| bad("class"))?)?,
                function: C::from_json(r.get("function").ok_or_else(|| bad("function"))?)?,
                extent,
            });
        }
        let mut vertex_log = Vec::new();
        for e in v
            .get("vertex_log")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("vertex_log"))?
        {
            let classes = |key: &str| -> Result<Vec<LatticeClass>> {
                e.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| bad(key))?
                    .iter()
                    .map(class_from_json)
                    .collect()
            };
            vertex_log.push(VertexRecord {
                point: point_from_json(e.get("point").ok_or_else(|| bad("point"))?)?,
                ingoing: classes("ingoing")?,
                outgoing: classes("outgoing")?,
                loop_ok: e.get("loop_ok").and_then(Value::as_bool).unwrap_or(false),
            });
        }
        Ok(Diagram {
            rays,
            config,
            vertex_log,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::{HalfLaurent, MarkerPoly};

    fn region(xmin: i64, xmax: i64, smax: i64) -> Region {
        Region::new(q_int(xmin), q_int(xmax), q_int(smax))
    }

    fn run(reg: Region, cap: Q) -> Diagram<RatFuncQ> {
        let cfg = DiagramConfig::new(reg, cap.clone());
        let (lo, hi) = cfg.region.tangency_range();
        let d = initial_diagram(lo, hi, default_ell_max(&cap), &cfg).unwrap();
        scatter(&d).unwrap()
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&PointQ::from_ints(0, 0), &LatticeClass::new(1, -1)), q_int(2));
        for n in -4..=4 {
            let v = PointQ::new(q_frac(2 * n + 1, 2), q_frac(-n * n - n, 2));
            assert_eq!(phi(&v, &m_plus(n)), q_int(1));
            assert_eq!(phi(&v, &m_minus(n + 1)), q_int(1));
            assert_eq!(v.s(), q_frac(1, 4));
        }
        let sigma = PointQ::new(q_frac(7, 3), q_frac(-5, 11));
        assert_eq!(phi(&sigma, &LatticeClass::new(0, -3)), q_int(6));
    }

    #[test]
    fn initial_segments_meet_at_first_vertices() {
        let cfg = DiagramConfig::new(region(-2, 2, 4), q_int(1));
        let d: Diagram<RatFuncQ> = initial_diagram(1, 1, 1, &cfg).unwrap();
        assert_eq!(d.rays.len(), 2);
        assert_eq!(d.rays[0].init, PointQ::new(q_int(1), q_frac(-1, 2)));
        let d: Diagram<RatFuncQ> = initial_diagram(0, 1, 1, &cfg).unwrap();
        let plus0 = d.rays.iter().find(|r| r.class == m_plus(0)).unwrap();
        let minus1 = d.rays.iter().find(|r| r.class == m_minus(1)).unwrap();
        let v = PointQ::new(q_frac(1, 2), q_int(0));
        assert_eq!(plus0.end_point().unwrap(), v);
        assert_eq!(minus1.end_point().unwrap(), v);
    }

    #[test]
    fn below_order_one_nothing_happens() {
        let cfg = DiagramConfig::new(region(-2, 2, 6), q_frac(1, 2));
        let d: Diagram<RatFuncQ> = initial_diagram(-3, 3, 1, &cfg).unwrap();
        let out = scatter(&d).unwrap();
        let mut want = d.rays.clone();
        sort_rays(&mut want);
        assert_eq!(out.rays, want);
        assert!(out.vertex_log.is_empty());
    }

    #[test]
    fn first_vertex_emits_the_vertical_ray() {
        let d = run(region(-2, 2, 3), q_int(2));
        let v = PointQ::new(q_frac(-1, 2), q_int(0));
        let r = d
            .rays
            .iter()
            .find(|r| r.init == v && r.class == LatticeClass::new(0, -1))
            .expect("vertical ray from (-1/2, 0)");
        let want = RatFuncQ::new(
            -HalfLaurent::from_q_poly(&[1, 1, 1]).shift(-2),
            RatFuncQ::quantum_ell(1),
        )
        .unwrap();
        assert_eq!(r.function, want);
        assert!(d.vertex_log.iter().all(|v| v.loop_ok));
    }

    #[test]
    fn read_out_on_initial_ray() {
        let cfg = DiagramConfig::new(region(-2, 2, 4), q_int(2));
        let d: Diagram<RatFuncQ> = initial_diagram(0, 0, 2, &cfg).unwrap();
        // m_0^+ = (-1, 0) runs from the origin towards x > 0
        let sigma = PointQ::new(q_frac(1, 8), q_int(0));
        assert_eq!(function_at(&d, &sigma, &LatticeClass::new(-1, 0)).unwrap(), RatFuncQ::initial_wall(1));
        assert_eq!(function_at(&d, &sigma, &LatticeClass::new(-2, 0)).unwrap(), RatFuncQ::initial_wall(2));
        let end = PointQ::new(q_frac(1, 2), q_int(0));
        assert!(matches!(function_at(&d, &end, &LatticeClass::new(-2, 0)), Err(Error::ProbeOnSingularPoint)));
        let off = PointQ::new(q_frac(1, 8), q_int(1));
        assert!(function_at(&d, &off, &LatticeClass::new(-1, 0)).unwrap().is_zero());
    }

    #[test]
    fn nothing_inside_the_first_triangle() {
        // the triangle s_0, s_1, (1/2, 0) lies in x² + 2y < 1/4
        let d = run(region(-3, 4, 5), q_int(3));
        for r in &d.rays {
            let initial = r.init.s().is_zero();
            assert!(initial || r.init.s() >= q_frac(1, 4), "ray from {}", r.init);
        }
    }

    #[test]
    fn twist_signs() {
        assert!(twist_sign(&LatticeClass::new(1, 0)));
        assert!(twist_sign(&LatticeClass::new(1, 1)));
        assert!(!twist_sign(&LatticeClass::new(2, 2)));
        let d = run(region(-2, 2, 3), q_int(2));
        assert_eq!(sign_twist(&sign_twist(&d)), d);
    }

    #[test]
    fn psi_maps_tangency_data() {
        let cfg = DiagramConfig::new(region(-1, 1, 2), q_int(1));
        let d: Diagram<MarkerPoly> = initial_diagram(0, 0, 1, &cfg).unwrap();
        let e = psi_translate(&d, 1);
        let f: Diagram<MarkerPoly> = initial_diagram(1, 1, 1, &DiagramConfig::new(region(0, 2, 2), q_int(1))).unwrap();
        assert_eq!(e.rays, f.rays);
        assert_eq!(psi_translate(&d, 0), d);
        assert_eq!(psi_translate(&psi_translate(&d, 3), -3), d);
        let p = PointQ::new(q_frac(3, 7), q_frac(5, 2));
        let q = psi_translate(&Diagram::<RatFuncQ> {
            rays: vec![Ray { init: p.clone(), class: LatticeClass::new(0, -1), function: RatFuncQ::one(), extent: Extent::Unbounded }],
            config: cfg,
            vertex_log: vec![],
        }, 1);
        assert_eq!(q.rays[0].init.s(), p.s());
    }

    fn with_convention(reg: Region, cap: Q, conv: Convention) -> Diagram<MarkerPoly> {
        let mut cfg = DiagramConfig::new(reg, cap.clone());
        cfg.convention = conv;
        let (lo, hi) = cfg.region.tangency_range();
        initial_diagram(lo, hi, default_ell_max(&cap), &cfg).unwrap()
    }

    #[test]
    fn scatter_is_idempotent() {
        let d = run(region(-2, 3, 8), q_int(4));
        let again = scatter(&d).unwrap();
        assert_eq!(again.rays, d.rays);
    }

    #[test]
    fn psi_equivariance() {
        for (reg, cap, k) in [
            (region(-2, 2, 6), q_int(3), 1),
            (region(-1, 3, 9), q_int(4), 1),
            (region(-3, 1, 5), q_frac(5, 2), -2),
        ] {
            let init = with_convention(reg, cap, Convention::Minus);
            let lhs = scatter(&psi_translate(&init, k)).unwrap();
            let rhs = psi_translate(&scatter(&init).unwrap(), k);
            assert_eq!(lhs.rays, rhs.rays);
            assert_eq!(lhs.config, rhs.config);
        }
    }

    #[test]
    fn mirror_symmetry() {
        let init = with_convention(region(-3, 3, 8), q_int(4), Convention::Minus);
        let out = scatter(&init).unwrap();
        assert_eq!(mirror(&init).rays, init.rays);
        assert_eq!(mirror(&out).rays, out.rays);
    }

    #[test]
    fn sign_twist_matches_plus_convention() {
        let reg = region(-2, 2, 8);
        let minus = scatter(&with_convention(reg.clone(), q_int(4), Convention::Minus)).unwrap();
        let plus = scatter(&with_convention(reg, q_int(4), Convention::Plus)).unwrap();
        let twisted = sign_twist(&minus);
        assert_eq!(twisted.rays, plus.rays);
        assert_eq!(twisted.config, plus.config);
    }

    /// Every ancestor's initial point lies within `φ/2` (in `x`) of the
    /// descendant's initial point, `φ` taken there.
    #[test]
    fn forward_x_bound() {
        let d = run(region(-3, 4, 12), q_int(5));
        let key = |r: &Ray<RatFuncQ>| (r.init.clone(), r.class);
        let mut origins: BTreeMap<(PointQ, LatticeClass), Vec<Q>> = BTreeMap::new();
        for r in d.rays.iter().filter(|r| r.init.s().is_zero()) {
            origins.insert(key(r), vec![r.init.x.clone()]);
        }
        let through = |p: &PointQ, m: &LatticeClass| {
            d.rays
                .iter()
                .find(|r| r.class == *m && r.param_of(p).is_some_and(|t| {
                    t.is_positive() && r.extent != Extent::Bounded(t.clone()) || r.extent == Extent::Bounded(t)
                }))
                .map(key)
        };
        let mut checked = 0;
        for v in &d.vertex_log {
            for m in &v.outgoing {
                let Some(out) = d.rays.iter().find(|r| r.init == v.point && r.class == *m) else {
                    continue;
                };
                let mut xs = vec![v.point.x.clone()];
                for mi in &v.ingoing {
                    // m − m_i must lie in the monoid of the ingoing classes
                    let rest = LatticeClass::new(m.a - mi.a, m.b - mi.b);
                    if !in_monoid(&rest, &v.ingoing, &v.point) {
                        continue;
                    }
                    let parent = through(&v.point, mi).expect("ingoing ray present");
                    xs.extend(origins.get(&parent).cloned().unwrap_or_default());
                }
                let bound = phi(&v.point, m) / q_int(2);
                for x in &xs {
                    assert!((x - &v.point.x).abs() <= bound, "ray {m} at {}", v.point);
                    checked += 1;
                }
                origins.insert(key(out), xs);
            }
        }
        assert!(checked > 50);
    }

    /// Membership in the monoid generated by `gens`, all of positive grade.
    fn in_monoid(m: &LatticeClass, gens: &[LatticeClass], at: &PointQ) -> bool {
        let grading = grading_at(at);
        let top = grading.grade(m);
        let mut seen = BTreeSet::from([LatticeClass::ZERO]);
        let mut frontier = vec![LatticeClass::ZERO];
        while let Some(c) = frontier.pop() {
            if c == *m {
                return true;
            }
            for g in gens {
                let next = c + *g;
                if grading.grade(&next) <= top && seen.insert(next) {
                    frontier.push(next);
                }
            }
        }
        false
    }

    #[test]
    fn json_round_trip() {
        let d = run(region(-2, 2, 3), q_int(2));
        let back: Diagram<RatFuncQ> = Diagram::from_json(&d.to_json()).unwrap();
        assert_eq!(back, d);
    }
}
