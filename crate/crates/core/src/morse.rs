//! Morse theory of trigonometric polynomials on the circle: critical points,
//! the Agmon distance, the Morse differential and rigid gradient trees.

use crate::error::{Error, Result};
use crate::real::Real;
use crate::trees::{enumerate_topologies, EdgeKind, Topology};
use crate::{ode, quad};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const TAU: f64 = 2.0 * PI;
/// Smallest admissible `|f''|` at a critical point.
pub const MORSE_TOL: f64 = 1e-6;
/// Minimal angular separation for transverse intersections.
pub const GENERIC_TOL: f64 = 1e-4;

/// `a_0 + Σ_m (cos[m] cos mθ + sin[m] sin mθ)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicFunction {
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl PeriodicFunction {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Self {
        PeriodicFunction { cos, sin }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// `amp · cos(m(θ - shift))`.
    pub fn cosine(m: usize, amp: f64, shift: f64) -> Self {
        let mut f = Self::zero();
        f.cos.resize(m + 1, 0.0);
        f.sin.resize(m + 1, 0.0);
        f.cos[m] = amp * (m as f64 * shift).cos();
        f.sin[m] = amp * (m as f64 * shift).sin();
        f
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        last(&self.cos).max(last(&self.sin))
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.cos.len().max(other.cos.len());
        let m = self.sin.len().max(other.sin.len());
        let get = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        PeriodicFunction {
            cos: (0..n).map(|i| get(&self.cos, i) + get(&other.cos, i)).collect(),
            sin: (0..m).map(|i| get(&self.sin, i) + get(&other.sin, i)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        PeriodicFunction {
            cos: self.cos.iter().map(|c| c * s).collect(),
            sin: self.sin.iter().map(|c| c * s).collect(),
        }
    }

    /// `other - self`, the function attached to the ordered pair `(self, other)`.
    pub fn to(&self, other: &Self) -> Self {
        other.add(&self.scale(-1.0))
    }

    /// `r`-th derivative at `theta`, in any precision.
    pub fn deriv_at<T: Real>(&self, theta: T, r: u32) -> T {
        let mut acc = T::zero();
        let n = self.cos.len().max(self.sin.len());
        for m in 0..n {
            let a = self.cos.get(m).copied().unwrap_or(0.0);
            let b = if m == 0 { 0.0 } else { self.sin.get(m).copied().unwrap_or(0.0) };
            if a == 0.0 && b == 0.0 {
                continue;
            }
            if m == 0 {
                if r == 0 {
                    acc += T::from_f64(a);
                }
                continue;
            }
            let (s, c) = theta.mul_f64(m as f64).sin_cos();
            let (cr, sr) = match r % 4 {
                0 => (c, s),
                1 => (-s, c),
                2 => (-c, -s),
                _ => (s, -c),
            };
            let scale = (m as f64).powi(r as i32);
            acc += (cr.mul_f64(a) + sr.mul_f64(b)).mul_f64(scale);
        }
        acc
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.deriv_at(theta, 0)
    }

    pub fn d1(&self, theta: f64) -> f64 {
        self.deriv_at(theta, 1)
    }

    pub fn d2(&self, theta: f64) -> f64 {
        self.deriv_at(theta, 2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub theta: f64,
    /// 0 at a minimum, 1 at a maximum.
    pub index: usize,
    pub value: f64,
}

/// Maps an angle into `[0, 2π)`.
pub fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Counterclockwise angular distance from `a` to `b`, in `[0, 2π)`.
pub fn ccw(a: f64, b: f64) -> f64 {
    wrap(b - a)
}

pub fn circle_dist(a: f64, b: f64) -> f64 {
    let d = ccw(a, b);
    d.min(TAU - d)
}

/// Nondegenerate critical points sorted by angle.
pub fn critical_points(f: &PeriodicFunction) -> Result<Vec<CriticalPoint>> {
    let deg = f.degree();
    if deg == 0 {
        return Err(Error::NonMorse { at: 0.0, second: 0.0 });
    }
    let n = (256 * deg).max(2048);
    let h = TAU / n as f64;
    let fp: Vec<f64> = (0..n).map(|j| f.d1(j as f64 * h)).collect();
    let scale = fp.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut out = Vec::new();
    for j in 0..n {
        let (a, b) = (fp[j], fp[(j + 1) % n]);
        let x0 = j as f64 * h;
        if a == 0.0 {
            out.push(x0);
        } else if a * b < 0.0 {
            out.push(bisect_newton(f, x0, x0 + h));
        } else {
            // a sampled local minimum of |f'| that does not cross zero flags a near-double root
            let prev = fp[(j + n - 1) % n];
            if a.abs() <= prev.abs() && a.abs() <= b.abs() && a.abs() < 1e-9 * scale.max(1.0) {
                return Err(Error::NonMorse { at: x0, second: f.d2(x0).abs() });
            }
        }
    }
    let mut pts = Vec::with_capacity(out.len());
    for x in out {
        let x = wrap(x);
        let f2 = f.d2(x);
        if f2.abs() < MORSE_TOL {
            return Err(Error::NonMorse { at: x, second: f2.abs() });
        }
        pts.push(CriticalPoint { theta: x, index: if f2 > 0.0 { 0 } else { 1 }, value: f.eval(x) });
    }
    pts.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());
    pts.dedup_by(|a, b| circle_dist(a.theta, b.theta) < 1e-12);
    for w in 0..pts.len() {
        if pts[w].index == pts[(w + 1) % pts.len()].index {
            return Err(Error::NonMorse { at: pts[w].theta, second: f.d2(pts[w].theta).abs() });
        }
    }
    Ok(pts)
}

fn bisect_newton(f: &PeriodicFunction, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f.d1(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = f.d1(x);
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == (flo > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / f.d2(x);
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 {
            break;
        }
    }
    x
}

/// The critical point of `f` nearest to `theta`.
pub fn snap_critical(f: &PeriodicFunction, theta: f64, tol: f64) -> Result<CriticalPoint> {
    let crit = critical_points(f)?;
    let best = crit
        .iter()
        .min_by(|a, b| circle_dist(a.theta, theta).partial_cmp(&circle_dist(b.theta, theta)).unwrap())
        .copied()
        .ok_or_else(|| Error::NonMorse { at: theta, second: 0.0 })?;
    if circle_dist(best.theta, theta) > tol {
        return Err(Error::Schema {
            path: "q_tuple".into(),
            msg: format!("no critical point within {tol} of {theta}"),
        });
    }
    Ok(best)
}

/// First critical point met when moving from `theta` in direction `dir` (±1),
/// excluding `theta` itself.
pub fn next_critical(crit: &[CriticalPoint], theta: f64, dir: f64) -> CriticalPoint {
    let dist = |c: &CriticalPoint| {
        let d = if dir > 0.0 { ccw(theta, c.theta) } else { ccw(c.theta, theta) };
        if d < 1e-12 {
            TAU
        } else {
            d
        }
    };
    *crit.iter().min_by(|a, b| dist(a).partial_cmp(&dist(b)).unwrap()).unwrap()
}

/// Agmon distance for the flat metric: the shorter of the two arcs measured by `|f'| dθ`.
///
/// Along an arc `∫|f'|` is the total variation of `f`, which only needs the
/// critical values crossed.
pub fn agmon_distance(f: &PeriodicFunction, crit: &[CriticalPoint], x: f64, y: f64) -> f64 {
    let along = |a: f64, b: f64| {
        let len = ccw(a, b);
        let mut inner: Vec<&CriticalPoint> = crit.iter().filter(|c| ccw(a, c.theta) < len && ccw(a, c.theta) > 0.0).collect();
        inner.sort_by(|p, q| ccw(a, p.theta).partial_cmp(&ccw(a, q.theta)).unwrap());
        let mut prev = f.eval(a);
        let mut total = 0.0;
        for c in inner {
            total += (c.value - prev).abs();
            prev = c.value;
        }
        total + (f.eval(b) - prev).abs()
    };
    along(x, y).min(along(y, x))
}

/// The Morse complex of a single function. The differential maps minima to
/// maxima: `delta[q][p]` counts descending flow lines from the maximum `q` to
/// the minimum `p`, +1 when the line leaves `q` counterclockwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MorseComplex {
    pub minima: Vec<CriticalPoint>,
    pub maxima: Vec<CriticalPoint>,
    pub delta: Vec<Vec<i64>>,
}

pub fn morse_differential(f: &PeriodicFunction) -> Result<MorseComplex> {
    let crit = critical_points(f)?;
    let minima: Vec<CriticalPoint> = crit.iter().filter(|c| c.index == 0).copied().collect();
    let maxima: Vec<CriticalPoint> = crit.iter().filter(|c| c.index == 1).copied().collect();
    let pos = |c: CriticalPoint| minima.iter().position(|m| m.theta == c.theta).unwrap();
    let mut delta = vec![vec![0i64; minima.len()]; maxima.len()];
    for (iq, q) in maxima.iter().enumerate() {
        delta[iq][pos(next_critical(&crit, q.theta, 1.0))] += 1;
        delta[iq][pos(next_critical(&crit, q.theta, -1.0))] -= 1;
    }
    Ok(MorseComplex { minima, maxima, delta })
}

/// Rank over the rationals, by fraction-free elimination.
pub fn integer_rank(m: &[Vec<i64>]) -> usize {
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| a[r][c] != 0) else { continue };
        a.swap(rank, p);
        for r in 0..rows {
            if r != rank && a[r][c] != 0 {
                let (x, y) = (a[rank][c], a[r][c]);
                for j in 0..cols {
                    a[r][j] = a[r][j] * x - a[rank][j] * y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// An ordered function sequence `f_0, …, f_k` with the Morse data of every
/// difference `f_ij = f_j - f_i`.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub functions: Vec<PeriodicFunction>,
    diffs: Vec<Vec<Option<(PeriodicFunction, Vec<CriticalPoint>)>>>,
}

impl Sequence {
    pub fn new(functions: Vec<PeriodicFunction>) -> Result<Sequence> {
        let n = functions.len();
        let mut diffs = vec![vec![None; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let f = functions[i].to(&functions[j]);
                let c = critical_points(&f)?;
                diffs[i][j] = Some((f, c));
            }
        }
        Ok(Sequence { functions, diffs })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn f(&self, i: usize, j: usize) -> &PeriodicFunction {
        &self.diffs[i][j].as_ref().expect("pairs are ordered i < j").0
    }

    pub fn crit(&self, i: usize, j: usize) -> &[CriticalPoint] {
        &self.diffs[i][j].as_ref().expect("pairs are ordered i < j").1
    }

    /// Snaps angles `[q_01, q_12, …, q_(k-1)k, q_0k]` to critical points.
    pub fn snap(&self, angles: &[f64]) -> Result<Vec<CriticalPoint>> {
        let k = self.len() - 1;
        if angles.len() != k + 1 {
            return Err(Error::Schema {
                path: "q_tuple".into(),
                msg: format!("expected {} angles for k = {k}", k + 1),
            });
        }
        (0..=k)
            .map(|l| {
                let (i, j) = if l < k { (l, l + 1) } else { (0, k) };
                snap_critical(self.f(i, j), angles[l], 1e-2)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Arc {
    start: f64,
    len: f64,
}

impl Arc {
    fn between(a: f64, b: f64) -> Arc {
        let len = ccw(a, b);
        Arc { start: a, len: if len == 0.0 { TAU } else { len } }
    }

    fn offset(&self, x: f64) -> f64 {
        ccw(self.start, x)
    }

    fn intersect(&self, other: &Arc) -> Vec<Arc> {
        let s = self.offset(other.start);
        let mut out = Vec::new();
        for shift in [0.0, -TAU] {
            let lo = (s + shift).max(0.0);
            let hi = (s + shift + other.len).min(self.len);
            if hi > lo {
                out.push(Arc { start: wrap(self.start + lo), len: hi - lo });
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Set {
    Point(f64),
    Arc(Arc),
}

fn intersect(a: Set, b: Set) -> Result<Vec<Set>> {
    match (a, b) {
        (Set::Point(x), Set::Point(y)) => {
            if circle_dist(x, y) < GENERIC_TOL {
                Err(Error::NonGeneric(format!("two point conditions meet at {x:.6}")))
            } else {
                Ok(vec![])
            }
        }
        (Set::Point(x), Set::Arc(r)) | (Set::Arc(r), Set::Point(x)) => {
            let t = r.offset(x);
            let inside = t > 0.0 && t < r.len;
            let near_start = t < GENERIC_TOL || TAU - t < GENERIC_TOL;
            let near_end = (t - r.len).abs() < GENERIC_TOL;
            if near_start || near_end {
                Err(Error::NonGeneric(format!("point {x:.6} lies on an arc boundary")))
            } else if inside {
                Ok(vec![Set::Point(x)])
            } else {
                Ok(vec![])
            }
        }
        (Set::Arc(r), Set::Arc(s)) => Ok(r.intersect(&s).into_iter().map(Set::Arc).collect()),
    }
}

/// Leaf condition: points reached by an ascending flow line from `q`.
fn unstable_set(crit: &[CriticalPoint], q: &CriticalPoint) -> Set {
    if q.index == 1 {
        Set::Point(q.theta)
    } else {
        Set::Arc(Arc::between(next_critical(crit, q.theta, -1.0).theta, next_critical(crit, q.theta, 1.0).theta))
    }
}

/// Root condition: points whose ascending flow line ends at `q`.
fn stable_set(crit: &[CriticalPoint], q: &CriticalPoint) -> Set {
    if q.index == 0 {
        Set::Point(q.theta)
    } else {
        Set::Arc(Arc::between(next_critical(crit, q.theta, -1.0).theta, next_critical(crit, q.theta, 1.0).theta))
    }
}

#[derive(Clone, Debug)]
struct Partial {
    set: Set,
    verts: Vec<(usize, f64)>,
}

/// A rigid gradient tree: vertex positions (internal vertices in post-order),
/// the orientation sign, internal edge lengths and the action.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientTree {
    pub topology_id: usize,
    pub vertices: Vec<f64>,
    pub sign: i64,
    /// Flow time along each edge, indexed like `Topology::edges`.
    pub lengths: Vec<Option<f64>>,
    /// `Σ_edges ∫|df|`, by quadrature along the edges.
    pub action: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientTreeJson {
    pub topology_id: usize,
    pub vertices: Vec<f64>,
    pub sign: i64,
}

impl GradientTree {
    pub fn to_json(&self) -> GradientTreeJson {
        GradientTreeJson { topology_id: self.topology_id, vertices: self.vertices.clone(), sign: self.sign }
    }
}

/// `f_0k(q_0k) - Σ f_(i,i+1)(q_(i,i+1))`.
pub fn action(q: &[CriticalPoint]) -> f64 {
    let k = q.len() - 1;
    q[k].value - q[..k].iter().map(|c| c.value).sum::<f64>()
}

/// Total degree condition: `deg q_0k = Σ deg q_in + 2 - k`.
pub fn degree_balanced(q: &[CriticalPoint]) -> bool {
    let k = q.len() - 1;
    q[..k].iter().map(|c| c.index as i64).sum::<i64>() + 2 - k as i64 == q[k].index as i64
}

/// Ascending monotone arc from `a` to `b` for `f`: its direction (±1) and angular length.
fn monotone_arc(f: &PeriodicFunction, crit: &[CriticalPoint], a: f64, b: f64) -> (f64, f64) {
    if circle_dist(a, b) < 1e-14 {
        return (1.0, 0.0);
    }
    let clean = |dir: f64| {
        let len = if dir > 0.0 { ccw(a, b) } else { ccw(b, a) };
        let blocked = crit.iter().any(|c| {
            let t = if dir > 0.0 { ccw(a, c.theta) } else { ccw(c.theta, a) };
            t > 1e-12 && t < len - 1e-12
        });
        (!blocked, len)
    };
    let (ok_p, len_p) = clean(1.0);
    let (ok_m, len_m) = clean(-1.0);
    match (ok_p, ok_m) {
        (true, true) => {
            if f.eval(b) >= f.eval(a) && f.d1(wrap(a + 0.5 * len_p)) > 0.0 {
                (1.0, len_p)
            } else {
                (-1.0, len_m)
            }
        }
        (true, false) => (1.0, len_p),
        (false, true) => (-1.0, len_m),
        (false, false) => (1.0, len_p),
    }
}

fn arc_integral(g: impl Fn(f64) -> f64, a: f64, dir: f64, len: f64) -> f64 {
    if len == 0.0 {
        return 0.0;
    }
    quad::integrate(|t| g(a + dir * t), 0.0, len, 1e-13, 1e-12)
}

/// Rigid gradient trees of topology `topo` with inputs `q[0..k]` and output `q[k]`.
pub fn find_gradient_trees(topo: &Topology, seq: &Sequence, q: &[CriticalPoint]) -> Result<Vec<GradientTree>> {
    let k = topo.k;
    if q.len() != k + 1 || seq.len() != k + 1 {
        return Err(Error::InvalidArity(k));
    }
    if !degree_balanced(q) {
        return Ok(vec![]);
    }
    if k == 1 {
        return Ok(flow_lines(topo, seq, q));
    }
    let n_nodes = topo.node_count();
    let mut partials: Vec<Vec<Partial>> = vec![vec![]; n_nodes];
    for l in 0..k {
        partials[l] = vec![Partial { set: unstable_set(seq.crit(l, l + 1), &q[l]), verts: vec![] }];
    }
    let outgoing = |node: usize, parts: &[Partial]| -> Result<Vec<Partial>> {
        if node < k {
            return Ok(parts.to_vec());
        }
        let (i, j) = topo.edges[node].label;
        let (f, crit) = (seq.f(i, j), seq.crit(i, j));
        let mut out = Vec::new();
        for p in parts {
            // a floating vertex sweeps a family too large to be rigid
            let Set::Point(x) = p.set else { continue };
            let slope = f.d1(x);
            if slope.abs() < GENERIC_TOL * f.d2(x).abs().max(1.0) {
                return Err(Error::NonGeneric(format!("vertex at {x:.6} sits on a critical point of f_{i}{j}")));
            }
            let dir = slope.signum();
            let c = next_critical(crit, x, dir).theta;
            let arc = if dir > 0.0 { Arc::between(x, c) } else { Arc::between(c, x) };
            out.push(Partial { set: Set::Arc(arc), verts: p.verts.clone() });
        }
        Ok(out)
    };
    for v in &topo.vertices {
        let lower = outgoing(v.lower, &partials[v.lower])?;
        let upper = outgoing(v.upper, &partials[v.upper])?;
        let mut here = Vec::new();
        for a in &lower {
            for b in &upper {
                for s in intersect(a.set, b.set)? {
                    let mut verts = a.verts.clone();
                    verts.extend_from_slice(&b.verts);
                    if let Set::Point(x) = s {
                        verts.push((v.id, x));
                    }
                    here.push(Partial { set: s, verts });
                }
            }
        }
        partials[v.id] = here;
    }
    let top = topo.vertices.last().expect("k >= 2 has a vertex").id;
    let root_set = stable_set(seq.crit(0, k), &q[k]);
    let mut trees = Vec::new();
    for p in &partials[top] {
        for s in intersect(p.set, root_set)? {
            let Set::Point(x) = s else { continue };
            let mut verts = p.verts.clone();
            if !verts.iter().any(|(id, _)| *id == top) {
                verts.push((top, x));
            }
            verts.sort_by_key(|(id, _)| *id);
            trees.push(realize(topo, seq, q, verts.iter().map(|v| v.1).collect()));
        }
    }
    Ok(trees)
}

fn flow_lines(topo: &Topology, seq: &Sequence, q: &[CriticalPoint]) -> Vec<GradientTree> {
    let crit = seq.crit(0, 1);
    let (p, top) = (q[0], q[1]);
    let mut out = Vec::new();
    for dir in [1.0, -1.0] {
        let c = next_critical(crit, top.theta, dir);
        if circle_dist(c.theta, p.theta) < 1e-12 {
            let f = seq.f(0, 1);
            let len = if dir > 0.0 { ccw(top.theta, p.theta) } else { ccw(p.theta, top.theta) };
            let action = arc_integral(|t| f.d1(t).abs(), top.theta, dir, len);
            out.push(GradientTree {
                topology_id: topo.id,
                vertices: vec![],
                sign: dir as i64,
                lengths: vec![None],
                action,
            });
        }
    }
    out
}

fn realize(topo: &Topology, seq: &Sequence, q: &[CriticalPoint], vertices: Vec<f64>) -> GradientTree {
    let k = topo.k;
    let pos = |node: usize| -> f64 {
        if node < k {
            q[node].theta
        } else if node == topo.root_node() {
            q[k].theta
        } else {
            vertices[node - k]
        }
    };
    let mut sign = 1i64;
    let mut lengths = Vec::with_capacity(topo.edges.len());
    let mut total = 0.0;
    for e in &topo.edges {
        let (i, j) = e.label;
        let (f, crit) = (seq.f(i, j), seq.crit(i, j));
        let (a, b) = (pos(e.src), pos(e.dst));
        let (dir, len) = monotone_arc(f, crit, a, b);
        total += arc_integral(|t| f.d1(t).abs(), a, dir, len);
        if e.kind == EdgeKind::Internal {
            sign *= f.d1(a).signum() as i64;
            lengths.push(Some(arc_integral(|t| 1.0 / f.d1(t).abs(), a, dir, len)));
        } else {
            lengths.push(None);
        }
    }
    GradientTree { topology_id: topo.id, vertices, sign, lengths, action: total }
}

/// Position reached after flowing up `f` for time `t` from `x`.
pub fn flow_up(f: &PeriodicFunction, x: f64, t: f64) -> f64 {
    wrap(ode::flow(|y| f.d1(y), x, t, 1e-12))
}

#[derive(Clone, Debug)]
pub struct MorseProduct {
    /// Signed count summed over topologies.
    pub coefficient: i64,
    /// `(topology id, signed count)` for every topology.
    pub per_topology: Vec<(usize, i64)>,
    pub trees: Vec<GradientTree>,
    pub action: f64,
}

pub fn morse_product(seq: &Sequence, q: &[CriticalPoint]) -> Result<MorseProduct> {
    let k = q.len() - 1;
    let mut trees = Vec::new();
    let mut per_topology = Vec::new();
    for t in enumerate_topologies(k)? {
        let found = find_gradient_trees(&t, seq, q)?;
        per_topology.push((t.id, found.iter().map(|g| g.sign).sum()));
        trees.extend(found);
    }
    Ok(MorseProduct {
        coefficient: per_topology.iter().map(|p| p.1).sum(),
        per_topology,
        trees,
        action: action(q),
    })
}
