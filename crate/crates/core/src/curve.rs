//! Boundary curves Γₙ at infinity: nested circles `C_k` of radius `1 + 1/k`,
//! spliced by straight bridges that alternate between the right (`x > 0`, odd
//! bridges) and left (`x < 0`, even bridges) sides, plus the tunnel footprint
//! circles `η_k^±` that sit beside each bridge.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::h3::Circle2;

pub const DEFAULT_EPS1: f64 = 0.21;
pub const DEFAULT_DEL1: f64 = 0.20;
pub const DEFAULT_SAMPLES_PER_UNIT: usize = 64;
/// Minimum number of segments on each bridge.
pub const MIN_BRIDGE_SEGMENTS: usize = 8;
const ON_CURVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub eps1: f64,
    pub del1: f64,
    pub samples_per_unit: usize,
    pub n: usize,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self { eps1: DEFAULT_EPS1, del1: DEFAULT_DEL1, samples_per_unit: DEFAULT_SAMPLES_PER_UNIT, n: 1 }
    }
}

impl CurveParams {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !(self.del1 > 0.0) {
            return Err(Error::Construction(format!("del1 > 0 violated (del1 = {})", self.del1)));
        }
        if !(self.del1 < self.eps1) {
            return Err(Error::Construction(format!(
                "del1 < eps1 violated (del1 = {}, eps1 = {})",
                self.del1, self.eps1
            )));
        }
        let gap = radius(1)? - radius(2)?;
        if !(2.0 * self.del1 < gap) {
            return Err(Error::Construction(format!(
                "2*del1 < r1 - r2 = {gap} violated (del1 = {})",
                self.del1
            )));
        }
        if self.samples_per_unit < 16 {
            return Err(Error::Construction(format!(
                "samples_per_unit >= 16 violated (got {})",
                self.samples_per_unit
            )));
        }
        Ok(())
    }

    /// `ε_k = σ_k ε₁`.
    pub fn eps(&self, k: usize) -> Result<f64> {
        Ok(scale(k)? * self.eps1)
    }

    /// `δ_k = σ_k δ₁`.
    pub fn del(&self, k: usize) -> Result<f64> {
        Ok(scale(k)? * self.del1)
    }

    /// Half-width `(ε_k − δ_k)/2` of the corridor carrying bridge `k`.
    pub fn bridge_half_width(&self, k: usize) -> Result<f64> {
        Ok(0.5 * (self.eps(k)? - self.del(k)?))
    }
}

/// Radius `r_k = 1 + 1/k` of the circle `C_k`.
pub fn radius(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("circle index must be >= 1".into()));
    }
    Ok(1.0 + 1.0 / k as f64)
}

/// Scale factor `σ_k = (r_k − r_{k+1}) / (r_1 − r_2) = 2 / (k (k + 1))`.
pub fn scale(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("scale index must be >= 1".into()));
    }
    let k = k as f64;
    Ok(2.0 / (k * (k + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundarySide {
    Right,
    Left,
}

impl BoundarySide {
    /// Side carrying bridge / tunnel `k`: odd indices on the right.
    pub fn of_index(k: usize) -> Self {
        if k % 2 == 1 {
            BoundarySide::Right
        } else {
            BoundarySide::Left
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            BoundarySide::Right => 1.0,
            BoundarySide::Left => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sheet {
    Plus,
    Minus,
}

/// Provenance of a polyline edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeTag {
    Arc(usize),
    Bridge(usize, Sheet),
}

impl fmt::Display for EdgeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeTag::Arc(k) => write!(f, "arc{k}"),
            EdgeTag::Bridge(i, Sheet::Plus) => write!(f, "bridge{i}+"),
            EdgeTag::Bridge(i, Sheet::Minus) => write!(f, "bridge{i}-"),
        }
    }
}

impl std::str::FromStr for EdgeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad edge tag {s:?}"));
        if let Some(rest) = s.strip_prefix("arc") {
            return rest.parse().map(EdgeTag::Arc).map_err(|_| bad());
        }
        let rest = s.strip_prefix("bridge").ok_or_else(bad)?;
        let (num, sheet) = if let Some(r) = rest.strip_suffix('+') {
            (r, Sheet::Plus)
        } else if let Some(r) = rest.strip_suffix('-') {
            (r, Sheet::Minus)
        } else {
            return Err(bad());
        };
        num.parse().map(|i| EdgeTag::Bridge(i, sheet)).map_err(|_| bad())
    }
}

/// The footprint circles `η_k^±` of tunnel `k` on the boundary plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelFootprint {
    pub index: usize,
    pub plus_circle: Circle2,
    pub minus_circle: Circle2,
    pub side: BoundarySide,
}

impl TunnelFootprint {
    pub fn circles(&self) -> [Circle2; 2] {
        [self.plus_circle, self.minus_circle]
    }
}

pub fn eta_circles(k: usize, params: &CurveParams) -> Result<TunnelFootprint> {
    let side = BoundarySide::of_index(k);
    let cx = side.sign() * 0.5 * (radius(k)? + radius(k + 1)?);
    let eps = params.eps(k)?;
    let del = params.del(k)?;
    Ok(TunnelFootprint {
        index: k,
        plus_circle: Circle2::new([cx, eps], del),
        minus_circle: Circle2::new([cx, -eps], del),
        side,
    })
}

/// Index of the bridge that cuts a gap into `C_k` on `side`, if any.
fn gap_bridge(k: usize, side: BoundarySide) -> Option<usize> {
    // bridge j joins C_j and C_{j+1} on side(j); C_k is touched by bridges k-1 and k
    [k, k.wrapping_sub(1)].into_iter().find(|&j| j >= 1 && BoundarySide::of_index(j) == side)
}

/// Endpoints `(upper, lower)` of the gap cut into `C_k` on `side` (the paper's `p_k^±` / `q_k^±`).
pub fn gap_endpoints(k: usize, side: BoundarySide, params: &CurveParams) -> Result<([f64; 2], [f64; 2])> {
    let r = radius(k)?;
    let j = gap_bridge(k, side)
        .ok_or_else(|| Error::Domain(format!("circle C_{k} has no gap on the {side:?} side")))?;
    let w = params.bridge_half_width(j)?;
    if !(w < r) {
        return Err(Error::Construction(format!("gap half-width {w} < r_{k} = {r} violated")));
    }
    let x = side.sign() * (r * r - w * w).sqrt();
    Ok(([x, w], [x, -w]))
}

/// `(start index, tag)` for each maximal run of equal tags around a closed polyline.
pub fn tag_runs(tags: &[EdgeTag]) -> Vec<(usize, EdgeTag)> {
    let mut out: Vec<(usize, EdgeTag)> = Vec::new();
    for (i, t) in tags.iter().enumerate() {
        if out.last().map(|(_, last)| last != t).unwrap_or(true) {
            out.push((i, *t));
        }
    }
    if out.len() > 1 && out.first().map(|f| f.1) == out.last().map(|l| l.1) {
        out.pop();
    }
    out
}

/// Closed polyline realising Γₙ; `tags[i]` labels the edge from vertex `i` to `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaCurve {
    pub n: usize,
    pub vertices: Vec<[f64; 2]>,
    pub tags: Vec<EdgeTag>,
}

impl GammaCurve {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge(&self, i: usize) -> ([f64; 2], [f64; 2]) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }

    /// Tag-run boundaries: `(start vertex, tag)` for each maximal run of equal tags.
    pub fn runs(&self) -> Vec<(usize, EdgeTag)> {
        tag_runs(&self.tags)
    }

    /// Plain-text export: one `x y tag` line per vertex (tag of the outgoing edge).
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.len() * 48);
        for (v, t) in self.vertices.iter().zip(&self.tags) {
            s.push_str(&format!("{:.17e} {:.17e} {}\n", v[0], v[1], t));
        }
        s
    }

    pub fn from_text(n: usize, text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut tags = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let mut num = || -> Result<f64> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("line {}: missing field", lineno + 1)))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let x = num()?;
            let y = num()?;
            let tag = line
                .split_whitespace()
                .nth(2)
                .ok_or_else(|| Error::Parse(format!("line {}: missing tag", lineno + 1)))?
                .parse()?;
            vertices.push([x, y]);
            tags.push(tag);
        }
        Ok(Self { n, vertices, tags })
    }
}

struct Builder {
    spu: f64,
    vertices: Vec<[f64; 2]>,
    tags: Vec<EdgeTag>,
}

impl Builder {
    /// Arc of circle `k` from `a0` to `a1` (signed sweep), excluding its end point.
    fn arc(&mut self, k: usize, r: f64, a0: f64, a1: f64) {
        let segs = ((r * (a1 - a0).abs() * self.spu).ceil() as usize).max(2);
        for i in 0..segs {
            let a = a0 + (a1 - a0) * i as f64 / segs as f64;
            self.vertices.push([r * a.cos(), r * a.sin()]);
            self.tags.push(EdgeTag::Arc(k));
        }
    }

    fn segment(&mut self, tag: EdgeTag, p: [f64; 2], q: [f64; 2]) {
        let len = ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt();
        let segs = ((len * self.spu).ceil() as usize).max(MIN_BRIDGE_SEGMENTS);
        for i in 0..segs {
            let t = i as f64 / segs as f64;
            self.vertices.push([p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]);
            self.tags.push(tag);
        }
    }
}

/// Angle of the upper gap endpoint on `side` of a circle of radius `r` with half-width `w`.
fn gap_angle(side: BoundarySide, r: f64, w: f64) -> f64 {
    let a = (w / r).asin();
    match side {
        BoundarySide::Right => a,
        BoundarySide::Left => PI - a,
    }
}

pub fn build_gamma(params: &CurveParams) -> Result<GammaCurve> {
    params.validate()?;
    let n = params.n;
    let mut b = Builder { spu: params.samples_per_unit as f64, vertices: Vec::new(), tags: Vec::new() };
    if n == 1 {
        b.arc(1, radius(1)?, 0.0, 2.0 * PI);
        return Ok(GammaCurve { n, vertices: b.vertices, tags: b.tags });
    }
    for k in 1..n {
        let w = params.bridge_half_width(k)?;
        let corridor = params.eps(k)? - params.del(k)?;
        // bridge corridor |y| < w must stay clear of the footprints |y| >= eps - del
        if !(w < corridor) {
            return Err(Error::Construction(format!("bridge {k}: corridor half-width {w} < eps-del violated")));
        }
        for j in [k, k + 1] {
            let r = radius(j)?;
            if !(w < r) {
                return Err(Error::Construction(format!("gap half-width {w} < r_{j} = {r} violated")));
            }
        }
    }
    let half_width = |j: usize| params.bridge_half_width(j);
    // lower / upper endpoint angles of C_k's gap on the side of bridge j
    let lower = |k: usize, j: usize| -> Result<f64> {
        let side = BoundarySide::of_index(j);
        Ok(-gap_angle(side, radius(k)?, half_width(j)?))
    };
    let upper = |k: usize, j: usize| -> Result<f64> {
        let side = BoundarySide::of_index(j);
        Ok(gap_angle(side, radius(k)?, half_width(j)?))
    };
    let point = |k: usize, a: f64| -> Result<[f64; 2]> {
        let r = radius(k)?;
        Ok([r * a.cos(), r * a.sin()])
    };

    // C_1, counter-clockwise from p_1^+ to p_1^-
    let a1 = upper(1, 1)?;
    b.arc(1, radius(1)?, a1, 2.0 * PI - a1);
    // descend through the lower half
    for k in 1..n {
        let from = point(k, lower(k, k)?)?;
        let to = point(k + 1, lower(k + 1, k)?)?;
        b.segment(EdgeTag::Bridge(k, Sheet::Minus), from, to);
        let c = k + 1;
        let r = radius(c)?;
        let start = lower(c, k)?;
        if c < n {
            // lower arc of C_c towards the gap of bridge c on the other side
            b.arc(c, r, start, lower(c, c)?);
        } else {
            // innermost circle: long way round to the upper endpoint of the same gap
            let end = upper(c, k)?;
            let end = match BoundarySide::of_index(k) {
                BoundarySide::Right => end - 2.0 * PI,
                BoundarySide::Left => end,
            };
            b.arc(c, r, start, end);
        }
    }
    // climb back through the upper half
    for k in (1..n).rev() {
        let from = point(k + 1, upper(k + 1, k)?)?;
        let to = point(k, upper(k, k)?)?;
        b.segment(EdgeTag::Bridge(k, Sheet::Plus), from, to);
        if k >= 2 {
            let r = radius(k)?;
            b.arc(k, r, upper(k, k)?, upper(k, k - 1)?);
        }
    }
    Ok(GammaCurve { n, vertices: b.vertices, tags: b.tags })
}

fn seg_dist_to_point(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Winding number of the closed polyline about `pt`.
pub fn winding_number(curve: &[[f64; 2]], pt: [f64; 2]) -> Result<i32> {
    let n = curve.len();
    let mut wn = 0;
    for i in 0..n {
        let a = curve[i];
        let b = curve[(i + 1) % n];
        if seg_dist_to_point(a, b, pt) <= ON_CURVE_TOL {
            return Err(Error::Domain(format!("point {pt:?} lies on the curve")));
        }
        let is_left = (b[0] - a[0]) * (pt[1] - a[1]) - (pt[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= pt[1] {
            if b[1] > pt[1] && is_left > 0.0 {
                wn += 1;
            }
        } else if b[1] <= pt[1] && is_left < 0.0 {
            wn -= 1;
        }
    }
    Ok(wn)
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when no two non-adjacent edges of the closed polyline meet.
///
/// Edges are binned on a uniform grid so only nearby pairs are tested.
pub fn is_simple(curve: &[[f64; 2]]) -> bool {
    let n = curve.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (curve[i], curve[(i + 1) % n]);
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let mut max_len: f64 = 0.0;
    for i in 0..n {
        let (a, b) = edge(i);
        for d in 0..2 {
            lo[d] = lo[d].min(a[d]);
            hi[d] = hi[d].max(a[d]);
        }
        max_len = max_len.max(((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt());
    }
    let cell = (max_len * 2.0).max(1e-9);
    let nx = (((hi[0] - lo[0]) / cell).floor() as usize + 1).min(4096);
    let ny = (((hi[1] - lo[1]) / cell).floor() as usize + 1).min(4096);
    let cell_x = ((hi[0] - lo[0]) / nx as f64).max(1e-12);
    let cell_y = ((hi[1] - lo[1]) / ny as f64).max(1e-12);
    let idx = |p: [f64; 2]| -> (usize, usize) {
        (
            (((p[0] - lo[0]) / cell_x) as usize).min(nx - 1),
            (((p[1] - lo[1]) / cell_y) as usize).min(ny - 1),
        )
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    for i in 0..n {
        let (a, b) = edge(i);
        let (ax, ay) = idx(a);
        let (bx, by) = idx(b);
        for gx in ax.min(bx)..=ax.max(bx) {
            for gy in ay.min(by)..=ay.max(by) {
                grid[gy * nx + gx].push(i);
            }
        }
    }
    for bucket in &grid {
        for (s, &i) in bucket.iter().enumerate() {
            for &j in &bucket[s + 1..] {
                let adjacent = j == (i + 1) % n || i == (j + 1) % n;
                let (a, b) = edge(i);
                let (c, d) = edge(j);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    let (shared, ea, eb) = if j == (i + 1) % n { (b, a, d) } else { (a, b, c) };
                    if orient(ea, shared, eb) == 0.0 {
                        let back = (ea[0] - shared[0]) * (eb[0] - shared[0]) + (ea[1] - shared[1]) * (eb[1] - shared[1]);
                        if back > 0.0 {
                            return false;
                        }
                    }
                    continue;
                }
                if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
    }
    true
}

/// Minimum Euclidean distance from the curve to any footprint disk (`+∞` if there are none).
pub fn clearance(curve: &GammaCurve, footprints: &[TunnelFootprint]) -> f64 {
    let mut best = f64::INFINITY;
    for fp in footprints {
        for c in fp.circles() {
            for i in 0..curve.len() {
                let (a, b) = curve.edge(i);
                let d = seg_dist_to_point(a, b, c.center) - c.radius;
                best = best.min(d.max(0.0));
            }
        }
    }
    best
}

/// All footprints `1..n-1` that Γₙ bridges over.
pub fn footprints_for(params: &CurveParams) -> Result<Vec<TunnelFootprint>> {
    (1..params.n).map(|k| eta_circles(k, params)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub n: usize,
    pub eps1: f64,
    pub del1: f64,
    pub winding: i32,
    pub simple: bool,
    pub clearance: f64,
}

pub fn summarize(curve: &GammaCurve, params: &CurveParams) -> Result<CurveSummary> {
    let fps = footprints_for(params)?;
    Ok(CurveSummary {
        n: curve.n,
        eps1: params.eps1,
        del1: params.del1,
        winding: winding_number(&curve.vertices, [0.0, 0.0])?,
        simple: is_simple(&curve.vertices),
        clearance: clearance(curve, &fps),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params_012_010(n: usize) -> CurveParams {
        CurveParams { eps1: 0.12, del1: 0.10, ..CurveParams::with_n(n) }
    }

    #[test]
    fn radii_and_scales() {
        assert_eq!(radius(1).unwrap(), 2.0);
        assert_eq!(radius(2).unwrap(), 1.5);
        assert!(radius(0).is_err());
        assert!((1..200).all(|k| radius(k).unwrap() > radius(k + 1).unwrap() && radius(k).unwrap() > 1.0));
        assert_eq!(scale(1).unwrap(), 1.0);
        assert!((scale(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((scale(4).unwrap() - 0.1).abs() < 1e-15);
        assert!(scale(0).is_err());
        for k in 1..50 {
            let direct = (radius(k).unwrap() - radius(k + 1).unwrap()) / (radius(1).unwrap() - radius(2).unwrap());
            assert!((direct - scale(k).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn eta_values() {
        let p = params_012_010(1);
        let f1 = eta_circles(1, &p).unwrap();
        assert_eq!(f1.side, BoundarySide::Right);
        assert!((f1.plus_circle.center[0] - 1.75).abs() < 1e-15);
        assert!((f1.plus_circle.center[1] - 0.12).abs() < 1e-15);
        assert!((f1.minus_circle.center[1] + 0.12).abs() < 1e-15);
        assert!((f1.plus_circle.radius - 0.10).abs() < 1e-15);
        let f2 = eta_circles(2, &p).unwrap();
        assert_eq!(f2.side, BoundarySide::Left);
        assert!((f2.plus_circle.center[0] + 17.0 / 12.0).abs() < 1e-14);
        assert!((f2.plus_circle.center[1] - 0.04).abs() < 1e-15);
        assert!((f2.plus_circle.radius - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn footprints_miss_neighbouring_circles() {
        let p = CurveParams::default();
        for k in 1..=20 {
            let fp = eta_circles(k, &p).unwrap();
            for c in fp.circles() {
                for j in [k, k + 1] {
                    let r = radius(j).unwrap();
                    // brute force over samples of C_j
                    let m = 4000;
                    let dmin = (0..m)
                        .map(|i| {
                            let a = 2.0 * PI * i as f64 / m as f64;
                            c.distance_to_disk([r * a.cos(), r * a.sin()])
                        })
                        .fold(f64::INFINITY, f64::min);
                    assert!(dmin > 0.0, "k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn gap_endpoint_values() {
        let p = params_012_010(1);
        let (up, lo) = gap_endpoints(1, BoundarySide::Right, &p).unwrap();
        assert!((up[0] - (4.0f64 - 1e-4).sqrt()).abs() < 1e-15);
        assert!((up[0] - 1.999975).abs() < 1e-6);
        assert!((up[1] - 0.01).abs() < 1e-15 && (lo[1] + 0.01).abs() < 1e-15);
        let (up, _) = gap_endpoints(2, BoundarySide::Right, &p).unwrap();
        assert!((up[0] - 1.499967).abs() < 1e-6 && (up[1] - 0.01).abs() < 1e-15);
        let (up, lo) = gap_endpoints(2, BoundarySide::Left, &p).unwrap();
        let w = (0.04 - 0.1 / 3.0) / 2.0;
        assert!((up[1] - w).abs() < 1e-15 && (lo[1] + w).abs() < 1e-15);
        assert!((up[0] + (2.25 - w * w).sqrt()).abs() < 1e-15);
        assert!(gap_endpoints(1, BoundarySide::Left, &p).is_err());
    }

    #[test]
    fn gap_too_wide_is_a_construction_error() {
        let p = CurveParams { eps1: 10.0, del1: 0.1, ..CurveParams::default() };
        assert!(matches!(gap_endpoints(1, BoundarySide::Right, &p), Err(Error::Construction(_))));
    }

    #[test]
    fn validation_names_inequality() {
        let bad = CurveParams { eps1: 0.3, del1: 0.3, ..CurveParams::with_n(2) };
        let e = bad.validate().unwrap_err().to_string();
        assert!(e.contains("del1 < eps1"), "{e}");
        let bad = CurveParams { eps1: 0.5, del1: 0.3, ..CurveParams::with_n(2) };
        assert!(bad.validate().unwrap_err().to_string().contains("2*del1"));
        let bad = CurveParams { samples_per_unit: 8, ..CurveParams::with_n(2) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn gamma_one_is_the_circle() {
        let g = build_gamma(&CurveParams::with_n(1)).unwrap();
        assert!(g.tags.iter().all(|t| *t == EdgeTag::Arc(1)));
        assert!(g.vertices.iter().all(|v| ((v[0] * v[0] + v[1] * v[1]).sqrt() - 2.0).abs() < 1e-14));
        assert_eq!(winding_number(&g.vertices, [0.0, 0.0]).unwrap(), 1);
    }

    #[test]
    fn gamma_two_structure() {
        let g = build_gamma(&CurveParams::with_n(2)).unwrap();
        let runs = g.runs();
        let tags: Vec<EdgeTag> = runs.iter().map(|r| r.1).collect();
        assert_eq!(
            tags,
            vec![
                EdgeTag::Arc(1),
                EdgeTag::Bridge(1, Sheet::Minus),
                EdgeTag::Arc(2),
                EdgeTag::Bridge(1, Sheet::Plus)
            ]
        );
        assert!(is_simple(&g.vertices));
    }

    #[test]
    fn parity_of_bridges() {
        let g = build_gamma(&CurveParams::with_n(6)).unwrap();
        for i in 0..g.len() {
            if let EdgeTag::Bridge(k, _) = g.tags[i] {
                let (a, b) = g.edge(i);
                assert_eq!(a[0] > 0.0 && b[0] > 0.0, k % 2 == 1);
                assert_eq!(a[0] < 0.0 && b[0] < 0.0, k % 2 == 0);
            }
        }
    }

    #[test]
    fn winding_basics() {
        let circle: Vec<[f64; 2]> = (0..100)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 100.0;
                [2.0 * a.cos(), 2.0 * a.sin()]
            })
            .collect();
        assert_eq!(winding_number(&circle, [10.0, 10.0]).unwrap(), 0);
        let rev: Vec<_> = circle.iter().rev().copied().collect();
        assert_eq!(winding_number(&rev, [0.0, 0.0]).unwrap(), -1);
        assert!(winding_number(&circle, circle[3]).is_err());
    }

    #[test]
    fn clearance_values() {
        let p2 = params_012_010(2);
        let g2 = build_gamma(&p2).unwrap();
        let f1 = eta_circles(1, &p2).unwrap();
        let c = clearance(&g2, &[f1]);
        assert!((c - 0.01).abs() < 1e-3, "{c}");
        let g1 = build_gamma(&params_012_010(1)).unwrap();
        let c1 = clearance(&g1, &[f1]);
        // brute force over dense samples of C_1 against both disks
        let brute = (0..100_000)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / 100_000.0;
                let p = [2.0 * a.cos(), 2.0 * a.sin()];
                f1.plus_circle.distance_to_disk(p).min(f1.minus_circle.distance_to_disk(p))
            })
            .fold(f64::INFINITY, f64::min);
        assert!((c1 - brute).abs() < 1e-3, "{c1} vs {brute}");
        assert!((c1 - (2.0 - (1.75f64.powi(2) + 0.12f64.powi(2)).sqrt() - 0.1)).abs() < 1e-3);
        assert_eq!(clearance(&g2, &[]), f64::INFINITY);
    }

    #[test]
    fn text_roundtrip() {
        let g = build_gamma(&CurveParams::with_n(3)).unwrap();
        let back = GammaCurve::from_text(3, &g.to_text()).unwrap();
        assert_eq!(back.tags, g.tags);
        for (a, b) in back.vertices.iter().zip(&g.vertices) {
            assert_eq!(a, b);
        }
    }
}
