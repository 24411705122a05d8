//! Upper half-space model of hyperbolic 3-space.
//!
//! Points are `(x, y, z)` with `z > 0` and metric `(dx² + dy² + dz²) / z²`.
//! The sphere at infinity is the plane `z = 0` plus a point at infinity.
//! Totally geodesic planes are hemispheres orthogonal to `z = 0` or vertical
//! half-planes; the only isometries modelled here are boundary similarities
//! `w ↦ λ R_θ w + t`, which extend to `(w, z) ↦ (λ R_θ w + t, λ z)`.

use serde::{Deserialize, Serialize};

use crate::vec3::{self, V3};

/// Absolute tolerance (model units) used by [`side_of_plane`] for "on".
pub const DEFAULT_ON_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpperHalfPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UpperHalfPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        debug_assert!(z > 0.0, "upper half-space point needs z > 0, got {z}");
        Self { x, y, z }
    }

    pub fn to_array(self) -> V3 {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: V3) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl From<V3> for UpperHalfPoint {
    fn from(a: V3) -> Self {
        Self::from_array(a)
    }
}

/// A point of the sphere at infinity: the boundary plane `z = 0` or `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    Finite { x: f64, y: f64 },
    Infinity,
}

impl BoundaryPoint {
    pub fn finite(x: f64, y: f64) -> Self {
        BoundaryPoint::Finite { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle2 {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Circle2 {
    pub fn new(center: [f64; 2], radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        Self { center, radius }
    }

    pub fn point_at(&self, angle: f64) -> [f64; 2] {
        [
            self.center[0] + self.radius * angle.cos(),
            self.center[1] + self.radius * angle.sin(),
        ]
    }

    /// Euclidean distance from `p` to the closed disk bounded by this circle.
    pub fn distance_to_disk(&self, p: [f64; 2]) -> f64 {
        let d = ((p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2)).sqrt();
        (d - self.radius).max(0.0)
    }
}

/// A totally geodesic plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GeodesicPlane {
    /// Hemisphere over the boundary circle with this center and radius.
    Hemisphere { center: [f64; 2], radius: f64 },
    /// Vertical half-plane over the line through `point` with unit `direction`.
    Vertical { point: [f64; 2], direction: [f64; 2] },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Negative,
    On,
    Positive,
}

impl GeodesicPlane {
    /// Signed Euclidean distance from `p` to the plane's carrying sphere/plane.
    ///
    /// Negative inside the hemisphere; for vertical planes, negative to the right
    /// of `direction`.
    pub fn signed_euclidean(&self, p: &UpperHalfPoint) -> f64 {
        match *self {
            GeodesicPlane::Hemisphere { center, radius } => {
                let dx = p.x - center[0];
                let dy = p.y - center[1];
                (dx * dx + dy * dy + p.z * p.z).sqrt() - radius
            }
            GeodesicPlane::Vertical { point, direction } => {
                let dx = p.x - point[0];
                let dy = p.y - point[1];
                direction[0] * dy - direction[1] * dx
            }
        }
    }

    /// Closed-form hyperbolic distance from `p` to the plane.
    pub fn hyp_distance(&self, p: &UpperHalfPoint) -> f64 {
        match *self {
            GeodesicPlane::Hemisphere { center, radius } => {
                let dx = p.x - center[0];
                let dy = p.y - center[1];
                let s2 = dx * dx + dy * dy + p.z * p.z;
                ((s2 - radius * radius).abs() / (2.0 * radius * p.z)).asinh()
            }
            GeodesicPlane::Vertical { .. } => (self.signed_euclidean(p).abs() / p.z).asinh(),
        }
    }

    /// Point on the plane at boundary-angle `theta` and height fraction; used for sampling.
    pub fn sample(&self, theta: f64, s: f64) -> UpperHalfPoint {
        match *self {
            GeodesicPlane::Hemisphere { center, radius } => {
                // geodesic polar coordinates about the apex
                let r = radius * s.tanh();
                UpperHalfPoint::new(
                    center[0] + r * theta.cos(),
                    center[1] + r * theta.sin(),
                    radius / s.cosh(),
                )
            }
            GeodesicPlane::Vertical { point, direction } => {
                UpperHalfPoint::new(point[0] + theta * direction[0], point[1] + theta * direction[1], s.exp())
            }
        }
    }
}

/// Horosphere `z = height` centred at `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horosphere {
    pub height: f64,
}

impl Horosphere {
    pub fn new(height: f64) -> Self {
        debug_assert!(height > 0.0);
        Self { height }
    }

    /// Mean curvature with respect to the normal pointing into the horoball.
    pub fn mean_curvature(&self) -> f64 {
        1.0
    }

    pub fn in_horoball(&self, p: &UpperHalfPoint) -> bool {
        p.z >= self.height
    }
}

/// Boundary similarity `w ↦ scale · R(rotation) · w + translation`, fixing `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Default for Similarity {
    fn default() -> Self {
        Self::identity()
    }
}

impl Similarity {
    pub fn identity() -> Self {
        Self { scale: 1.0, rotation: 0.0, translation: [0.0, 0.0] }
    }

    pub fn new(scale: f64, rotation: f64, translation: [f64; 2]) -> Self {
        debug_assert!(scale > 0.0);
        Self { scale, rotation, translation }
    }

    /// Linear part applied to a boundary vector.
    fn linear(&self, w: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.rotation.sin_cos();
        [self.scale * (c * w[0] - s * w[1]), self.scale * (s * w[0] + c * w[1])]
    }

    pub fn apply_boundary(&self, w: [f64; 2]) -> [f64; 2] {
        let l = self.linear(w);
        [l[0] + self.translation[0], l[1] + self.translation[1]]
    }

    pub fn apply_array(&self, p: V3) -> V3 {
        let w = self.apply_boundary([p[0], p[1]]);
        [w[0], w[1], self.scale * p[2]]
    }

    pub fn apply_circle(&self, c: &Circle2) -> Circle2 {
        Circle2::new(self.apply_boundary(c.center), self.scale * c.radius)
    }

    pub fn apply_plane(&self, p: &GeodesicPlane) -> GeodesicPlane {
        match *p {
            GeodesicPlane::Hemisphere { center, radius } => GeodesicPlane::Hemisphere {
                center: self.apply_boundary(center),
                radius: self.scale * radius,
            },
            GeodesicPlane::Vertical { point, direction } => {
                let (s, c) = self.rotation.sin_cos();
                GeodesicPlane::Vertical {
                    point: self.apply_boundary(point),
                    direction: [c * direction[0] - s * direction[1], s * direction[0] + c * direction[1]],
                }
            }
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Similarity) -> Similarity {
        let t = self.apply_boundary(other.translation);
        Similarity {
            scale: self.scale * other.scale,
            rotation: self.rotation + other.rotation,
            translation: t,
        }
    }

    pub fn inverse(&self) -> Similarity {
        let inv = Similarity { scale: 1.0 / self.scale, rotation: -self.rotation, translation: [0.0, 0.0] };
        let t = inv.linear(self.translation);
        Similarity { translation: [-t[0], -t[1]], ..inv }
    }
}

pub fn apply_isometry(s: &Similarity, p: &UpperHalfPoint) -> UpperHalfPoint {
    UpperHalfPoint::from_array(s.apply_array(p.to_array()))
}

/// Hyperbolic distance, `2 asinh(|p − q| / (2 √(z_p z_q)))`.
///
/// Algebraically equal to `arccosh(1 + |p − q|² / (2 z_p z_q))` but accurate for nearby points.
pub fn hyp_distance(p: &UpperHalfPoint, q: &UpperHalfPoint) -> f64 {
    hyp_distance_arr(p.to_array(), q.to_array())
}

#[inline]
pub fn hyp_distance_arr(p: V3, q: V3) -> f64 {
    let e = vec3::dist(p, q);
    2.0 * (e / (2.0 * (p[2] * q[2]).sqrt())).asinh()
}

/// Geodesic arc or ray carried by a vertical line or by a circle orthogonal to `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeodesicArc {
    /// Vertical line over `foot`; spans heights between `z_start` and `z_end` (`0` = boundary, `∞` allowed).
    Vertical { foot: [f64; 2], z_start: f64, z_end: f64 },
    /// Circle in the vertical plane through `origin` with unit horizontal `direction`,
    /// centre at `origin + center_offset · direction` (height 0) and radius `radius`.
    /// The arc runs from parameter `t_start` to `t_end` along `direction`.
    Circle { origin: [f64; 2], direction: [f64; 2], center_offset: f64, radius: f64, t_start: f64, t_end: f64 },
}

impl GeodesicArc {
    /// Height of the carrying circle's centre (always 0: the arc meets the boundary orthogonally).
    pub fn center_height(&self) -> f64 {
        0.0
    }

    /// The point of the arc at height `z` on the branch that ends at the arc's terminal point.
    ///
    /// For rays to the boundary and heights below the starting point this is unique.
    pub fn point_at_height(&self, z: f64) -> Option<UpperHalfPoint> {
        if z <= 0.0 {
            return None;
        }
        match *self {
            GeodesicArc::Vertical { foot, z_start, z_end } => {
                let (lo, hi) = if z_start <= z_end { (z_start, z_end) } else { (z_end, z_start) };
                (z >= lo && z <= hi).then(|| UpperHalfPoint::new(foot[0], foot[1], z))
            }
            GeodesicArc::Circle { origin, direction, center_offset, radius, t_start, t_end } => {
                if z > radius {
                    return None;
                }
                let half = (radius * radius - z * z).sqrt();
                let candidates = if t_end >= center_offset {
                    [center_offset + half, center_offset - half]
                } else {
                    [center_offset - half, center_offset + half]
                };
                let (lo, hi) = if t_start <= t_end { (t_start, t_end) } else { (t_end, t_start) };
                candidates
                    .into_iter()
                    .find(|t| *t >= lo - 1e-12 && *t <= hi + 1e-12)
                    .map(|t| UpperHalfPoint::new(origin[0] + t * direction[0], origin[1] + t * direction[1], z))
            }
        }
    }
}

/// The geodesic ray from `p` limiting on `q`.
pub fn geodesic_to_boundary(p: &UpperHalfPoint, q: BoundaryPoint) -> GeodesicArc {
    match q {
        BoundaryPoint::Infinity => GeodesicArc::Vertical { foot: [p.x, p.y], z_start: p.z, z_end: f64::INFINITY },
        BoundaryPoint::Finite { x, y } => {
            let vx = x - p.x;
            let vy = y - p.y;
            let d = (vx * vx + vy * vy).sqrt();
            if d <= 1e-15 * (1.0 + p.z) {
                return GeodesicArc::Vertical { foot: [p.x, p.y], z_start: p.z, z_end: 0.0 };
            }
            // centre a on the line from p's foot towards q: a² + z² = R², (d − a)² = R²
            let a = (d * d - p.z * p.z) / (2.0 * d);
            let radius = (a * a + p.z * p.z).sqrt();
            GeodesicArc::Circle {
                origin: [p.x, p.y],
                direction: [vx / d, vy / d],
                center_offset: a,
                radius,
                t_start: 0.0,
                t_end: d,
            }
        }
    }
}

/// The point a fraction `t ∈ [0, 1]` of the hyperbolic distance along the geodesic segment from `p` to `q`.
pub fn geodesic_interpolate(p: V3, q: V3, t: f64) -> V3 {
    let (vx, vy) = (q[0] - p[0], q[1] - p[1]);
    let d = (vx * vx + vy * vy).sqrt();
    if d <= 1e-14 * (p[2] + q[2]) {
        let z = p[2] * (q[2] / p[2]).powf(t);
        return [p[0] + t * vx, p[1] + t * vy, z];
    }
    let a = (d * d + q[2] * q[2] - p[2] * p[2]) / (2.0 * d);
    let r = (a * a + p[2] * p[2]).sqrt();
    // arclength along the carrying circle is ln tan(θ/2)
    let sp = (p[2].atan2(-a) * 0.5).tan().ln();
    let sq = (q[2].atan2(d - a) * 0.5).tan().ln();
    let th = 2.0 * (sp + t * (sq - sp)).exp().atan();
    let u = a + r * th.cos();
    [p[0] + u * vx / d, p[1] + u * vy / d, r * th.sin()]
}

pub fn plane_from_circle(c: &Circle2) -> GeodesicPlane {
    GeodesicPlane::Hemisphere { center: c.center, radius: c.radius }
}

pub fn side_of_plane(plane: &GeodesicPlane, p: &UpperHalfPoint) -> Side {
    side_of_plane_tol(plane, p, DEFAULT_ON_TOL)
}

pub fn side_of_plane_tol(plane: &GeodesicPlane, p: &UpperHalfPoint, tol: f64) -> Side {
    let s = plane.signed_euclidean(p);
    if s.abs() <= tol {
        Side::On
    } else if s < 0.0 {
        Side::Negative
    } else {
        Side::Positive
    }
}

/// How the conformal weight `z⁻²` is averaged over a flat triangle: interior quadrature
/// rules with 1, 3 or 6 points, or closed-form integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadOrder {
    One,
    Three,
    Six,
    Exact,
}

impl QuadOrder {
    /// `0` selects closed-form integration.
    pub fn from_points(n: usize) -> Option<Self> {
        match n {
            0 => Some(QuadOrder::Exact),
            1 => Some(QuadOrder::One),
            3 => Some(QuadOrder::Three),
            6 => Some(QuadOrder::Six),
            _ => None,
        }
    }

    pub fn points(self) -> usize {
        match self {
            QuadOrder::One => 1,
            QuadOrder::Three => 3,
            QuadOrder::Six => 6,
            QuadOrder::Exact => 0,
        }
    }

    /// (barycentric point, weight) pairs, weights summing to 1; empty for [`QuadOrder::Exact`].
    pub fn rule(self) -> &'static [([f64; 3], f64)] {
        match self {
            QuadOrder::One => &QUAD1,
            QuadOrder::Three => &QUAD3,
            QuadOrder::Six => &QUAD6,
            QuadOrder::Exact => &[],
        }
    }

    /// Mean of `z⁻²` over a flat triangle with vertex heights `z`, and its partial derivatives.
    pub fn mean_weight(self, z: [f64; 3]) -> (f64, [f64; 3]) {
        if self == QuadOrder::Exact {
            return exact_mean_weight(z);
        }
        let mut q = 0.0;
        let mut dq = [0.0; 3];
        for (bary, w) in self.rule() {
            let h = bary[0] * z[0] + bary[1] * z[1] + bary[2] * z[2];
            let iz2 = 1.0 / (h * h);
            q += w * iz2;
            let d = -2.0 * w * iz2 / h;
            for k in 0..3 {
                dq[k] += d * bary[k];
            }
        }
        (q, dq)
    }
}

/// Below this, the series forms are used instead of the logarithmic closed forms.
const SERIES_CUTOFF: f64 = 0.1;
const SERIES_TERMS: usize = 20;

/// `ψ(u) = (−ln(1−u) − u)/u` and `ψ'(u)`, for `0 ≤ u < 1`.
fn psi(u: f64) -> (f64, f64) {
    if u < SERIES_CUTOFF {
        // Σ_{k≥1} u^k/(k+1)
        let (mut f, mut d, mut p) = (0.0, 0.0, 1.0);
        for k in 1..=SERIES_TERMS {
            d += k as f64 * p / (k + 1) as f64;
            p *= u;
            f += p / (k + 1) as f64;
        }
        (f, d)
    } else {
        let f = (-(-u).ln_1p() - u) / u;
        (f, 1.0 / (1.0 - u) - f / u)
    }
}

/// `ω(v) = (v − ln(1+v))/v` and `ω'(v)`, for `v ≥ 0`.
fn omega(v: f64) -> (f64, f64) {
    if v < SERIES_CUTOFF {
        // Σ_{k≥1} (−1)^{k+1} v^k/(k+1)
        let (mut f, mut d, mut p) = (0.0, 0.0, 1.0);
        for k in 1..=SERIES_TERMS {
            let s = if k % 2 == 1 { 1.0 } else { -1.0 };
            d += s * k as f64 * p / (k + 1) as f64;
            p *= v;
            f += s * p / (k + 1) as f64;
        }
        (f, d)
    } else {
        let f = 1.0 - v.ln_1p() / v;
        (f, 1.0 / (1.0 + v) - f / v)
    }
}

/// `S(u, v) = (ψ(u) + ω(v))/(u + v)` with partials.
fn s_uv(u: f64, v: f64) -> (f64, f64, f64) {
    let t = u + v;
    if t < SERIES_CUTOFF {
        // Σ_{k≥1} h_{k−1}(u, −v)/(k+1), h the complete homogeneous polynomial
        let w = -v;
        let terms = if t > 0.0 { ((-39.0 / t.ln()).ceil() as usize).clamp(2, SERIES_TERMS) } else { 2 };
        let mut pu = [1.0; SERIES_TERMS + 1];
        let mut pw = [1.0; SERIES_TERMS + 1];
        for i in 1..=terms {
            pu[i] = pu[i - 1] * u;
            pw[i] = pw[i - 1] * w;
        }
        let (mut f, mut fu, mut fw) = (0.0, 0.0, 0.0);
        for k in 1..=terms {
            let c = 1.0 / (k + 1) as f64;
            let m = k - 1;
            for j in 0..=m {
                f += c * pu[m - j] * pw[j];
                if j < m {
                    fu += c * (m - j) as f64 * pu[m - j - 1] * pw[j];
                }
                if j > 0 {
                    fw += c * j as f64 * pu[m - j] * pw[j - 1];
                }
            }
        }
        return (f, fu, -fw);
    }
    let (p, dp) = psi(u);
    let (o, dq) = omega(v);
    let s = (p + o) / t;
    (s, (dp - s) / t, (dq - s) / t)
}

/// Closed-form mean of `z⁻²` over a flat triangle, where `z` is linear in the vertex heights.
fn exact_mean_weight(z: [f64; 3]) -> (f64, [f64; 3]) {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| z[a].total_cmp(&z[b]));
    let (z1, z2, z3) = (z[idx[0]], z[idx[1]], z[idx[2]]);
    let u = (z2 - z1) / z2;
    let v = (z3 - z2) / z2;
    let (s, su, sv) = s_uv(u, v);
    let iz2 = 1.0 / (z2 * z2);
    let f = 2.0 * s * iz2;
    let d1 = -2.0 * su * iz2 / z2;
    let d3 = 2.0 * sv * iz2 / z2;
    let d2 = 2.0 * iz2 * (su * z1 - sv * z3) * iz2 - 2.0 * f / z2;
    let mut d = [0.0; 3];
    d[idx[0]] = d1;
    d[idx[1]] = d2;
    d[idx[2]] = d3;
    (f, d)
}

const QUAD1: [([f64; 3], f64); 1] = [([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1.0)];

const QUAD3: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

// Dunavant degree-4 rule.
const Q6A: f64 = 0.445_948_490_915_965;
const Q6B: f64 = 0.091_576_213_509_771;
const W6A: f64 = 0.223_381_589_678_011;
const W6B: f64 = 0.109_951_743_655_322;
const QUAD6: [([f64; 3], f64); 6] = [
    ([1.0 - 2.0 * Q6A, Q6A, Q6A], W6A),
    ([Q6A, 1.0 - 2.0 * Q6A, Q6A], W6A),
    ([Q6A, Q6A, 1.0 - 2.0 * Q6A], W6A),
    ([1.0 - 2.0 * Q6B, Q6B, Q6B], W6B),
    ([Q6B, 1.0 - 2.0 * Q6B, Q6B], W6B),
    ([Q6B, Q6B, 1.0 - 2.0 * Q6B], W6B),
];

/// Euclidean area of the flat triangle.
#[inline]
pub fn euclidean_area(a: V3, b: V3, c: V3) -> f64 {
    0.5 * vec3::norm(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)))
}

/// The conformal weight `z⁻²` integrated over the flat triangle: `∫_T z⁻² dA_euc`.
#[inline]
pub fn tri_area_arr(a: V3, b: V3, c: V3, order: QuadOrder) -> f64 {
    let area = euclidean_area(a, b, c);
    if area == 0.0 {
        return 0.0;
    }
    area * order.mean_weight([a[2], b[2], c[2]]).0
}

pub fn tri_area_hyp(p1: &UpperHalfPoint, p2: &UpperHalfPoint, p3: &UpperHalfPoint, order: QuadOrder) -> f64 {
    tri_area_arr(p1.to_array(), p2.to_array(), p3.to_array(), order)
}
