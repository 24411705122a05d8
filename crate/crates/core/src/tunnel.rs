//! Tunnel solids: the region under a least-area annulus that arches between the
//! hemispheres over `η_k^+` and `η_k^-`, closed off by the hemispherical legs below
//! the cut circles `β_k^±`.
//!
//! Only tunnel 1 is solved; tunnel `k` is its image under [`transport_isometry`].

use serde::{Deserialize, Serialize};

use crate::annulus::{max_interior_mean_curvature, reflection_residual, solve_annulus, SpaceCircle};
use crate::bvh::TriBvh;
use crate::curve::{self, eta_circles, CurveParams};
use crate::error::{Error, Result};
use crate::h3::{Circle2, GeodesicPlane, Similarity};
use crate::mesh::{Topology, TriMesh};
use crate::solver::{Obstacle, SolveReport, SolverConfig};
use crate::vec3::{self, V3};

/// Cut height as a fraction of `δ₁`.
pub const DEFAULT_ZD_FRACTION: f64 = 0.25;
/// Height of the flat caps closing the legs, as a fraction of `δ₁`.
pub const CAP_FRACTION: f64 = 0.02;
pub const DEFAULT_ANNULUS_L_MAX: f64 = 0.2;
/// Hyperbolic spacing of the rings on each leg.
const BAND_SPACING: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelParams {
    pub eps1: f64,
    pub del1: f64,
    /// Height of the cut circles `β₁^±`.
    pub zd: f64,
    pub annulus_l_max: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for TunnelParams {
    fn default() -> Self {
        let c = CurveParams::default();
        Self {
            eps1: c.eps1,
            del1: c.del1,
            zd: DEFAULT_ZD_FRACTION * c.del1,
            annulus_l_max: DEFAULT_ANNULUS_L_MAX,
            grad_tol: 1e-6,
            max_iter: 20_000,
        }
    }
}

impl TunnelParams {
    pub fn from_curve(c: &CurveParams) -> Self {
        Self { eps1: c.eps1, del1: c.del1, zd: DEFAULT_ZD_FRACTION * c.del1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        CurveParams { eps1: self.eps1, del1: self.del1, ..CurveParams::default() }.validate()?;
        if !(self.zd > 0.0 && self.zd < self.del1) {
            return Err(Error::Construction(format!("0 < zd < del1 violated (zd = {}, del1 = {})", self.zd, self.del1)));
        }
        if !(CAP_FRACTION * self.del1 < self.zd) {
            return Err(Error::Construction(format!("zd = {} must lie above the cap height", self.zd)));
        }
        if !(self.annulus_l_max > 0.0) {
            return Err(Error::Domain(format!("annulus_l_max must be positive, got {}", self.annulus_l_max)));
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            l_max: self.annulus_l_max,
            l_min: self.annulus_l_max / 6.0,
            ..SolverConfig::default()
        }
    }
}

/// Boundary similarity carrying tunnel 1 onto tunnel `n`: scale `σ_n`, a half-turn for
/// even `n`, and the midpoint `(7/4, 0)` of the first corridor onto that of corridor `n`.
pub fn transport_isometry(n: usize) -> Result<Similarity> {
    let s = curve::scale(n)?;
    let side = curve::BoundarySide::of_index(n).sign();
    let rotation = if side > 0.0 { 0.0 } else { std::f64::consts::PI };
    let mid1 = 0.5 * (curve::radius(1)? + curve::radius(2)?);
    let mid = side * 0.5 * (curve::radius(n)? + curve::radius(n + 1)?);
    // R·(σ mid1, 0) = (side σ mid1, 0)
    Ok(Similarity::new(s, rotation, [mid - side * s * mid1, 0.0]))
}

/// Closed tunnel surface with the annulus it was built from.
#[derive(Debug, Clone)]
pub struct TunnelSolid {
    pub index: usize,
    pub transport: Similarity,
    pub plus: Circle2,
    pub minus: Circle2,
    /// Height of `β^±`.
    pub zd: f64,
    pub z_cap: f64,
    pub annulus: TriMesh,
    /// Closed, outward oriented.
    pub surface: TriMesh,
    pub report: SolveReport,
    bvh: TriBvh,
    lo: V3,
    hi: V3,
}

/// Summary numbers for a tunnel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelSummary {
    pub index: usize,
    pub zd: f64,
    pub z_cap: f64,
    pub max_height: f64,
    pub annulus_area: f64,
    pub max_mean_curvature: f64,
    pub reflection_residual: f64,
    pub neck_height: Option<f64>,
    pub report: SolveReport,
}

impl TunnelSolid {
    /// Solves the annulus between `β₁^±` and closes it into a solid.
    pub fn build_first(params: &TunnelParams) -> Result<Self> {
        params.validate()?;
        let cp = CurveParams { eps1: params.eps1, del1: params.del1, ..CurveParams::default() };
        let fp = eta_circles(1, &cp)?;
        let r = (params.del1 * params.del1 - params.zd * params.zd).sqrt();
        let up = [0.0, 0.0, 1.0];
        let bp = SpaceCircle::new([fp.plus_circle.center[0], fp.plus_circle.center[1], params.zd], up, r);
        let bm = SpaceCircle::new([fp.minus_circle.center[0], fp.minus_circle.center[1], params.zd], up, r);
        let (annulus, report) = solve_annulus(&bp, &bm, &params.solver_config())?;
        let z_cap = CAP_FRACTION * params.del1;
        let surface = close_annulus(&annulus, &[fp.plus_circle, fp.minus_circle], params.zd, z_cap)?;
        Ok(Self::assemble(1, Similarity::identity(), fp.plus_circle, fp.minus_circle, params.zd, z_cap, annulus, surface, report))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        index: usize,
        transport: Similarity,
        plus: Circle2,
        minus: Circle2,
        zd: f64,
        z_cap: f64,
        annulus: TriMesh,
        surface: TriMesh,
        report: SolveReport,
    ) -> Self {
        let bvh = TriBvh::from_mesh(&surface.vertices, &surface.faces);
        let (lo, hi) = bvh.bounds().unwrap_or(([0.0; 3], [0.0; 3]));
        Self { index, transport, plus, minus, zd, z_cap, annulus, surface, report, bvh, lo, hi }
    }

    /// Image of tunnel 1 as tunnel `k`. `self` must be tunnel 1.
    pub fn transported(&self, k: usize) -> Result<Self> {
        if self.index != 1 {
            return Err(Error::Domain("only tunnel 1 can be transported".into()));
        }
        let g = transport_isometry(k)?;
        let f = |p: V3| g.apply_array(p);
        let (plus, minus) = if g.rotation == 0.0 {
            (g.apply_circle(&self.plus), g.apply_circle(&self.minus))
        } else {
            // the half-turn swaps the two sides of the corridor
            (g.apply_circle(&self.minus), g.apply_circle(&self.plus))
        };
        Ok(Self::assemble(
            k,
            g,
            plus,
            minus,
            g.scale * self.zd,
            g.scale * self.z_cap,
            self.annulus.map_vertices(f),
            self.surface.map_vertices(f),
            self.report.clone(),
        ))
    }

    pub fn planes(&self) -> [GeodesicPlane; 2] {
        [self.plus, self.minus].map(|c| GeodesicPlane::Hemisphere { center: c.center, radius: c.radius })
    }

    pub fn max_height(&self) -> f64 {
        self.hi[2]
    }

    pub fn bounds(&self) -> (V3, V3) {
        (self.lo, self.hi)
    }

    fn near_box(&self, p: V3, reach: f64) -> bool {
        (0..3).all(|i| p[i] >= self.lo[i] - reach && p[i] <= self.hi[i] + reach)
    }

    /// Point-in-solid test.
    pub fn contains(&self, p: V3) -> bool {
        self.near_box(p, 0.0) && self.bvh.inside_by_parity(p)
    }

    /// Euclidean distance from `p` to the surface, negative inside.
    pub fn signed_euclidean(&self, p: V3) -> f64 {
        let d = self.bvh.closest_point(p, f64::INFINITY).map_or(f64::INFINITY, |c| c.0);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Lowest point of the annulus over the corridor centre line, if the annulus crosses it.
    pub fn neck_height(&self) -> Option<f64> {
        let [a, b] = [self.plus.center, self.minus.center];
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let axis = vec3::normalize([b[0] - a[0], b[1] - a[1], 0.0]);
        let side = |p: V3| (p[0] - mid[0]) * axis[0] + (p[1] - mid[1]) * axis[1];
        let m = &self.annulus;
        let mut best: Option<f64> = None;
        for f in &m.faces {
            for k in 0..3 {
                let (p, q) = (m.vertices[f[k]], m.vertices[f[(k + 1) % 3]]);
                let (sp, sq) = (side(p), side(q));
                if (sp > 0.0) != (sq > 0.0) {
                    let t = sp / (sp - sq);
                    let z = p[2] + t * (q[2] - p[2]);
                    best = Some(best.map_or(z, |b: f64| b.min(z)));
                }
            }
        }
        best
    }

    pub fn summary(&self, cfg: &SolverConfig) -> TunnelSummary {
        let [a, b] = [self.plus.center, self.minus.center];
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let axis = vec3::normalize([b[0] - a[0], b[1] - a[1], 0.0]);
        let mirror = |p: V3| {
            let d = (p[0] - mid[0]) * axis[0] + (p[1] - mid[1]) * axis[1];
            [p[0] - 2.0 * d * axis[0], p[1] - 2.0 * d * axis[1], p[2]]
        };
        TunnelSummary {
            index: self.index,
            zd: self.zd,
            z_cap: self.z_cap,
            max_height: self.max_height(),
            annulus_area: crate::area::mesh_area(&self.annulus, cfg.quad_order),
            max_mean_curvature: max_interior_mean_curvature(&self.annulus, cfg),
            reflection_residual: reflection_residual(&self.annulus, mirror),
            neck_height: self.neck_height(),
            report: self.report.clone(),
        }
    }
}

impl Obstacle for TunnelSolid {
    fn signed_distance(&self, p: V3, reach: f64) -> Option<(f64, V3)> {
        if !self.near_box(p, reach) {
            return None;
        }
        let inside = self.bvh.inside_by_parity(p);
        let (d, q, t) = self.bvh.closest_point(p, if inside { f64::INFINITY } else { reach })?;
        let dir = if d > 1e-15 {
            vec3::scale(vec3::sub(p, q), if inside { -1.0 / d } else { 1.0 / d })
        } else {
            let [a, b, c] = self.bvh.triangles()[t];
            vec3::normalize(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)))
        };
        Some((if inside { -d } else { d }, dir))
    }
}

/// Point-in-solid test against any of the given tunnels.
pub fn is_inside_tunnel(p: V3, tunnels: &[TunnelSolid]) -> bool {
    tunnels.iter().any(|t| t.contains(p))
}

/// Closes the annulus with the hemispherical legs below `β^±` (ring spacing about
/// [`BAND_SPACING`]) and flat caps at `z_cap`, then orients outward.
fn close_annulus(annulus: &TriMesh, feet: &[Circle2; 2], zd: f64, z_cap: f64) -> Result<TriMesh> {
    let loops = annulus.boundary_loops();
    if loops.len() != 2 {
        return Err(Error::Construction(format!("annulus has {} boundary loops", loops.len())));
    }
    let mut verts = annulus.vertices.clone();
    let mut faces = annulus.faces.clone();
    let rings = ((zd / z_cap).ln() / BAND_SPACING).ceil().max(1.0) as usize;
    for lp in &loops {
        let first = annulus.vertices[lp[0]];
        let foot = feet
            .iter()
            .min_by(|a, b| {
                let d = |c: &Circle2| (first[0] - c.center[0]).hypot(first[1] - c.center[1]);
                d(a).total_cmp(&d(b))
            })
            .expect("two feet");
        let c = foot.center;
        if let Some(v) = lp.iter().map(|&i| annulus.vertices[i]).find(|v| (v[2] - zd).abs() > 1e-9 * zd) {
            return Err(Error::Construction(format!("boundary vertex {v:?} is off the cut height {zd}")));
        }
        let angles: Vec<f64> = lp.iter().map(|&i| {
            let v = annulus.vertices[i];
            (v[1] - c[1]).atan2(v[0] - c[0])
        }).collect();
        let mut outer = lp.clone();
        for k in 1..=rings {
            let z = zd * (z_cap / zd).powf(k as f64 / rings as f64);
            let rho = (foot.radius * foot.radius - z * z).sqrt();
            let start = verts.len();
            verts.extend(angles.iter().map(|a| [c[0] + rho * a.cos(), c[1] + rho * a.sin(), z]));
            let inner: Vec<usize> = (start..start + angles.len()).collect();
            let m = inner.len();
            for j in 0..m {
                let (a, b) = (outer[j], outer[(j + 1) % m]);
                let (d, e) = (inner[j], inner[(j + 1) % m]);
                faces.push([a, d, b]);
                faces.push([b, d, e]);
            }
            outer = inner;
        }
        let centre = verts.len();
        verts.push([c[0], c[1], z_cap]);
        let m = outer.len();
        for j in 0..m {
            faces.push([outer[j], centre, outer[(j + 1) % m]]);
        }
    }
    let fixed = vec![true; verts.len()];
    let mut surface = TriMesh::new(verts, faces, fixed, Topology::Sphere);
    surface.orient_consistently()?;
    surface.validate()?;
    Ok(surface)
}
