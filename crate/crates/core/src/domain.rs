//! The constraint domains Ωₙ: the region above the horosphere `z = 1/cₙ`, under the
//! hemisphere over the circle of radius 3, and outside the tunnel solids; the cone
//! curves αₙⁱ that bound the minimizing disks; and the initial disks for the solves.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::area::mean_curvature;
use crate::curve::{build_gamma, tag_runs, CurveParams, EdgeTag, GammaCurve, Sheet};
use crate::error::{Error, Result};
use crate::h3::{geodesic_to_boundary, hyp_distance_arr, BoundaryPoint, Circle2, QuadOrder, UpperHalfPoint};
use crate::mesh::{Topology, TriMesh};
use crate::meshgen::cone_mesh;
use crate::solver::{solve_disk_from, ConstraintSet, Obstacle, SolveReport, SolverConfig};
use crate::tunnel::{TunnelParams, TunnelSolid, DEFAULT_ANNULUS_L_MAX, DEFAULT_ZD_FRACTION};
use crate::vec3::V3;

/// Apex of the cones over Γₙ.
pub const CONE_APEX: V3 = [0.0, 0.0, 1.0];
pub const OUTER_RADIUS: f64 = 3.0;
/// Largest hyperbolic distance from a neck sample to the nearest annulus vertex.
const NECK_SAMPLE_TOL: f64 = 0.5;
/// Largest height index tried when searching for `cₙ`.
pub const CN_SEARCH_CAP: usize = 4096;
/// `cₙ` is accepted once every index in `[cₙ, CN_HORIZON · cₙ]` is clear.
pub const CN_HORIZON: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainParams {
    pub curve: CurveParams,
    pub zd: f64,
    pub annulus_l_max: f64,
    /// Required clearance between αₙ and tunnel 1; tunnel `k` uses `σ_k` times this.
    pub margin: Option<f64>,
}

impl Default for DomainParams {
    fn default() -> Self {
        let curve = CurveParams::default();
        Self { curve, zd: DEFAULT_ZD_FRACTION * curve.del1, annulus_l_max: DEFAULT_ANNULUS_L_MAX, margin: None }
    }
}

impl DomainParams {
    pub fn with_n(n: usize) -> Self {
        let mut p = Self::default();
        p.curve.n = n;
        p
    }

    /// `0.25 · (ε₁ − δ₁)/2`, a quarter of the gap between a bridge and the nearest footprint.
    pub fn default_margin(&self) -> f64 {
        0.125 * (self.curve.eps1 - self.curve.del1)
    }

    pub fn margin(&self) -> f64 {
        self.margin.unwrap_or_else(|| self.default_margin())
    }

    pub fn tunnel_params(&self) -> TunnelParams {
        TunnelParams { zd: self.zd, annulus_l_max: self.annulus_l_max, ..TunnelParams::from_curve(&self.curve) }
    }

    pub fn validate(&self) -> Result<()> {
        self.curve.validate()?;
        self.tunnel_params().validate()?;
        let m = self.margin();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Domain(format!("margin must be positive, got {m}")));
        }
        Ok(())
    }
}

/// The polyline αₙⁱ: Γₙ lifted along the geodesic rays from [`CONE_APEX`] to height `1/i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCurve {
    pub n: usize,
    pub i: usize,
    pub vertices: Vec<V3>,
    pub tags: Vec<EdgeTag>,
}

impl ConeCurve {
    pub fn height(&self) -> f64 {
        1.0 / self.i as f64
    }

    pub fn hyperbolic_length(&self) -> f64 {
        let m = self.vertices.len();
        (0..m).map(|j| hyp_distance_arr(self.vertices[j], self.vertices[(j + 1) % m])).sum()
    }
}

pub fn cone_curve(gamma: &GammaCurve, i: usize) -> Result<ConeCurve> {
    if i < 2 {
        return Err(Error::Domain(format!("height index must be at least 2, got {i}")));
    }
    let apex = UpperHalfPoint::from_array(CONE_APEX);
    let z = 1.0 / i as f64;
    let vertices = gamma
        .vertices
        .iter()
        .map(|q| {
            geodesic_to_boundary(&apex, BoundaryPoint::finite(q[0], q[1]))
                .point_at_height(z)
                .map(|p| [p.x, p.y, z])
                .ok_or_else(|| Error::Construction(format!("ray to {q:?} never reaches height {z}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConeCurve { n: gamma.n, i, vertices, tags: gamma.tags.clone() })
}

/// αₙⁱ lifted from a copy of Γₙ whose edges are subdivided until each lifted edge is at
/// most `l_max` long in hyperbolic length. Original vertices are kept.
pub fn refined_cone_curve(gamma: &GammaCurve, i: usize, l_max: f64) -> Result<ConeCurve> {
    if !(l_max > 0.0) {
        return Err(Error::Domain(format!("l_max must be positive, got {l_max}")));
    }
    let coarse = cone_curve(gamma, i)?;
    let m = gamma.len();
    let mut fine = GammaCurve { n: gamma.n, vertices: Vec::new(), tags: Vec::new() };
    for j in 0..m {
        let (a, b) = gamma.edge(j);
        let len = hyp_distance_arr(coarse.vertices[j], coarse.vertices[(j + 1) % m]);
        let k = ((len / l_max - 1e-9).ceil() as usize).max(1);
        for s in 0..k {
            let t = s as f64 / k as f64;
            fine.vertices.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            fine.tags.push(gamma.tags[j]);
        }
    }
    cone_curve(&fine, i)
}

/// The tunnels `1..=count`, transported from tunnel 1.
pub fn tunnel_family(first: &TunnelSolid, count: usize) -> Result<Vec<TunnelSolid>> {
    (1..=count).map(|k| if k == 1 { Ok(first.clone()) } else { first.transported(k) }).collect()
}

fn scaled_margin(t: &TunnelSolid, margin: f64) -> f64 {
    t.transport.scale * margin
}

/// Whether every vertex and edge midpoint of αₙⁱ keeps clearance `σ_k · margin` from tunnel `k`.
pub fn cone_curve_is_clear(alpha: &ConeCurve, tunnels: &[TunnelSolid], margin: f64) -> bool {
    let v = &alpha.vertices;
    let m = v.len();
    (0..m).all(|j| {
        let a = v[j];
        let b = v[(j + 1) % m];
        let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, a[2]];
        [a, mid].into_iter().all(|p| {
            tunnels.iter().all(|t| {
                let need = scaled_margin(t, margin);
                t.signed_distance(p, need).is_none_or(|(d, _)| d >= need)
            })
        })
    })
}

/// Outcome of the `cₙ` search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnSearch {
    pub c_n: usize,
    /// Largest index found to violate the clearance (1 if none).
    pub last_fail: usize,
    /// Largest index checked.
    pub checked_to: usize,
}

/// Least `i ≥ 2` with αₙ^{i'} clear of every tunnel for all `i'` in `[i, CN_HORIZON · i]`.
pub fn compute_cn(gamma: &GammaCurve, tunnels: &[TunnelSolid], margin: f64) -> Result<CnSearch> {
    let mut last_fail = 1;
    for i in 2..=CN_SEARCH_CAP {
        if !cone_curve_is_clear(&cone_curve(gamma, i)?, tunnels, margin) {
            last_fail = i;
        }
        let c = last_fail + 1;
        if i >= CN_HORIZON * c {
            return Ok(CnSearch { c_n: c, last_fail, checked_to: i });
        }
    }
    Err(Error::Construction(format!(
        "no height index up to {CN_SEARCH_CAP} keeps alpha_{} clear of the tunnels (last failure at {last_fail})",
        gamma.n
    )))
}

/// The domain Ωₙ.
#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub n: usize,
    pub c_n: usize,
    pub floor: f64,
    pub outer: Circle2,
    pub margin: f64,
    pub tunnels: Vec<Arc<TunnelSolid>>,
    pub search: CnSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub n: usize,
    pub c_n: usize,
    pub floor: f64,
    pub outer_radius: f64,
    pub margin: f64,
    pub tunnel_indices: Vec<usize>,
    pub tunnel_max_heights: Vec<f64>,
    pub search: CnSearch,
}

impl DomainSpec {
    pub fn constraints(&self) -> ConstraintSet {
        ConstraintSet {
            floor: Some(self.floor),
            outer: Some(self.outer),
            obstacles: self.tunnels.iter().map(|t| t.clone() as Arc<dyn Obstacle>).collect(),
            margin: self.margin,
        }
    }

    pub fn contains(&self, p: V3) -> bool {
        let r2 = (p[0] - self.outer.center[0]).powi(2) + (p[1] - self.outer.center[1]).powi(2) + p[2] * p[2];
        p[2] >= self.floor && r2 <= self.outer.radius * self.outer.radius && !self.tunnels.iter().any(|t| t.contains(p))
    }

    pub fn summary(&self) -> DomainSummary {
        DomainSummary {
            n: self.n,
            c_n: self.c_n,
            floor: self.floor,
            outer_radius: self.outer.radius,
            margin: self.margin,
            tunnel_indices: self.tunnels.iter().map(|t| t.index).collect(),
            tunnel_max_heights: self.tunnels.iter().map(|t| t.max_height()).collect(),
            search: self.search.clone(),
        }
    }

    /// Boundary pieces as one OBJ: the tunnel surfaces, the outer hemisphere above the floor,
    /// and the floor disk under it. Each piece is its own `o` group.
    pub fn to_obj(&self) -> String {
        let mut pieces: Vec<(String, TriMesh)> =
            self.tunnels.iter().map(|t| (format!("tunnel{}", t.index), t.surface.clone())).collect();
        pieces.push(("outer".into(), hemisphere_patch(self.outer, self.floor, 48, 24)));
        pieces.push(("floor".into(), floor_disk(self.outer, self.floor, 48, 12)));
        let mut s = String::new();
        let mut base = 0;
        for (name, m) in &pieces {
            let _ = writeln!(s, "o {name}");
            for v in &m.vertices {
                let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
            }
            for f in &m.faces {
                let _ = writeln!(s, "f {} {} {}", base + f[0] + 1, base + f[1] + 1, base + f[2] + 1);
            }
            base += m.vertices.len();
        }
        s
    }
}

fn hemisphere_patch(c: Circle2, floor: f64, segs: usize, rings: usize) -> TriMesh {
    let top = (floor / c.radius).asin();
    let mut verts = Vec::new();
    for k in 0..=rings {
        let phi = top + (std::f64::consts::FRAC_PI_2 - top) * k as f64 / rings as f64;
        for j in 0..segs {
            let t = std::f64::consts::TAU * j as f64 / segs as f64;
            let rho = c.radius * phi.cos();
            verts.push([c.center[0] + rho * t.cos(), c.center[1] + rho * t.sin(), c.radius * phi.sin()]);
        }
    }
    grid_faces(verts, segs, rings)
}

fn floor_disk(c: Circle2, floor: f64, segs: usize, rings: usize) -> TriMesh {
    let r = (c.radius * c.radius - floor * floor).sqrt();
    let mut verts = Vec::new();
    for k in 0..=rings {
        let rho = r * (1.0 - k as f64 / (rings + 1) as f64);
        for j in 0..segs {
            let t = std::f64::consts::TAU * j as f64 / segs as f64;
            verts.push([c.center[0] + rho * t.cos(), c.center[1] + rho * t.sin(), floor]);
        }
    }
    grid_faces(verts, segs, rings)
}

fn grid_faces(verts: Vec<V3>, segs: usize, rings: usize) -> TriMesh {
    let mut faces = Vec::new();
    for k in 0..rings {
        for j in 0..segs {
            let (a, b) = (k * segs + j, k * segs + (j + 1) % segs);
            let (c, d) = (a + segs, b + segs);
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    let fixed = vec![true; verts.len()];
    TriMesh::new(verts, faces, fixed, Topology::Annulus)
}

/// Builds Ωₙ from tunnel 1: tunnels `1..=n+1` decide `cₙ`, and those that reach above the floor
/// become obstacles.
pub fn build_domain(n: usize, params: &DomainParams, first: &TunnelSolid) -> Result<DomainSpec> {
    let curve = CurveParams { n, ..params.curve };
    params.validate()?;
    curve.validate()?;
    let gamma = build_gamma(&curve)?;
    let family = tunnel_family(first, n + 1)?;
    let margin = params.margin();
    let search = compute_cn(&gamma, &family, margin)?;
    let floor = 1.0 / search.c_n as f64;
    let mut tunnels = Vec::new();
    for t in family {
        if t.max_height() < floor {
            continue;
        }
        if !(t.z_cap < floor) {
            return Err(Error::Construction(format!(
                "tunnel {} is capped at {} which is not below the floor {floor}",
                t.index, t.z_cap
            )));
        }
        tunnels.push(Arc::new(t));
    }
    Ok(DomainSpec { n, c_n: search.c_n, floor, outer: Circle2::new([0.0, 0.0], OUTER_RADIUS), margin, tunnels, search })
}

pub fn is_inside_domain(p: V3, spec: &DomainSpec) -> bool {
    spec.contains(p)
}

/// A smooth or meshed piece of ∂Ωₙ.
#[derive(Debug, Clone, Copy)]
pub enum BoundaryPiece<'a> {
    Floor(f64),
    Outer(Circle2),
    /// Hemispherical leg over a footprint circle.
    Leg(Circle2),
    Neck(&'a TunnelSolid),
}

/// Mean curvature of a boundary piece at `p`, positive towards the domain side.
///
/// The floor horosphere has `H = 1`, totally geodesic hemispheres `H = 0`, and a tunnel neck
/// reports the discrete value at the nearest annulus vertex. Errors if `p` is not on the piece.
pub fn mean_curvature_sample(piece: BoundaryPiece<'_>, p: V3, order: QuadOrder) -> Result<f64> {
    let off = |what: &str, d: f64| Error::Domain(format!("point {p:?} is {d:e} off the {what}"));
    match piece {
        BoundaryPiece::Floor(h) => {
            let d = (p[2] - h).abs();
            if d > 1e-9 * h {
                return Err(off("floor", d));
            }
            Ok(1.0)
        }
        BoundaryPiece::Outer(c) | BoundaryPiece::Leg(c) => {
            let r = ((p[0] - c.center[0]).powi(2) + (p[1] - c.center[1]).powi(2) + p[2] * p[2]).sqrt();
            let d = (r - c.radius).abs();
            if d > 1e-9 * c.radius {
                return Err(off("hemisphere", d));
            }
            Ok(0.0)
        }
        BoundaryPiece::Neck(t) => {
            let m = &t.annulus;
            let (i, d) = m
                .vertices
                .iter()
                .enumerate()
                .map(|(i, v)| (i, hyp_distance_arr(*v, p)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .ok_or_else(|| Error::Domain("empty neck mesh".into()))?;
            if d > NECK_SAMPLE_TOL {
                return Err(off("neck", d));
            }
            Ok(mean_curvature(m, order)[i])
        }
    }
}

/// Initial disk spanning αₙ.
///
/// For `n = 1` this is the geodesic cone from [`CONE_APEX`]. For `n ≥ 2` each circle `C_k` gets
/// a geodesic cap from `(0, 0, r_k)` over its arcs of αₙ, closed by chords across the gaps, and
/// the chords of consecutive circles are joined by a strip that runs between the two bridges.
pub fn initial_disk(alpha: &ConeCurve, l_target: f64) -> Result<TriMesh> {
    let v = &alpha.vertices;
    let nv = v.len();
    if alpha.n == 1 {
        return Ok(cone_mesh(v, CONE_APEX, l_target));
    }
    let runs = tag_runs(&alpha.tags);
    // run vertex lists (inclusive of the end vertex)
    let run_vertices = |r: usize| -> Vec<usize> {
        let s = runs[r].0;
        let e = runs[(r + 1) % runs.len()].0;
        let len = (e + nv - s) % nv;
        (0..=len).map(|k| (s + k) % nv).collect()
    };
    let mut verts: Vec<V3> = v.clone();
    let mut fixed = vec![true; nv];
    let mut faces: Vec<[usize; 3]> = Vec::new();
    // endpoint on a circle -> (interior chord vertices leaving it, far endpoint)
    let mut chords: HashMap<usize, (Vec<usize>, usize)> = HashMap::new();
    for j in 1..alpha.n {
        let find = |sheet: Sheet| runs.iter().position(|r| r.1 == EdgeTag::Bridge(j, sheet));
        let (Some(rm), Some(rp)) = (find(Sheet::Minus), find(Sheet::Plus)) else {
            return Err(Error::Construction(format!("bridge {j} is missing a sheet")));
        };
        let minus = run_vertices(rm);
        let mut plus = run_vertices(rp);
        plus.reverse();
        if minus.len() != plus.len() {
            return Err(Error::Construction(format!("bridge {j} sheets have {} and {} vertices", minus.len(), plus.len())));
        }
        let width = hyp_distance_arr(v[minus[0]], v[plus[0]]);
        let segs = ((width / l_target).ceil() as usize).max(2);
        let mut grid: Vec<Vec<usize>> = Vec::with_capacity(minus.len());
        for (&a, &b) in minus.iter().zip(&plus) {
            let mut row = vec![a];
            for s in 1..segs {
                let t = s as f64 / segs as f64;
                let p = [
                    v[a][0] + t * (v[b][0] - v[a][0]),
                    v[a][1] + t * (v[b][1] - v[a][1]),
                    v[a][2] + t * (v[b][2] - v[a][2]),
                ];
                row.push(verts.len());
                verts.push(p);
                fixed.push(false);
            }
            row.push(b);
            grid.push(row);
        }
        for w in grid.windows(2) {
            for s in 0..segs {
                faces.push([w[0][s], w[0][s + 1], w[1][s + 1]]);
                faces.push([w[0][s], w[1][s + 1], w[1][s]]);
            }
        }
        for row in [&grid[0], &grid[grid.len() - 1]] {
            let (a, b) = (row[0], row[segs]);
            let inner: Vec<usize> = row[1..segs].to_vec();
            let mut back = inner.clone();
            back.reverse();
            chords.insert(a, (inner, b));
            chords.insert(b, (back, a));
        }
    }
    for k in 1..=alpha.n {
        let Some(&(start, _)) = runs.iter().find(|r| r.1 == EdgeTag::Arc(k)) else {
            return Err(Error::Construction(format!("circle {k} has no arc in alpha")));
        };
        let mut lp = Vec::new();
        let mut cur = start;
        loop {
            lp.push(cur);
            if lp.len() > verts.len() {
                return Err(Error::Construction(format!("cap loop of circle {k} does not close")));
            }
            let next = match (alpha.tags[cur], chords.get(&cur)) {
                (EdgeTag::Bridge(..), Some((inner, far))) => {
                    lp.extend_from_slice(inner);
                    *far
                }
                _ => (cur + 1) % nv,
            };
            if next == start {
                break;
            }
            cur = next;
        }
        let apex = [0.0, 0.0, crate::curve::radius(k)?];
        let pts: Vec<V3> = lp.iter().map(|&i| verts[i]).collect();
        let cap = cone_mesh(&pts, apex, l_target);
        let base = verts.len();
        let map = |i: usize| if i < lp.len() { lp[i] } else { base + i - lp.len() };
        verts.extend_from_slice(&cap.vertices[lp.len()..]);
        fixed.extend(std::iter::repeat_n(false, cap.vertices.len() - lp.len()));
        faces.extend(cap.faces.iter().map(|f| f.map(map)));
    }
    let mut m = TriMesh::new(verts, faces, fixed, Topology::Disk);
    m.orient_consistently()?;
    m.validate()?;
    Ok(m)
}

/// A solved least-area disk Eₙ with its domain and boundary.
#[derive(Debug, Clone)]
pub struct DiskSolution {
    pub domain: DomainSpec,
    pub alpha: ConeCurve,
    pub mesh: TriMesh,
    pub report: SolveReport,
}

/// Builds Ωₙ, lifts Γₙ to height `1/cₙ` and solves for the least-area disk inside Ωₙ.
pub fn solve_en(n: usize, params: &DomainParams, first: &TunnelSolid, cfg: &SolverConfig) -> Result<DiskSolution> {
    let domain = build_domain(n, params, first)?;
    let gamma = build_gamma(&CurveParams { n, ..params.curve })?;
    let alpha = refined_cone_curve(&gamma, domain.c_n, cfg.l_max)?;
    let initial = initial_disk(&alpha, cfg.l_max)?;
    let (mesh, report) = solve_disk_from(&initial, &domain.constraints(), cfg)?;
    Ok(DiskSolution { domain, alpha, mesh, report })
}
