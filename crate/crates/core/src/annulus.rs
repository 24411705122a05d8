//! Least-area annuli spanning two circles, with neck-pinch detection.

use serde::{Deserialize, Serialize};

use crate::area::mean_curvature;
use crate::bvh::TriBvh;
use crate::error::{Error, Result};
use crate::h3::hyp_distance_arr;
use crate::mesh::TriMesh;
use crate::meshgen::tube_mesh;
use crate::solver::{descend_with, ChunkHook, ConstraintSet, RemeshHook, SolveReport, SolverConfig, Termination, REMESH_PHASE_ITERS};
use crate::vec3::{self, V3};

/// A round circle in space; `normal` is the direction in which a spanning tube leaves it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceCircle {
    pub center: V3,
    pub normal: V3,
    pub radius: f64,
}

impl SpaceCircle {
    pub fn new(center: V3, normal: V3, radius: f64) -> Self {
        Self { center, normal: vec3::normalize(normal), radius }
    }
}

/// Iterations between neck checks, each followed by a remeshing pass.
const PINCH_CHECK_EVERY: usize = 50;

fn bezier(p: &[V3; 4], t: f64) -> (V3, V3) {
    let s = 1.0 - t;
    let pos = vec3::add(
        vec3::add(vec3::scale(p[0], s * s * s), vec3::scale(p[1], 3.0 * s * s * t)),
        vec3::add(vec3::scale(p[2], 3.0 * s * t * t), vec3::scale(p[3], t * t * t)),
    );
    let d = vec3::add(
        vec3::add(vec3::scale(vec3::sub(p[1], p[0]), 3.0 * s * s), vec3::scale(vec3::sub(p[2], p[1]), 6.0 * s * t)),
        vec3::scale(vec3::sub(p[3], p[2]), 3.0 * t * t),
    );
    (pos, vec3::normalize(d))
}

fn perpendicular(n: V3) -> V3 {
    let a = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    vec3::normalize(vec3::cross(n, a))
}

fn reflect(v: V3, n: V3) -> V3 {
    vec3::sub(v, vec3::scale(n, 2.0 * vec3::dot(v, n) / vec3::norm2(n)))
}

/// Initial tube: circular cross-sections swept along a cubic Bézier arch leaving `a` along its
/// normal and arriving at `b` against its normal, framed by a rotation-minimizing frame.
///
/// Returns the ring structure (ring `k` occupies vertices `k·m .. (k+1)·m`).
pub fn tube_between(a: &SpaceCircle, b: &SpaceCircle, l_target: f64) -> (TriMesh, usize) {
    let k = (2.0 / 3.0) * vec3::dist(a.center, b.center);
    let ctrl = [a.center, vec3::add(a.center, vec3::scale(a.normal, k)), vec3::add(b.center, vec3::scale(b.normal, k)), b.center];
    // dense samples of the centreline for lengths and frames
    let dense = 2000;
    let mut cl = Vec::with_capacity(dense + 1);
    let mut hyp_len = 0.0;
    let mut cum = vec![0.0];
    for j in 0..=dense {
        let t = j as f64 / dense as f64;
        let (p, tan) = bezier(&ctrl, t);
        if let Some((q, _)) = cl.last() {
            hyp_len += hyp_distance_arr(*q, p);
            cum.push(hyp_len);
        }
        cl.push((p, tan));
    }
    let nr = ((hyp_len / l_target).ceil() as usize).max(2) + 1;
    let circ = |r: f64, z: f64| std::f64::consts::TAU * r / z;
    let max_circ = circ(a.radius, a.center[2]).max(circ(b.radius, b.center[2]));
    let m = ((max_circ / l_target).ceil() as usize).max(8);
    // rotation-minimizing frame by double reflection
    let mut e1 = perpendicular(cl[0].1);
    let mut frames = vec![e1];
    for j in 1..=dense {
        let (x0, t0) = cl[j - 1];
        let (x1, t1) = cl[j];
        let v1 = vec3::sub(x1, x0);
        let r_l = reflect(e1, v1);
        let t_l = reflect(t0, v1);
        let v2 = vec3::sub(t1, t_l);
        e1 = if vec3::norm2(v2) > 0.0 { reflect(r_l, v2) } else { r_l };
        e1 = vec3::normalize(vec3::sub(e1, vec3::scale(t1, vec3::dot(e1, t1))));
        frames.push(e1);
    }
    let mut rings = Vec::with_capacity(nr);
    let mut jd = 0;
    for kr in 0..nr {
        // ring at equal hyperbolic spacing along the centreline
        let target = hyp_len * kr as f64 / (nr - 1) as f64;
        while jd < dense && cum[jd + 1] < target {
            jd += 1;
        }
        let j = if kr == nr - 1 { dense } else { jd };
        let t = j as f64 / dense as f64;
        let (c, tan) = cl[j];
        let u = frames[j];
        let w = vec3::cross(tan, u);
        let r = (1.0 - t) * a.radius + t * b.radius;
        let ring: Vec<V3> = (0..m)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / m as f64;
                vec3::add(c, vec3::add(vec3::scale(u, r * th.cos()), vec3::scale(w, r * th.sin())))
            })
            .collect();
        rings.push(ring);
    }
    (tube_mesh(&rings), m)
}

/// A closed loop shorter than this many minimal edges cannot be resolved by the mesh.
const NECK_MIN_EDGES: f64 = 3.0;

/// Number of level sets sampled by [`neck_length`].
const NECK_LEVELS: usize = 64;

/// Harmonic coordinate on an annulus: 0 on the first boundary loop, 1 on the second,
/// graph-harmonic in between.
fn harmonic_coordinate(m: &TriMesh) -> Option<Vec<f64>> {
    let loops = m.boundary_loops();
    if loops.len() != 2 {
        return None;
    }
    let n = m.vertices.len();
    let mut u = vec![0.0; n];
    let mut known = vec![false; n];
    for (k, l) in loops.iter().enumerate() {
        for &v in l {
            u[v] = k as f64;
            known[v] = true;
        }
    }
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for f in &m.faces {
        for k in 0..3 {
            nbrs[f[k]].push(f[(k + 1) % 3]);
            nbrs[f[k]].push(f[(k + 2) % 3]);
        }
    }
    for l in &mut nbrs {
        l.sort_unstable();
        l.dedup();
    }
    // conjugate gradients on the graph Laplacian restricted to unknown vertices
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| if known[i] { 0.0 } else { nbrs[i].len() as f64 * x[i] - nbrs[i].iter().filter(|&&j| !known[j]).map(|&j| x[j]).sum::<f64>() })
            .collect()
    };
    let b: Vec<f64> = (0..n).map(|i| if known[i] { 0.0 } else { nbrs[i].iter().filter(|&&j| known[j]).map(|&j| u[j]).sum() }).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let diag: Vec<f64> = (0..n).map(|i| nbrs[i].len().max(1) as f64).collect();
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let bn = dot(&b, &b).sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..4 * n {
        if dot(&r, &r).sqrt() <= 1e-10 * bn {
            break;
        }
        let ap = apply(&p);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    for i in 0..n {
        if !known[i] {
            u[i] = x[i];
        }
    }
    Some(u)
}

/// Shortest hyperbolic length among level curves of the harmonic coordinate of an annulus.
///
/// Every such level curve separates the two boundary loops, so a neck closing up drives
/// this towards zero. Returns `None` unless the mesh has exactly two boundary loops.
pub fn neck_length(m: &TriMesh) -> Option<f64> {
    let u = harmonic_coordinate(m)?;
    let mut len = vec![0.0; NECK_LEVELS];
    for f in &m.faces {
        let lo = f.iter().map(|&v| u[v]).fold(f64::INFINITY, f64::min);
        let hi = f.iter().map(|&v| u[v]).fold(f64::NEG_INFINITY, f64::max);
        for (k, acc) in len.iter_mut().enumerate() {
            let t = (k as f64 + 0.5) / NECK_LEVELS as f64;
            if t <= lo || t >= hi {
                continue;
            }
            let mut pts = Vec::with_capacity(2);
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                let (ua, ub) = (u[a], u[b]);
                if (ua < t) != (ub < t) {
                    pts.push(vec3::lerp(m.vertices[a], m.vertices[b], (t - ua) / (ub - ua)));
                }
            }
            if let [p, q] = pts[..] {
                *acc += hyp_distance_arr(p, q);
            }
        }
    }
    Some(len.into_iter().fold(f64::INFINITY, f64::min))
}

struct PinchWatch {
    remesh: Option<RemeshHook>,
    tol: f64,
    last: f64,
}

impl PinchWatch {
    fn check(&mut self, mesh: &TriMesh) -> Result<()> {
        self.last = neck_length(mesh).unwrap_or(0.0);
        if self.last < self.tol {
            return Err(Error::NeckPinch { min_length: self.last, tol: self.tol });
        }
        Ok(())
    }
}

impl ChunkHook for PinchWatch {
    fn between_chunks(&mut self, mesh: &TriMesh) -> Result<Option<TriMesh>> {
        self.check(mesh)?;
        let Some(remesh) = self.remesh.as_mut() else {
            return Ok(None);
        };
        // a remesh that cannot keep the annulus topology means the neck has closed up
        match remesh.between_chunks(mesh) {
            Err(Error::Solver(_)) => Err(Error::NeckPinch { min_length: self.last, tol: self.tol }),
            other => other,
        }
    }
}

/// Least-area annulus spanning two disjoint circles, by unconstrained descent from a tube.
///
/// Descent first runs with interleaved remeshing for at most [`REMESH_PHASE_ITERS`]
/// iterations, then continues on the final connectivity with every free vertex restricted
/// to its normal line, which stops tangential drift from degrading the triangles.
///
/// Returns [`Error::NeckPinch`] when the neck (see [`neck_length`]) falls below
/// `cfg.pinch_tol` or below three edges of length `cfg.l_min`, or when remeshing can
/// no longer preserve the annulus.
pub fn solve_annulus(c_plus: &SpaceCircle, c_minus: &SpaceCircle, cfg: &SolverConfig) -> Result<(TriMesh, SolveReport)> {
    cfg.validate()?;
    if vec3::dist(c_plus.center, c_minus.center) < 1e-12 {
        return Err(Error::Domain("boundary circles must be disjoint".into()));
    }
    let (init, _) = tube_between(c_plus, c_minus, 0.6 * cfg.l_max);
    let free = ConstraintSet::unconstrained();
    let mut watch = PinchWatch {
        remesh: Some(RemeshHook { l_min: cfg.l_min, l_max: cfg.l_max, passes: 0 }),
        tol: cfg.pinch_tol.max(NECK_MIN_EDGES * cfg.l_min),
        last: f64::INFINITY,
    };
    let first = SolverConfig { max_iter: cfg.max_iter.min(REMESH_PHASE_ITERS), ..cfg.clone() };
    let (mesh, head) = descend_with(&init, &free, &first, PINCH_CHECK_EVERY, &mut watch, None)?;
    watch.check(&mesh)?;
    let passes = watch.remesh.take().map_or(0, |r| r.passes);
    let rest = cfg.max_iter - head.iterations;
    let (mesh, mut report) = if head.termination == Termination::Converged || rest == 0 {
        (mesh, head)
    } else {
        let normals = mesh.vertex_normals();
        let second = SolverConfig { max_iter: rest, ..cfg.clone() };
        let (m, mut r) = descend_with(&mesh, &free, &second, PINCH_CHECK_EVERY, &mut watch, Some(&normals))?;
        r.iterations += head.iterations;
        r.merit_trace.splice(0..0, head.merit_trace);
        (m, r)
    };
    watch.check(&mesh)?;
    report.remesh_passes = passes;
    Ok((mesh, report))
}

/// Largest discrete mean curvature magnitude over free vertices.
pub fn max_interior_mean_curvature(m: &TriMesh, cfg: &SolverConfig) -> f64 {
    mean_curvature(m, cfg.quad_order)
        .into_iter()
        .zip(&m.fixed)
        .filter(|(_, f)| !**f)
        .map(|(h, _)| h.abs())
        .fold(0.0, f64::max)
}

/// Largest distance from the mirror image of a vertex to the surface itself.
pub fn reflection_residual(m: &TriMesh, mirror: impl Fn(V3) -> V3) -> f64 {
    let bvh = TriBvh::from_mesh(&m.vertices, &m.faces);
    m.vertices
        .iter()
        .map(|v| bvh.closest_point(mirror(*v), f64::INFINITY).map_or(f64::INFINITY, |c| c.0))
        .fold(0.0, f64::max)
}
