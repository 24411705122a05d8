//! Constrained least-area descent for triangle meshes in the upper half-space.
//!
//! The energy is hyperbolic area plus a quadratic penalty on constraint
//! violation, minimized by L-BFGS with a `z²` diagonal preconditioner and
//! Armijo backtracking. Penalty weights escalate over a fixed schedule and a
//! final projection removes any residual violation.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::area::{area_and_gradient, hyperbolic_rms, mesh_area};
use crate::error::{Error, Result};
use crate::h3::{Circle2, QuadOrder};
use crate::mesh::TriMesh;
use crate::precond::Precond;
use crate::remesh::remesh;
use crate::vec3::{self, V3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// RMS over free vertices of the hyperbolic gradient norm.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub penalty_rounds: usize,
    /// Target clearance from obstacles, as a fraction of the local height.
    pub penalty_buffer: f64,
    pub l_min: f64,
    pub l_max: f64,
    /// Iterations between remeshing passes in [`solve_disk`]; 0 disables remeshing.
    pub remesh_every: usize,
    pub quad_order: QuadOrder,
    pub armijo: f64,
    pub backtrack: f64,
    pub memory: usize,
    /// Largest hyperbolic displacement of any vertex in one step.
    pub max_step: f64,
    pub feas_tol: f64,
    pub pinch_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grad_tol: 1e-6,
            max_iter: 20_000,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            penalty_rounds: 4,
            penalty_buffer: 1e-3,
            l_min: 0.02,
            l_max: 0.12,
            remesh_every: 50,
            quad_order: QuadOrder::Exact,
            armijo: 1e-4,
            backtrack: 0.5,
            memory: 10,
            max_step: 0.1,
            feas_tol: 1e-6,
            pinch_tol: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("grad_tol", self.grad_tol),
            ("penalty_init", self.penalty_init),
            ("l_min", self.l_min),
            ("l_max", self.l_max),
            ("max_step", self.max_step),
            ("feas_tol", self.feas_tol),
            ("pinch_tol", self.pinch_tol),
            ("armijo", self.armijo),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 || self.penalty_rounds == 0 || self.memory == 0 {
            return Err(Error::Domain("max_iter, penalty_rounds and memory must be positive".into()));
        }
        if self.penalty_growth < 1.0 {
            return Err(Error::Domain(format!("penalty_growth must be ≥ 1, got {}", self.penalty_growth)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) || self.armijo >= 1.0 {
            return Err(Error::Domain("line search needs 0 < backtrack < 1 and 0 < armijo < 1".into()));
        }
        if self.l_min >= self.l_max {
            return Err(Error::Domain(format!("l_min {} must be below l_max {}", self.l_min, self.l_max)));
        }
        Ok(())
    }
}

/// A solid the surface must stay outside of.
pub trait Obstacle: Send + Sync + fmt::Debug {
    /// Signed Euclidean distance to the obstacle's surface (positive outside) and its
    /// outward unit gradient, or `None` when `p` is outside and farther than `reach`.
    fn signed_distance(&self, p: V3, reach: f64) -> Option<(f64, V3)>;
}

/// Floor horosphere, outer hemisphere and obstacle solids bounding the admissible region.
#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    pub floor: Option<f64>,
    /// The admissible side is under the hemisphere over this circle.
    pub outer: Option<Circle2>,
    pub obstacles: Vec<Arc<dyn Obstacle>>,
    pub margin: f64,
}

impl ConstraintSet {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    /// Signed clearances `(s, ∇s)` of every constraint that is near `p` (s < 0 means violated).
    fn clearances(&self, p: V3, reach: f64, out: &mut Vec<(f64, V3)>) {
        out.clear();
        if let Some(f) = self.floor {
            out.push((p[2] - f, [0.0, 0.0, 1.0]));
        }
        if let Some(c) = self.outer {
            let d = [p[0] - c.center[0], p[1] - c.center[1], p[2]];
            let r = vec3::norm(d);
            out.push((c.radius - r, vec3::scale(d, -1.0 / r)));
        }
        for o in &self.obstacles {
            if let Some(sd) = o.signed_distance(p, reach) {
                out.push(sd);
            }
        }
    }

    /// Largest violation over the given vertices, in model units.
    pub fn max_violation(&self, vertices: &[V3], fixed: &[bool]) -> f64 {
        let mut buf = Vec::new();
        let mut worst = 0.0f64;
        for (p, &fx) in vertices.iter().zip(fixed) {
            if fx {
                continue;
            }
            self.clearances(*p, 0.0, &mut buf);
            for (s, _) in &buf {
                worst = worst.max(-s);
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    Stalled,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub area: f64,
    pub iterations: usize,
    pub grad_rms: f64,
    pub feasibility: f64,
    pub termination: Termination,
    pub penalty_weight: f64,
    pub remesh_passes: usize,
    pub restored_vertices: usize,
    pub vertices: usize,
    pub faces: usize,
    /// Merit values after each accepted step, tagged with the penalty round.
    #[serde(skip)]
    pub merit_trace: Vec<(usize, f64)>,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Area + penalty evaluator for one penalty weight.
struct Merit<'a> {
    faces: &'a [[usize; 3]],
    fixed: &'a [bool],
    cons: &'a ConstraintSet,
    mu: f64,
    buffer: f64,
    order: QuadOrder,
    /// When set, each free vertex may only move along its entry.
    lock: Option<&'a [V3]>,
}

impl Merit<'_> {
    fn eval(&self, x: &[V3]) -> (f64, Vec<V3>) {
        let (f, g, _) = self.eval_full(x);
        (f, g)
    }

    fn project(&self, v: &mut [V3]) {
        if let Some(n) = self.lock {
            for (vi, ni) in v.iter_mut().zip(n) {
                *vi = vec3::scale(*ni, vec3::dot(*vi, *ni));
            }
        }
    }

    /// Merit, gradient and the penalty's diagonal curvature per vertex.
    fn eval_full(&self, x: &[V3]) -> (f64, Vec<V3>, Vec<f64>) {
        let (area, mut g) = area_and_gradient(x, self.faces, self.fixed, self.order);
        let mut curv = vec![0.0; x.len()];
        let mut pen = 0.0;
        let mut buf = Vec::new();
        for (i, p) in x.iter().enumerate() {
            if self.fixed[i] {
                continue;
            }
            let z = p[2];
            self.cons.clearances(*p, 4.0 * self.buffer.max(0.05) * z, &mut buf);
            for (k, &(s, ds)) in buf.iter().enumerate() {
                // floor and outer hemisphere (first entries) use no buffer
                let b = if k < self.cons.fixed_terms() { 0.0 } else { self.buffer * z };
                if s >= b {
                    continue;
                }
                let u = (b - s) / z;
                pen += u * u;
                // ∂u/∂p = −∇s / z + (s / z²) ẑ  (b/z is constant in z)
                let mut du = vec3::scale(ds, -1.0 / z);
                du[2] += s / (z * z);
                g[i] = vec3::add(g[i], vec3::scale(du, 2.0 * self.mu * u));
                curv[i] += 2.0 * self.mu / (z * z);
            }
        }
        self.project(&mut g);
        (area + self.mu * pen, g, curv)
    }
}

impl ConstraintSet {
    fn fixed_terms(&self) -> usize {
        self.floor.is_some() as usize + self.outer.is_some() as usize
    }
}

fn dot(a: &[V3], b: &[V3]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += vec3::dot(*x, *y);
    }
    s
}

fn face_normals(x: &[V3], faces: &[[usize; 3]]) -> Vec<V3> {
    faces
        .iter()
        .map(|f| vec3::cross(vec3::sub(x[f[1]], x[f[0]]), vec3::sub(x[f[2]], x[f[0]])))
        .collect()
}

/// Limited-memory BFGS state over full vertex arrays (fixed entries stay zero).
struct Lbfgs {
    mem: usize,
    pairs: VecDeque<(Vec<V3>, Vec<V3>, f64)>,
}

impl Lbfgs {
    fn new(mem: usize) -> Self {
        Self { mem, pairs: VecDeque::new() }
    }

    fn reset(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: Vec<V3>, y: Vec<V3>) {
        let sy = dot(&s, &y);
        if sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if self.pairs.len() == self.mem {
                self.pairs.pop_front();
            }
            self.pairs.push_back((s, y, 1.0 / sy));
        }
    }

    /// `−H g` with the initial inverse Hessian given by `h0`.
    fn direction(&self, g: &[V3], h0: impl Fn(&[V3]) -> Vec<V3>) -> Vec<V3> {
        let mut q: Vec<V3> = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi = vec3::sub(*qi, vec3::scale(*yi, a));
            }
            alphas.push(a);
        }
        let mut q = h0(&q);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi = vec3::add(*qi, vec3::scale(*si, a - b));
            }
        }
        for qi in &mut q {
            *qi = vec3::scale(*qi, -1.0);
        }
        q
    }
}

fn trace_enabled() -> bool {
    std::env::var_os("H3PLATEAU_TRACE").is_some()
}

const CG_TOL: f64 = 1e-2;
const CG_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepOutcome {
    Converged,
    Budget,
    Stalled,
}

/// Runs up to `budget` L-BFGS iterations on `mesh` in place.
fn lbfgs_run(
    mesh: &mut TriMesh,
    merit: &Merit<'_>,
    cfg: &SolverConfig,
    state: &mut Lbfgs,
    budget: usize,
    round: usize,
    trace: &mut Vec<(usize, f64)>,
) -> (usize, StepOutcome) {
    let x = &mut mesh.vertices;
    let (mut f, mut g, mut curv) = merit.eval_full(x);
    let mut it = 0;
    while it < budget {
        if hyperbolic_rms(x, &g, merit.fixed) <= cfg.grad_tol {
            return (it, StepOutcome::Converged);
        }
        let pc = Precond::build(x, merit.faces, merit.fixed, &curv);
        let h0 = |v: &[V3]| {
            let mut out = pc.solve(v, CG_TOL, CG_MAX_ITER);
            merit.project(&mut out);
            out
        };
        let mut d = state.direction(&g, h0);
        let mut gd = dot(&g, &d);
        if !(gd < 0.0) {
            state.reset();
            d = state.direction(&g, h0);
            gd = dot(&g, &d);
        }
        // cap the hyperbolic displacement of every vertex
        let mut alpha: f64 = 1.0;
        for (di, xi) in d.iter().zip(x.iter()) {
            let h = vec3::norm(*di) / xi[2];
            if h * alpha > cfg.max_step {
                alpha = cfg.max_step / h;
            }
        }
        let normals = face_normals(x, merit.faces);
        let mut accepted = None;
        while alpha >= 1e-14 {
            let trial: Vec<V3> = x.iter().zip(&d).map(|(xi, di)| vec3::add(*xi, vec3::scale(*di, alpha))).collect();
            let valid = trial.iter().all(|p| p[2] > 0.0)
                && face_normals(&trial, merit.faces).iter().zip(&normals).all(|(a, b)| vec3::dot(*a, *b) > 0.0);
            if valid {
                let (ft, gt, ct) = merit.eval_full(&trial);
                if ft <= f + cfg.armijo * alpha * gd {
                    accepted = Some((trial, ft, gt, ct));
                    break;
                }
            }
            alpha *= cfg.backtrack;
        }
        match accepted {
            Some((trial, ft, gt, ct)) => {
                curv = ct;
                let s: Vec<V3> = trial.iter().zip(x.iter()).map(|(a, b)| vec3::sub(*a, *b)).collect();
                let y: Vec<V3> = gt.iter().zip(&g).map(|(a, b)| vec3::sub(*a, *b)).collect();
                state.push(s, y);
                *x = trial;
                f = ft;
                g = gt;
                trace.push((round, f));
                it += 1;
                if trace_enabled() && trace.len().is_multiple_of(100) {
                    eprintln!("iter {it} merit {f:.12} grad_rms {:.3e} step {alpha:.3e}", hyperbolic_rms(x, &g, merit.fixed));
                }
            }
            None => {
                if state.pairs.is_empty() {
                    return (it, StepOutcome::Stalled);
                }
                state.reset();
            }
        }
    }
    let out = if hyperbolic_rms(x, &g, merit.fixed) <= cfg.grad_tol { StepOutcome::Converged } else { StepOutcome::Budget };
    (it, out)
}

/// Hooks called between descent chunks.
pub(crate) trait ChunkHook {
    /// Returns `Some(new mesh)` when the mesh was changed.
    fn between_chunks(&mut self, mesh: &TriMesh) -> Result<Option<TriMesh>>;
}

struct NoHook;

impl ChunkHook for NoHook {
    fn between_chunks(&mut self, _: &TriMesh) -> Result<Option<TriMesh>> {
        Ok(None)
    }
}

pub(crate) struct RemeshHook {
    pub(crate) l_min: f64,
    pub(crate) l_max: f64,
    pub(crate) passes: usize,
}

impl ChunkHook for RemeshHook {
    fn between_chunks(&mut self, mesh: &TriMesh) -> Result<Option<TriMesh>> {
        let out = remesh(mesh, self.l_min, self.l_max)?;
        if out.vertices == mesh.vertices && out.faces == mesh.faces {
            return Ok(None);
        }
        self.passes += 1;
        Ok(Some(out))
    }
}

pub(crate) fn descend_with(
    m: &TriMesh,
    c: &ConstraintSet,
    cfg: &SolverConfig,
    chunk: usize,
    hook: &mut dyn ChunkHook,
    lock: Option<&[V3]>,
) -> Result<(TriMesh, SolveReport)> {
    cfg.validate()?;
    let mut mesh = m.clone();
    let mut iters = 0;
    let mut mu = cfg.penalty_init;
    let mut trace = Vec::new();
    let mut outcome = StepOutcome::Budget;
    let chunk = if chunk == 0 { usize::MAX } else { chunk };
    for round in 0..cfg.penalty_rounds {
        let mut state = Lbfgs::new(cfg.memory);
        loop {
            let budget = chunk.min(cfg.max_iter - iters);
            let merit = Merit {
                faces: &mesh.faces.clone(),
                fixed: &mesh.fixed.clone(),
                cons: c,
                mu,
                buffer: cfg.penalty_buffer,
                order: cfg.quad_order,
                lock,
            };
            let (k, out) = lbfgs_run(&mut mesh, &merit, cfg, &mut state, budget, round, &mut trace);
            iters += k;
            outcome = out;
            if out != StepOutcome::Budget || iters >= cfg.max_iter {
                break;
            }
            if let Some(new) = hook.between_chunks(&mesh)? {
                mesh = new;
                state.reset();
            }
        }
        let feas = c.max_violation(&mesh.vertices, &mesh.fixed);
        if outcome == StepOutcome::Stalled || iters >= cfg.max_iter {
            break;
        }
        if feas <= cfg.feas_tol {
            break;
        }
        if round + 1 < cfg.penalty_rounds {
            mu *= cfg.penalty_growth;
        }
    }
    let (restored, moved) = restore_feasibility(&mesh, c)?;
    mesh = restored;
    let merit = Merit {
        faces: &mesh.faces,
        fixed: &mesh.fixed,
        cons: c,
        mu,
        buffer: cfg.penalty_buffer,
        order: cfg.quad_order,
        lock,
    };
    let (_, g) = merit.eval(&mesh.vertices);
    let grad_rms = hyperbolic_rms(&mesh.vertices, &g, &mesh.fixed);
    let feasibility = c.max_violation(&mesh.vertices, &mesh.fixed);
    let termination = match outcome {
        StepOutcome::Stalled => Termination::Stalled,
        _ if grad_rms <= cfg.grad_tol && feasibility <= cfg.feas_tol => Termination::Converged,
        StepOutcome::Converged if grad_rms <= cfg.grad_tol => Termination::Converged,
        _ => Termination::MaxIter,
    };
    let report = SolveReport {
        area: mesh_area(&mesh, cfg.quad_order),
        iterations: iters,
        grad_rms,
        feasibility,
        termination,
        penalty_weight: mu,
        remesh_passes: 0,
        restored_vertices: moved,
        vertices: mesh.vertices.len(),
        faces: mesh.faces.len(),
        merit_trace: trace,
    };
    Ok((mesh, report))
}

/// Penalized descent without remeshing.
pub fn descend(m: &TriMesh, c: &ConstraintSet, cfg: &SolverConfig) -> Result<(TriMesh, SolveReport)> {
    descend_with(m, c, cfg, 0, &mut NoHook, None)
}

/// Projects free vertices back into the admissible region, up to 50 passes.
///
/// Returns the projected mesh and the number of distinct vertices moved.
pub fn restore_feasibility(m: &TriMesh, c: &ConstraintSet) -> Result<(TriMesh, usize)> {
    let mut out = m.clone();
    let mut moved = vec![false; m.vertices.len()];
    let mut buf = Vec::new();
    for _ in 0..50 {
        let mut any = false;
        for i in 0..out.vertices.len() {
            if out.fixed[i] {
                continue;
            }
            let p = out.vertices[i];
            c.clearances(p, 0.0, &mut buf);
            let worst = buf.iter().enumerate().filter(|(_, (s, _))| *s < 0.0).min_by(|a, b| a.1 .0.total_cmp(&b.1 .0));
            if let Some((k, &(s, ds))) = worst {
                // floor: exact; outer hemisphere and obstacles: step just past the surface
                let extra = match (k, c.floor.is_some()) {
                    (0, true) => 0.0,
                    _ if k < c.fixed_terms() => 1e-12 * p[2],
                    _ => 1e-9 * p[2],
                };
                let q = vec3::add(p, vec3::scale(ds, extra - s));
                out.vertices[i] = q;
                moved[i] = true;
                any = true;
            }
        }
        if !any {
            return Ok((out, moved.iter().filter(|m| **m).count()));
        }
    }
    let left = c.max_violation(&out.vertices, &out.fixed);
    if left > 0.0 {
        return Err(Error::Solver(format!("feasibility restoration did not converge (violation {left:e})")));
    }
    Ok((out, moved.iter().filter(|m| **m).count()))
}

/// Iterations with interleaved remeshing before the normal-locked polish.
pub const REMESH_PHASE_ITERS: usize = 400;

/// Remeshing descent from a prepared initial disk.
///
/// Descent with remeshing every `cfg.remesh_every` iterations runs for at most
/// [`REMESH_PHASE_ITERS`] iterations; unless converged, it continues on the final
/// connectivity with each free vertex confined to its normal line. There the reported
/// `grad_rms` is that of the normal component.
pub fn solve_disk_from(initial: &TriMesh, c: &ConstraintSet, cfg: &SolverConfig) -> Result<(TriMesh, SolveReport)> {
    cfg.validate()?;
    let (start, moved) = restore_feasibility(initial, c)?;
    let mut hook = RemeshHook { l_min: cfg.l_min, l_max: cfg.l_max, passes: 0 };
    let first = SolverConfig { max_iter: cfg.max_iter.min(REMESH_PHASE_ITERS), ..cfg.clone() };
    let (mesh, head) = descend_with(&start, c, &first, cfg.remesh_every, &mut hook, None)?;
    let rest = cfg.max_iter - head.iterations;
    let (mesh, mut report) = if head.termination == Termination::Converged || rest == 0 {
        (mesh, head)
    } else {
        let normals = mesh.vertex_normals();
        let second = SolverConfig { max_iter: rest, ..cfg.clone() };
        let (m, mut r) = descend_with(&mesh, c, &second, 0, &mut NoHook, Some(&normals))?;
        r.iterations += head.iterations;
        r.restored_vertices += head.restored_vertices;
        r.merit_trace.splice(0..0, head.merit_trace);
        (m, r)
    };
    report.remesh_passes = hook.passes;
    report.restored_vertices += moved;
    Ok((mesh, report))
}
