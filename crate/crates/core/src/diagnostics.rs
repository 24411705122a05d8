//! Finite-n measurements along the sequence Eₙ: axis crossing heights, distance to the
//! unit hemisphere, and area inside a fixed probe ball.

use serde::{Deserialize, Serialize};

use crate::area::area_of;
use crate::domain::{solve_en, DiskSolution, DomainParams};
use crate::h3::{hyp_distance_arr, GeodesicPlane, QuadOrder, UpperHalfPoint};
use crate::mesh::TriMesh;
use crate::solver::{SolverConfig, Termination};
use crate::topology::{segment_intersections, SegmentQuery};
use crate::tunnel::TunnelSolid;
use crate::vec3::V3;

/// Heights at which the mesh crosses β, ascending.
pub fn beta_heights(m: &TriMesh) -> Vec<f64> {
    segment_intersections(m, &SegmentQuery::beta()).into_iter().map(|p| p[2]).collect()
}

/// Smallest hyperbolic distance from a vertex to the plane.
pub fn min_distance_to_plane(m: &TriMesh, plane: &GeodesicPlane) -> f64 {
    m.vertices
        .iter()
        .map(|v| plane.hyp_distance(&UpperHalfPoint::from_array(*v)))
        .fold(f64::INFINITY, f64::min)
}

/// The hemisphere over the unit circle.
pub fn unit_hemisphere() -> GeodesicPlane {
    GeodesicPlane::Hemisphere { center: [0.0, 0.0], radius: 1.0 }
}

/// Area of the faces whose centroid lies within hyperbolic distance `r_hyp` of `center`.
pub fn ball_area(m: &TriMesh, center: V3, r_hyp: f64, order: QuadOrder) -> f64 {
    let faces: Vec<[usize; 3]> = m
        .faces
        .iter()
        .filter(|f| {
            let [a, b, c] = f.map(|i| m.vertices[i]);
            let g = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0, (a[2] + b[2] + c[2]) / 3.0];
            hyp_distance_arr(g, center) <= r_hyp
        })
        .copied()
        .collect();
    area_of(&m.vertices, &faces, order)
}

/// The fixed ball used to compare areas across `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub center: V3,
    pub radius: f64,
}

impl Default for Probe {
    fn default() -> Self {
        Self { center: [0.0, 0.0, 1.5], radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub c_n: Option<usize>,
    pub area: f64,
    pub beta_heights: Vec<f64>,
    pub dist_to_p: f64,
    pub ball_area: f64,
    pub grad_rms: f64,
    pub feasibility: f64,
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(n: usize, status: String) -> Self {
        Self {
            n,
            c_n: None,
            area: f64::NAN,
            beta_heights: Vec::new(),
            dist_to_p: f64::NAN,
            ball_area: f64::NAN,
            grad_rms: f64::NAN,
            feasibility: f64::NAN,
            status,
        }
    }

    pub fn from_solution(s: &DiskSolution, probe: &Probe, cfg: &SolverConfig) -> Self {
        let r = &s.report;
        Self {
            n: s.domain.n,
            c_n: Some(s.domain.c_n),
            area: r.area,
            beta_heights: beta_heights(&s.mesh),
            dist_to_p: min_distance_to_plane(&s.mesh, &unit_hemisphere()),
            ball_area: ball_area(&s.mesh, probe.center, probe.radius, cfg.quad_order),
            grad_rms: r.grad_rms,
            feasibility: r.feasibility,
            status: solve_status(r.termination, r.feasibility, cfg),
        }
    }
}

/// `"ok"` for a converged, feasible solve; otherwise the termination reason.
pub fn solve_status(t: Termination, feasibility: f64, cfg: &SolverConfig) -> String {
    match t {
        Termination::Converged if feasibility <= cfg.feas_tol => "ok".into(),
        Termination::Converged => "infeasible".into(),
        other => other.to_string(),
    }
}

/// Runs the pipeline for `n = 1..=n_max`; failures are recorded per row.
pub fn sweep(n_max: usize, params: &DomainParams, cfg: &SolverConfig, probe: &Probe) -> Vec<SweepRow> {
    let first = TunnelSolid::build_first(&params.tunnel_params());
    sweep_with(n_max, params, cfg, probe, first.as_ref().map_err(|e| e.to_string()), |_| {})
}

/// [`sweep`] with a prebuilt tunnel 1 and a callback receiving each solution.
pub fn sweep_with(
    n_max: usize,
    params: &DomainParams,
    cfg: &SolverConfig,
    probe: &Probe,
    first: std::result::Result<&TunnelSolid, String>,
    mut on_solution: impl FnMut(&DiskSolution),
) -> Vec<SweepRow> {
    (1..=n_max)
        .map(|n| match &first {
            Err(e) => SweepRow::failed(n, format!("error: {e}")),
            Ok(t) => match solve_en(n, params, t, cfg) {
                Ok(s) => {
                    on_solution(&s);
                    SweepRow::from_solution(&s, probe, cfg)
                }
                Err(e) => SweepRow::failed(n, format!("error: {e}")),
            },
        })
        .collect()
}

pub const CSV_HEADER: [&str; 11] =
    ["n", "c_n", "area", "beta_count", "beta_min", "beta_all", "dist_to_P", "ball_area", "grad_rms", "feasibility", "status"];

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        let beta_all = r.beta_heights.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(";");
        w.write_record([
            r.n.to_string(),
            r.c_n.map_or(String::new(), |c| c.to_string()),
            r.area.to_string(),
            r.beta_heights.len().to_string(),
            r.beta_heights.first().map_or(String::new(), |h| h.to_string()),
            beta_all,
            r.dist_to_p.to_string(),
            r.ball_area.to_string(),
            r.grad_rms.to_string(),
            r.feasibility.to_string(),
            r.status.clone(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

/// Checks the finite-n trends over consecutive rows: falling minimum crossing height
/// (staying above 1), falling distance to the unit hemisphere, growing probe-ball area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendReport {
    pub beta_min_decreasing: bool,
    pub beta_min_above_one: bool,
    pub dist_positive: bool,
    pub dist_decreasing: bool,
    pub ball_area_increasing: bool,
}

pub fn trends(rows: &[SweepRow]) -> TrendReport {
    let mins: Vec<f64> = rows.iter().map(|r| r.beta_heights.first().copied().unwrap_or(f64::NAN)).collect();
    let strictly = |v: &[f64], dec: bool| v.windows(2).all(|w| if dec { w[1] < w[0] } else { w[1] > w[0] });
    let dists: Vec<f64> = rows.iter().map(|r| r.dist_to_p).collect();
    let balls: Vec<f64> = rows.iter().map(|r| r.ball_area).collect();
    TrendReport {
        beta_min_decreasing: strictly(&mins, true),
        beta_min_above_one: mins.iter().all(|m| *m > 1.0),
        dist_positive: dists.iter().all(|d| *d > 0.0),
        dist_decreasing: strictly(&dists, true),
        ball_area_increasing: strictly(&balls, false),
    }
}
