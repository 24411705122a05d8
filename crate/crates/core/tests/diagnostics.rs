use std::f64::consts::PI;

use h3plateau::diagnostics::{ball_area, beta_heights, min_distance_to_plane, to_csv, trends, unit_hemisphere, SweepRow, CSV_HEADER};
use h3plateau::h3::QuadOrder;
use h3plateau::mesh::TriMesh;
use h3plateau::meshgen::cone_mesh;

/// Polyhedral hemisphere of radius `r` about the origin, down to height `z0`.
fn hemisphere(r: f64, z0: f64, l: f64) -> TriMesh {
    let u = (r * r - z0 * z0).sqrt();
    let n = (2.0 * PI * u / (l * z0)).ceil() as usize;
    let ring: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            [u * t.cos(), u * t.sin(), z0]
        })
        .collect();
    cone_mesh(&ring, [0.0, 0.0, r], l).map_vertices(|p| {
        let s = r / (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        [p[0] * s, p[1] * s, p[2] * s]
    })
}

fn row(n: usize, beta: Vec<f64>, dist: f64, ball: f64) -> SweepRow {
    SweepRow {
        n,
        c_n: Some(n + 1),
        area: 10.0 * n as f64,
        beta_heights: beta,
        dist_to_p: dist,
        ball_area: ball,
        grad_rms: 1e-7,
        feasibility: 0.0,
        status: "ok".into(),
    }
}

#[test]
fn hemisphere_crossings_and_distances() {
    let unit = hemisphere(1.0, 0.2, 0.08);
    let h = beta_heights(&unit);
    assert_eq!(h.len(), 1);
    assert!((h[0] - 1.0).abs() < 1e-9, "{h:?}");
    assert!(min_distance_to_plane(&unit, &unit_hemisphere()) < 1e-12);

    let big = hemisphere(2.0, 0.4, 0.08);
    assert_eq!(beta_heights(&big).len(), 1);
    // concentric hemispheres are ln 2 apart, attained at the apex
    assert!((min_distance_to_plane(&big, &unit_hemisphere()) - 2f64.ln()).abs() < 1e-12);

    assert!(beta_heights(&hemisphere(0.4, 0.1, 0.08)).is_empty());
}

#[test]
fn ball_on_a_plane_cuts_a_hyperbolic_disk() {
    // the ball of radius ρ about a point of a geodesic plane meets it in a disk of area 2π(cosh ρ − 1)
    let m = hemisphere(1.0, 0.3, 0.015);
    for rho in [0.5, 1.0, 1.5] {
        let exact = 2.0 * PI * (f64::cosh(rho) - 1.0);
        let a = ball_area(&m, [0.0, 0.0, 1.0], rho, QuadOrder::Exact);
        assert!((a - exact).abs() / exact < 2e-2, "rho {rho}: {a} vs {exact}");
    }
}

#[test]
fn trends_on_synthetic_rows() {
    let good = [row(1, vec![1.96], 0.67, 3.0), row(2, vec![1.5, 2.0], 0.40, 6.4), row(3, vec![1.34, 1.5, 2.0], 0.2, 7.0)];
    let t = trends(&good);
    assert!(t.beta_min_decreasing && t.beta_min_above_one && t.dist_positive && t.dist_decreasing && t.ball_area_increasing);

    let bad = [row(1, vec![1.5], 0.3, 3.0), row(2, vec![0.9, 2.0], 0.4, 2.0)];
    let t = trends(&bad);
    assert!(t.beta_min_decreasing);
    assert!(!t.beta_min_above_one && !t.dist_decreasing && !t.ball_area_increasing);
}

#[test]
fn csv_has_one_row_per_n() {
    let mut failed = row(2, vec![], f64::NAN, f64::NAN);
    failed.c_n = None;
    failed.status = "error: construction error: x, y".into();
    let text = to_csv(&[row(1, vec![1.96], 0.67, 3.0), failed]);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let recs: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(recs.len(), 2);
    assert_eq!(&recs[0][0], "1");
    assert_eq!(&recs[0][3], "1");
    assert_eq!(recs[0][2].parse::<f64>().unwrap(), 10.0);
    assert_eq!(&recs[1][1], "");
    assert_eq!(&recs[1][3], "0");
    assert_eq!(&recs[1][10], "error: construction error: x, y");
    assert_eq!(text, to_csv(&[row(1, vec![1.96], 0.67, 3.0), recs_to_failed()]));
}

fn recs_to_failed() -> SweepRow {
    let mut f = row(2, vec![], f64::NAN, f64::NAN);
    f.c_n = None;
    f.status = "error: construction error: x, y".into();
    f
}

