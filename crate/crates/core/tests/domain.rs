use std::sync::OnceLock;

use h3plateau::curve::{build_gamma, CurveParams, EdgeTag};
use h3plateau::domain::*;
use h3plateau::h3::hyp_distance_arr;
use h3plateau::mesh::Topology;
use h3plateau::tunnel::TunnelSolid;

fn tunnel() -> &'static TunnelSolid {
    static T: OnceLock<TunnelSolid> = OnceLock::new();
    T.get_or_init(|| TunnelSolid::build_first(&DomainParams::default().tunnel_params()).unwrap())
}

fn gamma(n: usize) -> h3plateau::curve::GammaCurve {
    build_gamma(&CurveParams::with_n(n)).unwrap()
}

/// Height of the centre of the circle through three points of a vertical plane.
fn circumcentre_height(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    let d = 2.0 * (p[0] * (q[1] - r[1]) + q[0] * (r[1] - p[1]) + r[0] * (p[1] - q[1]));
    let n = |a: [f64; 2]| a[0] * a[0] + a[1] * a[1];
    (n(p) * (r[0] - q[0]) + n(q) * (p[0] - r[0]) + n(r) * (q[0] - p[0])) / d
}

#[test]
fn cone_curve_points_lie_on_rays_from_the_apex() {
    for (n, i) in [(1, 2), (1, 7), (2, 19), (3, 40)] {
        let g = gamma(n);
        let a = cone_curve(&g, i).unwrap();
        assert_eq!(a.vertices.len(), g.vertices.len());
        for (v, q) in a.vertices.iter().zip(&g.vertices) {
            assert!((v[2] - 1.0 / i as f64).abs() < 1e-15);
            let rq = q[0].hypot(q[1]);
            let rv = v[0].hypot(v[1]);
            // same vertical half-plane through the axis
            assert!((v[0] * q[1] - v[1] * q[0]).abs() < 1e-12);
            assert!(v[0] * q[0] + v[1] * q[1] > 0.0);
            let h = circumcentre_height([0.0, 1.0], [rv, v[2]], [rq, 0.0]);
            assert!(h.abs() < 1e-9, "centre height {h}");
            assert!(rv < rq);
        }
    }
    assert!(cone_curve(&gamma(1), 1).is_err());
}

#[test]
fn refined_cone_curve_keeps_original_vertices_and_bounds_edges() {
    let g = gamma(2);
    let coarse = cone_curve(&g, 19).unwrap();
    let fine = refined_cone_curve(&g, 19, 0.12).unwrap();
    let m = fine.vertices.len();
    for j in 0..m {
        assert!(hyp_distance_arr(fine.vertices[j], fine.vertices[(j + 1) % m]) <= 0.12 + 1e-9);
    }
    for v in &coarse.vertices {
        assert!(fine.vertices.contains(v));
    }
}

#[test]
fn first_domain_has_no_obstacles() {
    let d = build_domain(1, &DomainParams::default(), tunnel()).unwrap();
    assert_eq!(d.c_n, 2);
    assert!(d.tunnels.is_empty());
    assert!(d.contains([0.0, 0.0, 1.0]));
    assert!(!d.contains([0.0, 0.0, 0.4]));
    assert!(!d.contains([0.0, 0.0, 3.1]));
}

#[test]
fn cn_is_clear_over_its_horizon_and_fails_just_below() {
    let p = DomainParams::default();
    for n in [2, 3] {
        let d = build_domain(n, &p, tunnel()).unwrap();
        let fam = tunnel_family(tunnel(), n + 1).unwrap();
        let g = gamma(n);
        for i in d.c_n..=CN_HORIZON * d.c_n {
            assert!(cone_curve_is_clear(&cone_curve(&g, i).unwrap(), &fam, p.margin()), "n={n} i={i}");
        }
        if d.c_n > 2 {
            assert!(!cone_curve_is_clear(&cone_curve(&g, d.c_n - 1).unwrap(), &fam, p.margin()));
        }
        for t in &d.tunnels {
            assert!(t.max_height() >= d.floor && t.z_cap < d.floor);
        }
        // the corridor under tunnel 1 is inside the domain, the tunnel's interior is not
        assert!(d.contains([1.75, 0.0, d.floor]));
        assert!(!d.contains([1.75, 0.0, 0.13]));
    }
}

#[test]
fn initial_disks_span_alpha() {
    let d2 = build_domain(2, &DomainParams::default(), tunnel()).unwrap();
    for (n, i) in [(1, 2), (2, d2.c_n), (3, 56)] {
        let a = refined_cone_curve(&gamma(n), i, 0.12).unwrap();
        let m = initial_disk(&a, 0.12).unwrap();
        assert_eq!(m.topology, Topology::Disk);
        m.validate().unwrap();
        let loops = m.boundary_loops();
        assert_eq!(loops.len(), 1);
        let mut b = loops[0].clone();
        b.sort_unstable();
        assert_eq!(b, (0..a.vertices.len()).collect::<Vec<_>>());
        assert_eq!(&m.vertices[..a.vertices.len()], &a.vertices[..]);
        assert!(m.fixed[..a.vertices.len()].iter().all(|f| *f));
        assert!(m.fixed[a.vertices.len()..].iter().all(|f| !*f));
    }
}

#[test]
fn initial_disk_for_two_circles_is_feasible() {
    let d = build_domain(2, &DomainParams::default(), tunnel()).unwrap();
    let a = refined_cone_curve(&gamma(2), d.c_n, 0.12).unwrap();
    let m = initial_disk(&a, 0.12).unwrap();
    assert!(d.constraints().max_violation(&m.vertices, &m.fixed) <= 0.0);
    assert!(a.tags.iter().any(|t| matches!(t, EdgeTag::Bridge(1, _))));
}

#[test]
fn domain_obj_has_named_pieces() {
    let d = build_domain(2, &DomainParams::default(), tunnel()).unwrap();
    let obj = d.to_obj();
    for name in ["o tunnel1", "o tunnel2", "o outer", "o floor"] {
        assert!(obj.contains(name), "{name}");
    }
    let s = d.summary();
    assert_eq!(s.tunnel_indices, vec![1, 2]);
    assert!((s.floor - 1.0 / s.c_n as f64).abs() < 1e-15);
}
