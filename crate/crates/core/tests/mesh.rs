use std::f64::consts::PI;

use h3plateau::mesh::{Topology, TriMesh};
use h3plateau::meshgen::cone_mesh;
use proptest::prelude::*;

fn wobbly_disk(n: usize, z: f64, amp: f64, apex: f64, l: f64) -> TriMesh {
    let ring: Vec<[f64; 3]> = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let r = 1.0 + amp * (3.0 * t).sin();
            [r * t.cos(), r * t.sin(), z * (1.0 + 0.5 * amp * t.cos())]
        })
        .collect();
    cone_mesh(&ring, [0.1, -0.05, apex], l)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn obj_round_trip_is_exact(n in 8usize..60, z in 0.1f64..1.0, amp in 0.0f64..0.3, apex in 0.5f64..2.0, l in 0.2f64..0.6) {
        let m = wobbly_disk(n, z, amp, apex, l);
        m.validate().unwrap();
        let back = TriMesh::from_obj(&m.to_obj(), Topology::Disk).unwrap();
        prop_assert_eq!(&back.vertices, &m.vertices);
        prop_assert_eq!(&back.faces, &m.faces);
        prop_assert_eq!(&back.fixed, &m.fixed);
        prop_assert_eq!(back.to_obj(), m.to_obj());
    }

    #[test]
    fn cone_disks_have_one_boundary_loop(n in 3usize..60, z in 0.1f64..1.0, amp in 0.0f64..0.3, l in 0.2f64..0.6) {
        let m = wobbly_disk(n, z, amp, 1.2, l);
        prop_assert_eq!(m.euler_characteristic(), 1);
        let loops = m.boundary_loops();
        prop_assert_eq!(loops.len(), 1);
        prop_assert_eq!(loops[0].len(), n);
        prop_assert_eq!(m.num_free(), m.num_vertices() - n);
    }
}

#[test]
fn orientation_repair_on_a_closed_surface() {
    // octahedron with two faces flipped
    let v = vec![[1.0, 0.0, 2.0], [-1.0, 0.0, 2.0], [0.0, 1.0, 2.0], [0.0, -1.0, 2.0], [0.0, 0.0, 3.0], [0.0, 0.0, 1.0]];
    let mut f = vec![[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]];
    let good = TriMesh::new(v.clone(), f.clone(), vec![false; 6], Topology::Sphere);
    good.validate().unwrap();
    let vol = good.signed_volume();
    assert!((vol.abs() - 4.0 / 3.0).abs() < 1e-12);
    f[1] = [1, 2, 4];
    f[6] = [1, 3, 5];
    let mut bad = TriMesh::new(v, f, vec![false; 6], Topology::Sphere);
    assert!(bad.validate().is_err());
    bad.orient_consistently().unwrap();
    bad.validate().unwrap();
    assert!(bad.signed_volume() > 0.0);
    assert_eq!(bad.euler_characteristic(), 2);
}

#[test]
fn malformed_obj_is_rejected() {
    for text in ["v 0 0\n", "v 0 0 1\nf 1 2 3\n", "v 0 0 1\nv 1 0 1\nv 0 1 1\nf 0 1 2\n", "v a b c\n"] {
        assert!(TriMesh::from_obj(text, Topology::Disk).is_err(), "{text:?}");
    }
}
