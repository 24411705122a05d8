//! Initial meshes: geodesic cones over closed curves, ring strips and tubes.

use crate::h3::{geodesic_interpolate, hyp_distance_arr};
use crate::mesh::{Topology, TriMesh};
use crate::vec3::{self, V3};

/// Triangulates the band between two closed rings of vertex indices, matching by
/// normalized position along each ring (both start at parameter 0).
///
/// Faces are oriented so that traversing `a` forwards keeps `b` on the left.
pub fn zip_rings(a: &[usize], b: &[usize], faces: &mut Vec<[usize; 3]>) {
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        // advance on the ring whose next vertex comes first
        let ta = (i + 1) as f64 / na as f64;
        let tb = (j + 1) as f64 / nb as f64;
        if j == nb || (i < na && ta <= tb) {
            faces.push([a[i % na], a[(i + 1) % na], b[j % nb]]);
            i += 1;
        } else {
            faces.push([a[i % na], b[(j + 1) % nb], b[j % nb]]);
            j += 1;
        }
    }
}

/// Point at fractional index `u` along a closed polyline.
fn at_param(curve: &[V3], u: f64) -> V3 {
    let n = curve.len();
    let k = u.floor() as usize;
    let t = u - k as f64;
    vec3::lerp(curve[k % n], curve[(k + 1) % n], t)
}

/// The geodesic cone from `apex` over the closed polyline `boundary`, with interior
/// rings spaced about `l_target` apart in hyperbolic length. Boundary vertices are fixed
/// and keep their indices `0..boundary.len()`.
pub fn cone_mesh(boundary: &[V3], apex: V3, l_target: f64) -> TriMesh {
    let n = boundary.len();
    assert!(n >= 3, "cone needs at least three boundary vertices");
    let reach = boundary.iter().map(|q| hyp_distance_arr(apex, *q)).fold(0.0, f64::max);
    let rings = ((reach / l_target).ceil() as usize).max(2);
    let mut verts: Vec<V3> = boundary.to_vec();
    let mut fixed = vec![true; n];
    let mut faces = Vec::new();
    let mut outer: Vec<usize> = (0..n).collect();
    for k in (1..rings).rev() {
        let s = k as f64 / rings as f64;
        // perimeter of this ring sampled at every boundary parameter
        let pts: Vec<V3> = boundary.iter().map(|q| geodesic_interpolate(apex, *q, s)).collect();
        let per: f64 = (0..n).map(|j| hyp_distance_arr(pts[j], pts[(j + 1) % n])).sum();
        let m = ((per / l_target).ceil() as usize).clamp(3, n);
        let start = verts.len();
        for j in 0..m {
            let u = j as f64 * n as f64 / m as f64;
            verts.push(geodesic_interpolate(apex, at_param(boundary, u), s));
            fixed.push(false);
        }
        let inner: Vec<usize> = (start..start + m).collect();
        zip_rings(&outer, &inner, &mut faces);
        outer = inner;
    }
    let a = verts.len();
    verts.push(apex);
    fixed.push(false);
    for j in 0..outer.len() {
        faces.push([outer[j], outer[(j + 1) % outer.len()], a]);
    }
    TriMesh::new(verts, faces, fixed, Topology::Disk)
}

/// Tube through `rings` (each a closed ring of points, all of equal length), open at both ends.
///
/// Quads are split along alternating diagonals. Vertices of the first and last ring are fixed.
pub fn tube_mesh(rings: &[Vec<V3>]) -> TriMesh {
    let nr = rings.len();
    let m = rings[0].len();
    assert!(nr >= 2 && rings.iter().all(|r| r.len() == m));
    let mut verts = Vec::with_capacity(nr * m);
    let mut fixed = Vec::with_capacity(nr * m);
    for (k, r) in rings.iter().enumerate() {
        verts.extend_from_slice(r);
        fixed.extend(std::iter::repeat_n(k == 0 || k == nr - 1, m));
    }
    let id = |k: usize, j: usize| k * m + (j % m);
    let mut faces = Vec::with_capacity(2 * (nr - 1) * m);
    for k in 0..nr - 1 {
        for j in 0..m {
            let (a, b, c, d) = (id(k, j), id(k, j + 1), id(k + 1, j + 1), id(k + 1, j));
            if (j + k) % 2 == 0 {
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            } else {
                faces.push([a, b, d]);
                faces.push([b, c, d]);
            }
        }
    }
    TriMesh::new(verts, faces, fixed, Topology::Annulus)
}
