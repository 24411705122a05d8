//! Hyperbolic area of flat-triangle meshes and its analytic gradient.
//!
//! Each face contributes `A_euc · Σ_q w_q z_q⁻²`. Per-face terms are computed
//! in face order and reduced sequentially, so results are bit-reproducible.

use crate::h3::{tri_area_arr, QuadOrder};
use crate::mesh::TriMesh;
use crate::vec3::{self, V3};

pub fn mesh_area(m: &TriMesh, order: QuadOrder) -> f64 {
    area_of(&m.vertices, &m.faces, order)
}

pub fn area_of(vertices: &[V3], faces: &[[usize; 3]], order: QuadOrder) -> f64 {
    let mut total = 0.0;
    for f in faces {
        total += tri_area_arr(vertices[f[0]], vertices[f[1]], vertices[f[2]], order);
    }
    total
}

/// Per-face hyperbolic areas.
pub fn face_areas(m: &TriMesh, order: QuadOrder) -> Vec<f64> {
    m.faces
        .iter()
        .map(|f| tri_area_arr(m.vertices[f[0]], m.vertices[f[1]], m.vertices[f[2]], order))
        .collect()
}

/// Value and gradient of one face's hyperbolic area with respect to its three vertices.
#[inline]
pub fn face_area_grad(a: V3, b: V3, c: V3, order: QuadOrder) -> (f64, [V3; 3]) {
    let n = vec3::cross(vec3::sub(b, a), vec3::sub(c, a));
    let nn = vec3::norm(n);
    if nn == 0.0 {
        return (0.0, [[0.0; 3]; 3]);
    }
    let area = 0.5 * nn;
    let nh = vec3::scale(n, 1.0 / nn);
    // ∇_a A = ½ n̂ × (c − b), cyclic
    let ga = vec3::scale(vec3::cross(nh, vec3::sub(c, b)), 0.5);
    let gb = vec3::scale(vec3::cross(nh, vec3::sub(a, c)), 0.5);
    let gc = vec3::scale(vec3::cross(nh, vec3::sub(b, a)), 0.5);
    let (q, dq) = order.mean_weight([a[2], b[2], c[2]]);
    let mut g = [vec3::scale(ga, q), vec3::scale(gb, q), vec3::scale(gc, q)];
    for k in 0..3 {
        g[k][2] += area * dq[k];
    }
    (area * q, g)
}

/// Area and per-vertex gradient over `vertices`; entries for `fixed` vertices are zero.
pub fn area_and_gradient(vertices: &[V3], faces: &[[usize; 3]], fixed: &[bool], order: QuadOrder) -> (f64, Vec<V3>) {
    let mut grad = vec![[0.0; 3]; vertices.len()];
    let mut total = 0.0;
    for f in faces {
        let (a, g) = face_area_grad(vertices[f[0]], vertices[f[1]], vertices[f[2]], order);
        total += a;
        for k in 0..3 {
            let v = f[k];
            grad[v] = vec3::add(grad[v], g[k]);
        }
    }
    for (g, &fx) in grad.iter_mut().zip(fixed) {
        if fx {
            *g = [0.0; 3];
        }
    }
    (total, grad)
}

pub fn area_gradient(m: &TriMesh, order: QuadOrder) -> Vec<V3> {
    area_and_gradient(&m.vertices, &m.faces, &m.fixed, order).1
}

/// RMS over free vertices of the hyperbolic norm `z |g|` of a Euclidean covector field.
pub fn hyperbolic_rms(vertices: &[V3], grad: &[V3], fixed: &[bool]) -> f64 {
    let mut s = 0.0;
    let mut n = 0usize;
    for ((v, g), &fx) in vertices.iter().zip(grad).zip(fixed) {
        if !fx {
            s += v[2] * v[2] * vec3::norm2(*g);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        (s / n as f64).sqrt()
    }
}

/// Discrete mean curvature per vertex, `H = −z ⟨∇A, n̂⟩ / (2 A_v)`, with `A_v` a third of the
/// incident hyperbolic face area and `n̂` the area-weighted Euclidean normal.
///
/// Sign follows the mesh orientation: positive when the mean curvature vector points along `n̂`.
pub fn mean_curvature(m: &TriMesh, order: QuadOrder) -> Vec<f64> {
    let no_fixed = vec![false; m.vertices.len()];
    let (_, grad) = area_and_gradient(&m.vertices, &m.faces, &no_fixed, order);
    let areas = face_areas(m, order);
    let mut va = vec![0.0; m.vertices.len()];
    for (f, a) in m.faces.iter().zip(&areas) {
        for &v in f {
            va[v] += a / 3.0;
        }
    }
    let normals = m.vertex_normals();
    (0..m.vertices.len())
        .map(|i| {
            if va[i] > 0.0 {
                -m.vertices[i][2] * vec3::dot(grad[i], normals[i]) / (2.0 * va[i])
            } else {
                0.0
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Topology;

    fn flat_grid(h: f64, n: usize) -> TriMesh {
        let mut v = Vec::new();
        let mut fixed = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                v.push([i as f64 / n as f64, j as f64 / n as f64, h]);
                fixed.push(i == 0 || j == 0 || i == n || j == n);
            }
        }
        let mut f = Vec::new();
        let id = |i: usize, j: usize| j * (n + 1) + i;
        for j in 0..n {
            for i in 0..n {
                f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        TriMesh::new(v, f, fixed, Topology::Disk)
    }

    #[test]
    fn empty_mesh_has_zero_area() {
        assert_eq!(mesh_area(&TriMesh::empty(Topology::Disk), QuadOrder::Three), 0.0);
    }

    #[test]
    fn horosphere_patch_has_unit_mean_curvature() {
        let m = flat_grid(0.5, 6);
        let h = mean_curvature(&m, QuadOrder::Three);
        let id = 3 * 7 + 3;
        assert!((h[id] - 1.0).abs() < 1e-12, "{}", h[id]);
    }

    #[test]
    fn fixed_entries_are_zero() {
        let m = flat_grid(0.5, 4);
        let g = area_gradient(&m, QuadOrder::Three);
        for (gi, f) in g.iter().zip(&m.fixed) {
            if *f {
                assert_eq!(*gi, [0.0; 3]);
            }
        }
    }

    #[test]
    fn face_gradient_matches_central_differences() {
        let pts = [[0.1, 0.2, 0.7], [0.9, -0.1, 1.3], [0.3, 0.8, 0.4]];
        for order in [QuadOrder::One, QuadOrder::Three, QuadOrder::Six, QuadOrder::Exact] {
            let (_, g) = face_area_grad(pts[0], pts[1], pts[2], order);
            for v in 0..3 {
                for d in 0..3 {
                    let h = 1e-6;
                    let mut p = pts;
                    p[v][d] += h;
                    let fp = face_area_grad(p[0], p[1], p[2], order).0;
                    p[v][d] -= 2.0 * h;
                    let fm = face_area_grad(p[0], p[1], p[2], order).0;
                    let fd = (fp - fm) / (2.0 * h);
                    assert!((fd - g[v][d]).abs() < 1e-6 * (1.0 + fd.abs()), "{order:?} v{v} d{d}: {fd} vs {}", g[v][d]);
                }
            }
        }
    }
}
