//! Axis-aligned bounding-box tree over a triangle soup.

use crate::vec3::{self, V3};

#[derive(Debug, Clone, Copy)]
struct Aabb {
    lo: V3,
    hi: V3,
}

impl Aabb {
    fn empty() -> Self {
        Self { lo: [f64::INFINITY; 3], hi: [f64::NEG_INFINITY; 3] }
    }

    fn grow(&mut self, p: V3) {
        for k in 0..3 {
            self.lo[k] = self.lo[k].min(p[k]);
            self.hi[k] = self.hi[k].max(p[k]);
        }
    }


    fn dist2(&self, p: V3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let e = (self.lo[k] - p[k]).max(0.0).max(p[k] - self.hi[k]);
            d += e * e;
        }
        d
    }

    /// Slab test for the segment `o + t d`, `t ∈ [0, tmax]`.
    fn hits_segment(&self, o: V3, inv_d: V3, tmax: f64) -> bool {
        let (mut t0, mut t1) = (0.0f64, tmax);
        for k in 0..3 {
            let mut a = (self.lo[k] - o[k]) * inv_d[k];
            let mut b = (self.hi[k] - o[k]) * inv_d[k];
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            if a.is_nan() || b.is_nan() {
                // parallel ray on a slab face
                if o[k] < self.lo[k] || o[k] > self.hi[k] {
                    return false;
                }
                continue;
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
struct Node {
    bbox: Aabb,
    /// Leaf: `start..start+count` into `order`; internal: children at `left`, `left + 1`.
    start: usize,
    count: usize,
    left: usize,
}

/// Bounding-volume hierarchy for closest-point, segment and parity queries.
#[derive(Debug, Clone)]
pub struct TriBvh {
    tris: Vec<[V3; 3]>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

const LEAF: usize = 4;

impl TriBvh {
    pub fn new(tris: Vec<[V3; 3]>) -> Self {
        let mut bvh = TriBvh { order: (0..tris.len()).collect(), tris, nodes: Vec::new() };
        if !bvh.tris.is_empty() {
            let cent: Vec<V3> = bvh
                .tris
                .iter()
                .map(|t| vec3::scale(vec3::add(vec3::add(t[0], t[1]), t[2]), 1.0 / 3.0))
                .collect();
            bvh.nodes.push(Node { bbox: Aabb::empty(), start: 0, count: bvh.tris.len(), left: 0 });
            bvh.build(0, &cent);
        }
        bvh
    }

    pub fn from_mesh(vertices: &[V3], faces: &[[usize; 3]]) -> Self {
        Self::new(faces.iter().map(|f| f.map(|i| vertices[i])).collect())
    }

    pub fn triangles(&self) -> &[[V3; 3]] {
        &self.tris
    }

    pub fn bounds(&self) -> Option<(V3, V3)> {
        self.nodes.first().map(|n| (n.bbox.lo, n.bbox.hi))
    }

    fn build(&mut self, ni: usize, cent: &[V3]) {
        let (start, count) = (self.nodes[ni].start, self.nodes[ni].count);
        let mut bb = Aabb::empty();
        let mut cb = Aabb::empty();
        for &t in &self.order[start..start + count] {
            for p in self.tris[t] {
                bb.grow(p);
            }
            cb.grow(cent[t]);
        }
        self.nodes[ni].bbox = bb;
        if count <= LEAF {
            return;
        }
        let ext = vec3::sub(cb.hi, cb.lo);
        let axis = if ext[0] >= ext[1] && ext[0] >= ext[2] {
            0
        } else if ext[1] >= ext[2] {
            1
        } else {
            2
        };
        let slice = &mut self.order[start..start + count];
        slice.sort_by(|&a, &b| cent[a][axis].total_cmp(&cent[b][axis]).then(a.cmp(&b)));
        let half = count / 2;
        let left = self.nodes.len();
        self.nodes.push(Node { bbox: Aabb::empty(), start, count: half, left: 0 });
        self.nodes.push(Node { bbox: Aabb::empty(), start: start + half, count: count - half, left: 0 });
        self.nodes[ni].left = left;
        self.nodes[ni].count = 0;
        self.build(left, cent);
        self.build(left + 1, cent);
    }

    /// Closest point on the surface within `max_dist` of `p`: `(distance, point, triangle index)`.
    pub fn closest_point(&self, p: V3, max_dist: f64) -> Option<(f64, V3, usize)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best_d2 = max_dist * max_dist;
        let mut best: Option<(V3, usize)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let n = &self.nodes[ni];
            if n.bbox.dist2(p) > best_d2 {
                continue;
            }
            if n.count > 0 {
                for &t in &self.order[n.start..n.start + n.count] {
                    let [a, b, c] = self.tris[t];
                    let q = vec3::closest_point_on_triangle(p, a, b, c);
                    let d2 = vec3::norm2(vec3::sub(q, p));
                    if d2 < best_d2 || (d2 == best_d2 && best.is_none_or(|(_, bt)| t < bt)) {
                        best_d2 = d2;
                        best = Some((q, t));
                    }
                }
            } else {
                let (l, r) = (n.left, n.left + 1);
                let (dl, dr) = (self.nodes[l].bbox.dist2(p), self.nodes[r].bbox.dist2(p));
                // visit the nearer child first
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best.map(|(q, t)| (best_d2.sqrt(), q, t))
    }

    /// All crossings of the segment `p0 → p1`, as `(parameter in [0,1], triangle index)` sorted by parameter.
    pub fn segment_hits(&self, p0: V3, p1: V3) -> Vec<(f64, usize)> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let d = vec3::sub(p1, p0);
        let inv = [1.0 / d[0], 1.0 / d[1], 1.0 / d[2]];
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let n = &self.nodes[ni];
            if !n.bbox.hits_segment(p0, inv, 1.0) {
                continue;
            }
            if n.count > 0 {
                for &t in &self.order[n.start..n.start + n.count] {
                    let [a, b, c] = self.tris[t];
                    if let Some(s) = vec3::segment_triangle(p0, p1, a, b, c) {
                        out.push((s, t));
                    }
                }
            } else {
                stack.push(n.left + 1);
                stack.push(n.left);
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    /// Parity of crossings of a long fixed ray from `p`; odd means inside a closed surface.
    pub fn inside_by_parity(&self, p: V3) -> bool {
        let Some((lo, hi)) = self.bounds() else { return false };
        let reach = 2.0 * vec3::dist(lo, hi) + 1.0 + vec3::norm(vec3::sub(p, lo));
        let end = vec3::add(p, vec3::scale(RAY_DIR, reach));
        self.segment_hits(p, end).len() % 2 == 1
    }
}

/// Fixed, deliberately irrational-looking direction so rays avoid mesh edges generically.
const RAY_DIR: V3 = [0.281_717_281_717, 0.533_831_751_101, 0.797_324_109_281];

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> TriBvh {
        let v = [
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0],
            [0.0, 1.0, 1.0],
        ];
        let f = [
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ];
        TriBvh::from_mesh(&v, &f)
    }

    #[test]
    fn cube_parity() {
        let b = cube();
        assert!(b.inside_by_parity([0.3, 0.6, 0.2]));
        assert!(!b.inside_by_parity([1.3, 0.6, 0.2]));
        assert!(!b.inside_by_parity([-0.5, -0.5, -0.5]));
    }

    #[test]
    fn cube_closest() {
        let b = cube();
        let (d, q, _) = b.closest_point([0.5, 0.5, 1.5], 10.0).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!((q[2] - 1.0).abs() < 1e-15);
        assert!(b.closest_point([0.5, 0.5, 1.5], 0.4).is_none());
    }

    #[test]
    fn cube_segment_two_hits() {
        let b = cube();
        let h = b.segment_hits([0.4, 0.45, -1.0], [0.4, 0.45, 2.0]);
        assert_eq!(h.len(), 2);
        assert!((h[0].0 - 1.0 / 3.0).abs() < 1e-12 && (h[1].0 - 2.0 / 3.0).abs() < 1e-12);
    }
}
