//! Sparse SPD approximation of the area Hessian used to precondition descent.
//!
//! Off-diagonal weights are clamped cotangent weights scaled by each face's mean
//! conformal factor `z⁻²`; the diagonal adds the lumped mass term `2 A_v / z⁴`
//! from the second variation in constant curvature −1, plus caller-supplied terms.

use crate::vec3::{self, V3};

pub struct Precond {
    /// Row of each vertex, `usize::MAX` for fixed vertices.
    row: Vec<usize>,
    verts: Vec<usize>,
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

const COT_MIN: f64 = 1e-3;
const COT_MAX: f64 = 1e3;

impl Precond {
    pub fn build(x: &[V3], faces: &[[usize; 3]], fixed: &[bool], extra_diag: &[f64]) -> Self {
        let mut row = vec![usize::MAX; x.len()];
        let mut verts = Vec::new();
        for (i, &f) in fixed.iter().enumerate() {
            if !f {
                row[i] = verts.len();
                verts.push(i);
            }
        }
        let n = verts.len();
        let mut diag = vec![0.0; n];
        let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(faces.len() * 6);
        for f in faces {
            let p = f.map(|i| x[i]);
            let zc = (p[0][2] + p[1][2] + p[2][2]) / 3.0;
            let cf = 1.0 / (zc * zc);
            let area = 0.5 * vec3::norm(vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0])));
            for k in 0..3 {
                let (i, j, o) = (f[(k + 1) % 3], f[(k + 2) % 3], f[k]);
                let u = vec3::sub(x[i], x[o]);
                let v = vec3::sub(x[j], x[o]);
                let cr = vec3::norm(vec3::cross(u, v));
                let cot = if cr > 0.0 { (vec3::dot(u, v) / cr).clamp(COT_MIN, COT_MAX) } else { COT_MAX };
                let w = 0.5 * cot * cf;
                let (ri, rj) = (row[i], row[j]);
                if ri != usize::MAX {
                    diag[ri] += w;
                }
                if rj != usize::MAX {
                    diag[rj] += w;
                }
                if ri != usize::MAX && rj != usize::MAX {
                    trip.push((ri, rj, -w));
                    trip.push((rj, ri, -w));
                }
                if row[o] != usize::MAX {
                    let z = x[o][2];
                    diag[row[o]] += 2.0 * (area / 3.0) / (z * z * z * z);
                }
            }
        }
        for (r, &v) in verts.iter().enumerate() {
            diag[r] += extra_diag.get(v).copied().unwrap_or(0.0);
        }
        trip.sort_by_key(|a| (a.0, a.1));
        let mut start = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(trip.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last = (usize::MAX, usize::MAX);
        for (r, c, w) in trip {
            if (r, c) == last {
                *vals.last_mut().unwrap() += w;
            } else {
                cols.push(c);
                vals.push(w);
                start[r + 1] = cols.len();
                last = (r, c);
            }
        }
        for r in 0..n {
            start[r + 1] = start[r + 1].max(start[r]);
        }
        Self { row, verts, start, cols, vals, diag }
    }

    fn apply(&self, v: &[V3], out: &mut [V3]) {
        for r in 0..self.diag.len() {
            let mut acc = vec3::scale(v[r], self.diag[r]);
            for k in self.start[r]..self.start[r + 1] {
                acc = vec3::add(acc, vec3::scale(v[self.cols[k]], self.vals[k]));
            }
            out[r] = acc;
        }
    }

    /// Approximately solves `P d = g` by Jacobi-preconditioned conjugate gradients.
    /// Entries of fixed vertices are zero.
    pub fn solve(&self, g: &[V3], rel_tol: f64, max_iter: usize) -> Vec<V3> {
        let n = self.diag.len();
        let b: Vec<V3> = self.verts.iter().map(|&v| g[v]).collect();
        let mut xs = vec![[0.0; 3]; n];
        let mut r = b.clone();
        let mut z: Vec<V3> = r.iter().zip(&self.diag).map(|(ri, d)| vec3::scale(*ri, 1.0 / d)).collect();
        let mut p = z.clone();
        let mut ap = vec![[0.0; 3]; n];
        let dot = |a: &[V3], b: &[V3]| a.iter().zip(b).map(|(x, y)| vec3::dot(*x, *y)).sum::<f64>();
        let bnorm = dot(&b, &b).sqrt();
        let mut rz = dot(&r, &z);
        for _ in 0..max_iter {
            if dot(&r, &r).sqrt() <= rel_tol * bnorm {
                break;
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let a = rz / pap;
            for i in 0..n {
                xs[i] = vec3::add(xs[i], vec3::scale(p[i], a));
                r[i] = vec3::sub(r[i], vec3::scale(ap[i], a));
                z[i] = vec3::scale(r[i], 1.0 / self.diag[i]);
            }
            let rz2 = dot(&r, &z);
            let beta = rz2 / rz;
            rz = rz2;
            for i in 0..n {
                p[i] = vec3::add(z[i], vec3::scale(p[i], beta));
            }
        }
        let mut out = vec![[0.0; 3]; g.len()];
        for (r, &v) in self.verts.iter().enumerate() {
            out[v] = xs[r];
        }
        let _ = &self.row;
        out
    }
}
