//! Edge split, collapse and flip passes driven by hyperbolic edge length.
//!
//! Fixed vertices are never moved or removed and edges with a single incident
//! face are never split or collapsed, so the boundary polyline is preserved.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::h3::hyp_distance_arr;
use crate::mesh::TriMesh;
use crate::vec3::{self, V3};

const MAX_ROUNDS: usize = 12;

/// Point on the chord `a b` splitting it into two pieces of equal hyperbolic length.
pub fn chord_midpoint(a: V3, b: V3) -> V3 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let t = 0.5 * (lo + hi);
        let m = vec3::lerp(a, b, t);
        if hyp_distance_arr(a, m) < hyp_distance_arr(m, b) {
            lo = t;
        } else {
            hi = t;
        }
    }
    vec3::lerp(a, b, 0.5 * (lo + hi))
}

struct Work {
    v: Vec<V3>,
    fixed: Vec<bool>,
    faces: Vec<[usize; 3]>,
    alive: Vec<bool>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn normal(v: &[V3], f: [usize; 3]) -> V3 {
    vec3::cross(vec3::sub(v[f[1]], v[f[0]]), vec3::sub(v[f[2]], v[f[0]]))
}

impl Work {
    fn edge_map(&self) -> BTreeMap<(usize, usize), Vec<usize>> {
        let mut m: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            if !self.alive[fi] {
                continue;
            }
            for k in 0..3 {
                m.entry(key(f[k], f[(k + 1) % 3])).or_default().push(fi);
            }
        }
        m
    }

    fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut vf = vec![Vec::new(); self.v.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            if self.alive[fi] {
                for &x in f {
                    vf[x].push(fi);
                }
            }
        }
        vf
    }

    fn len(&self, e: (usize, usize)) -> f64 {
        hyp_distance_arr(self.v[e.0], self.v[e.1])
    }

    fn split_pass(&mut self, l_max: f64) -> bool {
        let em = self.edge_map();
        let mut cand: Vec<(f64, (usize, usize))> = em
            .iter()
            .filter(|(_, fs)| fs.len() == 2)
            .map(|(e, _)| (self.len(*e), *e))
            .filter(|(l, _)| *l > l_max)
            .collect();
        cand.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut touched = vec![false; self.faces.len()];
        let mut changed = false;
        for (_, (a, b)) in cand {
            let fs = &em[&(a, b)];
            if fs.iter().any(|&f| touched[f]) {
                continue;
            }
            let m = self.v.len();
            self.v.push(chord_midpoint(self.v[a], self.v[b]));
            self.fixed.push(false);
            for &fi in fs {
                let f = self.faces[fi];
                // rotate so the face reads (p, q, r) with {p, q} = {a, b}
                let k = (0..3).find(|&k| key(f[k], f[(k + 1) % 3]) == (a, b)).expect("edge in face");
                let (p, q, r) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                self.faces[fi] = [p, m, r];
                self.faces.push([m, q, r]);
                self.alive.push(true);
                touched[fi] = true;
            }
            changed = true;
        }
        changed
    }

    fn collapse_pass(&mut self, l_min: f64, l_max: f64) -> bool {
        let em = self.edge_map();
        let vf = self.vertex_faces();
        let mut cand: Vec<(f64, (usize, usize))> = em
            .iter()
            .filter(|(e, fs)| fs.len() == 2 && !(self.fixed[e.0] && self.fixed[e.1]))
            .map(|(e, _)| (self.len(*e), *e))
            .filter(|(l, _)| *l < l_min)
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut touched = vec![false; self.faces.len()];
        let mut changed = false;
        'edges: for (_, (e0, e1)) in cand {
            // keep = survivor, gone = removed vertex
            let (keep, gone) = if self.fixed[e1] { (e1, e0) } else { (e0, e1) };
            let ring: Vec<usize> = vf[keep].iter().chain(&vf[gone]).copied().collect();
            if ring.iter().any(|&f| touched[f] || !self.alive[f]) {
                continue;
            }
            // link condition: exactly the two opposite vertices are shared neighbours
            let nb = |x: usize| -> HashSet<usize> {
                vf[x].iter().flat_map(|&f| self.faces[f]).filter(|&y| y != x).collect()
            };
            let (nk, ng) = (nb(keep), nb(gone));
            if nk.intersection(&ng).count() != 2 {
                continue;
            }
            let pos = if self.fixed[keep] { self.v[keep] } else { chord_midpoint(self.v[keep], self.v[gone]) };
            let mut newv = Vec::new();
            for &fi in &ring {
                let f = self.faces[fi];
                if f.contains(&keep) && f.contains(&gone) {
                    continue;
                }
                let g = f.map(|x| if x == gone { keep } else { x });
                let old_n = normal(&self.v, f);
                let mut vv = [self.v[g[0]], self.v[g[1]], self.v[g[2]]];
                for k in 0..3 {
                    if g[k] == keep {
                        vv[k] = pos;
                    }
                }
                let nn = vec3::cross(vec3::sub(vv[1], vv[0]), vec3::sub(vv[2], vv[0]));
                if vec3::dot(nn, old_n) <= 0.2 * vec3::norm(nn) * vec3::norm(old_n) || vec3::norm(nn) == 0.0 {
                    continue 'edges;
                }
                for k in 0..3 {
                    if g[k] != keep && hyp_distance_arr(pos, self.v[g[k]]) > 0.9 * l_max {
                        continue 'edges;
                    }
                }
                newv.push((fi, g));
            }
            for &fi in &ring {
                let f = self.faces[fi];
                if f.contains(&keep) && f.contains(&gone) {
                    self.alive[fi] = false;
                }
                touched[fi] = true;
            }
            for (fi, g) in newv {
                self.faces[fi] = g;
            }
            self.v[keep] = pos;
            changed = true;
        }
        changed
    }

    fn flip_pass(&mut self) -> bool {
        let em = self.edge_map();
        let mut edges: HashSet<(usize, usize)> = em.keys().copied().collect();
        let mut touched = vec![false; self.faces.len()];
        let mut changed = false;
        for (&(a0, b0), fs) in &em {
            if fs.len() != 2 || touched[fs[0]] || touched[fs[1]] {
                continue;
            }
            // orient so that f1 = (a, b, c) and f2 = (b, a, d)
            let f1 = self.faces[fs[0]];
            let k = (0..3).find(|&k| key(f1[k], f1[(k + 1) % 3]) == (a0, b0)).expect("edge in face");
            let (a, b, c) = (f1[k], f1[(k + 1) % 3], f1[(k + 2) % 3]);
            let f2 = self.faces[fs[1]];
            let d = *f2.iter().find(|&&x| x != a && x != b).expect("opposite vertex");
            if c == d || edges.contains(&key(c, d)) {
                continue;
            }
            let ang = |p: usize, q: usize, r: usize| {
                let u = vec3::sub(self.v[q], self.v[p]);
                let w = vec3::sub(self.v[r], self.v[p]);
                vec3::dot(u, w).atan2(vec3::norm(vec3::cross(u, w)))
            };
            // angles at c and d opposite the edge: π/2 − atan2(dot, |cross|)
            let sum = std::f64::consts::PI - ang(c, a, b) - ang(d, a, b);
            if sum <= std::f64::consts::PI + 1e-9 {
                continue;
            }
            let n1 = normal(&self.v, [a, b, c]);
            let n2 = normal(&self.v, [b, a, d]);
            if vec3::dot(n1, n2) < 0.5 * vec3::norm(n1) * vec3::norm(n2) {
                continue;
            }
            let g1 = [a, d, c];
            let g2 = [d, b, c];
            let m1 = normal(&self.v, g1);
            let m2 = normal(&self.v, g2);
            let ok = [m1, m2].iter().all(|m| vec3::dot(*m, n1) > 0.0 && vec3::dot(*m, n2) > 0.0);
            if !ok {
                continue;
            }
            self.faces[fs[0]] = g1;
            self.faces[fs[1]] = g2;
            touched[fs[0]] = true;
            touched[fs[1]] = true;
            edges.remove(&(a0, b0));
            edges.insert(key(c, d));
            changed = true;
        }
        changed
    }
}

/// Splits, collapses and flips interior edges until hyperbolic lengths lie in `[l_min, l_max]`
/// where achievable. Topology and fixed vertices are preserved.
pub fn remesh(m: &TriMesh, l_min: f64, l_max: f64) -> Result<TriMesh> {
    if !(l_min > 0.0 && l_min < l_max) {
        return Err(Error::Domain(format!("remesh bounds must satisfy 0 < l_min < l_max, got {l_min}, {l_max}")));
    }
    let chi = m.euler_characteristic();
    let mut w = Work {
        v: m.vertices.clone(),
        fixed: m.fixed.clone(),
        alive: vec![true; m.faces.len()],
        faces: m.faces.clone(),
    };
    for _ in 0..MAX_ROUNDS {
        let s = w.split_pass(l_max);
        let c = w.collapse_pass(l_min, l_max);
        let f = w.flip_pass();
        if !(s || c || f) {
            break;
        }
    }
    let faces: Vec<[usize; 3]> = w.faces.iter().zip(&w.alive).filter(|(_, a)| **a).map(|(f, _)| *f).collect();
    let mut out = TriMesh::new(w.v, faces, w.fixed, m.topology);
    out.compact();
    if out.euler_characteristic() != chi {
        return Err(Error::Solver(format!(
            "remeshing changed the Euler characteristic from {chi} to {}",
            out.euler_characteristic()
        )));
    }
    out.validate()?;
    Ok(out)
}
