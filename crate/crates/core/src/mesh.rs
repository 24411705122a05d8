//! Triangle meshes in the upper half-space with fixed-boundary flags, plus OBJ I/O.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::h3::UpperHalfPoint;
use crate::vec3::{self, V3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Disk,
    Annulus,
    /// Closed surface bounding a solid.
    Sphere,
}

impl Topology {
    pub fn euler_characteristic(self) -> i64 {
        match self {
            Topology::Disk => 1,
            Topology::Annulus => 0,
            Topology::Sphere => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<V3>,
    pub faces: Vec<[usize; 3]>,
    /// `true` for vertices that never move (the prescribed boundary).
    pub fixed: Vec<bool>,
    pub topology: Topology,
}

impl TriMesh {
    pub fn new(vertices: Vec<V3>, faces: Vec<[usize; 3]>, fixed: Vec<bool>, topology: Topology) -> Self {
        assert_eq!(vertices.len(), fixed.len());
        Self { vertices, faces, fixed, topology }
    }

    pub fn empty(topology: Topology) -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new(), topology)
    }

    pub fn point(&self, i: usize) -> UpperHalfPoint {
        UpperHalfPoint::from_array(self.vertices[i])
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_free(&self) -> usize {
        self.fixed.iter().filter(|f| !**f).count()
    }

    /// Undirected edges with the number of incident faces, in sorted order.
    pub fn edge_face_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edge_face_counts().into_keys().collect()
    }

    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        self.edge_face_counts().into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect()
    }

    /// Vertices used by at least one face.
    fn used_vertices(&self) -> usize {
        let mut used = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                used[v] = true;
            }
        }
        used.into_iter().filter(|u| *u).count()
    }

    /// `V − E + F` over vertices referenced by faces.
    pub fn euler_characteristic(&self) -> i64 {
        let e = self.edge_face_counts().len() as i64;
        self.used_vertices() as i64 - e + self.faces.len() as i64
    }

    /// Boundary loops (closed vertex cycles along edges with a single incident face).
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        // orient boundary edges along their face
        let counts = self.edge_face_counts();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if counts[&(a.min(b), a.max(b))] == 1 {
                    next.insert(a, b);
                }
            }
        }
        let mut starts: Vec<usize> = next.keys().copied().collect();
        starts.sort_unstable();
        let mut seen = std::collections::HashSet::new();
        let mut loops = Vec::new();
        for s in starts {
            if seen.contains(&s) {
                continue;
            }
            let mut lp = vec![s];
            seen.insert(s);
            let mut cur = next[&s];
            while cur != s {
                if !seen.insert(cur) {
                    break;
                }
                lp.push(cur);
                match next.get(&cur) {
                    Some(&n) => cur = n,
                    None => break,
                }
            }
            loops.push(lp);
        }
        loops
    }

    /// Checks edge-manifoldness, consistent orientation, positive heights and the Euler characteristic.
    pub fn validate(&self) -> Result<()> {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Solver(format!("face {fi} is degenerate: {f:?}")));
            }
            for k in 0..3 {
                let v = f[k];
                if v >= self.vertices.len() {
                    return Err(Error::Solver(format!("face {fi} references missing vertex {v}")));
                }
                let e = (f[k], f[(k + 1) % 3]);
                if directed.insert(e, fi).is_some() {
                    return Err(Error::Solver(format!("directed edge {e:?} used twice (orientation or non-manifold)")));
                }
            }
        }
        for (e, c) in self.edge_face_counts() {
            if c > 2 {
                return Err(Error::Solver(format!("edge {e:?} has {c} faces")));
            }
        }
        if let Some(i) = self.vertices.iter().position(|v| !(v[2] > 0.0)) {
            return Err(Error::Solver(format!("vertex {i} has non-positive height {}", self.vertices[i][2])));
        }
        let chi = self.euler_characteristic();
        if chi != self.topology.euler_characteristic() {
            return Err(Error::Solver(format!(
                "Euler characteristic {chi} does not match {:?}",
                self.topology
            )));
        }
        Ok(())
    }

    /// Area-weighted (Euclidean) vertex normals.
    pub fn vertex_normals(&self) -> Vec<V3> {
        let mut n = vec![[0.0; 3]; self.vertices.len()];
        for f in &self.faces {
            let [a, b, c] = f.map(|i| self.vertices[i]);
            let fnrm = vec3::cross(vec3::sub(b, a), vec3::sub(c, a));
            for &v in f {
                n[v] = vec3::add(n[v], fnrm);
            }
        }
        n.into_iter().map(vec3::normalize).collect()
    }

    /// Signed Euclidean volume enclosed by a closed mesh (positive for outward orientation).
    pub fn signed_volume(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| self.vertices[i]);
                vec3::dot(a, vec3::cross(b, c)) / 6.0
            })
            .sum()
    }

    /// Makes face orientations agree across shared edges (per connected component) and,
    /// for closed meshes, point outward.
    pub fn orient_consistently(&mut self) -> Result<()> {
        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let has_directed = |f: &[usize; 3], a: usize, b: usize| (0..3).any(|k| f[k] == a && f[(k + 1) % 3] == b);
        let mut state = vec![0u8; self.faces.len()];
        for seed in 0..self.faces.len() {
            if state[seed] != 0 {
                continue;
            }
            state[seed] = 1;
            let mut stack = vec![seed];
            while let Some(fi) = stack.pop() {
                let f = self.faces[fi];
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    for &g in &edge_faces[&(a.min(b), a.max(b))] {
                        if g == fi {
                            continue;
                        }
                        let agrees = has_directed(&self.faces[g], b, a);
                        if state[g] == 0 {
                            if !agrees {
                                self.faces[g].swap(1, 2);
                            }
                            state[g] = 1;
                            stack.push(g);
                        } else if !agrees {
                            return Err(Error::Solver("surface is not orientable".into()));
                        }
                    }
                }
            }
        }
        if self.topology == Topology::Sphere && self.signed_volume() < 0.0 {
            for f in &mut self.faces {
                f.swap(1, 2);
            }
        }
        Ok(())
    }

    /// Drops unreferenced vertices and renumbers faces.
    pub fn compact(&mut self) {
        let mut map = vec![usize::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        let mut fixed = Vec::new();
        for f in &self.faces {
            for &v in f {
                if map[v] == usize::MAX {
                    map[v] = 0;
                }
            }
        }
        for i in 0..self.vertices.len() {
            if map[i] != usize::MAX {
                map[i] = verts.len();
                verts.push(self.vertices[i]);
                fixed.push(self.fixed[i]);
            }
        }
        for f in &mut self.faces {
            *f = f.map(|v| map[v]);
        }
        self.vertices = verts;
        self.fixed = fixed;
    }

    /// Applies a map to every vertex.
    pub fn map_vertices(&self, f: impl Fn(V3) -> V3) -> TriMesh {
        TriMesh { vertices: self.vertices.iter().map(|v| f(*v)).collect(), ..self.clone() }
    }

    /// Wavefront OBJ text: `v x y z` then `f i j k` (1-based).
    pub fn to_obj(&self) -> String {
        let mut s = String::with_capacity(self.vertices.len() * 64 + self.faces.len() * 24);
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    /// Parses OBJ text; boundary vertices (on edges with one incident face) are marked fixed.
    pub fn from_obj(text: &str, topology: Topology) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let mut c = [0.0; 3];
                    for x in &mut c {
                        *x = it
                            .next()
                            .ok_or_else(|| Error::Parse(format!("line {}: short vertex record", ln + 1)))?
                            .parse()
                            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
                    }
                    vertices.push(c);
                }
                Some("f") => {
                    let mut f = [0usize; 3];
                    for x in &mut f {
                        let tok = it
                            .next()
                            .ok_or_else(|| Error::Parse(format!("line {}: short face record", ln + 1)))?;
                        let idx: usize = tok
                            .split('/')
                            .next()
                            .unwrap_or(tok)
                            .parse()
                            .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 1)))?;
                        if idx == 0 {
                            return Err(Error::Parse(format!("line {}: OBJ indices are 1-based", ln + 1)));
                        }
                        *x = idx - 1;
                    }
                    faces.push(f);
                }
                _ => {}
            }
        }
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&v| v >= vertices.len())) {
            return Err(Error::Parse(format!("face {f:?} references a missing vertex")));
        }
        let mut mesh = TriMesh::new(vertices.clone(), faces, vec![false; vertices.len()], topology);
        for (a, b) in mesh.boundary_edges() {
            mesh.fixed[a] = true;
            mesh.fixed[b] = true;
        }
        Ok(mesh)
    }
}
