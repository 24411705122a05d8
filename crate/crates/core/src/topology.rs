//! Free-group words for the loops αₙ and the crossings of a disk with the segment β.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bvh::TriBvh;
use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::vec3::V3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Generator {
    Delta,
    Tau(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: Generator,
    /// `+1` or `-1`.
    pub exponent: i8,
}

impl Letter {
    pub fn new(generator: Generator, exponent: i8) -> Self {
        debug_assert!(exponent == 1 || exponent == -1);
        Self { generator, exponent }
    }

    pub fn inverse(self) -> Self {
        Self { exponent: -self.exponent, ..self }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (lo, hi) = match self.generator {
            Generator::Delta => ("d".to_string(), "D".to_string()),
            Generator::Tau(i) => (format!("t{i}"), format!("T{i}")),
        };
        f.write_str(if self.exponent > 0 { &lo } else { &hi })
    }
}

/// A word in the free group on `δ, τ₁, τ₂, …`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FreeWord {
    pub letters: Vec<Letter>,
}

impl FreeWord {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Self { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn concat(&self, other: &FreeWord) -> Self {
        Self { letters: self.letters.iter().chain(&other.letters).copied().collect() }
    }

    /// Parses the text form, e.g. `"d t1 D T1"` (upper case for inverses).
    pub fn parse(s: &str) -> Result<Self> {
        let letter = |tok: &str| -> Result<Letter> {
            let bad = || Error::Parse(format!("bad letter {tok:?}"));
            match tok {
                "d" => Ok(Letter::new(Generator::Delta, 1)),
                "D" => Ok(Letter::new(Generator::Delta, -1)),
                _ => {
                    let (e, rest) = if let Some(r) = tok.strip_prefix('t') {
                        (1, r)
                    } else if let Some(r) = tok.strip_prefix('T') {
                        (-1, r)
                    } else {
                        return Err(bad());
                    };
                    let i: usize = rest.parse().map_err(|_| bad())?;
                    if i == 0 {
                        return Err(bad());
                    }
                    Ok(Letter::new(Generator::Tau(i), e))
                }
            }
        };
        s.split_whitespace().map(letter).collect::<Result<Vec<_>>>().map(Self::new)
    }
}

impl fmt::Display for FreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// `δ τ₁ δ⁻¹ τ₁⁻¹ τ₂ δ⁻¹ τ₂⁻¹ ⋯ τ_m δ⁻¹ τ_m⁻¹`.
pub fn alpha_word(m: usize) -> Result<FreeWord> {
    if m == 0 {
        return Err(Error::Domain("alpha_word needs at least one tunnel generator".into()));
    }
    let d = |e| Letter::new(Generator::Delta, e);
    let t = |i, e| Letter::new(Generator::Tau(i), e);
    let mut letters = vec![d(1)];
    for i in 1..=m {
        letters.extend([t(i, 1), d(-1), t(i, -1)]);
    }
    Ok(FreeWord::new(letters))
}

pub fn free_reduce(w: &FreeWord) -> FreeWord {
    let mut out: Vec<Letter> = Vec::with_capacity(w.len());
    for &l in &w.letters {
        if out.last() == Some(&l.inverse()) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    FreeWord::new(out)
}

pub fn is_trivial(w: &FreeWord) -> bool {
    free_reduce(w).is_empty()
}

/// Deletes every occurrence of `g` and reduces.
pub fn kill_generator(w: &FreeWord, g: Generator) -> FreeWord {
    free_reduce(&FreeWord::new(w.letters.iter().filter(|l| l.generator != g).copied().collect()))
}

/// A vertical segment on the axis `x = y = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentQuery {
    pub z_lo: f64,
    pub z_hi: f64,
}

impl SegmentQuery {
    /// β: from `(0, 0, 1/2)` to `(0, 0, 3)`.
    pub fn beta() -> Self {
        Self { z_lo: 0.5, z_hi: 3.0 }
    }
}

impl Default for SegmentQuery {
    fn default() -> Self {
        Self::beta()
    }
}

/// Transverse crossings of the mesh with the segment, sorted by height.
///
/// When a crossing lands on an edge or vertex (two hits at the same height), the
/// segment is shifted by `1e-9` in `x` and the query repeated.
pub fn segment_intersections(m: &TriMesh, q: &SegmentQuery) -> Vec<V3> {
    let bvh = TriBvh::from_mesh(&m.vertices, &m.faces);
    let mut x = 0.0;
    for attempt in 0..8 {
        let (p0, p1) = ([x, 0.0, q.z_lo], [x, 0.0, q.z_hi]);
        let hits = bvh.segment_hits(p0, p1);
        let tied = hits.windows(2).any(|w| (w[1].0 - w[0].0).abs() < 1e-12);
        if !tied || attempt == 7 {
            return hits.iter().map(|(t, _)| [x, 0.0, q.z_lo + t * (q.z_hi - q.z_lo)]).collect();
        }
        x += 1e-9 * (attempt + 1) as f64;
    }
    unreachable!()
}
