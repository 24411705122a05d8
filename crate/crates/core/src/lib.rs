//! Numerical construction of a non-properly embedded minimal plane in
//! hyperbolic 3-space: boundary curves, barrier tunnels, constrained discrete
//! Plateau solves, and the topological/metric diagnostics around them.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod annulus;
pub mod area;
pub mod bvh;
pub mod curve;
pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod h3;
pub mod mesh;
pub mod meshgen;
pub mod precond;
pub mod remesh;
pub mod solver;
pub mod topology;
pub mod tunnel;
pub mod vec3;

pub use error::{Error, Result};
