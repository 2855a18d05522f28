//! Discrete magnetic Laplacians on Cayley graphs: operators, heat semigroups,
//! ground states and von Neumann spectral invariants computed on finite
//! ball truncations with certified truncation errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod error;
pub mod field;
pub mod graph;
pub mod ground_state;
pub mod heat;
pub mod linalg;
pub mod magnetic;
pub mod oracle;
pub mod runner;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
pub use field::VertexFunction;
pub use graph::{build_ball, BallGraph, GroupKind, GroupSpec, RadialTree, Truncation};
pub use magnetic::{Flux, Multiplier, Potential};
pub use sparse::{OperatorKind, SparseHermitian};
