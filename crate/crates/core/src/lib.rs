//! Arbitrary-order vertex-centered finite volume schemes for
//! `-∇·(α∇u) = f` with homogeneous Dirichlet data on rectangles.
//!
//! The trial space is continuous `Q_r` on a tensor-product mesh, nodal at
//! the Lobatto points of each element. Control volumes are cut by lines
//! through the Gauss points, so there is exactly one interior control volume
//! per interior trial node.

pub mod analysis;
pub mod assembly;
pub mod config;
pub mod error;
pub mod expr;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod polyquad;
pub mod solver;
pub mod space;
pub mod study;

pub use error::{Error, Result};
