#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod geometry;
mod linalg;
pub mod poly;
pub mod scalar;
pub mod quadrature;
pub mod functions;
pub mod norms;
pub mod bounds;
pub mod accuracy;
pub mod fem1d;
pub mod cli;

pub use error::{Error, Result};

/// Double-precision aliases.
pub type Simplex64 = geometry::Simplex<f64>;
pub type Mesh64 = geometry::SimplexMesh<f64>;
pub type Constants64 = bounds::ConstantBundle<f64>;
pub type Law64 = accuracy::AccuracyLaw<f64>;
pub type Solution64 = fem1d::DiscreteSolution<f64>;
/// Single-precision aliases.
pub type Simplex32 = geometry::Simplex<f32>;
pub type Mesh32 = geometry::SimplexMesh<f32>;
pub type Constants32 = bounds::ConstantBundle<f32>;
pub use scalar::Rational;
