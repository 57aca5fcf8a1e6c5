//! Jacobi matrices and Gaussian quadrature for Minkowski's question-mark
//! measure, built by iterating a Möbius-IFS transfer operator on truncated
//! Jacobi matrices, together with the diagnostic pipelines that probe the
//! measure: zeros and discrepancy against the equilibrium measure, Christoffel
//! functions over a thousand orders of magnitude, Farey-point weight
//! asymptotics, Hausdorff-dimension brackets and Nevai-class indicators.

pub mod analysis;
pub mod asymptotics;
pub mod error;
pub mod fixpoint;
pub mod jacobi;
pub mod lanczos;
pub mod measure;
pub mod numeric;
pub mod quadrature;
pub mod tridiag;

pub use error::{Error, Result};
pub use jacobi::{GaussRule, JacobiMatrix};
pub use measure::{DiscreteMeasure, FareyInterval, MoebiusMap, RationalMeasure, SymbolicWord};
