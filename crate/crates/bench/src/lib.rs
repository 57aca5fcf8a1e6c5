//! Shared helpers for the benchmark targets.

use mink_core::fixpoint::{fixpoint_solve, FixpointConfig};
use mink_core::jacobi::JacobiMatrix;

/// A converged matrix reused across benchmarks.
pub fn converged(n: usize) -> JacobiMatrix {
    let cfg = FixpointConfig::new(n);
    let (jac, report) = fixpoint_solve(&cfg, None).expect("fixed point");
    assert!(report.converged);
    jac
}
