//! Finite-element layer: Q1 assembly on active fine cells, sparse SPD
//! factorization, and constrained (saddle-point) solves.

pub mod assembly;
pub mod banded;
pub mod cholesky;
pub mod dense;
pub mod ordering;
pub mod saddle;
pub mod sparse;

pub use assembly::{assemble_load, assemble_stiffness, ConstraintBlock, Q1_STIFFNESS};
pub use saddle::{solve_saddle, solve_spd, SaddleSolution, SaddleSolver, SpdSolver};
pub use sparse::CsrMatrix;

use crate::error::Result;
use crate::geometry::Region;

/// Factor a region's stiffness with the lattice nested-dissection order.
pub fn factor_region<'a>(region: &Region, a: &'a CsrMatrix) -> Result<SpdSolver<'a>> {
    SpdSolver::with_permutation(a, ordering::nested_dissection(region.nodes()))
}
