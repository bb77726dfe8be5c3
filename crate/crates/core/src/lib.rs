//! Multicontinuum homogenization for diffusion in perforated domains.
//!
//! The pipeline: rasterize a periodic channel structure ([`geometry`]),
//! compute a fine-grid reference ([`fine_solver`]), solve the constrained
//! oversampled cell problems per coarse block ([`cell_problems`]), reduce
//! them to piecewise-constant macroscopic coefficients ([`upscaling`]),
//! solve the coupled two-continuum macroscopic system ([`macro_solver`]),
//! and compare continuum-wise coarse-cell averages ([`experiments`]).

pub mod cell_problems;
pub mod error;
pub mod experiments;
pub mod fem;
pub mod field;
pub mod fine_solver;
pub mod geometry;
pub mod macro_solver;
pub mod upscaling;

pub use error::{Error, Result, RowTag};
pub use field::{Kappa, ScalarField, Source};
pub use geometry::{build_structure, rasterize, Continuum, PerforatedMesh, Period, Region, UnitCellSpec};
