//! Finite-difference checks on a flat periodic strip.

pub(crate) mod discrete;
pub mod dtn;
pub mod greens;
pub mod solve;
pub mod strip;

pub use dtn::{
    boundary_dtn, compare_with_symbols, conformal_check_2d, dtn_apply_numeric, dtn_samples, ComparisonRow, DtnSample,
    SymbolComparison,
};
pub use greens::{greens_residual, random_smooth_field};
pub use solve::{plane_wave, solve_dirichlet, BoundaryData, DirichletSolver, GridFunction, SolverKind};
pub use strip::{ConnectionField, Field, MetricField, StripProblem};
