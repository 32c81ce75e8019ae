//! Boundary symbol of the Dirichlet-to-Neumann map of a connection
//! Laplacian, and recovery of the metric and connection jets from it.
//!
//! The algebraic layers ([`jet`], [`symbol`], [`laplacian`], [`forward`])
//! are generic over the coefficient field through [`scalar::Scalar`], so
//! the same recursion runs over `f64`, `f32` or exact rationals. Taking
//! square roots of jets, evaluating symbols and reconstruction need
//! [`scalar::RealScalar`]. The finite-difference checks in [`numeric`] are
//! `f64` only.

pub mod error;
pub mod forward;
pub mod jet;
pub mod laplacian;
pub mod numeric;
pub mod random;
pub mod reconstruction;
pub mod scalar;
pub mod symbol;

pub use error::{Error, Result};

/// Exact rational coefficients.
pub type Rational = num_rational::BigRational;

pub type Jet64 = jet::Jet<f64>;
pub type Jet32 = jet::Jet<f32>;
pub type JetQ = jet::Jet<Rational>;

pub type MatrixJet64 = jet::MatrixJet<f64>;
pub type MatrixJetQ = jet::MatrixJet<Rational>;

pub type SymbolTerm64 = symbol::SymbolTerm<f64>;
pub type SymbolTermQ = symbol::SymbolTerm<Rational>;
pub type SymbolExpansion64 = symbol::SymbolExpansion<f64>;
pub type SymbolExpansionQ = symbol::SymbolExpansion<Rational>;

pub type BoundaryGeometry64 = laplacian::BoundaryGeometry<f64>;
pub type BoundaryGeometry32 = laplacian::BoundaryGeometry<f32>;
pub type BoundaryGeometryQ = laplacian::BoundaryGeometry<Rational>;

pub type ReconstructionResult64 = reconstruction::ReconstructionResult<f64>;
