//! Truncated Taylor series in the boundary variables `x′` and the normal variable `xⁿ`.

mod index;
mod matrix;
mod scalar_jet;
mod truncation;

pub use index::{MultiIndex, MAX_VARS};
pub use matrix::{invert_constant, MatrixJet};
pub use scalar_jet::Jet;
pub use truncation::{Truncation, MAX_NORMAL_ORDER};
