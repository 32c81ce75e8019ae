//! Matrix-valued homogeneous symbols in `ξ′` with jet coefficients and
//! half-integer powers of `q₂(x, ξ′)`.

mod context;
mod expansion;
mod poly;
mod term;

pub use context::GeometryContext;
pub(crate) use context::check_positive_definite;
pub use expansion::{compose_formal, FormalSymbol, SymbolExpansion};
pub use poly::{MatrixPoly, ScalarPoly, XiMonomial};
pub use term::{PowerPart, SymbolTerm};
