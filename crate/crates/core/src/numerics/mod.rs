//! Foundation layer: adaptive complex-path quadrature, complex polynomial
//! arithmetic and root finding, numerical differentiation, and truncated
//! Taylor (jet) arithmetic used to propagate exact derivatives through
//! evaluator compositions.

pub mod diff;
pub mod jet;
pub mod poly;
pub mod quad;

pub use diff::derivative;
pub use jet::Jet;
pub use poly::ComplexPolynomial;
pub use quad::{integrate_path, detour_path, PathSegment, QuadratureResult};
