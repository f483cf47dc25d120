//! Dense linear algebra, random streams and quadrature shared by every solver.
//!
//! Matrices are nalgebra `DMatrix` values; the aliases below name the two
//! element types used throughout the crate.

mod expm;
mod lyapunov;
mod matrix;
mod quadrature;
mod random;

pub use expm::expm;
pub use lyapunov::{is_hurwitz, lyapunov_residual, solve_lyapunov};
pub use matrix::*;
pub use quadrature::{
    gauss_legendre_rule, integrate, integrate_half_line, integrate_panels, oscillatory_half_line,
    HalfLineTransform, DEFAULT_POINTS,
};
pub use random::{gaussian_draws, RandomStream};
