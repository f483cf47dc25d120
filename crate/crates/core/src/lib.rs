#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classical_gle;
pub mod cli;
pub mod error;
pub mod fock;
pub mod hp_dilation;
pub mod kernels;
pub mod lindblad;
pub mod numerics;
pub mod qnoise;
pub mod realization;

pub use error::{Error, Result};
