//! Steady-state block entropy of the XY chain through block Toeplitz matrices,
//! with a small-n Fock-space oracle.

pub mod cli;
pub mod entropy;
pub mod fock;
pub mod model;
pub mod quadrature;
pub mod spectrum;
pub mod symbol;
pub mod toeplitz;
