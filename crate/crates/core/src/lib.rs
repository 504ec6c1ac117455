//! Discrete Wiener-Hopf kernel operators on `l2({n, n+1, ...})`: Laurent
//! coefficients of the symbol ratios, truncated kernel matrices, Fredholm
//! determinants and spectra, the growth-model saddle-point machinery, a
//! Monte Carlo oracle for Poissonized Plancherel measure and the Airy-kernel
//! determinant.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
mod hp;
mod series;
pub mod symbols;
pub mod kernels;
pub mod spectral;
pub mod growth;
pub mod mc;
pub mod twlimit;
pub mod quad;
pub mod specfun;

pub use error::{Error, Result};
