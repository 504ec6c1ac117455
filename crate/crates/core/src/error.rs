use alloc::string::String;

/// Failures reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no annulus of analyticity: inner radius {inner} is not below outer radius {outer}")]
    NoAnnulus { inner: f64, outer: f64 },

    #[error("{what} did not converge: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Convergence {
        what: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    #[error("phase {phase} lies within {distance} of an Airy zero lattice point")]
    PhaseProximity { phase: f64, distance: f64 },

    #[error("two real critical points (discriminant {discriminant:e} at c' = {c_prime}); regime not supported")]
    RealCriticalPoints { discriminant: f64, c_prime: f64 },

    #[error("point {re} + {im}i touches a branch cut or singularity")]
    BranchCut { re: f64, im: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("sign inconsistency at ({row}, {col}): K(i,j)K(j,i) < 0, no positive diagonal symmetrizer")]
    NotSymmetrizable { row: usize, col: usize },

    #[error("input is not a permutation of 1..N: {0}")]
    NotPermutation(String),

    #[error("no offset convention matches the Monte Carlo estimates")]
    NoConsistentOffset,
}

pub type Result<T> = core::result::Result<T, Error>;
