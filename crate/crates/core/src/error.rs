use alloc::boxed::Box;
use alloc::string::String;

use crate::spectrum::LengthSpectrum;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("trace {abs_trace} is not hyperbolic (|trace| must exceed 2)")]
    NotHyperbolic { abs_trace: f64 },

    #[error("{what}: argument {value} outside the admissible domain")]
    Domain { what: &'static str, value: f64 },

    #[error("cusp model point |z| = {modulus} is at a singularity of the density")]
    Singularity { modulus: f64 },

    #[error("invalid tolerance {tol} (admissible range ({lo}, {hi}])")]
    InvalidTolerance { tol: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge after {cells} cells: estimate {estimate}, error {error}")]
    NonConvergence { estimate: f64, error: f64, cells: usize },

    #[error("word reduces to the identity")]
    EmptyWord,

    #[error("invalid group presentation: {0}")]
    InvalidGroup(String),

    #[error("enumeration budget exhausted; spectrum certified below length {}", .0.complete_below)]
    BudgetExhausted(Box<LengthSpectrum>),

    #[error("cutoff {cutoff} needs the extended-precision scalar (f64 limit {limit})")]
    PrecisionRequired { cutoff: f64, limit: f64 },

    #[error("signature (g, n) = ({g}, {n}) is not stable (2g - 2 + n must be positive)")]
    UnstableSignature { g: u32, n: u32 },

    #[error("weight k = 0 is not supported here: {0}")]
    UnsupportedWeight(&'static str),

    #[error("weight k = {k} exceeds the resource limit {limit}")]
    ResourceLimit { k: u64, limit: u64 },

    #[error("s = {s} is outside the region of absolute convergence s > 1")]
    OutOfRegion { s: f64 },

    #[error("zeta evaluated at s = {found}, but s = {expected} is required")]
    ZetaArgumentMismatch { expected: f64, found: f64 },

    #[error("matrix is not hermitian: entry ({row}, {col}) off by {defect}")]
    NotHermitian { row: usize, col: usize, defect: f64 },

    #[error("matrix is not positive semidefinite: pivot {pivot} below {threshold}")]
    NotPositiveSemidefinite { pivot: f64, threshold: f64 },

    #[error("matrix is numerically singular: pivot magnitude {pivot} at step {step}")]
    Singular { pivot: f64, step: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),

    #[error("point with log|u| = {log_modulus} lies outside the collar annulus")]
    OutsideAnnulus { log_modulus: f64 },
}
