//! Numerical core for spectral invariants of hyperbolic Riemann surfaces.
//!
//! The crate is `no_std` and only needs `alloc`. It covers
//!
//! * PSL₂(ℝ) arithmetic and cusp-model densities ([`hyperbolic`]),
//! * enumeration of primitive closed-geodesic classes of free Fuchsian groups ([`spectrum`]),
//! * Selberg zeta local factors, partial products and pinching asymptotics ([`selberg`]),
//! * the normalization constants `C(g,n)`, `E₁(g,n)`, `E_{k+1}(g,n)` and their growth ([`constants`]),
//! * Gram-determinant and Quillen-type metrics along degenerations ([`metrics`]),
//! * the degenerating collar metric and its integrals ([`collar`]).
//!
//! File formats, threading and the command-line front end live in the `hypspec` crate.
#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod collar;
pub mod constants;
mod error;
pub mod hyperbolic;
pub mod metrics;
pub mod quadrature;
pub mod scalar;
pub mod selberg;
pub mod spectrum;
pub mod sum;

pub use error::{Error, Result};
