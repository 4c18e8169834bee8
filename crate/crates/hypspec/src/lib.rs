//! Std companion to `hypspec-core`: file formats, the spectrum cache, threaded
//! enumeration, run manifests, verification suites and the CSV reports used by
//! the `hypspec` binary.

pub mod cache;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod parallel;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
