//! Compressive data collection over lossy links.
//!
//! A sensor node projects its `N`-sample signal `x` with a source-coding
//! matrix `Φs` (by default the sparse Gaussian matrix), the lossy channel
//! keeps a subset of the projected samples (the selection matrix `Φr`), and
//! the fusion center recovers `x = Ψ s` from `y = Φr Φs Ψ s` by OMP or basis
//! pursuit. [`rip`] checks the restricted isometry behaviour of these
//! matrices empirically and [`harness`] runs the recovery experiments.

pub mod channel;
pub mod error;
pub mod harness;
pub mod matrices;
pub mod recovery;
pub mod rip;
pub mod seed;
pub mod signal;

pub use error::{Error, Result};
