//! Exact discrete Gaussian and discrete Laplace noise for differential privacy.
//!
//! The crate has four layers:
//!
//! - [`numeric`]: exact rationals, outward-rounded intervals and certified series.
//! - [`randcore`] and [`samplers`]: exact samplers driven by a metered bit source.
//! - [`dist`]: certified pmf, tail, moment and bound evaluation.
//! - [`accountant`]: concentrated, Renyi and approximate DP, privacy-loss
//!   distributions and Gaussian/Laplace comparisons.

pub mod accountant;
pub mod dist;
pub mod error;
pub mod numeric;
pub mod randcore;
pub mod samplers;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use numeric::{CertifiedInterval, Rational};
