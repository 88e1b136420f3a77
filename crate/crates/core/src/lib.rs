//! Frequency-entangled photon pairs from four-wave mixing in a Sagnac fiber loop.
//!
//! The crate is organised along the path of a photon pair:
//!
//! * [`state`] builds the two-photon state leaving the loop coupler.
//! * [`polarization`] decides, with Jones calculus, whether the two pump
//!   replicas overlap and which loop phase they pick up.
//! * [`interference`] gives coincidence probabilities behind a delayed 50/50
//!   coupler, together with a brute-force operator oracle.
//! * [`counting`] runs gated-detector Monte-Carlo experiments.
//! * [`fitting`] fits beat fringes and extracts visibility and period.
//! * [`scenario`], [`report`] and [`cli`] load configurations, write data files
//!   and drive the `sagnac` binary.

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex64;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub mod cli;
pub mod counting;
pub mod error;
pub mod fitting;
pub mod interference;
pub mod polarization;
pub mod report;
pub mod scenario;
pub mod state;

pub use error::{Error, Result};
