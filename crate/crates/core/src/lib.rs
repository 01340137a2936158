//! Single-object space tracking that fuses radar returns and two-line element
//! sets through possibility functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`possibility`]: possibility functions, outer probability measures and the
//!   grid-scale prediction/update calculus.
//! - [`dynamics`]: orbital states, frames, Kepler conversion and numerical
//!   propagation with RIC process noise.
//! - [`tle`]: NORAD two-line element parsing and the TLE observation model.
//! - [`radar`]: simulated Doppler radar and its Gaussian possibility.
//! - [`filter`]: the sequential Monte Carlo filter.
//! - [`scenario`]: timeline construction, truth simulation and metrics output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod filter;
pub mod possibility;
pub mod radar;
pub mod scenario;
pub mod tle;

pub use error::{Error, Result};
