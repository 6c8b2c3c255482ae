//! Feature-attribution evaluation on synthetic and tabular data.
//!
//! Attributions are scored by perturbing the features they point at,
//! retraining, and measuring how much accuracy is lost. Coordinate removal
//! (ROAR, Eval-X, ROAD) lives in [`pixel`]; shifting along the attribution and
//! projecting back onto the data distribution (GOAR) lives in [`geo`] and
//! [`evaluation::run_goar`].

pub mod attribution;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod experiments;
pub mod geo;
pub mod nn;
pub mod pixel;
pub mod seed;

pub use error::{Error, Result};
