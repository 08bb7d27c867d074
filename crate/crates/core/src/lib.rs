//! Radar stair perception: FMCW/MIMO chirp-cube synthesis, target-list
//! extraction, stair dimensioning and a shallow MLP that refines the estimate.
//!
//! Frames flow through [`chirp_sim`] (scene to cube), [`dsp`] (cube to target
//! list), [`dimension`] (target list to depth and height) and optionally
//! [`enhancer`]. [`pipeline`] wires the stages together and [`eval`] scores
//! estimators against ground truth.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chirp_sim;
pub mod dimension;
pub mod dsp;
pub mod enhancer;
mod error;
pub mod eval;
pub mod experiment;
pub mod numerics;
pub mod pipeline;
pub mod rf_params;
pub mod scene;
pub mod units;

pub use error::{Error, Result};
pub use rf_params::{derive_attributes, DerivedAttributes, RadarConfig};
