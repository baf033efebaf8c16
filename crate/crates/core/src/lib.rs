//! Audio-visual speaker identification.
//!
//! An acoustic camera (steered-response-power beamforming over a double ring
//! microphone array) localizes the active sound source, cascade classifiers
//! detect faces in the camera frame, subspace or LBP-histogram recognizers
//! identify them, and a small decision tree fuses both into one of five
//! outcomes. Synthetic scenes with known ground truth drive everything.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod error;
pub mod fusion;
pub mod image;
pub mod localization;
pub mod pipeline;
pub mod recognition;
pub mod scene_sim;

pub use error::{Error, Result};
