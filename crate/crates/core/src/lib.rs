//! Weighted focal differentiable MCC training core.
//!
//! Everything in this crate is allocation-only (`no_std` + `alloc`): a small
//! tape-based reverse-mode autodiff engine, the four differentiable losses
//! (weighted cross-entropy, focal, differentiable F1 and the weighted focal
//! differentiable MCC), a stacked-LSTM window classifier, AdamW with a cosine
//! schedule, threshold-swept evaluation metrics, windowing/one-hot encoding of
//! S/T sites, stratified splitting, and the cross-validation / nested
//! validation harness.
//!
//! File formats, dataset IO and the command line live in the `focalmcc`
//! companion crate.
#![no_std]
// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autodiff;
pub mod data;
pub mod diagnostics;
mod error;
pub mod harness;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
