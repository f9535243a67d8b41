//! Charge-based prison term prediction.
//!
//! A case description is paired with one or more criminal charges; the task is
//! to predict the prison term in months for each charge, and to combine the
//! per-charge predictions into a total term. The library provides:
//!
//! - a small dense-tensor engine with reverse-mode differentiation
//!   ([`autodiff`]),
//! - the deep gating network encoder and CNN/RNN/RCNN baselines ([`model`]),
//! - the log-scale Huber training objective and the total-term combination
//!   rule ([`objective`]),
//! - bucketed score / exact match / tolerance accuracy evaluation
//!   ([`metrics`]),
//! - dataset modeling, judgment-text extraction, synthetic corpus generation
//!   and batching ([`data`]),
//! - a minibatch training loop with validation-based model selection
//!   ([`train`]), and
//! - the depth-sweep and loss-comparison experiment harnesses
//!   ([`experiments`]).
//!
//! The `cptp` binary ties the pieces together as a command-line pipeline.

pub mod autodiff;
pub mod data;
pub mod experiments;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod train;
