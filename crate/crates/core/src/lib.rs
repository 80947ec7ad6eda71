//! Unsupervised clustered federated learning (CFL) for estimating
//! source-dominated microphone clusters in acoustic sensor networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`dsp`] turns node signals into log-mel band energy (LMBE) matrices.
//! * [`nn`] is a small dense network with SGD, layer freezing and
//!   parameter flattening; it provides the autoencoder and the classifier.
//! * [`scene`] builds multi-room scenes, synthesizes room impulse responses
//!   and renders the microphone signal of every node.
//! * [`cfl`] runs the federated rounds, congruence checks and recursive
//!   bi-partitioning. Its server half only ever sees weight updates.
//! * [`membership`] derives soft membership values from similarity matrices.
//! * [`eval`] scores clusterings (cluster-to-source distance, cluster counts,
//!   network-wide source-class recognition).
//! * [`experiment`] wires everything into seeded, reproducible runs that
//!   write CSV/JSON/SVG reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfl;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod membership;
pub mod nn;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
pub use exec::Execution;
