//! Rate analysis for continuous-variable measurement-device-independent QKD
//! where Alice's lossy link is corrected by a GKP-based bosonic code.
//!
//! The pipeline runs from Gaussian noise through GKP correction and the
//! relay's Bell measurement to asymptotic and composable key rates. It also
//! handles fading free-space links and includes a Monte Carlo oracle that
//! checks the analytic steps from independent sampling.
//!
//! Runnable examples, one per capability:
//!
//! ```text
//! cargo run --release --example residual_sweep          # σ_r² vs loss, break-even, ancilla quality
//! cargo run --release --example concatenation           # repeated code layers along the link
//! cargo run --release --example asymptotic_baseline     # no-GKP frontiers and PLOB comparison
//! cargo run --release --example composable_frontier     # finite-size rates vs L_A
//! cargo run --release --example block_size              # rate vs block size N
//! cargo run --release --example concatenated_frontier   # frontiers with C code layers
//! cargo run --release --example fading_channel          # free-space fading average
//! cargo run --release --example mc_validation           # Monte Carlo cross-checks
//! ```
//!
//! Variance conventions: covariance matrices carry vacuum noise 1
//! ([`units::Snu`]), while channel and GKP residual variances use vacuum ½
//! ([`units::HalfSnu`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod cli;
pub mod config;
pub mod error;
pub mod fading;
pub mod finite_size;
pub mod gaussian;
pub mod gkp;
mod interp;
pub mod mc;
mod quad;
pub mod scenario;
pub mod security;
pub mod units;

pub use error::{Error, Result};
