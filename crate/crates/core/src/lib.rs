//! Simulation and design toolkit for a 3D massive-MIMO multi-pair one-way
//! relay network with simultaneous wireless information and power transfer
//! at the relay.
//!
//! K source users reach K destination users through a common relay with a
//! large antenna array and a directional pattern steered by a common tilt.
//! In the first phase the sources transmit and the relay splits its
//! received power between information decoding and energy harvesting; in
//! the second phase the relay forwards the decoded symbols with conjugate
//! (matched-filter) precoding, powered entirely by the harvest.
//!
//! The crate provides:
//!
//! - [`propagation`]: geometry, the directional gain model, and the
//!   large-scale coefficients combining path loss and pattern gain;
//! - [`rates`]: closed-form harvested power and average-SINR lower bounds
//!   for both phases, with per-pair and sum achievable rates;
//! - [`channel`]: a reproducible Monte-Carlo engine sampling Rayleigh
//!   fading and measuring instantaneous matched-filter rates, plus the
//!   random-matrix moment suite the closed forms rest on;
//! - [`optimizer`]: joint grid search over tilt and splitting ratio;
//! - [`scenario`]: random user placement and scenario files;
//! - [`experiments`]: the CSV-emitting harness behind the CLI.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod propagation;
pub mod rates;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
