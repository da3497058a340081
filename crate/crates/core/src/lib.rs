//! Physical-layer transmitter authentication in time-variant channels.
//!
//! Bob keeps a noisy record of Alice's channel frequency response and tests
//! each new measurement against it. This crate simulates the responses
//! (`channel`, `raytrace`), provides the closed-form covariance structure
//! (`stats`), runs the tests and evaluates their miss rates (`detect`), and
//! sweeps whole rooms of Alice/Eve placements (`harness`).

pub mod channel;
pub mod detect;
mod error;
pub mod harness;
pub mod numerics;
pub mod raytrace;
pub mod stats;

pub use error::{Error, Result};
