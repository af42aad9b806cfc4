//! Deterministic simulator for position-verification protocols built on
//! shared Bell pairs, with an exact state-vector engine as ground truth.

pub mod adversaries;
pub mod backend;
pub mod bell;
pub mod cli;
pub mod error;
pub mod keyauth;
pub mod protocols;
pub mod quantum;
pub mod spacetime;

pub use error::{Error, Result};
