//! Quantum-switch process matrices, causal witnesses and a simulator of the
//! photonic switch experiment.

pub mod causal_sdp;
mod error;
pub mod hardware;
pub mod matstack;
pub mod processes;
pub mod simulator;
pub mod witness;

pub use error::{Error, Result};
