//! Adaptive pilot-beam selection for sparse mmWave MIMO channels, modelled as
//! a POMDP over the angles of departure of the channel paths.

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod output;
pub mod policies;
pub mod pomdp;
pub mod reduced;
pub mod sensing;

pub use error::{Error, Result};
