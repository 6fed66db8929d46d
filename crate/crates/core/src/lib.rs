//! Bit-exact simulator for coded Map-Shuffle-Reduce over a wireless access
//! point, with the matching closed-form loads and converse bounds.

pub mod access_point;
pub mod analysis;
pub mod bits;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod decoder;
pub mod engine;
pub mod error;
pub mod figures;
pub mod gf256;
pub mod matrix;
pub mod placement;
pub mod sim;
pub mod subset;
pub mod uplink;

pub use config::{Baseline, DownlinkMode, Mu, PlacementMode, SystemConfig};
pub use error::{Error, Result};
pub use sim::{run, RunFailure, RunOptions, RunOutcome, RunRecord};
