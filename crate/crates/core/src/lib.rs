pub mod bohm;
pub mod branching;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gridwave;
pub mod rng;
pub mod state;

pub use error::{Error, Result};
