pub mod dynamics;
pub mod encounters;
pub mod error;
pub mod frames;
pub mod harness;
pub mod indicators;
pub mod integrator;
pub mod ks;
pub mod linalg;

pub use error::{Body, Error, Result};
pub use frames::SystemParams;
pub use ks::{CartesianState, KsState};
