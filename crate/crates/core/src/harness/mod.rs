//! Experiment harness: configuration files, scenarios and the drivers
//! behind the command-line tool.

pub mod checks;
pub mod compare;
pub mod config;
pub mod encounter;
pub mod output;
pub mod raster;
pub mod scan;
pub mod scenario;
pub mod switching;

pub use config::{Config, IndicatorKind, Mode};
pub use scenario::{Overrides, Scenario};
