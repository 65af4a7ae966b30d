//! Scenario files, run orchestration, artifacts and the oracle battery for
//! `semigrav-core`. The `semigrav` binary is a thin command-line layer over
//! this library.

pub mod config;
pub mod error;
pub mod oracles;
pub mod run;
pub mod verify;

pub use config::{parse_config, parse_with_overrides, ScenarioConfig};
pub use error::AppError;
