//! Configuration-driven scenario runner and randomized verification driver
//! for `twostate-core`.

pub mod config;
pub mod error;
pub mod runner;
pub mod table;
pub mod verify;

pub use config::ScenarioConfig;
pub use error::CliError;
pub use runner::{run, RunOutput};
