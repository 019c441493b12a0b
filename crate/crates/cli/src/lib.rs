//! Experiment runner for the `ramcmc` samplers: named presets, TOML
//! configuration, seeded replications and CSV/JSON artifacts.

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;
pub mod tools;

pub use config::{parse_config, ExperimentConfig, RawConfig};
pub use error::CliError;
pub use experiment::{aggregate, run_experiment, simulate, Aggregate, ReplicationRecord};
pub use presets::{list_presets, InitialFactor, Preset, PresetKind};
