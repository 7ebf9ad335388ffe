//! Batch front end for `nzkl`: JSON experiment configs in, CSV tables out.
//!
//! Exit codes are 0 when every requested check passes, 1 on a numerical
//! failure and 2 on a config or usage error.

pub mod app;
pub mod config;
pub mod names;
pub mod output;
pub mod runner;
pub mod svg;

pub use config::{parse_config, ConfigError, ExperimentConfig, Overrides};
pub use names::{CheckName, Scheme, UnknownName};
