//! Configuration, scene presets and deterministic end-to-end runs of the
//! rfscene simulator, plus the experiment drivers used by the acceptance
//! suite.

pub mod config;
pub mod error;
pub mod eval;
pub mod experiments;
pub mod manifest;
pub mod pipeline;
pub mod presets;
pub mod seeds;

pub use config::PipelineConfig;
pub use error::{CliError, Result};
