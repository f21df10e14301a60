//! Sweep configurations, runners and their CSV/JSON renderings.

mod config;
mod output;
mod run;

pub use config::{
    Channels, GridSpec, GridVariable, McSettings, Preset, ProtocolSelection, RunSpec, SweepConfig,
};
pub use output::{render_csv, render_json, Format};
pub use run::{
    execute, reproduce, run_coherence, run_concurrence_sweep, run_g_sweep, run_mc_validate,
    run_threshold, Annotation, Cell, Outcome, SweepResult, ValidationReport, Z_FAIL,
};

use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOOL: &str = "rtn-echo-lab";

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid `{field}`: {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    #[error(transparent)]
    Domain(#[from] crate::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl SweepError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config { .. } | SweepError::Domain(_) => 2,
            SweepError::Io(_) => 4,
        }
    }
}
