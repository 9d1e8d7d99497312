//! Library side of the `framecert` command: configuration schema, command
//! execution, and report rendering.

pub mod config;
pub mod emit;
pub mod run;

use framecert_core::{CertError, MeasureError, VerifyError};
use thiserror::Error;

pub use config::{parse_config, serialize_config, Command, Format, RunConfig};
pub use run::{run, Outcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Command-line overrides layered on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub command: Option<Command>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub out: Option<String>,
    pub trunc_t: Option<u32>,
    pub ifs_depth: Option<u32>,
    pub error_budget: Option<f64>,
}

impl Overrides {
    /// Applies the overrides; a command given both ways must agree.
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        match (cfg.command, self.command) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::Config(format!(
                    "command `{b}` conflicts with `{a}` in the config"
                )))
            }
            (None, None) => return Err(CliError::Config("no command given".into())),
            (_, Some(b)) => cfg.command = Some(b),
            _ => {}
        }
        if let Some(seed) = self.seed {
            if let Some(f) = cfg.family.as_mut() {
                f.seed = Some(seed);
            }
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(o) = &self.out {
            cfg.output.path = Some(o.clone());
        }
        if let Some(t) = self.trunc_t {
            cfg.quad.trunc_t = t;
        }
        if let Some(d) = self.ifs_depth {
            cfg.quad.ifs_depth = d;
        }
        if let Some(e) = self.error_budget {
            cfg.quad.error_budget = e;
        }
        cfg.catalog.trunc_t = cfg.quad.trunc_t;
        cfg.catalog.ifs_depth = cfg.quad.ifs_depth;
        Ok(())
    }
}
