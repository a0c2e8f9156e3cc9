//! Optional TOML configuration; command-line flags override it.

use std::path::Path;

use misclassit::bootstrap::BootstrapConfig;
use misclassit::io::ReadOptions;
use misclassit::sim::DesignOptions;
use misclassit::SolverOptions;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub read: ReadOptions,
    pub solver: SolverOptions,
    pub bootstrap: BootstrapConfig,
    pub simulate: DesignOptions,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}
