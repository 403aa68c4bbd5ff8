//! TOML configuration files with line-numbered diagnostics.

use std::path::{Path, PathBuf};

use nsbh_core::solver::{InitialData, SolverConfig};
use nsbh_core::uniqueness::Perturbation;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// `[solver]` plus exactly one of `[initial]` and `[restart]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveFile {
    pub solver: SolverConfig,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub restart: Option<Restart>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Restart {
    pub snapshot: PathBuf,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSettings {
    /// Frozen Gronwall constant; fitted on the run itself when absent.
    #[serde(default)]
    pub gronwall_c: Option<f64>,
    /// Frozen Osgood constant; fitted on the run itself when absent.
    #[serde(default)]
    pub osgood_c: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub solver: SolverConfig,
    pub base: InitialData,
    pub perturbation: Perturbation,
    #[serde(default)]
    pub audit: AuditSettings,
}

impl SolveFile {
    pub fn seed(&self) -> u64 {
        match &self.initial {
            Some(InitialData::Random { seed, .. }) => *seed,
            _ => 0,
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

pub fn parse<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                CliError::Usage(format!("{origin}:{line}:{col}: {msg}"))
            }
            None => CliError::Usage(format!("{origin}: {msg}")),
        }
    })
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}
