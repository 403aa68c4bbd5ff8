//! Run directories and their manifests.

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use nsbh_core::{AnisoGrid, FilterBankParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the parent of new run directories.
pub const RUN_DIR_ENV: &str = "NSBH_RUN_DIR";
pub const MANIFEST_NAME: &str = "manifest.json";

/// The only part of a manifest that differs between reruns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub started_utc: String,
    pub wall_clock_seconds: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    pub grid: Option<AnisoGrid>,
    pub filter_bank: FilterBankParams,
    pub config: serde_json::Value,
    pub certified: bool,
    pub outputs: Vec<String>,
    pub execution: Execution,
}

pub struct RunDir {
    path: PathBuf,
    outputs: Vec<String>,
    started: chrono::DateTime<Utc>,
}

impl RunDir {
    /// Create `<parent>/<timestamp>-seed<seed>`, where the parent is `explicit`,
    /// else `$NSBH_RUN_DIR`, else `./runs`.
    pub fn create(explicit: Option<&Path>, seed: u64) -> Result<Self, CliError> {
        let parent = explicit
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(RUN_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("runs"));
        let started = Utc::now();
        let stem = format!("{}-seed{seed}", started.format("%Y%m%dT%H%M%S%.6fZ"));
        let mut path = parent.join(&stem);
        let mut n = 1;
        while path.exists() {
            path = parent.join(format!("{stem}-{n}"));
            n += 1;
        }
        std::fs::create_dir_all(&path).map_err(|e| CliError::io(&path, e))?;
        Ok(RunDir {
            path,
            outputs: Vec::new(),
            started,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Path for a new output, recorded in the manifest.
    pub fn output(&mut self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.path.join(name);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        self.outputs.push(name.to_string());
        Ok(p)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let p = self.output(name)?;
        std::fs::write(&p, contents).map_err(|e| CliError::io(&p, e))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish(
        self,
        subcommand: &str,
        seed: u64,
        grid: Option<AnisoGrid>,
        config: serde_json::Value,
        certified: bool,
    ) -> Result<PathBuf, CliError> {
        let elapsed = (Utc::now() - self.started).num_microseconds().unwrap_or(0) as f64 * 1e-6;
        let manifest = RunManifest {
            tool: "nsbh".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: subcommand.into(),
            seed,
            grid,
            filter_bank: FilterBankParams::default(),
            config,
            certified,
            outputs: self.outputs.clone(),
            execution: Execution {
                started_utc: self.started.to_rfc3339_opts(SecondsFormat::Micros, true),
                wall_clock_seconds: elapsed,
                threads: rayon::current_num_threads(),
            },
        };
        let p = self.path.join(MANIFEST_NAME);
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        Ok(self.path)
    }
}
