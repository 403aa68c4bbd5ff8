use std::path::{Path, PathBuf};

use clap::Args;
use nsbh_core::solver::snapshot;
use nsbh_core::{NormEngine, NormSpec};
use serde::Serialize;

use crate::manifest::RunDir;
use crate::CliError;

#[derive(Args, Debug)]
pub struct NormsArgs {
    /// Snapshot file written by `solve`.
    #[arg(long)]
    snapshot: PathBuf,
    /// Norm specification such as `H:0:0.75`, `B:2,1:0:-0.5` or `L:4h,infv` (repeatable).
    #[arg(long = "norm", required = true)]
    norms: Vec<String>,
}

#[derive(Serialize)]
struct Entry {
    spec: String,
    velocity: f64,
    density: f64,
}

pub fn run(args: &NormsArgs, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let specs = args
        .norms
        .iter()
        .map(|s| s.parse::<NormSpec>().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    let state = snapshot::load(&args.snapshot)?;
    let engine = NormEngine::new(*state.grid());
    let mut entries = Vec::new();
    for spec in &specs {
        entries.push(Entry {
            spec: spec.to_string(),
            velocity: engine.norm_vec(&state.u, spec)?,
            density: engine.norm(&state.rho, spec)?,
        });
    }
    for e in &entries {
        eprintln!("{:<20} u: {:.6e}  rho: {:.6e}", e.spec, e.velocity, e.density);
    }
    let mut dir = RunDir::create(out, 0)?;
    dir.write_json("norms.json", &serde_json::json!({ "t": state.t, "norms": entries }))?;
    let echo = serde_json::json!({ "snapshot": args.snapshot, "norms": args.norms });
    dir.finish("norms", 0, Some(*state.grid()), echo, true)
}
