use std::path::{Path, PathBuf};

use nsbh_core::solver::{self, snapshot};

use crate::config::{self, SolveFile};
use crate::manifest::RunDir;
use crate::CliError;

pub fn run(path: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let file: SolveFile = config::load(path)?;
    let cfg = &file.solver;
    cfg.validate()?;
    let init = match (&file.initial, &file.restart) {
        (Some(gen), None) => gen.generate(cfg)?,
        (None, Some(r)) => {
            let s = snapshot::load(&r.snapshot)?;
            if *s.grid() != cfg.grid {
                return Err(CliError::Usage(format!(
                    "{}: snapshot grid {:?} differs from [solver] grid {:?}",
                    r.snapshot.display(),
                    s.grid(),
                    cfg.grid
                )));
            }
            s
        }
        _ => {
            return Err(CliError::Usage(format!(
                "{}: exactly one of [initial] and [restart] is required",
                path.display()
            )))
        }
    };
    let seed = file.seed();
    let echo = serde_json::to_value(&file).expect("serializable");
    let mut dir = RunDir::create(out, seed)?;
    let outcome = solver::run(cfg, &init);
    let res = match outcome {
        Ok(res) => res,
        Err(e) => {
            let err = CliError::from(e);
            dir.write("error.txt", &format!("{err:?}\n"))?;
            dir.finish("solve", seed, Some(cfg.grid), echo, false)?;
            return Err(err);
        }
    };
    dir.write("ledger.csv", &res.ledger.to_csv())?;
    let snap = |dir: &mut RunDir, name: &str, s: &solver::State| -> Result<(), CliError> {
        let p = dir.output(name)?;
        snapshot::save(&p, s).map_err(CliError::from)
    };
    snap(&mut dir, "initial.snap", &init)?;
    for (i, s) in res.snapshots.iter().enumerate() {
        snap(&mut dir, &format!("snapshots/{i:05}.snap"), s)?;
    }
    snap(&mut dir, "final.snap", &res.final_state)?;
    let summary = serde_json::json!({
        "steps": res.steps,
        "t_final": res.final_state.t,
        "ledger_ok": res.ledger.all_ok(),
        "violations": res.violations,
    });
    dir.write_json("summary.json", &summary)?;
    let ok = res.violations.is_empty();
    let path = dir.finish("solve", seed, Some(cfg.grid), echo, ok)?;
    if ok {
        Ok(path)
    } else {
        Err(CliError::Uncertified(format!(
            "energy ledger violated at {} records (see {})",
            res.violations.len(),
            path.display()
        )))
    }
}
