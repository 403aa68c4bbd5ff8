use std::path::{Path, PathBuf};

use nsbh_core::uniqueness::{
    fit_osgood_constant, gronwall_audit, osgood_audit, prop1_trace, run_pair, PairRun,
};

use crate::config::{self, PairFile};
use crate::manifest::RunDir;
use crate::CliError;

pub fn run(path: &Path, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let file: PairFile = config::load(path)?;
    let cfg = file.solver.clone();
    cfg.validate()?;
    let base = file.base.generate(&cfg)?;
    let pair = PairRun::perturbed(cfg.clone(), base, file.perturbation)?;
    let seed = file.perturbation.seed;
    let echo = serde_json::to_value(&file).expect("serializable");
    let series = run_pair(&pair)?;
    let mut dir = RunDir::create(out, seed)?;
    dir.write("difference.csv", &series.to_csv())?;
    let mut certified = true;
    let mut reasons = Vec::new();
    if series.s > 0.5 {
        let audit = gronwall_audit(&series, series.s, file.audit.gronwall_c)?;
        certified &= audit.certified;
        if !audit.certified {
            reasons.push("gronwall audit".to_string());
        }
        let trace = prop1_trace(&series);
        let mut csv = String::from("t,R1,R2,R3,R4,R5,R6,R7,R8,R9\n");
        let mut max = [0.0f64; 9];
        for (t, r) in &trace {
            csv.push_str(&format!("{t:.17e}"));
            for (i, v) in r.iter().enumerate() {
                csv.push_str(&format!(",{v:.17e}"));
                if v.is_finite() {
                    max[i] = max[i].max(*v);
                }
            }
            csv.push('\n');
        }
        dir.write("prop1_trace.csv", &csv)?;
        dir.write_json(
            "gronwall.json",
            &serde_json::json!({
                "frozen_constant": file.audit.gronwall_c,
                "audit": audit,
                "prop1_max_ratios": max,
                "sup_w": series.sup_w(),
                "truncated": series.truncated,
            }),
        )?;
    } else {
        let c = file.audit.osgood_c.unwrap_or_else(|| fit_osgood_constant(&series));
        let audit = osgood_audit(&series, c)?;
        certified &= audit.certified;
        if !audit.certified {
            reasons.push("osgood audit".to_string());
        }
        dir.write_json(
            "osgood.json",
            &serde_json::json!({
                "frozen_constant": file.audit.osgood_c,
                "audit": audit,
                "truncated": series.truncated,
            }),
        )?;
    }
    let path = dir.finish("uniqueness", seed, Some(cfg.grid), echo, certified)?;
    if certified {
        Ok(path)
    } else {
        Err(CliError::Uncertified(format!("{} failed (see {})", reasons.join(", "), path.display())))
    }
}
