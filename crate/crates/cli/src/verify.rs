use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use nsbh_core::ensemble::{EnsembleSpec, SpectrumProfile};
use nsbh_core::lab::bernstein::{check_bernstein, Axis, BernsteinParams};
use nsbh_core::lab::commutator::check_commutator;
use nsbh_core::lab::embedding::check_embedding_l4h_linfv;
use nsbh_core::lab::lemma5::check_lemma5;
use nsbh_core::lab::osgood::check_manufactured_loglog;
use nsbh_core::lab::product::{check_product_rule, ProductParams};
use nsbh_core::lab::prop1::check_prop1_ensemble;
use nsbh_core::lab::RatioReport;
use nsbh_core::{AnisoGrid, DyadicFilterBank, Exponent};

use crate::manifest::RunDir;
use crate::CliError;

pub const INEQUALITIES: [&str; 7] = ["bernstein", "product", "commutator", "prop1", "lemma5", "embedding", "osgood"];

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Inequality id (repeatable): bernstein, product, commutator, prop1, lemma5, embedding, osgood, or all.
    #[arg(long = "inequality", required = true)]
    inequalities: Vec<String>,
    /// Grid as `N_h,N_v` on the unit box.
    #[arg(long, default_value = "16,16")]
    grid: String,
    #[arg(long, default_value_t = 50)]
    ensemble: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check parameters as `key=value` (e.g. `s=0.75 profile=power_law gamma=1.5`).
    #[arg(long, num_args = 1..)]
    params: Vec<String>,
}

struct Params {
    map: BTreeMap<String, String>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Params {
    fn parse(raw: &[String]) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for item in raw {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--params entry `{item}` is not key=value")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Params {
            map,
            used: Default::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.map.get(key).map(String::as_str)
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("parameter {key} = `{v}` is not a number"))),
        }
    }

    fn int<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("parameter {key} = `{v}` is not an integer"))),
        }
    }

    fn exponent(&self, key: &str) -> Result<Exponent, CliError> {
        match self.raw(key).unwrap_or("2") {
            "1" => Ok(Exponent::One),
            "2" => Ok(Exponent::Two),
            "4" => Ok(Exponent::Four),
            "inf" => Ok(Exponent::Inf),
            v => Err(CliError::Usage(format!("parameter {key} = `{v}`: expected 1, 2, 4 or inf"))),
        }
    }

    fn profile(&self, default: SpectrumProfile) -> Result<SpectrumProfile, CliError> {
        let p = match self.raw("profile") {
            None => default,
            Some("white") => SpectrumProfile::White,
            Some("power_law") => SpectrumProfile::PowerLaw {
                gamma: self.f64("gamma", 1.0)?,
            },
            Some("single_block") => SpectrumProfile::SingleBlock {
                q: self.int("block", 2)?,
            },
            Some("anisotropic") => SpectrumProfile::Anisotropic {
                gamma_h: self.f64("gamma_h", 1.0)?,
                gamma_v: self.f64("gamma_v", 1.0)?,
            },
            Some(v) => {
                return Err(CliError::Usage(format!(
                    "profile `{v}`: expected white, power_law, single_block or anisotropic"
                )))
            }
        };
        p.validate()?;
        Ok(p)
    }

    fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.map.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }
}

fn parse_grid(text: &str) -> Result<AnisoGrid, CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    let bad = || CliError::Usage(format!("--grid `{text}`: expected N_h,N_v"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let nh = parts[0].trim().parse().map_err(|_| bad())?;
    let nv = parts[1].trim().parse().map_err(|_| bad())?;
    Ok(AnisoGrid::unit(nh, nv)?)
}

fn check(id: &str, ens: EnsembleSpec, p: &Params) -> Result<Vec<RatioReport>, CliError> {
    let with = |profile| EnsembleSpec { profile, ..ens };
    Ok(match id {
        "bernstein" => {
            let axis = match p.raw("axis").unwrap_or("v") {
                "h" | "horizontal" => Axis::Horizontal,
                "v" | "vertical" => Axis::Vertical,
                v => return Err(CliError::Usage(format!("axis `{v}`: expected h or v"))),
            };
            let params = BernsteinParams {
                axis,
                p1: p.exponent("p1")?,
                p2: p.exponent("p2")?,
                q1: p.exponent("q1")?,
                q2: p.exponent("q2")?,
                order: p.int("order", 1)?,
                reverse: p.int("reverse", false)?,
            };
            vec![check_bernstein(&with(p.profile(SpectrumProfile::White)?), &params)?]
        }
        "product" => {
            let params = ProductParams::new(
                p.f64("sigma", 0.5)?,
                p.f64("sigma_p", 0.5)?,
                p.f64("s", 0.5)?,
                p.f64("s0", 1.0)?,
            )?;
            vec![check_product_rule(&with(p.profile(SpectrumProfile::White)?), &params)?]
        }
        "commutator" => {
            let qmax = DyadicFilterBank::new(ens.grid).q_max_v();
            let lo = p.int("q_min", 2)?;
            let hi = p.int("q_max", qmax)?;
            let profile = p.profile(SpectrumProfile::Anisotropic {
                gamma_h: 1.0,
                gamma_v: 0.5,
            })?;
            vec![check_commutator(&with(profile), lo..=hi)?]
        }
        "prop1" => check_prop1_ensemble(&with(p.profile(SpectrumProfile::PowerLaw { gamma: 1.5 })?), p.f64("s", 0.75)?)?,
        "lemma5" => {
            let (a, b) = check_lemma5(
                &with(p.profile(SpectrumProfile::PowerLaw { gamma: 1.0 })?),
                p.f64("s", 0.75)?,
                p.f64("delta", 0.5)?,
            )?;
            vec![a, b]
        }
        "embedding" => vec![check_embedding_l4h_linfv(
            &with(p.profile(SpectrumProfile::PowerLaw { gamma: 1.5 })?),
            p.f64("s", 0.75)?,
        )?],
        "osgood" => vec![check_manufactured_loglog(ens.count, ens.seed)?],
        other => {
            return Err(CliError::Usage(format!(
                "unknown inequality `{other}`; expected one of {} or all",
                INEQUALITIES.join(", ")
            )))
        }
    })
}

pub fn run(args: &VerifyArgs, out: Option<&Path>) -> Result<PathBuf, CliError> {
    let grid = parse_grid(&args.grid)?;
    let ids: Vec<&str> = if args.inequalities.iter().any(|s| s == "all") {
        INEQUALITIES.to_vec()
    } else {
        args.inequalities.iter().map(String::as_str).collect()
    };
    let params = Params::parse(&args.params)?;
    let ens = EnsembleSpec {
        count: args.ensemble,
        profile: SpectrumProfile::White,
        seed: args.seed,
        grid,
    };
    ens.validate()?;
    let mut reports = Vec::new();
    for id in &ids {
        reports.extend(check(id, ens, &params)?);
    }
    let unused = params.unused();
    if !unused.is_empty() {
        return Err(CliError::Usage(format!("unused parameters: {}", unused.join(", "))));
    }
    let mut dir = RunDir::create(out, args.seed)?;
    let mut csv = String::from("inequality_id,samples,excluded,max_ratio,lhs,rhs_without_constant,certified\n");
    for r in &reports {
        dir.write_json(&format!("{}.json", r.inequality_id), r)?;
        csv.push_str(&format!(
            "{},{},{},{:.17e},{:.17e},{:.17e},{}\n",
            r.inequality_id, r.samples, r.excluded, r.ratio, r.lhs, r.rhs_without_constant, r.certified
        ));
    }
    dir.write("summary.csv", &csv)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.certified).map(|r| r.inequality_id.as_str()).collect();
    let echo = serde_json::json!({
        "inequalities": ids,
        "grid": args.grid,
        "ensemble": args.ensemble,
        "seed": args.seed,
        "params": params.map,
    });
    let path = dir.finish("verify", args.seed, Some(grid), echo, failed.is_empty())?;
    if failed.is_empty() {
        Ok(path)
    } else {
        Err(CliError::Uncertified(format!("{} (see {})", failed.join(", "), path.display())))
    }
}
