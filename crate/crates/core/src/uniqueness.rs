//! Lockstep pairs of solutions and audits of their difference.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{member_rng, random_scalar, random_vector, SpectrumProfile};
use crate::error::{Error, Result};
use crate::grid::{SpectralField, VectorField};
use crate::lab::osgood::{osgood_bound, Modulus, OsgoodProblem, OsgoodResult, QUADRATURE_FLOOR};
use crate::lab::prop1::{prop1_terms, Sextet};
use crate::norms::NormEngine;
use crate::solver::{admission_value, cutoff_en, Dynamics, SolverConfig, State};

/// `e^{-2}`, the largest `χ` the double-logarithmic modulus is used on.
pub const CHI_MAX: f64 = 0.1353352832366127;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationKind {
    /// Velocity and density both at the single wavevector `±k`.
    SingleMode { k: [i64; 3] },
    /// White noise in the ball `|ξ| ≤ k_max` for both fields.
    WhiteBand { k_max: f64 },
    /// White noise in the Galerkin ball for the density only.
    RhoOnly,
}

/// Each perturbed field gets `L²` norm `epsilon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    #[serde(flatten)]
    pub kind: PerturbationKind,
    pub epsilon: f64,
    pub seed: u64,
}

impl Perturbation {
    pub fn apply(&self, base: &State, n_cutoff: f64) -> Result<State> {
        if !(self.epsilon >= 0.0) {
            return Err(Error::Invalid(format!("epsilon = {} must be nonnegative", self.epsilon)));
        }
        if self.epsilon == 0.0 {
            return Ok(base.clone());
        }
        let g = *base.grid();
        let mut rng = member_rng(self.seed, 0);
        let ball = |f: &SpectralField, r: f64| cutoff_en(f, r.min(n_cutoff)).without_nyquist();
        let (du, dr) = match self.kind {
            PerturbationKind::SingleMode { k } => {
                let only = |f: SpectralField| {
                    f.map_indexed(|idx, c| {
                        let m = g.k(idx);
                        let neg = [-k[0], -k[1], -k[2]];
                        if m == k || m == neg {
                            c
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                };
                let u = random_vector(g, SpectrumProfile::White, false, &mut rng).map(|f| only(f.clone()));
                let r = only(random_scalar(g, SpectrumProfile::White, &mut rng));
                (Some(u.map(|f| ball(f, n_cutoff)).leray_project()), Some(ball(&r, n_cutoff)))
            }
            PerturbationKind::WhiteBand { k_max } => {
                let u = random_vector(g, SpectrumProfile::White, false, &mut rng);
                let r = random_scalar(g, SpectrumProfile::White, &mut rng);
                (Some(u.map(|f| ball(f, k_max)).leray_project()), Some(ball(&r, k_max)))
            }
            PerturbationKind::RhoOnly => {
                let r = random_scalar(g, SpectrumProfile::White, &mut rng);
                (None, Some(ball(&r, n_cutoff)))
            }
        };
        let mut out = base.clone();
        if let Some(du) = du {
            let n = du.l2_norm();
            if n == 0.0 {
                return Err(Error::Invalid("velocity perturbation vanishes in the Galerkin ball".into()));
            }
            out.u = &out.u + &du.scaled(self.epsilon / n);
        }
        if let Some(dr) = dr {
            let n = dr.l2_norm();
            if n == 0.0 {
                return Err(Error::Invalid("density perturbation vanishes in the Galerkin ball".into()));
            }
            out.rho.axpy(self.epsilon / n, &dr);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRun {
    pub cfg: SolverConfig,
    pub init_a: State,
    pub init_b: State,
    pub perturbation: Option<Perturbation>,
}

impl PairRun {
    pub fn perturbed(cfg: SolverConfig, base: State, p: Perturbation) -> Result<Self> {
        let init_b = p.apply(&base, cfg.n_cutoff)?;
        Ok(PairRun {
            cfg,
            init_a: base,
            init_b,
            perturbation: Some(p),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub t: f64,
    /// `‖w‖²_{0,s−1}`.
    pub w_sq: f64,
    /// `‖θ‖²_{0,−s}`.
    pub theta_sq: f64,
    /// `‖∇_h w‖²_{0,s−1}`.
    pub grad_w_sq: f64,
    /// `‖∇_h θ‖²_{0,−s}`.
    pub grad_theta_sq: f64,
    /// `‖w‖²_{0,−1/2} + ‖θ‖²_{0,−1/2}`.
    pub chi: f64,
    /// Bracket of the Gronwall rate without its constant.
    pub f_gronwall: f64,
    /// `(1 + Σ‖·‖²_{1,1/2})(1 + Σ‖∇_h ·‖²_{1,1/2})` over `u, v, w`.
    pub f_osgood: f64,
    pub l: Option<[f64; 9]>,
    pub bounds: Option<[f64; 9]>,
}

impl DiffRow {
    pub fn y(&self) -> f64 {
        self.w_sq + self.theta_sq
    }

    pub fn dissipation(&self) -> f64 {
        self.grad_w_sq + self.grad_theta_sq
    }

    pub const CSV_HEADER: &'static str = "t,w_sq,theta_sq,grad_w_sq,grad_theta_sq,chi,f_gronwall,f_osgood,L1,L2,L3,L4,L5,L6,L7,L8,L9,B1,B2,B3,B4,B5,B6,B7,B8,B9";

    pub fn csv(&self) -> String {
        let mut cols = vec![
            self.t,
            self.w_sq,
            self.theta_sq,
            self.grad_w_sq,
            self.grad_theta_sq,
            self.chi,
            self.f_gronwall,
            self.f_osgood,
        ]
        .into_iter()
        .map(|v| format!("{v:.17e}"))
        .collect::<Vec<_>>();
        for arr in [self.l, self.bounds] {
            match arr {
                Some(a) => cols.extend(a.iter().map(|v| format!("{v:.17e}"))),
                None => cols.extend(std::iter::repeat_n(String::new(), 9)),
            }
        }
        cols.join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifferenceSeries {
    pub s: f64,
    pub rows: Vec<DiffRow>,
    /// Set when a trajectory aborted; rows stop at the last common instant.
    pub truncated: Option<String>,
}

impl DifferenceSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(DiffRow::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    /// `sup_t ‖w(t)‖_{0,s−1}`.
    pub fn sup_w(&self) -> f64 {
        self.rows.iter().map(|r| r.w_sq.sqrt()).fold(0.0, f64::max)
    }
}

fn diff_row(engine: &NormEngine, a: &State, b: &State, s: f64, with_terms: bool) -> Result<DiffRow> {
    let w = &a.u - &b.u;
    let theta = &a.rho - &b.rho;
    let e = engine;
    let hts1 = |v: &VectorField| e.hts_vec_sq(v, 1.0, 0.5);
    let ghts1 = |v: &VectorField| e.grad_h_hts_vec_sq(v, 1.0, 0.5);
    let f_osgood = (1.0 + hts1(&a.u) + hts1(&b.u) + hts1(&w)) * (1.0 + ghts1(&a.u) + ghts1(&b.u) + ghts1(&w));
    let u_half = e.hts_vec(&a.u, 0.5, s);
    let v_half = e.hts_vec(&b.u, 0.5, s);
    let eta_half = e.hts_sq(&b.rho, 0.5, s).sqrt();
    let f_gronwall = u_half.powi(4)
        + e.h0_vec_sq(&a.u, s)
        + e.grad_h_h0_vec_sq(&b.u, s)
        + v_half.powf(4.0 / 3.0)
        + e.grad_h_h0_sq(&b.rho, s)
        + eta_half.powi(4)
        + 1.0;
    let (l, bounds) = if with_terms {
        let x = Sextet {
            u: a.u.clone(),
            v: b.u.clone(),
            w: w.clone(),
            rho: a.rho.clone(),
            eta: b.rho.clone(),
            theta: theta.clone(),
        };
        let v = prop1_terms(engine, &x, s)?;
        (Some(v.l), Some(v.bounds))
    } else {
        (None, None)
    };
    Ok(DiffRow {
        t: a.t,
        w_sq: e.h0_vec_sq(&w, s - 1.0),
        theta_sq: e.h0_sq(&theta, -s),
        grad_w_sq: e.grad_h_h0_vec_sq(&w, s - 1.0),
        grad_theta_sq: e.grad_h_h0_sq(&theta, -s),
        chi: e.h0_vec_sq(&w, -0.5) + e.h0_sq(&theta, -0.5),
        f_gronwall,
        f_osgood,
        l,
        bounds,
    })
}

/// Step both trajectories with a shared step and record their difference.
/// The nine block sums are evaluated when `cfg.s_index ∈ (1/2, 1]`.
pub fn run_pair(pr: &PairRun) -> Result<DifferenceSeries> {
    let cfg = &pr.cfg;
    let s = cfg.s_index;
    let dynamics = Dynamics::new(cfg)?;
    let engine = NormEngine::new(cfg.grid);
    let mut a = pr.init_a.galerkin(cfg.n_cutoff)?;
    let mut b = pr.init_b.galerkin(cfg.n_cutoff)?;
    if a.t != b.t {
        return Err(Error::Invalid("pair must start at a common time".into()));
    }
    if cfg.certified && s > 0.5 {
        for (name, st) in [("a", &a), ("b", &b)] {
            let v = admission_value(&engine, st, s, cfg.t_end);
            if v >= cfg.c0 * cfg.c0 {
                return Err(Error::Admission(format!(
                    "trajectory {name}: ‖u₀‖²_{{0,s}} + T‖ρ₀‖(‖u₀‖ + ‖ρ₀‖(1 + T/2)) = {v:.6e} ≥ C₀² = {:.6e}",
                    cfg.c0 * cfg.c0
                )));
            }
        }
    }
    let with_terms = s > 0.5;
    let mut series = DifferenceSeries {
        s,
        rows: vec![diff_row(&engine, &a, &b, s, with_terms)?],
        truncated: None,
    };
    let t_stop = a.t + cfg.t_end;
    let shared_dt = |a: &State, b: &State| dynamics.cfl_dt(a).min(dynamics.cfl_dt(b));
    let mut dt = shared_dt(&a, &b);
    let mut steps = 0usize;
    while a.t < t_stop * (1.0 - 1e-14) {
        if steps > 0 && steps % 100 == 0 {
            dt = shared_dt(&a, &b);
        }
        let h = dt.min(t_stop - a.t);
        let (na, nb) = rayon::join(|| dynamics.step(&a, h), || dynamics.step(&b, h));
        match (na, nb) {
            (Ok(mut na), Ok(mut nb)) => {
                if a.t + h >= t_stop * (1.0 - 1e-14) {
                    na.t = t_stop;
                    nb.t = t_stop;
                }
                a = na;
                b = nb;
            }
            (ra, rb) => {
                let why = ra.err().or(rb.err()).map(|e| e.to_string()).unwrap_or_default();
                series.truncated = Some(format!("aborted after t = {}: {why}", a.t));
                break;
            }
        }
        steps += 1;
        if steps % cfg.record_every == 0 || a.t >= t_stop {
            series.rows.push(diff_row(&engine, &a, &b, s, with_terms)?);
        }
    }
    Ok(series)
}

fn cumulative_trapezoid(t: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    for i in 1..t.len() {
        out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallAudit {
    pub certified: bool,
    pub c_fit: f64,
    /// `(t, envelope − y)`.
    pub margin_curve: Vec<(f64, f64)>,
    /// `(t, ½G + C f y − Σ|L_i|)`.
    pub rate_margin: Vec<(f64, f64)>,
    pub envelope: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

/// Smallest `C` with `Σ|L_i| ≤ ½G + C f y` at every row.
pub fn fit_gronwall_constant(ds: &DifferenceSeries) -> Result<f64> {
    let mut c = 0.0f64;
    for r in &ds.rows {
        let l = r.l.ok_or_else(|| Error::Invalid("series lacks the block sums".into()))?;
        let excess = l.iter().map(|x| x.abs()).sum::<f64>() - 0.5 * r.dissipation();
        if excess <= 0.0 {
            continue;
        }
        let denom = r.f_gronwall * r.y();
        if denom == 0.0 {
            return Err(Error::Invalid(format!("no constant certifies t = {}: y = 0 but the sums do not vanish", r.t)));
        }
        c = c.max(excess / denom);
    }
    Ok(c)
}

/// Audit the difference energy `y = ‖w‖²_{0,s−1} + ‖θ‖²_{0,−s}`.
///
/// With `C` fitted here (`frozen = None`) or supplied, checks the rate bound
/// `Σ|L_i| ≤ ½G + C f y` pointwise and `y(t) ≤ y(0) exp(2C∫f)`; the factor 2
/// comes from `½ dy/dt + G = −ΣL_i`.
pub fn gronwall_audit(ds: &DifferenceSeries, s: f64, frozen: Option<f64>) -> Result<GronwallAudit> {
    if (ds.s - s).abs() > 1e-15 {
        return Err(Error::Invalid(format!("series was recorded at s = {}, audit asked for {s}", ds.s)));
    }
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::Constraint(format!("s must lie in (1/2, 1], got {s}")));
    }
    if ds.rows.is_empty() {
        return Err(Error::Invalid("empty series".into()));
    }
    let mut notes = Vec::new();
    if let Some(why) = &ds.truncated {
        notes.push(format!("audit restricted to the valid window ({why})"));
    }
    let c = match frozen {
        Some(c) => c,
        None => fit_gronwall_constant(ds)?,
    };
    let t: Vec<f64> = ds.rows.iter().map(|r| r.t).collect();
    let f: Vec<f64> = ds.rows.iter().map(|r| r.f_gronwall).collect();
    let integral = cumulative_trapezoid(&t, &f);
    let y0 = ds.rows[0].y();
    let mut certified = true;
    let mut margin_curve = Vec::new();
    let mut rate_margin = Vec::new();
    let mut envelope = Vec::new();
    for (r, int) in ds.rows.iter().zip(&integral) {
        let env = y0 * (2.0 * c * int).exp();
        let y = r.y();
        envelope.push((r.t, env));
        margin_curve.push((r.t, env - y));
        if y > env * (1.0 + 1e-9) {
            certified = false;
            notes.push(format!("difference energy above the envelope at t = {}", r.t));
        }
        let l = r.l.ok_or_else(|| Error::Invalid("series lacks the block sums".into()))?;
        let sum: f64 = l.iter().map(|x| x.abs()).sum();
        let rhs = 0.5 * r.dissipation() + c * r.f_gronwall * y;
        rate_margin.push((r.t, rhs - sum));
        if sum > rhs * (1.0 + 1e-12) {
            certified = false;
            notes.push(format!("rate bound fails at t = {}: Σ|L_i| = {sum:e} > {rhs:e}", r.t));
        }
    }
    Ok(GronwallAudit {
        certified,
        c_fit: c,
        margin_curve,
        rate_margin,
        envelope,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsgoodAudit {
    pub certified: bool,
    pub constant: f64,
    /// Last time inside `χ ≤ e^{-2}`.
    pub window_end: f64,
    /// `χ(t) ≤ χ(0) + C∫ f μ(χ)` at every row of the window.
    pub hypothesis_holds: bool,
    pub comparison: OsgoodResult,
    pub notes: Vec<String>,
}

fn window(ds: &DifferenceSeries) -> (Vec<&DiffRow>, Vec<String>) {
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for r in &ds.rows {
        if r.chi > CHI_MAX {
            notes.push(format!("χ exceeds e^-2 at t = {}; window shortened", r.t));
            break;
        }
        rows.push(r);
    }
    if let Some(why) = &ds.truncated {
        notes.push(format!("series truncated: {why}"));
    }
    (rows, notes)
}

/// `∫ f μ(χ)` per interval by the trapezoid rule.
fn interval_integrals(rows: &[&DiffRow]) -> Vec<f64> {
    rows.windows(2)
        .map(|w| {
            let g = |r: &DiffRow| r.f_osgood * Modulus::LogLog.eval(r.chi.max(QUADRATURE_FLOOR));
            0.5 * (w[1].t - w[0].t) * (g(w[0]) + g(w[1]))
        })
        .collect()
}

/// Smallest `C` with `χ(t_{i+1}) − χ(t_i) ≤ C ∫_{t_i}^{t_{i+1}} f μ(χ)` on every interval.
pub fn fit_osgood_constant(ds: &DifferenceSeries) -> f64 {
    let (rows, _) = window(ds);
    let ints = interval_integrals(&rows);
    rows.windows(2)
        .zip(&ints)
        .filter(|(w, i)| w[1].chi > w[0].chi && **i > 0.0)
        .map(|(w, i)| (w[1].chi - w[0].chi) / i)
        .fold(0.0, f64::max)
}

/// Audit `χ` against the double-logarithmic Osgood comparison with constant `c`.
pub fn osgood_audit(ds: &DifferenceSeries, c: f64) -> Result<OsgoodAudit> {
    if !(c >= 0.0) {
        return Err(Error::Invalid(format!("constant {c} must be nonnegative")));
    }
    let (rows, mut notes) = window(ds);
    if rows.is_empty() {
        return Err(Error::Invalid("χ(0) already exceeds e^-2".into()));
    }
    let chi0 = rows[0].chi;
    let ints = interval_integrals(&rows);
    let mut acc = 0.0;
    let mut hypothesis_holds = true;
    for (w, i) in rows.windows(2).zip(&ints) {
        acc += c * i;
        if w[1].chi > (chi0 + acc) * (1.0 + 1e-9) {
            hypothesis_holds = false;
            notes.push(format!("integrated inequality fails at t = {}", w[1].t));
        }
    }
    let prob = OsgoodProblem {
        c: chi0,
        gamma: rows.iter().map(|r| (r.t, c * r.f_osgood)).collect(),
        mu: Modulus::LogLog,
        a: CHI_MAX,
        t0: rows[0].t,
        t_end: rows[rows.len() - 1].t,
    };
    let g: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.chi)).collect();
    let comparison = osgood_bound(&prob, &g)?;
    notes.extend(comparison.notes.iter().cloned());
    Ok(OsgoodAudit {
        certified: hypothesis_holds && comparison.certified,
        constant: c,
        window_end: prob.t_end,
        hypothesis_holds,
        comparison,
        notes,
    })
}

/// Per-row ratios `|L_i| / bound_i` (NaN where the bound vanishes).
pub fn prop1_trace(ds: &DifferenceSeries) -> Vec<(f64, [f64; 9])> {
    ds.rows
        .iter()
        .filter_map(|r| {
            let (l, b) = (r.l?, r.bounds?);
            let mut q = [f64::NAN; 9];
            for i in 0..9 {
                if b[i] > 0.0 {
                    q[i] = l[i].abs() / b[i];
                }
            }
            Some((r.t, q))
        })
        .collect()
}
