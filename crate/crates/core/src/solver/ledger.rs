use serde::{Deserialize, Serialize};

use super::axisym::{diagnostics_axi, rotation_residual};
use super::dynamics::{if_dissipation, Dynamics};
use super::{SolverConfig, State};
use crate::error::{Error, Result};
use crate::norms::NormEngine;

/// Small-data admission quantity `‖u₀‖²_{0,s} + T‖ρ₀‖(‖u₀‖ + ‖ρ₀‖(1 + T/2))`.
pub fn admission_value(engine: &NormEngine, init: &State, s: f64, t_end: f64) -> f64 {
    let u0 = init.u.l2_norm();
    let r0 = init.rho.l2_norm();
    engine.h0_vec_sq(&init.u, s) + t_end * r0 * (u0 + r0 * (1.0 + t_end / 2.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub u_l2_sq: f64,
    /// `∫₀^t ‖∇_h u‖²`.
    pub u_diss: f64,
    pub rho_l2_sq: f64,
    /// `∫₀^t ‖∇_h ρ‖²`.
    pub rho_diss: f64,
    pub u_0s: f64,
    pub rho_0delta: f64,
    pub u_h1: f64,
    pub omega_over_r: Option<f64>,
    pub rotation_residual: Option<f64>,
    /// `2(‖u₀‖² + t²‖ρ₀‖²)`.
    pub u_bound: f64,
    /// `‖ρ₀‖²`.
    pub rho_bound: f64,
    /// `‖u₀‖²_{0,s} + t‖ρ₀‖(‖u₀‖ + ‖ρ₀‖(1 + t/2))`.
    pub small_data_bound: f64,
    pub div_residual: f64,
    pub tolerance: f64,
    pub u_ok: bool,
    pub rho_ok: bool,
}

impl LedgerRow {
    pub const CSV_HEADER: &'static str = "step,t,dt,u_l2_sq,u_diss,rho_l2_sq,rho_diss,u_0s,rho_0delta,u_h1,omega_over_r,rotation_residual,u_bound,rho_bound,small_data_bound,div_residual,tolerance,u_ok,rho_ok";

    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
        format!(
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}",
            self.step,
            self.t,
            self.dt,
            self.u_l2_sq,
            self.u_diss,
            self.rho_l2_sq,
            self.rho_diss,
            self.u_0s,
            self.rho_0delta,
            self.u_h1,
            opt(self.omega_over_r),
            opt(self.rotation_residual),
            self.u_bound,
            self.rho_bound,
            self.small_data_bound,
            self.div_residual,
            self.tolerance,
            self.u_ok,
            self.rho_ok
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(LedgerRow::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }

    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.u_ok && r.rho_ok)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub ledger: EnergyLedger,
    pub snapshots: Vec<State>,
    pub final_state: State,
    pub steps: usize,
    /// Ledger rows where an energy inequality failed beyond tolerance.
    pub violations: Vec<String>,
}

struct Recorder<'a> {
    cfg: &'a SolverConfig,
    engine: NormEngine,
    u0_sq: f64,
    r0_sq: f64,
    u0_0s_sq: f64,
    u_diss: f64,
    rho_diss: f64,
    dt_max: f64,
}

impl Recorder<'_> {
    fn row(&self, step: usize, dt: f64, s: &State) -> LedgerRow {
        let t = s.t;
        let u_l2_sq = s.u.l2_norm_sq();
        let rho_l2_sq = s.rho.l2_norm_sq();
        let grad_sq: f64 = s
            .u
            .comps()
            .iter()
            .map(|f| f.weighted_energy(|x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))
            .sum();
        let tolerance = 1e-6 + 10.0 * self.dt_max * self.dt_max;
        let u_bound = 2.0 * (self.u0_sq + t * t * self.r0_sq);
        let (r0, u0) = (self.r0_sq.sqrt(), self.u0_sq.sqrt());
        let (omega_over_r, rotation) = if self.cfg.axisymmetric {
            (Some(diagnostics_axi(s).omega_over_r_l2), Some(rotation_residual(s)))
        } else {
            (None, None)
        };
        LedgerRow {
            step,
            t,
            dt,
            u_l2_sq,
            u_diss: self.u_diss,
            rho_l2_sq,
            rho_diss: self.rho_diss,
            u_0s: self.engine.h0_vec(&s.u, self.cfg.s_index),
            rho_0delta: self.engine.h0(&s.rho, self.cfg.delta_index),
            u_h1: (u_l2_sq + grad_sq).sqrt(),
            omega_over_r,
            rotation_residual: rotation,
            u_bound,
            rho_bound: self.r0_sq,
            small_data_bound: self.u0_0s_sq + t * r0 * (u0 + r0 * (1.0 + t / 2.0)),
            div_residual: s.u.divergence_residual(),
            tolerance,
            u_ok: u_l2_sq + 2.0 * self.u_diss <= u_bound + tolerance,
            rho_ok: rho_l2_sq + 2.0 * self.rho_diss <= self.r0_sq + tolerance,
        }
    }
}

/// Advance `init` to `cfg.t_end`, recording the energy ledger.
pub fn run(cfg: &SolverConfig, init: &State) -> Result<RunOutput> {
    let dynamics = Dynamics::new(cfg)?;
    let engine = NormEngine::new(cfg.grid);
    let mut state = init.galerkin(cfg.n_cutoff)?;
    if cfg.certified && cfg.s_index > 0.5 {
        let v = admission_value(&engine, &state, cfg.s_index, cfg.t_end);
        if v >= cfg.c0 * cfg.c0 {
            return Err(Error::Admission(format!(
                "‖u₀‖²_{{0,s}} + T‖ρ₀‖(‖u₀‖ + ‖ρ₀‖(1 + T/2)) = {v:.6e} ≥ C₀² = {:.6e} (s = {}, T = {})",
                cfg.c0 * cfg.c0,
                cfg.s_index,
                cfg.t_end
            )));
        }
    }
    let mut rec = Recorder {
        cfg,
        u0_sq: state.u.l2_norm_sq(),
        r0_sq: state.rho.l2_norm_sq(),
        u0_0s_sq: engine.h0_vec_sq(&state.u, cfg.s_index),
        engine,
        u_diss: 0.0,
        rho_diss: 0.0,
        dt_max: 0.0,
    };
    let mut ledger = EnergyLedger::default();
    let mut snapshots = Vec::new();
    let mut violations = Vec::new();
    let mut push = |row: LedgerRow, s: &State, ledger: &mut EnergyLedger, snaps: &mut Vec<State>| {
        if !(row.u_ok && row.rho_ok) {
            violations.push(format!("energy inequality violated at t = {}", row.t));
        }
        if cfg.snapshot_every > 0 && ledger.rows.len() % cfg.snapshot_every == 0 {
            snaps.push(s.clone());
        }
        ledger.rows.push(row);
    };
    let row = rec.row(0, 0.0, &state);
    push(row, &state, &mut ledger, &mut snapshots);

    let t_stop = state.t + cfg.t_end;
    let mut dt = dynamics.cfl_dt(&state);
    let mut steps = 0;
    while state.t < t_stop * (1.0 - 1e-14) {
        if steps > 0 && steps % 100 == 0 {
            dt = dynamics.cfl_dt(&state);
        }
        let h = dt.min(t_stop - state.t);
        let mut next = dynamics.step(&state, h)?;
        if state.t + h >= t_stop * (1.0 - 1e-14) {
            next.t = t_stop;
        }
        rec.u_diss += (0..3)
            .map(|c| if_dissipation(&state.u.comps()[c], &next.u.comps()[c], h))
            .sum::<f64>();
        rec.rho_diss += if_dissipation(&state.rho, &next.rho, h);
        rec.dt_max = rec.dt_max.max(h);
        state = next;
        steps += 1;
        let last = state.t >= t_stop;
        if steps % cfg.record_every == 0 || last {
            let row = rec.row(steps, h, &state);
            push(row, &state, &mut ledger, &mut snapshots);
        }
    }
    Ok(RunOutput {
        ledger,
        snapshots,
        final_state: state,
        steps,
        violations,
    })
}
