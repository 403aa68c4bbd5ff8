//! Friedrichs–Galerkin approximation of the Boussinesq system with horizontal
//! dissipation, advanced by an integrating-factor two-stage rule.

mod axisym;
mod dynamics;
mod init;
mod ledger;
pub mod snapshot;

pub use axisym::{
    diagnostics_axi, make_axisymmetric, rotate_quarter, rotation_residual, swirl_residual, AxiDiagnostics,
    AxisymmetricData,
};
pub use dynamics::{if_dissipation, nonlinear_term, Dynamics};
pub use init::InitialData;
pub use ledger::{admission_value, run, EnergyLedger, LedgerRow, RunOutput};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AnisoGrid, SpectralField, VectorField};

fn default_s() -> f64 {
    0.75
}
fn default_one() -> usize {
    1
}
fn default_true() -> bool {
    true
}
fn default_c0() -> f64 {
    0.1
}
fn default_cfl() -> f64 {
    0.5
}
fn default_dt_max() -> f64 {
    0.01
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub grid: AnisoGrid,
    /// Radius of the spectral ball kept by `E_n`, in physical wavenumber.
    pub n_cutoff: f64,
    /// Fixed step; `None` selects the advective bound `cfl / (k_max U_max)` capped by `dt_max`.
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_end: f64,
    #[serde(default = "default_s")]
    pub s_index: f64,
    #[serde(default)]
    pub delta_index: f64,
    #[serde(default = "default_one")]
    pub record_every: usize,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    #[serde(default = "default_true")]
    pub buoyancy: bool,
    /// Refuse data outside the small-data admission set.
    #[serde(default)]
    pub certified: bool,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    /// Record `‖ω/r‖` and the rotation residual along the run.
    #[serde(default)]
    pub axisymmetric: bool,
    /// Keep a snapshot every this many ledger rows (0: none).
    #[serde(default)]
    pub snapshot_every: usize,
}

impl SolverConfig {
    pub fn new(grid: AnisoGrid, n_cutoff: f64, t_end: f64) -> Self {
        SolverConfig {
            grid,
            n_cutoff,
            dt: None,
            t_end,
            s_index: default_s(),
            delta_index: 0.0,
            record_every: 1,
            dealias: true,
            nonlinear: true,
            buoyancy: true,
            certified: false,
            c0: default_c0(),
            cfl: default_cfl(),
            dt_max: default_dt_max(),
            axisymmetric: false,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        AnisoGrid::new(self.grid.nh, self.grid.nv, self.grid.lh, self.grid.lv)?;
        let bad = |m: String| Err(Error::Invalid(m));
        if !(self.n_cutoff > 0.0 && self.n_cutoff <= self.grid.nyquist_radius()) {
            return bad(format!(
                "n_cutoff = {} must lie in (0, {:.4}] (grid Nyquist radius)",
                self.n_cutoff,
                self.grid.nyquist_radius()
            ));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("dt = {dt} must be positive"));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if !(0.5..=1.0).contains(&self.s_index) {
            return bad(format!("s_index = {} must lie in [1/2, 1]", self.s_index));
        }
        if !(0.0..=self.s_index).contains(&self.delta_index) {
            return bad(format!("delta_index = {} must lie in [0, s]", self.delta_index));
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        if !(self.c0 > 0.0 && self.cfl > 0.0 && self.dt_max > 0.0) {
            return bad("c0, cfl and dt_max must be positive".into());
        }
        Ok(())
    }
}

/// `E_n`: keep modes with `|ξ| ≤ n`.
pub fn cutoff_en(f: &SpectralField, n: f64) -> SpectralField {
    let n2 = n * n;
    f.apply_multiplier(|x| if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= n2 { 1.0 } else { 0.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: VectorField,
    pub rho: SpectralField,
}

impl State {
    pub fn zeros(grid: AnisoGrid) -> Self {
        State {
            t: 0.0,
            u: VectorField::zeros(grid),
            rho: SpectralField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &AnisoGrid {
        self.u.grid()
    }

    /// Project onto the Galerkin space: `E_n`, Nyquist planes removed, velocity
    /// checked divergence-free.
    pub fn galerkin(&self, n: f64) -> Result<Self> {
        self.u.comps()[0].check_grid(&self.rho)?;
        let proj = |f: &SpectralField| cutoff_en(f, n).without_nyquist();
        let u = self.u.map(proj).mark_divergence_free(1e-10)?;
        Ok(State {
            t: self.t,
            u,
            rho: proj(&self.rho),
        })
    }

    /// First non-finite coefficient, reported as an error.
    pub fn check_finite(&self) -> Result<()> {
        let g = *self.grid();
        let fields = [
            ("u1", &self.u.comps()[0]),
            ("u2", &self.u.comps()[1]),
            ("u3", &self.u.comps()[2]),
            ("rho", &self.rho),
        ];
        for (name, f) in fields {
            if let Some((idx, _)) = f.coeffs().indexed_iter().find(|(_, c)| !(c.re.is_finite() && c.im.is_finite())) {
                let [k1, k2, k3] = g.k(idx);
                return Err(Error::NonFinite {
                    t: self.t,
                    field: name.into(),
                    k1,
                    k2,
                    k3,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{member_rng, random_scalar, SpectrumProfile};

    #[test]
    fn cutoff_edges_and_monotonicity() {
        let g = AnisoGrid::unit(8, 8).unwrap();
        let f = random_scalar(g, SpectrumProfile::White, &mut member_rng(0, 0));
        assert_eq!(cutoff_en(&f, g.nyquist_radius()), f);
        let tiny = cutoff_en(&SpectralField::constant(g, 2.0), 1e-9);
        assert_eq!(tiny.mean(), 2.0);
        assert!(cutoff_en(&f, 1e-9).is_zero());
        let mut prev = 0.0;
        for n in [1.0, 2.0, 3.5, 5.0, 7.0] {
            let e = cutoff_en(&f, n);
            assert_eq!(cutoff_en(&e, n), e);
            let m = e.l2_norm();
            assert!(m >= prev && m <= f.l2_norm());
            prev = m;
        }
    }

    #[test]
    fn config_validation() {
        let g = AnisoGrid::unit(16, 16).unwrap();
        assert!(SolverConfig::new(g, 5.0, 1.0).validate().is_ok());
        assert!(SolverConfig::new(g, 100.0, 1.0).validate().is_err());
        let mut c = SolverConfig::new(g, 5.0, 1.0);
        c.delta_index = 0.9;
        assert!(c.validate().is_err());
        let c: SolverConfig = serde_json::from_str(
            r#"{"grid":{"nh":16,"nv":16,"lh":1.0,"lv":1.0},"n_cutoff":4.0,"t_end":0.5}"#,
        )
        .unwrap();
        assert!(c.dealias && c.c0 == 0.1 && c.dt.is_none());
    }

    #[test]
    fn non_finite_coefficient_is_located() {
        let g = AnisoGrid::unit(8, 8).unwrap();
        let mut s = State::zeros(g);
        s.t = 0.25;
        s.rho.set_coeff([1, -2, 3], num_complex::Complex64::new(f64::NAN, 0.0));
        let e = s.check_finite().unwrap_err().to_string();
        assert!(e.contains("0.25") && e.contains("(1, -2, 3)") && e.contains("rho"), "{e}");
    }
}
