use ndarray::{Array3, Zip};
use num_complex::Complex64;

use super::{SolverConfig, State};
use crate::error::{Error, Result};
use crate::grid::{AnisoGrid, Direction, SpectralField, VectorField};

fn masked(f: &SpectralField, m: &Array3<f64>) -> SpectralField {
    f.map_indexed(|idx, c| c * m[idx])
}

/// Right-hand side of the truncated system and its time stepper.
#[derive(Clone, Debug)]
pub struct Dynamics {
    cfg: SolverConfig,
    /// `E_n`, intersected with the 2/3 box when dealiasing.
    keep: Array3<f64>,
    /// 2/3 box applied to product inputs.
    inputs: Option<Array3<f64>>,
}

impl Dynamics {
    pub fn new(cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let g = cfg.grid;
        let n2 = cfg.n_cutoff * cfg.n_cutoff;
        let third = |k: i64, n: usize| 3 * k.unsigned_abs() < n as u64;
        let box23 = Array3::from_shape_fn(g.shape(), |idx| {
            let [a, b, c] = g.k(idx);
            f64::from(u8::from(third(a, g.nh) && third(b, g.nh) && third(c, g.nv)))
        });
        let ball = Array3::from_shape_fn(g.shape(), |idx| {
            let x = g.xi(idx);
            f64::from(u8::from(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= n2 && !g.is_nyquist(idx)))
        });
        let (keep, inputs) = if cfg.dealias {
            (&ball * &box23, Some(box23))
        } else {
            (ball, None)
        };
        Ok(Dynamics {
            cfg: cfg.clone(),
            keep,
            inputs,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &AnisoGrid {
        &self.cfg.grid
    }

    fn input(&self, f: &SpectralField) -> SpectralField {
        match &self.inputs {
            Some(m) => masked(f, m),
            None => f.clone(),
        }
    }

    fn velocity_samples(&self, u: &VectorField) -> [Array3<f64>; 3] {
        [0, 1, 2].map(|c| self.input(&u.comps()[c]).to_physical())
    }

    /// `keep · F(u·∇f)` from physical velocity samples.
    fn advect(&self, up: &[Array3<f64>; 3], f: &SpectralField) -> Result<SpectralField> {
        let f = self.input(f);
        let mut acc = Array3::<f64>::zeros(up[0].dim());
        for (j, dir) in Direction::ALL.into_iter().enumerate() {
            let d = f.derivative(dir).to_physical();
            Zip::from(&mut acc).and(&up[j]).and(&d).for_each(|o, a, b| *o += a * b);
        }
        Ok(masked(&SpectralField::forward(&acc, *self.grid())?, &self.keep))
    }

    /// `(−P E_n(u·∇u) + P(ρe₃), −E_n(u·∇ρ))` with the switches of the configuration.
    pub fn rhs(&self, u: &VectorField, rho: &SpectralField) -> Result<(VectorField, SpectralField)> {
        if !u.is_divergence_free() {
            return Err(Error::NotDivergenceFree(u.divergence_residual()));
        }
        let g = *self.grid();
        let mut du = [SpectralField::zeros(g), SpectralField::zeros(g), SpectralField::zeros(g)];
        let mut drho = SpectralField::zeros(g);
        if self.cfg.nonlinear {
            let up = self.velocity_samples(u);
            for (c, out) in du.iter_mut().enumerate() {
                *out = -&self.advect(&up, &u.comps()[c])?;
            }
            drho = -&self.advect(&up, rho)?;
        }
        if self.cfg.buoyancy {
            du[2] += rho;
        }
        Ok((VectorField::new(du)?.leray_project(), drho))
    }

    /// One integrating-factor Heun step of size `dt`.
    pub fn step(&self, s: &State, dt: f64) -> Result<State> {
        let decay = |f: &SpectralField| -> SpectralField {
            f.apply_multiplier(|x| (-(x[0] * x[0] + x[1] * x[1]) * dt).exp())
        };
        let (ku1, kr1) = self.rhs(&s.u, &s.rho)?;
        let mut u_pred = &s.u + &ku1.scaled(dt);
        u_pred = u_pred.map_keep_flag(decay);
        let mut r_pred = s.rho.clone();
        r_pred.axpy(dt, &kr1);
        let r_pred = decay(&r_pred);
        let (ku2, kr2) = self.rhs(&u_pred, &r_pred)?;

        let u_half = (&s.u + &ku1.scaled(0.5 * dt)).map_keep_flag(decay);
        let u = &u_half + &ku2.scaled(0.5 * dt);
        let mut r_half = s.rho.clone();
        r_half.axpy(0.5 * dt, &kr1);
        let mut rho = decay(&r_half);
        rho.axpy(0.5 * dt, &kr2);
        let next = State { t: s.t + dt, u, rho };
        next.check_finite()?;
        Ok(next)
    }

    /// Largest stable step for the current state: `cfl / (k_max U_max)`, capped.
    pub fn cfl_dt(&self, s: &State) -> f64 {
        if let Some(dt) = self.cfg.dt {
            return dt;
        }
        let up = [0, 1, 2].map(|c| s.u.comps()[c].to_physical());
        let mut umax = 0.0f64;
        Zip::from(&up[0]).and(&up[1]).and(&up[2]).for_each(|a, b, c| {
            umax = umax.max((a * a + b * b + c * c).sqrt());
        });
        let kmax = self.cfg.n_cutoff.min(self.grid().nyquist_radius());
        let dt = self.cfg.cfl / (kmax * umax);
        if dt.is_finite() {
            dt.min(self.cfg.dt_max)
        } else {
            self.cfg.dt_max
        }
    }
}

/// `E_n(u·∇f)` with the dealiasing of `cfg` (no sign, no projection).
pub fn nonlinear_term(u: &VectorField, f: &SpectralField, cfg: &SolverConfig) -> Result<SpectralField> {
    if !u.is_divergence_free() {
        return Err(Error::NotDivergenceFree(u.divergence_residual()));
    }
    let d = Dynamics::new(cfg)?;
    let up = d.velocity_samples(u);
    d.advect(&up, f)
}

/// `∫ ‖∇_h f‖²` over one step from the endpoint spectra, exact for pure decay.
///
/// Each mode's energy is modelled as `e^{-2|ξ_h|²τ}` times a linear correction
/// matching both endpoints.
pub fn if_dissipation(before: &SpectralField, after: &SpectralField, dt: f64) -> f64 {
    let g = *before.grid();
    let mut acc = 0.0;
    for ((idx, a), b) in before.coeffs().indexed_iter().zip(after.coeffs().iter()) {
        let xi = g.xi(idx);
        let x = 2.0 * (xi[0] * xi[0] + xi[1] * xi[1]) * dt;
        if x == 0.0 {
            continue;
        }
        let (ea, eb) = (a.norm_sqr(), Complex64::norm_sqr(b));
        // g(x) = (1 − e^{−x} − x e^{−x}) / x and e^{x} g(x) = (e^{x} − 1 − x) / x.
        let (gx, egx) = if x < 0.5 {
            // Σ_{n≥2} (−1)ⁿ(n−1)xⁿ⁻¹/n! and Σ_{n≥2} xⁿ⁻¹/n!.
            let (mut g, mut e, mut term) = (0.0, 0.0, 1.0);
            for n in 2..24 {
                term *= if n == 2 { x / 2.0 } else { x / n as f64 };
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                g += sign * (n - 1) as f64 * term;
                e += term;
            }
            (g, e)
        } else {
            (-(-x).exp_m1() / x - (-x).exp(), (x.exp_m1() - x) / x)
        };
        let tail = if eb == 0.0 { 0.0 } else { eb * egx };
        acc += ea * (-(-x).exp_m1()) + tail - ea * gx;
    }
    0.5 * g.box_volume() * acc
}
