use serde::{Deserialize, Serialize};

use super::axisym::{make_axisymmetric, AxisymmetricData};
use super::{cutoff_en, SolverConfig, State};
use crate::ensemble::{member_rng, random_scalar, random_vector, SpectrumProfile};
use crate::error::{Error, Result};
use crate::grid::{SpectralField, VectorField};

/// Initial-data generators selectable from a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    /// Random band-limited data rescaled to the given `L²` norms.
    Random {
        profile: SpectrumProfile,
        u_l2: f64,
        rho_l2: f64,
        seed: u64,
    },
    /// `u = (0, A sin(x₁/L_h), 0)`, `ρ = 0`.
    Shear { amplitude: f64 },
    ConstantRho { value: f64 },
    Axisymmetric(AxisymmetricData),
}

impl InitialData {
    pub fn generate(&self, cfg: &SolverConfig) -> Result<State> {
        cfg.validate()?;
        let g = cfg.grid;
        let state = match self {
            InitialData::Zero => State::zeros(g),
            InitialData::Random {
                profile,
                u_l2,
                rho_l2,
                seed,
            } => {
                profile.validate()?;
                if !(*u_l2 >= 0.0 && *rho_l2 >= 0.0) {
                    return Err(Error::Invalid("target norms must be nonnegative".into()));
                }
                let mut rng = member_rng(*seed, 0);
                let band = |f: &SpectralField| cutoff_en(f, cfg.n_cutoff).without_nyquist();
                let u = random_vector(g, *profile, false, &mut rng).map(band).leray_project();
                let rho = band(&random_scalar(g, *profile, &mut rng));
                let (nu, nr) = (u.l2_norm(), rho.l2_norm());
                State {
                    t: 0.0,
                    u: if nu > 0.0 { u.scaled(u_l2 / nu) } else { u },
                    rho: if nr > 0.0 { rho.scaled(rho_l2 / nr) } else { rho },
                }
            }
            InitialData::Shear { amplitude } => {
                let z = SpectralField::zeros(g);
                let s = SpectralField::from_fn(g, |x, _, _| amplitude * (x / g.lh).sin());
                State {
                    t: 0.0,
                    u: VectorField::new([z.clone(), s, z.clone()])?.mark_divergence_free(1e-12)?,
                    rho: z,
                }
            }
            InitialData::ConstantRho { value } => State {
                t: 0.0,
                u: VectorField::zeros(g),
                rho: SpectralField::constant(g, *value),
            },
            InitialData::Axisymmetric(d) => make_axisymmetric(d, g)?,
        };
        state.galerkin(cfg.n_cutoff)
    }
}
