//! Seeded random fields with prescribed spectral envelopes.

use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::FilterBankParams;
use crate::grid::{AnisoGrid, SpectralField, VectorField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumProfile {
    White,
    PowerLaw {
        gamma: f64,
    },
    /// Supported in one vertical dyadic block.
    SingleBlock {
        q: i32,
    },
    Anisotropic {
        gamma_h: f64,
        gamma_v: f64,
    },
}

impl SpectrumProfile {
    /// Amplitude envelope at a physical wavenumber.
    pub fn amplitude(&self, xi: [f64; 3]) -> f64 {
        let h2 = xi[0] * xi[0] + xi[1] * xi[1];
        let v2 = xi[2] * xi[2];
        match *self {
            SpectrumProfile::White => 1.0,
            SpectrumProfile::PowerLaw { gamma } => (1.0 + h2 + v2).powf(-0.5 * gamma),
            SpectrumProfile::SingleBlock { q } => FilterBankParams::default().block(q, v2.sqrt()),
            SpectrumProfile::Anisotropic { gamma_h, gamma_v } => {
                (1.0 + h2).powf(-0.5 * gamma_h) * (1.0 + v2).powf(-0.5 * gamma_v)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SpectrumProfile::White | SpectrumProfile::SingleBlock { .. } => true,
            SpectrumProfile::PowerLaw { gamma } => gamma.is_finite(),
            SpectrumProfile::Anisotropic { gamma_h, gamma_v } => {
                gamma_h.is_finite() && gamma_v.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "non-finite spectrum exponent in {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub count: usize,
    pub profile: SpectrumProfile,
    pub seed: u64,
    pub grid: AnisoGrid,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Invalid("ensemble count must be at least 1".into()));
        }
        self.profile.validate()
    }

    /// Run `f` on every member in parallel; results keep member order.
    pub fn par_map<T: Send>(&self, f: impl Fn(usize, &mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
        (0..self.count)
            .into_par_iter()
            .map(|i| {
                let mut rng = member_rng(self.seed, i as u64);
                f(i, &mut rng)
            })
            .collect()
    }
}

/// Independent stream for member `index` of the ensemble seeded by `seed`.
pub fn member_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mean-free real field with Gaussian coefficients shaped by `profile`.
/// Nyquist planes are left empty.
pub fn random_scalar(
    grid: AnisoGrid,
    profile: SpectrumProfile,
    rng: &mut impl Rng,
) -> SpectralField {
    let shape = grid.shape();
    let raw: Array3<Complex64> = Array3::from_shape_fn(shape, |_| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let coeffs = Array3::from_shape_fn(shape, |idx| {
        if idx == (0, 0, 0) || grid.is_nyquist(idx) {
            return Complex64::new(0.0, 0.0);
        }
        let sym = 0.5 * (raw[idx] + raw[grid.mirror(idx)].conj());
        sym * profile.amplitude(grid.xi(idx))
    });
    SpectralField::from_coeffs(grid, coeffs).expect("shape matches")
}

/// Three independent components, Leray-projected when `divergence_free`.
pub fn random_vector(
    grid: AnisoGrid,
    profile: SpectrumProfile,
    divergence_free: bool,
    rng: &mut impl Rng,
) -> VectorField {
    let v = VectorField::new([
        random_scalar(grid, profile, rng),
        random_scalar(grid, profile, rng),
        random_scalar(grid, profile, rng),
    ])
    .expect("shared grid");
    if divergence_free {
        v.leray_project()
    } else {
        v
    }
}
