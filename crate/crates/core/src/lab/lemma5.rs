//! Weighted advection pairing and the buoyancy pairing bound.

use serde::{Deserialize, Serialize};

use super::{digest, RatioReport, Sample};
use crate::ensemble::{random_scalar, random_vector, EnsembleSpec};
use crate::error::{Error, Result};
use crate::grid::{Direction, SpectralField, VectorField};
use crate::norms::NormEngine;

/// Relative slack allowed on the constant-explicit buoyancy bound.
pub const LITERAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma5Values {
    /// `|⟨a·∇b, b⟩_{0,δ}|`.
    pub advect_lhs: f64,
    /// `‖b‖_{1/2,δ}(‖a‖_{1,s}‖b‖_{1/2,δ} + ‖a‖_{1/2,s}‖b‖_{1,δ})`.
    pub advect_rhs: f64,
    /// `|⟨ρ, a³⟩_{0,s}|`.
    pub buoy_lhs: f64,
    /// `¼‖ρ‖‖a‖ + ‖ρ‖‖∇_h a‖_{0,s}`.
    pub buoy_rhs: f64,
}

impl Lemma5Values {
    pub fn buoyancy_holds(&self) -> bool {
        self.buoy_lhs <= self.buoy_rhs * (1.0 + LITERAL_TOL)
    }
}

fn validate(s: f64, delta: f64) -> Result<()> {
    if !(s > 0.5 && s <= 1.0) {
        return Err(Error::Constraint(format!(
            "s must lie in (1/2, 1], got {s}"
        )));
    }
    if !(0.0..=s).contains(&delta) {
        return Err(Error::Constraint(format!(
            "δ must lie in [0, s] = [0, {s}], got {delta}"
        )));
    }
    Ok(())
}

pub fn lemma5_values(
    engine: &NormEngine,
    a: &VectorField,
    b: &VectorField,
    rho: &SpectralField,
    s: f64,
    delta: f64,
) -> Result<Lemma5Values> {
    validate(s, delta)?;
    if !a.is_divergence_free() {
        return Err(Error::NotDivergenceFree(a.divergence_residual()));
    }
    let pa: Vec<_> = a
        .comps()
        .iter()
        .map(SpectralField::padded_physical)
        .collect();
    let grid = *a.grid();
    let mut pairing = 0.0;
    for bc in b.comps() {
        let mut acc = ndarray::Array3::<f64>::zeros(pa[0].dim());
        for (j, dir) in Direction::ALL.into_iter().enumerate() {
            let d = bc.derivative(dir).padded_physical();
            ndarray::Zip::from(&mut acc)
                .and(&pa[j])
                .and(&d)
                .for_each(|o, x, y| *o += x * y);
        }
        pairing += engine.h0_pairing(&SpectralField::from_padded_physical(grid, &acc), bc, delta);
    }
    let b_half = engine.hts_vec(b, 0.5, delta);
    let b_one = engine.hts_vec(b, 1.0, delta);
    let advect_rhs =
        b_half * (engine.hts_vec(a, 1.0, s) * b_half + engine.hts_vec(a, 0.5, s) * b_one);

    let rn = rho.l2_norm();
    let buoy_lhs = engine.h0_pairing(rho, a.comp(Direction::X3), s).abs();
    let buoy_rhs = 0.25 * rn * a.l2_norm() + rn * engine.grad_h_h0_vec_sq(a, s).sqrt();
    Ok(Lemma5Values {
        advect_lhs: pairing.abs(),
        advect_rhs,
        buoy_lhs,
        buoy_rhs,
    })
}

/// Reports for the advection pairing (ratio) and the buoyancy bound (literal check).
pub fn check_lemma5(ens: &EnsembleSpec, s: f64, delta: f64) -> Result<(RatioReport, RatioReport)> {
    validate(s, delta)?;
    ens.validate()?;
    let engine = NormEngine::new(ens.grid);
    let rows: Vec<Result<(Lemma5Values, String)>> = ens.par_map(|_, rng| {
        let a = random_vector(ens.grid, ens.profile, true, rng);
        let b = random_vector(ens.grid, ens.profile, false, rng);
        let rho = random_scalar(ens.grid, ens.profile, rng);
        let d = digest(&[a.comp(Direction::X3), &rho]);
        Ok((lemma5_values(&engine, &a, &b, &rho, s, delta)?, d))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let advect: Vec<Sample> = rows
        .iter()
        .map(|(v, d)| Sample {
            lhs: v.advect_lhs,
            rhs: v.advect_rhs,
            digest: d.clone(),
        })
        .collect();
    let buoy: Vec<Sample> = rows
        .iter()
        .map(|(v, d)| Sample {
            lhs: v.buoy_lhs,
            rhs: v.buoy_rhs,
            digest: d.clone(),
        })
        .collect();
    let r33 = RatioReport::from_samples("lemma5_advection", &advect);
    let mut r34 = RatioReport::from_samples("lemma5_buoyancy", &buoy);
    let bad = rows.iter().filter(|(v, _)| !v.buoyancy_holds()).count();
    r34.stats.insert("violations".into(), bad as f64);
    if bad > 0 {
        r34.fail(format!(
            "{bad} samples violate the bound with constants 1/4 and 1"
        ));
    }
    Ok((r33, r34))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::SpectrumProfile;
    use crate::grid::AnisoGrid;

    #[test]
    fn zero_b_gives_zero_pairing() {
        let g = AnisoGrid::unit(8, 8).unwrap();
        let e = NormEngine::new(g);
        let a = random_vector(
            g,
            SpectrumProfile::White,
            true,
            &mut crate::ensemble::member_rng(0, 0),
        );
        let v = lemma5_values(
            &e,
            &a,
            &VectorField::zeros(g),
            &SpectralField::zeros(g),
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(
            (v.advect_lhs, v.advect_rhs, v.buoy_lhs, v.buoy_rhs),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn shear_against_single_mode() {
        // a = (0, 0, cos x₁) is divergence-free and sits in the lowest vertical block.
        let g = AnisoGrid::unit(8, 8).unwrap();
        let e = NormEngine::new(g);
        let z = SpectralField::zeros(g);
        let a = VectorField::new([z.clone(), z, SpectralField::from_fn(g, |x, _, _| x.cos())])
            .unwrap()
            .mark_divergence_free(1e-14)
            .unwrap();
        let rho = SpectralField::from_fn(g, |x, _, _| x.cos());
        let s = 0.75;
        let v = lemma5_values(&e, &a, &a, &rho, s, 0.5).unwrap();
        let half = g.box_volume() / 2.0;
        let lhs = (-2.0 * s as f64).exp2() * half;
        let rhs = half * (0.25 + (-s as f64).exp2());
        assert!((v.buoy_lhs - lhs).abs() < 1e-12 * lhs);
        assert!((v.buoy_rhs - rhs).abs() < 1e-12 * rhs);
        assert!(v.buoyancy_holds());
        // a·∇a = 0 for this shear.
        assert!(v.advect_lhs < 1e-12);
    }

    #[test]
    fn rejects_bad_indices() {
        let ens = EnsembleSpec {
            count: 1,
            profile: SpectrumProfile::White,
            seed: 0,
            grid: AnisoGrid::unit(8, 8).unwrap(),
        };
        assert!(check_lemma5(&ens, 0.75, 0.9).is_err());
        assert!(check_lemma5(&ens, 0.4, 0.2).is_err());
    }

    #[test]
    fn ensemble_satisfies_literal_bound() {
        let ens = EnsembleSpec {
            count: 8,
            profile: SpectrumProfile::PowerLaw { gamma: 1.0 },
            seed: 2,
            grid: AnisoGrid::unit(8, 16).unwrap(),
        };
        let (r33, r34) = check_lemma5(&ens, 1.0, 1.0).unwrap();
        assert!(r33.ratio.is_finite());
        assert!(r34.certified, "{r34:?}");
    }
}
