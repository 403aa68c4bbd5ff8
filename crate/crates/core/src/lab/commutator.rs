//! Vertical commutator `[Δ_q^v, S_{q−1}^v u³] f` and its `2^{-q}` decay.

use std::ops::RangeInclusive;

use ndarray::Array3;
use num_complex::Complex64;

use super::{digest, fit_slope, RatioReport, Sample};
use crate::ensemble::{random_scalar, random_vector, EnsembleSpec, SpectrumProfile};
use crate::error::{Error, Result};
use crate::filterbank::DyadicFilterBank;
use crate::grid::{
    mixed_norm_physical, Direction, Exponent, MixedNormSpec, MixedOrder, SpectralField, VectorField,
};
use crate::norms::NormEngine;

/// Vertical band of the generated velocities: `|k₃| ≤ U_BAND`.
pub const U_BAND: i64 = 2;

/// Drop the modes with `k₃ = 0`; multiplication by them commutes with every `Δ_q^v`.
fn drop_vertical_mean(g: &SpectralField) -> SpectralField {
    let grid = *g.grid();
    g.map_indexed(|idx, c| {
        if grid.k(idx)[2] == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            c
        }
    })
}

/// `[Δ_q^v, g] f` with `g` already low-passed.
pub fn commutator(
    bank: &DyadicFilterBank,
    q: i32,
    g: &SpectralField,
    f: &SpectralField,
) -> SpectralField {
    let g = drop_vertical_mean(g);
    if g.is_zero() {
        return SpectralField::zeros(*f.grid());
    }
    &bank.delta_v(q, &g.exact_product(f)) - &g.exact_product(&bank.delta_v(q, f))
}

/// `‖(f_i)‖_{L^∞_v L²_h}` of the pointwise Euclidean norm of several fields.
fn tensor_linfv_l2h(fields: &[SpectralField]) -> f64 {
    let grid = *fields[0].grid();
    let mut acc = Array3::<f64>::zeros(grid.shape());
    for f in fields {
        let p = f.to_physical();
        acc.zip_mut_with(&p, |a, v| *a += v * v);
    }
    acc.mapv_inplace(f64::sqrt);
    let spec = MixedNormSpec {
        p_h: Exponent::Two,
        q_v: Exponent::Inf,
        order: MixedOrder::VerticalOuter,
    };
    mixed_norm_physical(&acc, &grid, spec)
}

/// Both sides for one block, with `j = q`.
pub fn commutator_sides(
    engine: &NormEngine,
    q: i32,
    u: &VectorField,
    f: &SpectralField,
) -> Result<(f64, f64)> {
    if !u.is_divergence_free() {
        return Err(Error::NotDivergenceFree(u.divergence_residual()));
    }
    let bank = engine.bank();
    let low = u.map(|c| bank.s_v(q - 1, c));
    let comm = commutator(bank, q, low.comp(Direction::X3), f);
    let lhs = engine.l2v_hth(&comm, -0.5);
    let grads: Vec<SpectralField> = low
        .comps()
        .iter()
        .flat_map(|c| [c.derivative(Direction::X1), c.derivative(Direction::X2)])
        .collect();
    let rhs = (-q as f64).exp2() * tensor_linfv_l2h(&grads) * engine.l2v_hth(f, 0.5);
    Ok((lhs, rhs))
}

/// Velocity with `|k₃| ≤ U_BAND`, horizontally `(1+|ξ_h|²)^{-1/2}`.
pub fn low_band_velocity(grid: crate::grid::AnisoGrid, rng: &mut impl rand::Rng) -> VectorField {
    let prof = SpectrumProfile::Anisotropic {
        gamma_h: 1.0,
        gamma_v: 0.0,
    };
    let raw = random_vector(grid, prof, false, rng);
    raw.map(|c| {
        c.map_indexed(|idx, v| {
            if grid.k(idx)[2].abs() <= U_BAND {
                v
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    })
    .leray_project()
}

/// Ensemble max ratio over `q_range` and the fitted log₂-slope of the mean
/// commutator size (`stats["slope"]`), which must lie in `[-1.5, -0.5]`.
pub fn check_commutator(ens: &EnsembleSpec, q_range: RangeInclusive<i32>) -> Result<RatioReport> {
    ens.validate()?;
    let g = ens.grid;
    let engine = NormEngine::new(g);
    let qs: Vec<i32> = q_range
        .filter(|q| engine.bank().v_blocks().contains(q))
        .collect();
    let rows: Vec<Result<Vec<Sample>>> = ens.par_map(|_, rng| {
        let u = low_band_velocity(g, rng);
        let f = random_scalar(g, ens.profile, rng);
        let d = digest(&[&f, u.comp(Direction::X3)]);
        qs.iter()
            .map(|&q| {
                let (lhs, rhs) = commutator_sides(&engine, q, &u, &f)?;
                Ok(Sample {
                    lhs,
                    rhs,
                    digest: d.clone(),
                })
            })
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let flat: Vec<Sample> = rows.iter().flatten().cloned().collect();
    let mut report = RatioReport::from_samples("commutator", &flat);
    let mut points = Vec::new();
    for (i, q) in qs.iter().enumerate() {
        let logs: Vec<f64> = rows
            .iter()
            .map(|r| r[i].lhs)
            .filter(|l| *l > 0.0)
            .map(f64::log2)
            .collect();
        if logs.is_empty() {
            report
                .notes
                .push(format!("block {q}: commutator vanishes, excluded from fit"));
            continue;
        }
        points.push((*q as f64, logs.iter().sum::<f64>() / logs.len() as f64));
    }
    report
        .stats
        .insert("blocks_fitted".into(), points.len() as f64);
    match fit_slope(&points) {
        Some(slope) if points.len() >= 4 => {
            report.stats.insert("slope".into(), slope);
            if !(-1.5..=-0.5).contains(&slope) {
                report.fail(format!("slope {slope:.3} outside [-1.5, -0.5]"));
            }
        }
        _ => report.fail("fewer than four blocks with a nonzero commutator"),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::member_rng;
    use crate::grid::{index_of, AnisoGrid};

    #[test]
    fn vertically_constant_multiplier_commutes_exactly() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let bank = DyadicFilterBank::new(g);
        let gx = SpectralField::from_fn(g, |x, y, _| x.sin() + (2.0 * y).cos());
        let f = random_scalar(g, SpectrumProfile::White, &mut member_rng(0, 0));
        for q in bank.v_blocks() {
            assert!(commutator(&bank, q, &gx, &f).is_zero());
        }
    }

    #[test]
    fn matches_direct_convolution() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let bank = DyadicFilterBank::new(g);
        let q = 3;
        let u3 = SpectralField::from_fn(g, |x, _, z| x.cos() * (z.sin() + 0.5 * (2.0 * z).cos()));
        let f = bank.delta_v(
            q,
            &random_scalar(g, SpectrumProfile::White, &mut member_rng(2, 0)),
        );
        let f = super::super::band_limit(&f, 2, 16);
        let fast = commutator(&bank, q, &u3, &f);
        let m = bank.v_row(q).unwrap();
        let mut want = SpectralField::zeros(g);
        let (hh, hv) = ((g.nh / 2) as i64, (g.nv / 2) as i64);
        for (oi, _) in want.clone().coeffs().indexed_iter() {
            if g.is_nyquist(oi) {
                continue;
            }
            let xi = g.k(oi);
            let mut acc = Complex64::new(0.0, 0.0);
            for (ei, a) in u3.coeffs().indexed_iter() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let eta = g.k(ei);
                let r = [xi[0] - eta[0], xi[1] - eta[1], xi[2] - eta[2]];
                if r[0].abs() >= hh || r[1].abs() >= hh || r[2].abs() >= hv {
                    continue;
                }
                let b = f.coeff(r);
                let d = m[oi.2] - m[index_of(r[2], g.nv)];
                acc += a * b * d;
            }
            want.coeffs_mut()[oi] = acc;
        }
        let err = (&fast - &want).max_abs();
        assert!(err <= 1e-10 * want.max_abs().max(1e-300), "{err}");
        assert!(want.max_abs() > 1e-3);
    }

    #[test]
    fn ensemble_decays_like_two_to_minus_q() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let ens = EnsembleSpec {
            count: 4,
            profile: SpectrumProfile::Anisotropic {
                gamma_h: 1.0,
                gamma_v: 0.5,
            },
            seed: 7,
            grid: g,
        };
        let r = check_commutator(&ens, 2..=5).unwrap();
        assert!(r.certified, "{:?} {:?}", r.stats, r.notes);
    }
}
