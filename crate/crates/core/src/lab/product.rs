//! Anisotropic product law `‖ab‖_{H^{σ+σ′−1,s}} ≲ ‖a‖_{H^{σ,s}} ‖b‖_{H^{σ′,s₀}}`.

use serde::{Deserialize, Serialize};

use super::{band_limit, digest, dilate, RatioReport, Sample};
use crate::ensemble::{random_scalar, EnsembleSpec};
use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::norms::NormEngine;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductParams {
    pub sigma: f64,
    pub sigma_p: f64,
    pub s: f64,
    pub s0: f64,
}

impl ProductParams {
    pub fn new(sigma: f64, sigma_p: f64, s: f64, s0: f64) -> Result<Self> {
        let p = ProductParams {
            sigma,
            sigma_p,
            s,
            s0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ProductParams {
            sigma,
            sigma_p,
            s,
            s0,
        } = *self;
        let checks = [
            (sigma < 1.0, format!("σ < 1 violated: σ = {sigma}")),
            (sigma_p < 1.0, format!("σ′ < 1 violated: σ′ = {sigma_p}")),
            (
                sigma + sigma_p > 0.0,
                format!("σ + σ′ > 0 violated: σ + σ′ = {}", sigma + sigma_p),
            ),
            (s0 > 0.5, format!("s₀ > 1/2 violated: s₀ = {s0}")),
            (s <= s0, format!("s ≤ s₀ violated: s = {s}, s₀ = {s0}")),
            (
                s + s0 >= 0.0,
                format!("s + s₀ ≥ 0 violated: s + s₀ = {}", s + s0),
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Constraint(msg));
            }
        }
        Ok(())
    }
}

/// Both sides of the product law for one pair.
pub fn product_sides(
    engine: &NormEngine,
    p: &ProductParams,
    a: &SpectralField,
    b: &SpectralField,
) -> (f64, f64) {
    let ab = a.exact_product(b);
    let lhs = engine.hts_sq(&ab, p.sigma + p.sigma_p - 1.0, p.s).sqrt();
    let rhs = engine.hts_sq(a, p.sigma, p.s).sqrt() * engine.hts_sq(b, p.sigma_p, p.s0).sqrt();
    (lhs, rhs)
}

/// Ensemble max of the product-law ratio, plus its value after a one-block
/// vertical shift of both inputs (`stats["shift_factor"]`, must lie in `[1/4, 4]`).
pub fn check_product_rule(ens: &EnsembleSpec, p: &ProductParams) -> Result<RatioReport> {
    p.validate()?;
    ens.validate()?;
    let g = ens.grid;
    let engine = NormEngine::new(g);
    let kv = (g.nv / 4) as i64;
    let kh = (g.nh / 2) as i64;
    let pairs: Vec<Result<(Sample, Sample)>> = ens.par_map(|_, rng| {
        let a = band_limit(&random_scalar(g, ens.profile, rng), kh, kv);
        let b = band_limit(&random_scalar(g, ens.profile, rng), kh, kv);
        let d = digest(&[&a, &b]);
        let (l0, r0) = product_sides(&engine, p, &a, &b);
        let (a1, b1) = (dilate(&a, 0, 1)?, dilate(&b, 0, 1)?);
        let (l1, r1) = product_sides(&engine, p, &a1, &b1);
        Ok((
            Sample {
                lhs: l0,
                rhs: r0,
                digest: d.clone(),
            },
            Sample {
                lhs: l1,
                rhs: r1,
                digest: d,
            },
        ))
    });
    let (base, shifted): (Vec<Sample>, Vec<Sample>) = pairs
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let id = format!("product_{}_{}_{}_{}", p.sigma, p.sigma_p, p.s, p.s0);
    let mut report = RatioReport::from_samples(&id, &base);
    let moved = RatioReport::from_samples(&id, &shifted);
    let factor = moved.ratio / report.ratio;
    report.stats.insert("shifted_ratio".into(), moved.ratio);
    report.stats.insert("shift_factor".into(), factor);
    if !report.ratio.is_finite() || !(0.25..=4.0).contains(&factor) {
        report.fail(format!("dyadic shift changes the ratio by {factor:.3}"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::SpectrumProfile;
    use crate::grid::AnisoGrid;

    #[test]
    fn constraints_are_named() {
        let e = ProductParams::new(1.0, 0.5, 0.5, 1.0)
            .unwrap_err()
            .to_string();
        assert!(e.contains("σ < 1"), "{e}");
        let e = ProductParams::new(0.5, 0.5, 0.5, 0.5)
            .unwrap_err()
            .to_string();
        assert!(e.contains("s₀ > 1/2"), "{e}");
        let e = ProductParams::new(0.5, 0.5, -1.5, 1.0)
            .unwrap_err()
            .to_string();
        assert!(e.contains("s + s₀ ≥ 0"), "{e}");
        let e = ProductParams::new(-0.5, 0.25, 0.5, 1.0)
            .unwrap_err()
            .to_string();
        assert!(e.contains("σ + σ′ > 0"), "{e}");
        assert!(ProductParams::new(0.0, 0.5, -1.0, 1.0).is_ok());
    }

    #[test]
    fn unit_multiplier_reduces_to_norm_comparison() {
        let g = AnisoGrid::unit(8, 16).unwrap();
        let engine = NormEngine::new(g);
        let p = ProductParams::new(0.5, 0.5, 0.5, 1.0).unwrap();
        let a = SpectralField::from_fn(g, |x, y, z| (x + 2.0 * y).sin() * (3.0 * z).cos());
        let one = SpectralField::constant(g, 1.0);
        let (l, r) = product_sides(&engine, &p, &a, &one);
        let expect = engine.hts_sq(&a, 0.0, 0.5).sqrt()
            / (engine.hts_sq(&a, 0.5, 0.5).sqrt() * engine.hts_sq(&one, 0.5, 1.0).sqrt());
        assert!((l / r - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn single_modes_match_direct_norms() {
        // cos(x)cos(3z) · cos(y)cos(3z) = ½ cos x cos y (1 + cos 6z), all on 16³.
        let g = AnisoGrid::unit(16, 16).unwrap();
        let engine = NormEngine::new(g);
        let p = ProductParams::new(0.5, 0.5, 0.5, 1.0).unwrap();
        let a = SpectralField::from_fn(g, |x, _, z| x.cos() * (3.0 * z).cos());
        let b = SpectralField::from_fn(g, |_, y, z| y.cos() * (3.0 * z).cos());
        let (l, _) = product_sides(&engine, &p, &a, &b);
        let direct = SpectralField::from_fn(g, |x, y, z| {
            0.5 * x.cos() * y.cos() * (1.0 + (6.0 * z).cos())
        });
        let want = engine.hts_sq(&direct, 0.0, 0.5).sqrt();
        assert!((l - want).abs() < 1e-10 * want, "{l} vs {want}");
    }

    #[test]
    fn small_ensemble_is_shift_stable() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let ens = EnsembleSpec {
            count: 6,
            profile: SpectrumProfile::White,
            seed: 5,
            grid: g,
        };
        for p in [
            (0.5, 0.5, 0.5, 1.0),
            (0.0, 0.5, -1.0, 1.0),
            (0.5, 0.5, 0.75, 0.75),
        ] {
            let p = ProductParams::new(p.0, p.1, p.2, p.3).unwrap();
            let r = check_product_rule(&ens, &p).unwrap();
            assert!(r.certified && r.ratio.is_finite(), "{r:?}");
        }
    }
}
