//! `‖a‖_{L⁴_h(L^∞_v)} ≲ ‖a‖^{1/2}_{L²_h H^s_v} ‖∇_h a‖^{1/2}_{L²_h H^s_v}` for `s > 1/2`.

use super::{band_limit, digest, dilate, RatioReport, Sample};
use crate::ensemble::{random_scalar, EnsembleSpec};
use crate::error::{Error, Result};
use crate::grid::{Exponent, MixedNormSpec, MixedOrder, SpectralField};
use crate::norms::NormEngine;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmbeddingSides {
    pub lhs: f64,
    pub rhs: f64,
    /// `‖a‖_{L^∞_v(L⁴_h)}`, never larger than `lhs`.
    pub swapped: f64,
}

pub fn embedding_sides(engine: &NormEngine, a: &SpectralField, s: f64) -> Result<EmbeddingSides> {
    let outer_h = MixedNormSpec::new(Exponent::Four, Exponent::Inf, MixedOrder::HorizontalOuter)?;
    let outer_v = MixedNormSpec::new(Exponent::Four, Exponent::Inf, MixedOrder::VerticalOuter)?;
    Ok(EmbeddingSides {
        lhs: a.mixed_norm(outer_h)?,
        rhs: (engine.h0(a, s) * engine.grad_h_h0_sq(a, s).sqrt()).sqrt(),
        swapped: a.mixed_norm(outer_v)?,
    })
}

/// Ensemble max ratio; `stats["shift_factor"]` compares against inputs compressed
/// by two horizontally and must lie in `[1/4, 4]`.
pub fn check_embedding_l4h_linfv(ens: &EnsembleSpec, s: f64) -> Result<RatioReport> {
    if s <= 0.5 {
        return Err(Error::Constraint(format!("s > 1/2 required, got {s}")));
    }
    ens.validate()?;
    let g = ens.grid;
    let engine = NormEngine::new(g);
    let kh = (g.nh / 4) as i64;
    let kv = (g.nv / 2) as i64;
    let rows: Vec<Result<Option<(Sample, Sample, bool)>>> = ens.par_map(|_, rng| {
        let a = band_limit(&random_scalar(g, ens.profile, rng), kh, kv);
        if engine.grad_h_h0_sq(&a, s) == 0.0 {
            return Ok(None);
        }
        let d = digest(&[&a]);
        let base = embedding_sides(&engine, &a, s)?;
        let moved = embedding_sides(&engine, &dilate(&a, 1, 0)?, s)?;
        let minkowski = base.swapped <= base.lhs * (1.0 + 1e-12);
        Ok(Some((
            Sample {
                lhs: base.lhs,
                rhs: base.rhs,
                digest: d.clone(),
            },
            Sample {
                lhs: moved.lhs,
                rhs: moved.rhs,
                digest: d,
            },
            minkowski,
        )))
    });
    let mut base = Vec::new();
    let mut moved = Vec::new();
    let mut skipped = 0;
    let mut swaps = 0;
    for r in rows {
        match r? {
            Some((b, m, ok)) => {
                base.push(b);
                moved.push(m);
                swaps += usize::from(!ok);
            }
            None => skipped += 1,
        }
    }
    let mut report = RatioReport::from_samples("embedding_l4h_linfv", &base);
    if skipped > 0 {
        report
            .notes
            .push(format!("{skipped} horizontally constant samples excluded"));
    }
    let factor = RatioReport::from_samples("", &moved).ratio / report.ratio;
    report.stats.insert("shift_factor".into(), factor);
    report
        .stats
        .insert("minkowski_violations".into(), swaps as f64);
    if swaps > 0 {
        report.fail(format!(
            "{swaps} samples break the norm interchange inequality"
        ));
    }
    if !(0.25..=4.0).contains(&factor) {
        report.fail(format!("horizontal shift changes the ratio by {factor:.3}"));
    }
    Ok(report)
}
