//! Bernstein inequalities for dyadically localized fields.

use serde::{Deserialize, Serialize};

use super::{digest, fit_slope, RatioReport, Sample};
use crate::ensemble::{random_scalar, EnsembleSpec};
use crate::error::{Error, Result};
use crate::filterbank::DyadicFilterBank;
use crate::grid::{Direction, Exponent, MixedNormSpec, MixedOrder, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Exponents are `L^{p}_h(L^{q}_v)`; the direction decides which pair may differ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub axis: Axis,
    pub p1: Exponent,
    pub p2: Exponent,
    pub q1: Exponent,
    pub q2: Exponent,
    pub order: u32,
    /// Ring version: `‖a‖ ≲ 2^{-qN} ‖∂^N a‖` on blocks `q ≥ 0`.
    pub reverse: bool,
}

impl BernsteinParams {
    pub fn l2(axis: Axis, order: u32) -> Self {
        BernsteinParams {
            axis,
            p1: Exponent::Two,
            p2: Exponent::Two,
            q1: Exponent::Two,
            q2: Exponent::Two,
            order,
            reverse: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let inv = |e: Exponent| 1.0 / e.value();
        if inv(self.p2) < inv(self.p1) || inv(self.q2) < inv(self.q1) {
            return Err(Error::Constraint(
                "Bernstein needs p2 ≤ p1 and q2 ≤ q1".into(),
            ));
        }
        match self.axis {
            Axis::Horizontal if self.q1 != self.q2 => {
                return Err(Error::Constraint(
                    "horizontal check keeps the vertical exponent".into(),
                ))
            }
            Axis::Vertical if self.p1 != self.p2 => {
                return Err(Error::Constraint(
                    "vertical check keeps the horizontal exponent".into(),
                ))
            }
            _ => {}
        }
        if self.reverse && (self.p1 != self.p2 || self.q1 != self.q2 || self.order == 0) {
            return Err(Error::Constraint(
                "ring version needs equal exponents and a positive order".into(),
            ));
        }
        MixedNormSpec::new(self.p1, self.q1, MixedOrder::HorizontalOuter)?;
        MixedNormSpec::new(self.p2, self.q2, MixedOrder::HorizontalOuter)?;
        Ok(())
    }

    /// Rate exponent per block index.
    fn gap(&self) -> f64 {
        let inv = |e: Exponent| 1.0 / e.value();
        match self.axis {
            Axis::Horizontal => self.order as f64 + 2.0 * (inv(self.p2) - inv(self.p1)),
            Axis::Vertical => self.order as f64 + inv(self.q2) - inv(self.q1),
        }
    }
}

fn localize(bank: &DyadicFilterBank, axis: Axis, q: i32, f: &SpectralField) -> SpectralField {
    match axis {
        Axis::Horizontal => bank.delta_h(q, f),
        Axis::Vertical => bank.delta_v(q, f),
    }
}

fn differentiate(axis: Axis, order: u32, f: &SpectralField) -> SpectralField {
    let dir = match axis {
        Axis::Horizontal => Direction::X1,
        Axis::Vertical => Direction::X3,
    };
    (0..order).fold(f.clone(), |g, _| g.derivative(dir))
}

/// Ratio of both sides for one localized field; `None` for an empty block.
pub fn block_ratio(
    params: &BernsteinParams,
    q: i32,
    block: &SpectralField,
) -> Result<Option<(f64, f64)>> {
    if block.is_zero() {
        return Ok(None);
    }
    let n1 = MixedNormSpec::new(params.p1, params.q1, MixedOrder::HorizontalOuter)?;
    let n2 = MixedNormSpec::new(params.p2, params.q2, MixedOrder::HorizontalOuter)?;
    let d = differentiate(params.axis, params.order, block);
    let scale = (q as f64 * params.gap()).exp2();
    Ok(Some(if params.reverse {
        (block.mixed_norm(n1)?, d.mixed_norm(n1)? / scale)
    } else {
        (d.mixed_norm(n1)?, scale * block.mixed_norm(n2)?)
    }))
}

/// Max ratio over the ensemble and the blocks, with the three-block stability audit.
pub fn check_bernstein(ens: &EnsembleSpec, params: &BernsteinParams) -> Result<RatioReport> {
    ens.validate()?;
    params.validate()?;
    let bank = DyadicFilterBank::new(ens.grid);
    let all = match params.axis {
        Axis::Horizontal => bank.h_blocks(),
        Axis::Vertical => bank.v_blocks(),
    };
    let blocks: Vec<i32> = all.filter(|&q| !params.reverse || q >= 0).collect();

    let per_member: Vec<Result<Vec<Option<Sample>>>> = ens.par_map(|_, rng| {
        let f = random_scalar(ens.grid, ens.profile, rng);
        blocks
            .iter()
            .map(|&q| {
                let b = localize(&bank, params.axis, q, &f);
                Ok(block_ratio(params, q, &b)?.map(|(lhs, rhs)| Sample {
                    lhs,
                    rhs,
                    digest: digest(&[&f]),
                }))
            })
            .collect()
    });
    let mut samples = Vec::new();
    let mut per_block = vec![0.0f64; blocks.len()];
    for row in per_member {
        for (bi, s) in row?.into_iter().enumerate() {
            if let Some(s) = s {
                if s.rhs > 0.0 {
                    per_block[bi] = per_block[bi].max(s.lhs / s.rhs);
                }
                samples.push(s);
            }
        }
    }
    let id = format!(
        "bernstein_{}{}",
        match params.axis {
            Axis::Horizontal => "h",
            Axis::Vertical => "v",
        },
        if params.reverse { "_ring" } else { "" }
    );
    let mut report = RatioReport::from_samples(&id, &samples);
    let mut live = Vec::new();
    for (q, m) in blocks.iter().zip(&per_block) {
        if *m > 0.0 {
            report.stats.insert(format!("block_{q}"), *m);
            live.push(*m);
        } else {
            report.notes.push(format!("block {q} empty, skipped"));
        }
    }
    let worst = live
        .windows(3)
        .map(|w| {
            let hi = w.iter().cloned().fold(0.0, f64::max);
            let lo = w.iter().cloned().fold(f64::INFINITY, f64::min);
            hi / lo
        })
        .fold(1.0, f64::max);
    report.stats.insert("three_block_spread".into(), worst);
    if live.len() < 3 {
        report.fail("fewer than three populated blocks");
    } else if worst > 4.0 {
        report.fail(format!(
            "ratio spread {worst:.3} over three blocks exceeds 4"
        ));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// `(q, ensemble mean of log₂(‖∂Δ_q f‖/‖Δ_q f‖))`.
    pub points: Vec<(f64, f64)>,
}

/// Fitted growth rate of `‖∂Δ_q f‖_{L²}/‖Δ_q f‖_{L²}` in `q` over `blocks`.
pub fn derivative_slope(ens: &EnsembleSpec, axis: Axis, blocks: &[i32]) -> Result<SlopeFit> {
    ens.validate()?;
    let bank = DyadicFilterBank::new(ens.grid);
    let logs: Vec<Vec<f64>> = ens.par_map(|_, rng| {
        let f = random_scalar(ens.grid, ens.profile, rng);
        blocks
            .iter()
            .map(|&q| {
                let b = localize(&bank, axis, q, &f);
                let d = differentiate(axis, 1, &b);
                (d.l2_norm() / b.l2_norm()).log2()
            })
            .collect()
    });
    let points: Vec<(f64, f64)> = blocks
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let m = logs
                .iter()
                .map(|r| r[i])
                .filter(|v| v.is_finite())
                .sum::<f64>()
                / logs.len() as f64;
            (q as f64, m)
        })
        .collect();
    let slope = fit_slope(&points).ok_or_else(|| Error::Invalid("need two blocks".into()))?;
    Ok(SlopeFit { slope, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::SpectrumProfile;
    use crate::grid::AnisoGrid;

    #[test]
    fn single_mode_identity_and_support_bounds() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let bank = DyadicFilterBank::new(g);
        let f = SpectralField::from_fn(g, |_, _, z| (22.0 * z).cos());
        let b = bank.delta_v(4, &f);
        let id = BernsteinParams::l2(Axis::Vertical, 0);
        let (l, r) = block_ratio(&id, 4, &b).unwrap().unwrap();
        assert!((l / r - 1.0).abs() < 1e-12);
        let one = BernsteinParams::l2(Axis::Vertical, 1);
        let (l, r) = block_ratio(&one, 4, &b).unwrap().unwrap();
        assert!((l / r - 22.0 / 16.0).abs() < 1e-12);
        assert!((0.75..=8.0 / 3.0).contains(&(l / r)));
    }

    #[test]
    fn rejects_bad_exponents() {
        let mut p = BernsteinParams::l2(Axis::Horizontal, 1);
        p.p2 = Exponent::Inf;
        assert!(p.validate().is_err());
        p.p2 = Exponent::Two;
        p.q1 = Exponent::Inf;
        assert!(p.validate().is_err());
    }

    #[test]
    fn ring_and_forward_ratios_are_stable() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let ens = EnsembleSpec {
            count: 6,
            profile: SpectrumProfile::PowerLaw { gamma: 1.0 },
            seed: 3,
            grid: g,
        };
        let mut p = BernsteinParams::l2(Axis::Vertical, 1);
        p.q1 = Exponent::Inf;
        let r = check_bernstein(&ens, &p).unwrap();
        assert!(r.certified, "{:?}", r.notes);
        let mut ring = BernsteinParams::l2(Axis::Vertical, 1);
        ring.reverse = true;
        let r = check_bernstein(&ens, &ring).unwrap();
        assert!(r.certified && r.ratio <= 4.0 / 3.0 + 1e-12, "{r:?}");
    }

    #[test]
    fn vertical_slope_near_one() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let ens = EnsembleSpec {
            count: 8,
            profile: SpectrumProfile::White,
            seed: 1,
            grid: g,
        };
        let fit = derivative_slope(&ens, Axis::Vertical, &[0, 1, 2, 3, 4]).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.1, "{fit:?}");
    }
}
