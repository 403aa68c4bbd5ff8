use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::grid::SpectralField;

/// One ensemble member's two sides.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub lhs: f64,
    pub rhs: f64,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub inequality_id: String,
    /// Left side at the worst sample.
    pub lhs: f64,
    /// Right side (without constant) at the worst sample.
    pub rhs_without_constant: f64,
    /// Largest `lhs / rhs` over the admissible samples.
    pub ratio: f64,
    pub worst_case_input_digest: String,
    pub samples: usize,
    pub excluded: usize,
    /// Ratios of every admissible sample in ensemble order.
    pub ratios: Vec<f64>,
    /// Named secondary statistics (slopes, per-block maxima, stability factors).
    pub stats: BTreeMap<String, f64>,
    pub notes: Vec<String>,
    /// Whether the structural assertions attached to this check hold.
    pub certified: bool,
}

impl RatioReport {
    /// Max-reduce samples; those with `rhs ≤ 0` or non-finite sides are excluded.
    pub fn from_samples(id: &str, samples: &[Sample]) -> Self {
        let mut r = RatioReport {
            inequality_id: id.to_string(),
            lhs: 0.0,
            rhs_without_constant: 0.0,
            ratio: 0.0,
            worst_case_input_digest: String::new(),
            samples: samples.len(),
            excluded: 0,
            ratios: Vec::new(),
            stats: BTreeMap::new(),
            notes: Vec::new(),
            certified: true,
        };
        for s in samples {
            if !(s.rhs > 0.0 && s.rhs.is_finite() && s.lhs.is_finite()) {
                r.excluded += 1;
                continue;
            }
            let q = s.lhs / s.rhs;
            r.ratios.push(q);
            if r.worst_case_input_digest.is_empty() || q > r.ratio {
                r.ratio = q;
                r.lhs = s.lhs;
                r.rhs_without_constant = s.rhs;
                r.worst_case_input_digest = s.digest.clone();
            }
        }
        if r.ratios.is_empty() {
            r.certified = false;
            r.notes.push("no admissible samples".into());
        }
        if r.excluded > 0 {
            r.notes.push(format!(
                "{} samples excluded (zero or non-finite right side)",
                r.excluded
            ));
        }
        r
    }

    /// Largest ratio among the first `n` admissible samples.
    pub fn max_over_first(&self, n: usize) -> f64 {
        self.ratios.iter().take(n).cloned().fold(0.0, f64::max)
    }

    pub fn fail(&mut self, why: impl Into<String>) {
        self.certified = false;
        self.notes.push(why.into());
    }
}

/// Short SHA-256 digest of the coefficients of a set of fields.
pub fn digest(fields: &[&SpectralField]) -> String {
    let mut h = Sha256::new();
    for f in fields {
        for c in f.coeffs().iter() {
            h.update(c.re.to_le_bytes());
            h.update(c.im.to_le_bytes());
        }
    }
    hex::encode(&h.finalize()[..8])
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
