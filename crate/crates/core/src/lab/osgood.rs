//! Osgood comparison: if `g ≤ c + ∫γ μ(g)` then `M(c) − M(g(t)) ≤ ∫_{t₀}^t γ`,
//! with `M(x) = ∫_x^a dτ/μ(τ)`.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rayon::prelude::*;

use super::report::{RatioReport, Sample};
use crate::ensemble::member_rng;
use crate::error::{Error, Result};

/// Absolute tolerance of the `M` quadrature.
pub const QUAD_TOL: f64 = 1e-10;
/// Values at or below this count as zero when certifying `g ≡ 0`.
pub const QUADRATURE_FLOOR: f64 = 1e-300;
/// Relative slack of the comparison.
pub const COMPARISON_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Modulus {
    /// `μ(τ) = τ`.
    Linear,
    /// `μ(τ) = τ^α`.
    PowerLaw { alpha: f64 },
    /// `μ(τ) = τ(1 − ln τ) ln(1 − ln τ)`.
    LogLog,
}

impl Modulus {
    pub fn eval(&self, tau: f64) -> f64 {
        match *self {
            Modulus::Linear => tau,
            Modulus::PowerLaw { alpha } => tau.powf(alpha),
            Modulus::LogLog => {
                let l = 1.0 - tau.ln();
                tau * l * l.ln()
            }
        }
    }

    /// `τ/μ(τ)` at `τ = e^{-σ}`: the integrand of `M` in the variable `σ = −ln τ`.
    fn log_integrand(&self, sigma: f64) -> f64 {
        match *self {
            Modulus::Linear => 1.0,
            Modulus::PowerLaw { alpha } => (-(1.0 - alpha) * sigma).exp(),
            Modulus::LogLog => 1.0 / ((1.0 + sigma) * (1.0 + sigma).ln()),
        }
    }

    /// Whether `∫_0^a dτ/μ` diverges.
    pub fn is_osgood(&self) -> bool {
        match *self {
            Modulus::Linear | Modulus::LogLog => true,
            Modulus::PowerLaw { alpha } => alpha >= 1.0,
        }
    }

    /// `M(x)` in closed form.
    pub fn m_closed(&self, x: f64, a: f64) -> f64 {
        match *self {
            Modulus::Linear => (a / x).ln(),
            Modulus::PowerLaw { alpha } if alpha == 1.0 => (a / x).ln(),
            Modulus::PowerLaw { alpha } => {
                (a.powf(1.0 - alpha) - x.powf(1.0 - alpha)) / (1.0 - alpha)
            }
            Modulus::LogLog => (1.0 - x.ln()).ln().ln() - (1.0 - a.ln()).ln().ln(),
        }
    }

    /// Positive and nondecreasing on `(0, a]`, checked on a logarithmic sweep.
    pub fn validate(&self, a: f64) -> Result<()> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Invalid(format!("a must be positive, got {a}")));
        }
        if let Modulus::PowerLaw { alpha } = *self {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::Invalid(format!(
                    "power-law modulus needs α > 0, got {alpha}"
                )));
            }
        }
        let mut prev = 0.0;
        for i in 0..=400 {
            let tau = a * (-(400 - i) as f64 * 0.25).exp2().max(1e-300);
            let m = self.eval(tau);
            if !(m > 0.0) || !m.is_finite() {
                return Err(Error::Invalid(format!(
                    "modulus not positive at τ = {tau:e}"
                )));
            }
            if m < prev * (1.0 - 1e-12) {
                return Err(Error::Invalid(format!(
                    "modulus decreasing near τ = {tau:e}"
                )));
            }
            prev = m;
        }
        Ok(())
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(1e-15 * (left + right).abs()) {
        left + right + delta / 15.0
    } else {
        adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, b, fa, fm, fb);
    adapt(&f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `M(x) = ∫_x^a dτ/μ(τ)` (absolute tolerance `QUAD_TOL`, relative once `M ≫ 1`) by quadrature in `σ = −ln τ`, which resolves the
/// neighbourhood of `τ = 0` on a uniform footing. `x = 0` uses the closed form.
pub fn m_quadrature(mu: Modulus, x: f64, a: f64) -> f64 {
    if x == 0.0 {
        return if mu.is_osgood() {
            f64::INFINITY
        } else {
            mu.m_closed(0.0, a)
        };
    }
    let (sa, sx) = (-a.ln(), -x.ln());
    // Unit pieces keep the per-piece tolerance meaningful over long σ ranges.
    let pieces = ((sx - sa).abs().ceil() as usize).max(1);
    let h = (sx - sa) / pieces as f64;
    let tol = QUAD_TOL / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = sa + i as f64 * h;
            integrate(|s| mu.log_integrand(s), lo, lo + h, tol)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsgoodProblem {
    pub c: f64,
    /// `(t, γ(t))`, linearly interpolated.
    pub gamma: Vec<(f64, f64)>,
    pub mu: Modulus,
    pub a: f64,
    pub t0: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsgoodResult {
    pub certified: bool,
    /// `(t, M(g(t)))`.
    pub m_curve: Vec<(f64, f64)>,
    /// `∫γ − (M(c) − M(g))` per tabulation point (nonnegative when the comparison holds).
    pub margins: Vec<f64>,
    pub notes: Vec<String>,
}

impl OsgoodProblem {
    fn validate(&self) -> Result<()> {
        self.mu.validate(self.a)?;
        if !(self.c >= 0.0) {
            return Err(Error::Invalid(format!(
                "c must be nonnegative, got {}",
                self.c
            )));
        }
        if self.c > self.a {
            return Err(Error::Invalid(format!(
                "c = {} exceeds a = {}",
                self.c, self.a
            )));
        }
        if self.t_end < self.t0 {
            return Err(Error::Invalid(format!(
                "t_end = {} precedes t0 = {}",
                self.t_end, self.t0
            )));
        }
        if self.gamma.iter().any(|p| !(p.1 >= 0.0)) {
            return Err(Error::Invalid("γ must be nonnegative".into()));
        }
        if self.gamma.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::Invalid(
                "γ tabulation must have increasing times".into(),
            ));
        }
        Ok(())
    }

    /// `∫_{t₀}^{t} γ` for the piecewise-linear interpolant (constant extension at the ends).
    pub fn gamma_integral(&self, t: f64) -> f64 {
        let g = &self.gamma;
        let at = |x: f64| -> f64 {
            if g.is_empty() {
                return 0.0;
            }
            if x <= g[0].0 {
                return g[0].1;
            }
            for w in g.windows(2) {
                if x <= w[1].0 {
                    let th = (x - w[0].0) / (w[1].0 - w[0].0);
                    return w[0].1 + th * (w[1].1 - w[0].1);
                }
            }
            g[g.len() - 1].1
        };
        let mut knots: Vec<f64> = vec![self.t0];
        knots.extend(g.iter().map(|p| p.0).filter(|&x| x > self.t0 && x < t));
        knots.push(t);
        knots
            .windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (at(w[0]) + at(w[1])))
            .sum()
    }
}

/// Check the Osgood conclusion at every point of the tabulation `g`.
pub fn osgood_bound(prob: &OsgoodProblem, g: &[(f64, f64)]) -> Result<OsgoodResult> {
    prob.validate()?;
    for &(t, v) in g {
        if !(v >= 0.0) {
            return Err(Error::Invalid(format!(
                "g({t}) = {v} is not a nonnegative number"
            )));
        }
        if v > prob.a {
            return Err(Error::Invalid(format!(
                "g({t}) = {v:e} exceeds a = {:e}",
                prob.a
            )));
        }
    }
    let mut out = OsgoodResult {
        certified: true,
        m_curve: Vec::with_capacity(g.len()),
        margins: Vec::with_capacity(g.len()),
        notes: Vec::new(),
    };
    if prob.c == 0.0 && prob.mu.is_osgood() {
        for &(t, v) in g {
            out.m_curve
                .push((t, m_quadrature(prob.mu, v.max(0.0), prob.a)));
            out.margins
                .push(if v <= QUADRATURE_FLOOR { 0.0 } else { -v });
        }
        if g.iter().any(|p| p.1 > QUADRATURE_FLOOR) {
            out.certified = false;
            out.notes
                .push("c = 0 with a divergent modulus requires g ≡ 0".into());
        }
        return Ok(out);
    }
    let mc = m_quadrature(prob.mu, prob.c, prob.a);
    for &(t, v) in g {
        let mg = m_quadrature(prob.mu, v, prob.a);
        let lhs = mc - mg;
        let rhs = prob.gamma_integral(t);
        let margin = rhs - lhs;
        out.m_curve.push((t, mg));
        out.margins.push(margin);
        if margin < -COMPARISON_TOL * rhs.abs().max(lhs.abs()).max(1.0) {
            out.certified = false;
            out.notes.push(format!(
                "comparison fails at t = {t}: M(c) − M(g) = {lhs:e} > ∫γ = {rhs:e}"
            ));
        }
    }
    Ok(out)
}

/// Exact solution of `χ′ = γ χ(1 − ln χ) ln(1 − ln χ)` after accumulating `∫γ = big_gamma`.
pub fn loglog_solution(chi0: f64, big_gamma: f64) -> f64 {
    (1.0 - (1.0 - chi0.ln()).powf((-big_gamma).exp())).exp()
}

/// Manufactured double-logarithmic problems: `χ0` log-uniform in
/// `[1e-12, 1e-3]`, `γ = g₀(1 + t²)` with `g₀ ∈ [0.1, 0.5]`, exact solution
/// tabulated on 201 points of `[0, 1]`. Ratio is `(M(c) − M(g)) / ∫γ`.
pub fn check_manufactured_loglog(count: usize, seed: u64) -> Result<RatioReport> {
    if count == 0 {
        return Err(Error::Invalid("ensemble count must be at least 1".into()));
    }
    let a = (-2.0f64).exp();
    let rows: Vec<Result<(Vec<Sample>, bool, f64)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = member_rng(seed, i as u64);
            let chi0 = 10f64.powf(rng.random_range(-12.0..-3.0));
            let g0: f64 = rng.random_range(0.1..0.5);
            let ts: Vec<f64> = (0..=200).map(|k| k as f64 / 200.0).collect();
            let prob = OsgoodProblem {
                c: chi0,
                gamma: ts.iter().map(|&t| (t, g0 * (1.0 + t * t))).collect(),
                mu: Modulus::LogLog,
                a,
                t0: 0.0,
                t_end: 1.0,
            };
            let g: Vec<(f64, f64)> = ts
                .iter()
                .map(|&t| (t, loglog_solution(chi0, prob.gamma_integral(t)).min(a)))
                .collect();
            let res = osgood_bound(&prob, &g)?;
            let mc = m_quadrature(Modulus::LogLog, chi0, a);
            let samples = g
                .iter()
                .zip(&res.m_curve)
                .skip(1)
                .map(|(&(t, _), &(_, mg))| Sample {
                    lhs: mc - mg,
                    rhs: prob.gamma_integral(t),
                    digest: format!("chi0={chi0:e},g0={g0}"),
                })
                .collect();
            let worst = res.margins.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            Ok((samples, res.certified, worst))
        })
        .collect();
    let mut samples = Vec::new();
    let mut all_ok = true;
    let mut worst = 0.0f64;
    for r in rows {
        let (s, ok, w) = r?;
        samples.extend(s);
        all_ok &= ok;
        worst = worst.max(w);
    }
    let mut report = RatioReport::from_samples("osgood", &samples);
    report.stats.insert("max_abs_margin".into(), worst);
    if !all_ok {
        report.fail("comparison failed on a manufactured solution");
    }
    if worst > COMPARISON_TOL {
        report.fail(format!("margin {worst:e} exceeds the quadrature tolerance"));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = 0.1353352832366127; // e^{-2}

    #[test]
    fn quadrature_matches_closed_forms() {
        for mu in [
            Modulus::Linear,
            Modulus::LogLog,
            Modulus::PowerLaw { alpha: 0.5 },
            Modulus::PowerLaw { alpha: 1.5 },
        ] {
            for x in [A, 1e-1, 1e-3, 1e-12, 1e-100, 1e-300] {
                let q = m_quadrature(mu, x, A);
                let c = mu.m_closed(x, A);
                assert!(
                    (q - c).abs() <= 1e-8 * c.abs().max(1.0),
                    "{mu:?} {x}: {q} vs {c}"
                );
            }
        }
    }

    #[test]
    fn gronwall_special_case() {
        // g(t) = c e^{t} meets the linear comparison with equality.
        let c = 1e-3;
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
        let prob = OsgoodProblem {
            c,
            gamma: ts.iter().map(|&t| (t, 1.0)).collect(),
            mu: Modulus::Linear,
            a: 1.0,
            t0: 0.0,
            t_end: 1.0,
        };
        let g: Vec<(f64, f64)> = ts.iter().map(|&t| (t, c * t.exp())).collect();
        let r = osgood_bound(&prob, &g).unwrap();
        assert!(r.certified, "{:?}", r.notes);
        assert!(r.margins.iter().all(|m| m.abs() < 1e-9));
        let worse: Vec<(f64, f64)> = ts.iter().map(|&t| (t, c * (1.1 * t).exp())).collect();
        assert!(!osgood_bound(&prob, &worse).unwrap().certified);
    }

    #[test]
    fn manufactured_loglog_is_certified() {
        let chi0 = 1e-12;
        let ts: Vec<f64> = (0..=50).map(|i| i as f64 * 0.02).collect();
        let prob = OsgoodProblem {
            c: chi0,
            gamma: ts.iter().map(|&t| (t, 0.3 * (1.0 + t * t))).collect(),
            mu: Modulus::LogLog,
            a: A,
            t0: 0.0,
            t_end: 1.0,
        };
        let g: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| (t, loglog_solution(chi0, prob.gamma_integral(t))))
            .collect();
        let r = osgood_bound(&prob, &g).unwrap();
        assert!(r.certified);
        assert!(r.margins.iter().all(|m| m.abs() < 1e-8), "{:?}", r.margins);
    }

    #[test]
    fn manufactured_ensemble_is_certified() {
        let r = check_manufactured_loglog(6, 2).unwrap();
        assert!(r.certified, "{:?}", r.notes);
        assert!((r.ratio - 1.0).abs() < 1e-6, "{}", r.ratio);
    }

    #[test]
    fn zero_data_and_rejections() {
        let prob = OsgoodProblem {
            c: 0.0,
            gamma: vec![(0.0, 1.0), (1.0, 1.0)],
            mu: Modulus::Linear,
            a: 1.0,
            t0: 0.0,
            t_end: 1.0,
        };
        assert!(
            osgood_bound(&prob, &[(0.0, 0.0), (1.0, 0.0)])
                .unwrap()
                .certified
        );
        assert!(
            !osgood_bound(&prob, &[(0.0, 0.0), (1.0, 1e-20)])
                .unwrap()
                .certified
        );
        assert!(osgood_bound(&prob, &[(0.5, 2.0)]).is_err());
        let mut bad = prob.clone();
        bad.mu = Modulus::PowerLaw { alpha: -1.0 };
        assert!(osgood_bound(&bad, &[(0.0, 0.0)]).is_err());
        let mut bad = prob;
        bad.mu = Modulus::LogLog;
        bad.a = 1.5;
        assert!(osgood_bound(&bad, &[(0.0, 0.0)]).is_err());
    }
}
