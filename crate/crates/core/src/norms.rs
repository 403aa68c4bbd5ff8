//! Anisotropic Sobolev, Besov and mixed Lebesgue norms, and the weighted pairings.
//!
//! Two families of `L²`-based quantities appear:
//!
//! * the definition norms `H^{t,s}` and `B^{t,s}_{p,q}`, built from the double
//!   block family `Δ_k^h Δ_j^v`;
//! * the vertical block sums `‖f‖_{0,s} = (Σ_j 2^{2js}‖Δ_j^v f‖²)^{1/2}` used by the
//!   energy functionals and their weighted gradients.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::DyadicFilterBank;
use crate::grid::{
    mixed_norm_physical, AnisoGrid, Exponent, MixedNormSpec, MixedOrder, SpectralField, VectorField,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormSpec {
    /// `H^{t,s}`.
    Sobolev {
        t: f64,
        s: f64,
    },
    /// `B^{t,s}_{p,q}`: one `ℓ^q` over both block indices.
    Besov {
        p: Exponent,
        q: Exponent,
        t: f64,
        s: f64,
    },
    /// `(B^t_{p,q1})_h (B^s_{p,q2})_v`: horizontal `ℓ^{q1}` inside, vertical `ℓ^{q2}` outside.
    BesovMixed {
        p: Exponent,
        q1: Exponent,
        q2: Exponent,
        t: f64,
        s: f64,
    },
    Lebesgue(MixedNormSpec),
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        let besov_exp = |e: Exponent, what: &str| -> Result<()> {
            if e == Exponent::Four {
                Err(Error::UnsupportedExponent(format!(
                    "{what} = 4 (Besov exponents are 1, 2 or inf)"
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            NormSpec::Sobolev { t, s } => finite(&[t, s]),
            NormSpec::Besov { p, q, t, s } => {
                besov_exp(p, "p")?;
                besov_exp(q, "q")?;
                finite(&[t, s])
            }
            NormSpec::BesovMixed { p, q1, q2, t, s } => {
                besov_exp(p, "p")?;
                besov_exp(q1, "q1")?;
                besov_exp(q2, "q2")?;
                finite(&[t, s])
            }
            NormSpec::Lebesgue(m) => m.validate(),
        }
    }
}

fn finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Invalid("non-finite regularity index".into()))
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Sobolev { t, s } => write!(f, "H:{t}:{s}"),
            NormSpec::Besov { p, q, t, s } => write!(f, "B:{},{}:{t}:{s}", p.label(), q.label()),
            NormSpec::BesovMixed { p, q1, q2, t, s } => {
                write!(f, "B:{},{},{}:{t}:{s}", p.label(), q1.label(), q2.label())
            }
            NormSpec::Lebesgue(m) => {
                let h = format!("{}h", m.p_h.label());
                let v = format!("{}v", m.q_v.label());
                match m.order {
                    MixedOrder::HorizontalOuter => write!(f, "L:{h},{v}"),
                    MixedOrder::VerticalOuter => write!(f, "L:{v},{h}"),
                }
            }
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    /// Compact forms: `H:t:s`, `B:p,q:t:s`, `B:p,q1,q2:t:s`, `L:4h,infv`
    /// (the first Lebesgue factor is the outer one).
    fn from_str(spec: &str) -> Result<Self> {
        let err = |reason: &str| Error::NormSpecParse {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| err(&format!("`{s}` is not a number")))
        };
        let exp = |s: &str| -> Result<Exponent> {
            Exponent::parse(s).ok_or_else(|| err(&format!("`{s}` is not one of 1, 2, 4, inf")))
        };
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let out = match parts.as_slice() {
            ["H", t, s] => NormSpec::Sobolev {
                t: num(t)?,
                s: num(s)?,
            },
            ["B", pq, t, s] => {
                let e: Vec<&str> = pq.split(',').collect();
                match e.as_slice() {
                    [p, q] => NormSpec::Besov {
                        p: exp(p)?,
                        q: exp(q)?,
                        t: num(t)?,
                        s: num(s)?,
                    },
                    [p, q1, q2] => NormSpec::BesovMixed {
                        p: exp(p)?,
                        q1: exp(q1)?,
                        q2: exp(q2)?,
                        t: num(t)?,
                        s: num(s)?,
                    },
                    _ => return Err(err("Besov exponents must be `p,q` or `p,q1,q2`")),
                }
            }
            ["L", factors] => {
                let f: Vec<&str> = factors.split(',').map(str::trim).collect();
                let [first, second] = f.as_slice() else {
                    return Err(err("Lebesgue spec needs two factors such as `4h,infv`"));
                };
                let split = |s: &str| -> Result<(Exponent, char)> {
                    let dir = s.chars().last().ok_or_else(|| err("empty factor"))?;
                    if dir != 'h' && dir != 'v' {
                        return Err(err(&format!("factor `{s}` must end in h or v")));
                    }
                    Ok((exp(&s[..s.len() - 1])?, dir))
                };
                let (e1, d1) = split(first)?;
                let (e2, d2) = split(second)?;
                let (p_h, q_v, order) = match (d1, d2) {
                    ('h', 'v') => (e1, e2, MixedOrder::HorizontalOuter),
                    ('v', 'h') => (e2, e1, MixedOrder::VerticalOuter),
                    _ => return Err(err("need one horizontal and one vertical factor")),
                };
                NormSpec::Lebesgue(MixedNormSpec { p_h, q_v, order })
            }
            _ => {
                return Err(err(
                    "expected H:t:s, B:p,q:t:s, B:p,q1,q2:t:s or L:<a>h,<b>v",
                ))
            }
        };
        out.validate().map_err(|e| err(&e.to_string()))?;
        Ok(out)
    }
}

/// Indices `(α, β)` of the `H^{α,β}` inner product.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingSpec {
    pub alpha: f64,
    pub beta: f64,
}

/// `‖f‖_{1/2,s}` with the interpolation ratio against `‖f‖_{0,s}^{1/2}‖∇_h f‖_{0,s}^{1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpHalf {
    pub norm: f64,
    /// `+∞` when `∇_h f = 0` but `f ≠ 0`; such samples are excluded from fits.
    pub ratio: f64,
}

/// Norm evaluation bound to a filter bank.
#[derive(Clone, Debug)]
pub struct NormEngine {
    bank: DyadicFilterBank,
}

impl NormEngine {
    pub fn new(grid: AnisoGrid) -> Self {
        Self {
            bank: DyadicFilterBank::new(grid),
        }
    }

    pub fn from_bank(bank: DyadicFilterBank) -> Self {
        Self { bank }
    }

    pub fn bank(&self) -> &DyadicFilterBank {
        &self.bank
    }

    pub fn grid(&self) -> &AnisoGrid {
        self.bank.grid()
    }

    /// `|box| Σ_k W_h(ξ_h) W_v(ξ₃) g(ξ) |c_k|²` for the chosen weights.
    fn weighted(
        &self,
        f: &SpectralField,
        wh: Option<&Array2<f64>>,
        wv: Option<&[f64]>,
        extra: impl Fn([f64; 3]) -> f64,
    ) -> f64 {
        let g = self.grid();
        let mut acc = 0.0;
        for (idx, c) in f.coeffs().indexed_iter() {
            let n = c.norm_sqr();
            if n == 0.0 {
                continue;
            }
            let mut w = extra(g.xi(idx));
            if let Some(h) = wh {
                w *= h[(idx.0, idx.1)];
            }
            if let Some(v) = wv {
                w *= v[idx.2];
            }
            acc += n * w;
        }
        g.box_volume() * acc
    }

    /// `‖f‖²_{0,s}` as a vertical block sum.
    pub fn h0_sq(&self, f: &SpectralField, s: f64) -> f64 {
        let wv = self.bank.vertical_weights(s);
        self.weighted(f, None, Some(&wv), |_| 1.0)
    }

    pub fn h0(&self, f: &SpectralField, s: f64) -> f64 {
        self.h0_sq(f, s).sqrt()
    }

    pub fn h0_vec_sq(&self, v: &VectorField, s: f64) -> f64 {
        let wv = self.bank.vertical_weights(s);
        v.comps()
            .iter()
            .map(|f| self.weighted(f, None, Some(&wv), |_| 1.0))
            .sum()
    }

    pub fn h0_vec(&self, v: &VectorField, s: f64) -> f64 {
        self.h0_vec_sq(v, s).sqrt()
    }

    /// `‖∇_h f‖²_{0,s}`.
    pub fn grad_h_h0_sq(&self, f: &SpectralField, s: f64) -> f64 {
        let wv = self.bank.vertical_weights(s);
        self.weighted(f, None, Some(&wv), |x| x[0] * x[0] + x[1] * x[1])
    }

    pub fn grad_h_h0_vec_sq(&self, v: &VectorField, s: f64) -> f64 {
        let wv = self.bank.vertical_weights(s);
        v.comps()
            .iter()
            .map(|f| self.weighted(f, None, Some(&wv), |x| x[0] * x[0] + x[1] * x[1]))
            .sum()
    }

    /// `‖f‖²_{H^{t,s}}` from the double block sum.
    pub fn hts_sq(&self, f: &SpectralField, t: f64, s: f64) -> f64 {
        let wh = self.bank.horizontal_weights(t);
        let wv = self.bank.vertical_weights(s);
        self.weighted(f, Some(&wh), Some(&wv), |_| 1.0)
    }

    pub fn hts_vec_sq(&self, v: &VectorField, t: f64, s: f64) -> f64 {
        let wh = self.bank.horizontal_weights(t);
        let wv = self.bank.vertical_weights(s);
        v.comps()
            .iter()
            .map(|f| self.weighted(f, Some(&wh), Some(&wv), |_| 1.0))
            .sum()
    }

    pub fn hts_vec(&self, v: &VectorField, t: f64, s: f64) -> f64 {
        self.hts_vec_sq(v, t, s).sqrt()
    }

    /// `‖∇_h f‖²_{H^{t,s}}`.
    pub fn grad_h_hts_vec_sq(&self, v: &VectorField, t: f64, s: f64) -> f64 {
        let wh = self.bank.horizontal_weights(t);
        let wv = self.bank.vertical_weights(s);
        v.comps()
            .iter()
            .map(|f| self.weighted(f, Some(&wh), Some(&wv), |x| x[0] * x[0] + x[1] * x[1]))
            .sum()
    }

    pub fn grad_h_hts_sq(&self, f: &SpectralField, t: f64, s: f64) -> f64 {
        let wh = self.bank.horizontal_weights(t);
        let wv = self.bank.vertical_weights(s);
        self.weighted(f, Some(&wh), Some(&wv), |x| x[0] * x[0] + x[1] * x[1])
    }

    /// `‖f‖_{L²_v H^t_h}`: horizontal block weights only.
    pub fn l2v_hth(&self, f: &SpectralField, t: f64) -> f64 {
        let wh = self.bank.horizontal_weights(t);
        self.weighted(f, Some(&wh), None, |_| 1.0).sqrt()
    }

    /// `‖f‖_{L^∞_v L²_h}` of physical samples.
    pub fn linfv_l2h(&self, f: &SpectralField) -> f64 {
        let spec = MixedNormSpec {
            p_h: Exponent::Two,
            q_v: Exponent::Inf,
            order: MixedOrder::VerticalOuter,
        };
        mixed_norm_physical(&f.to_physical(), self.grid(), spec)
    }

    /// `⟨f, g⟩_{α,β}`, consistent with `hts_sq(f, α, β)` on the diagonal.
    pub fn pairing(&self, f: &SpectralField, g: &SpectralField, spec: PairingSpec) -> f64 {
        let wh = self.bank.horizontal_weights(spec.alpha);
        let wv = self.bank.vertical_weights(spec.beta);
        let grid = self.grid();
        let mut acc = 0.0;
        for ((idx, a), b) in f.coeffs().indexed_iter().zip(g.coeffs().iter()) {
            acc += (a * b.conj()).re * wh[(idx.0, idx.1)] * wv[idx.2];
        }
        grid.box_volume() * acc
    }

    pub fn pairing_vec(&self, f: &VectorField, g: &VectorField, spec: PairingSpec) -> f64 {
        (0..3)
            .map(|c| self.pairing(&f.comps()[c], &g.comps()[c], spec))
            .sum()
    }

    /// `⟨f, g⟩_{0,s}` with vertical block weights only.
    pub fn h0_pairing(&self, f: &SpectralField, g: &SpectralField, s: f64) -> f64 {
        let wv = self.bank.vertical_weights(s);
        let grid = self.grid();
        let mut acc = 0.0;
        for (((_, _, l), a), b) in f.coeffs().indexed_iter().zip(g.coeffs().iter()) {
            acc += (a * b.conj()).re * wv[l];
        }
        grid.box_volume() * acc
    }

    pub fn interp_half(&self, f: &SpectralField, s: f64) -> InterpHalf {
        let norm = self.hts_sq(f, 0.5, s).sqrt();
        let base = self.h0(f, s);
        let grad = self.grad_h_h0_sq(f, s).sqrt();
        let ratio = if norm == 0.0 {
            0.0
        } else if grad == 0.0 {
            f64::INFINITY
        } else {
            norm / (base * grad).sqrt()
        };
        InterpHalf { norm, ratio }
    }

    pub fn norm(&self, f: &SpectralField, spec: &NormSpec) -> Result<f64> {
        spec.validate()?;
        Ok(match *spec {
            NormSpec::Sobolev { t, s } => self.hts_sq(f, t, s).sqrt(),
            NormSpec::Besov { p, q, t, s } => {
                let m = self.block_matrix(f, p);
                let terms = self.weighted_entries(&m, t, s);
                q.norm(terms.into_iter().flatten(), 1.0)
            }
            NormSpec::BesovMixed { p, q1, q2, t, s } => {
                let m = self.block_matrix(f, p);
                let terms = self.weighted_entries(&m, t, s);
                // terms[k][j]; the horizontal sum is inner.
                let nj = terms.first().map_or(0, Vec::len);
                let per_j: Vec<f64> = (0..nj)
                    .map(|j| q1.norm(terms.iter().map(|row| row[j]), 1.0))
                    .collect();
                q2.norm(per_j.into_iter(), 1.0)
            }
            NormSpec::Lebesgue(m) => mixed_norm_physical(&f.to_physical(), self.grid(), m),
        })
    }

    /// Vector norm: for `L²`-type specs the Euclidean sum of component norms.
    pub fn norm_vec(&self, v: &VectorField, spec: &NormSpec) -> Result<f64> {
        let parts: Result<Vec<f64>> = v.comps().iter().map(|f| self.norm(f, spec)).collect();
        Ok(parts?.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    fn weighted_entries(&self, m: &[Vec<f64>], t: f64, s: f64) -> Vec<Vec<f64>> {
        m.iter()
            .enumerate()
            .map(|(ki, row)| {
                let k = ki as i32 - 1;
                row.iter()
                    .enumerate()
                    .map(|(ji, v)| {
                        let j = ji as i32 - 1;
                        (k as f64 * t + j as f64 * s).exp2() * v
                    })
                    .collect()
            })
            .collect()
    }

    /// `‖Δ_k^h Δ_j^v f‖_{L^p}` indexed `[k + 1][j + 1]`.
    pub fn block_matrix(&self, f: &SpectralField, p: Exponent) -> Vec<Vec<f64>> {
        let b = &self.bank;
        let g = self.grid();
        if p == Exponent::Two {
            let nk = (b.q_max_h() + 2) as usize;
            let nj = (b.q_max_v() + 2) as usize;
            let mut acc = vec![vec![0.0; nj]; nk];
            for ((i, j, l), c) in f.coeffs().indexed_iter() {
                let n = c.norm_sqr();
                if n == 0.0 {
                    continue;
                }
                for k in b.h_blocks() {
                    let mh = b.h_table(k).unwrap()[(i, j)];
                    if mh == 0.0 {
                        continue;
                    }
                    for q in b.v_blocks() {
                        let mv = b.v_row(q).unwrap()[l];
                        if mv != 0.0 {
                            acc[(k + 1) as usize][(q + 1) as usize] += n * mh * mh * mv * mv;
                        }
                    }
                }
            }
            let vol = g.box_volume();
            acc.into_iter()
                .map(|r| r.into_iter().map(|a| (vol * a).sqrt()).collect())
                .collect()
        } else {
            let w = g.cell_volume();
            b.h_blocks()
                .map(|k| {
                    let fk = b.delta_h(k, f);
                    b.v_blocks()
                        .map(|q| {
                            let blk = b.delta_v(q, &fk);
                            if blk.is_zero() {
                                0.0
                            } else {
                                p.norm(blk.to_physical().iter().copied(), w)
                            }
                        })
                        .collect()
                })
                .collect()
        }
    }

    /// `(Σ_j 2^{2jr} ‖Δ_j^v f‖²_{L^∞})^{1/2}`.
    pub fn vertical_besov_inf2(&self, f: &SpectralField, r: f64) -> f64 {
        let b = &self.bank;
        b.v_blocks()
            .map(|q| {
                let blk = b.delta_v(q, f);
                let m = blk.to_physical().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                ((q as f64 * r).exp2() * m).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{member_rng, random_scalar, SpectrumProfile};
    use crate::filterbank::FilterBankParams;
    use crate::grid::Direction;
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn field(g: AnisoGrid, seed: u64) -> SpectralField {
        random_scalar(g, SpectrumProfile::White, &mut member_rng(seed, 0))
    }

    #[test]
    fn parse_and_display() {
        for s in [
            "H:0:0.75",
            "B:2,1:0:-0.5",
            "L:4h,infv",
            "L:infv,4h",
            "B:inf,2,2:0.5:0.25",
        ] {
            let spec: NormSpec = s.parse().unwrap();
            let back: NormSpec = spec.to_string().parse().unwrap();
            assert_eq!(spec, back);
        }
        let l: NormSpec = "L:4h,infv".parse().unwrap();
        assert_eq!(
            l,
            NormSpec::Lebesgue(MixedNormSpec {
                p_h: Exponent::Four,
                q_v: Exponent::Inf,
                order: MixedOrder::HorizontalOuter
            })
        );
        for bad in ["H:0", "B:4,2:0:0", "L:4h,4v", "Q:1:1", "L:2h,2h", "H:x:1"] {
            assert!(bad.parse::<NormSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn zero_field_every_spec() {
        let g = AnisoGrid::unit(8, 16).unwrap();
        let e = NormEngine::new(g);
        let z = SpectralField::zeros(g);
        for s in [
            "H:0.5:-0.5",
            "B:1,inf:0:1",
            "B:inf,2:0:0.25",
            "B:2,1,2:0:0.5",
            "L:2v,4h",
        ] {
            assert_eq!(e.norm(&z, &s.parse().unwrap()).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_vertical_mode_matches_coefficient_sum() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let e = NormEngine::new(g);
        let p = FilterBankParams::default();
        let k3 = 11i64;
        let mut f = SpectralField::zeros(g);
        f.set_coeff([0, 0, k3], Complex64::new(0.3, 0.4));
        f.set_coeff([0, 0, -k3], Complex64::new(0.3, -0.4));
        let s = 0.6;
        let w: f64 = (-1..=8)
            .map(|q| (2.0 * q as f64 * s).exp2() * p.block(q, k3 as f64).powi(2))
            .sum();
        let expect = (w * f.l2_norm_sq()).sqrt();
        assert_relative_eq!(e.h0(&f, s), expect, max_relative = 1e-14);
        // Definition norm at t = 0 also carries ψ(0)² = 1 from the horizontal block -1.
        assert_relative_eq!(e.hts_sq(&f, 0.0, s).sqrt(), expect, max_relative = 1e-14);
    }

    #[test]
    fn h00_versus_l2_band() {
        let g = AnisoGrid::unit(16, 32).unwrap();
        let e = NormEngine::new(g);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for seed in 0..20 {
            let f = field(g, seed);
            let r = e.hts_sq(&f, 0.0, 0.0) / f.l2_norm_sq();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        // Σ m² over a partition lies in [1/2, 1] per direction.
        assert!(lo >= 0.25 && hi <= 1.0 + 1e-12, "[{lo}, {hi}]");
    }

    #[test]
    fn pairing_properties() {
        let g = AnisoGrid::unit(8, 16).unwrap();
        let e = NormEngine::new(g);
        let f = field(g, 1);
        let h = field(g, 2);
        let spec = PairingSpec {
            alpha: 0.5,
            beta: -0.75,
        };
        assert_relative_eq!(
            e.pairing(&f, &h, spec),
            e.pairing(&h, &f, spec),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            e.pairing(&f, &f, spec),
            e.hts_sq(&f, 0.5, -0.75),
            max_relative = 1e-12
        );
        let mut lo = SpectralField::zeros(g);
        lo.set_coeff([1, 0, 1], Complex64::new(1.0, 0.0));
        lo.set_coeff([-1, 0, -1], Complex64::new(1.0, 0.0));
        let mut hi = SpectralField::zeros(g);
        hi.set_coeff([0, 2, 6], Complex64::new(0.0, 1.0));
        hi.set_coeff([0, -2, -6], Complex64::new(0.0, -1.0));
        assert_eq!(e.pairing(&lo, &hi, spec), 0.0);
        // α = β = 0 against a physical quadrature of the block-weighted fields.
        let s0 = PairingSpec {
            alpha: 0.0,
            beta: 0.0,
        };
        let b = e.bank();
        let mut quad = 0.0;
        for k in b.h_blocks() {
            for q in b.v_blocks() {
                let a = b.delta_v(q, &b.delta_h(k, &f)).inverse().unwrap();
                let c = b.delta_v(q, &b.delta_h(k, &h)).inverse().unwrap();
                quad += a.iter().zip(c.iter()).map(|(x, y)| x * y).sum::<f64>() * g.cell_volume();
            }
        }
        assert_relative_eq!(e.pairing(&f, &h, s0), quad, max_relative = 1e-10);
    }

    #[test]
    fn besov_two_two_equals_sobolev() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let e = NormEngine::new(g);
        let f = field(g, 4);
        let a = e.norm(&f, &"B:2,2:0.5:0.25".parse().unwrap()).unwrap();
        let b = e.norm(&f, &"H:0.5:0.25".parse().unwrap()).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
        let m = e.norm(&f, &"B:2,2,2:0.5:0.25".parse().unwrap()).unwrap();
        assert_relative_eq!(m, b, max_relative = 1e-12);
        // The physical-space block path agrees with the coefficient path at p = 2.
        let phys: Vec<Vec<f64>> = e
            .bank()
            .h_blocks()
            .map(|k| {
                e.bank()
                    .v_blocks()
                    .map(|q| e.bank().delta_v(q, &e.bank().delta_h(k, &f)).l2_norm())
                    .collect()
            })
            .collect();
        let coef = e.block_matrix(&f, Exponent::Two);
        for (r1, r2) in phys.iter().zip(&coef) {
            for (x, y) in r1.iter().zip(r2) {
                assert!((x - y).abs() <= 1e-12 * (1.0 + x));
            }
        }
    }

    #[test]
    fn interpolation_ratio_cases() {
        let g = AnisoGrid::unit(16, 16).unwrap();
        let e = NormEngine::new(g);
        let z = e.interp_half(&SpectralField::zeros(g), 0.5);
        assert_eq!((z.norm, z.ratio), (0.0, 0.0));
        let vertical = SpectralField::from_fn(g, |_, _, z| (3.0 * z).sin());
        assert!(e.interp_half(&vertical, 0.5).ratio.is_infinite());
        // Single mixed mode: every quantity is a multiplier weight times ‖f‖².
        let kh = (5.0f64, 0.0f64);
        let f = SpectralField::from_fn(g, |x, _, z| (kh.0 * x).cos() * (2.0 * z).cos());
        let p = FilterBankParams::default();
        let s = 0.75;
        let wv: f64 = (-1..=4)
            .map(|q| (2.0 * q as f64 * s).exp2() * p.block(q, 2.0).powi(2))
            .sum();
        let wh: f64 = (-1..=4)
            .map(|k| (k as f64).exp2() * p.block(k, 5.0).powi(2))
            .sum();
        let expect = (wh / kh.0).sqrt();
        assert_relative_eq!(e.interp_half(&f, s).ratio, expect, max_relative = 1e-12);
        assert_relative_eq!(
            e.interp_half(&f, s).norm,
            (wh * wv * f.l2_norm_sq()).sqrt(),
            max_relative = 1e-12
        );
        let mut worst = 0.0f64;
        for seed in 0..100 {
            let r = e.interp_half(&field(g, seed), s).ratio;
            assert!(r.is_finite());
            worst = worst.max(r);
        }
        assert!(worst < 10.0);
    }

    #[test]
    fn gradient_weights_match_derivatives() {
        let g = AnisoGrid::new(8, 16, 1.3, 0.9).unwrap();
        let e = NormEngine::new(g);
        let f = field(g, 8);
        let direct =
            e.h0_sq(&f.derivative(Direction::X1), 0.3) + e.h0_sq(&f.derivative(Direction::X2), 0.3);
        assert_relative_eq!(e.grad_h_h0_sq(&f, 0.3), direct, max_relative = 1e-12);
    }

    #[test]
    fn vertical_embedding_ratio_bounded() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let e = NormEngine::new(g);
        let s = 0.8;
        let mut worst = 0.0f64;
        for seed in 0..30 {
            let full = random_scalar(
                g,
                SpectrumProfile::Anisotropic {
                    gamma_h: 0.0,
                    gamma_v: 1.0,
                },
                &mut member_rng(seed, 0),
            );
            let f = full.map_indexed(|(i, j, _), c| if i == 0 && j == 0 { c } else { c * 0.0 });
            let lhs = e.vertical_besov_inf2(&f, s - 0.5);
            let rhs = e.h0(&f, s) / (2.0 * std::f64::consts::PI);
            worst = worst.max(lhs / rhs);
        }
        assert!(worst.is_finite() && worst < 10.0, "{worst}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn monotone_in_s_above_unit_frequency(seed in any::<u64>(), s1 in -1.0f64..1.0, ds in 0.0f64..1.0) {
            let g = AnisoGrid::unit(8, 32).unwrap();
            let e = NormEngine::new(g);
            // Drop |ξ₃| < 3 so blocks -1 and 0 are empty.
            let f = field(g, seed).map_indexed(|(_, _, l), c| if g.xi_v(l).abs() < 3.0 { c * 0.0 } else { c });
            prop_assert!(e.h0(&f, s1 + ds) >= e.h0(&f, s1) * (1.0 - 1e-14));
        }

        #[test]
        fn duality_bound(seed in any::<u64>(), s in 0.0f64..1.5) {
            let g = AnisoGrid::unit(8, 32).unwrap();
            let e = NormEngine::new(g);
            let f = field(g, seed);
            let h = field(g, seed.wrapping_add(1));
            let lhs = e.h0_pairing(&f, &h, 0.0).abs();
            prop_assert!(lhs <= e.h0(&f, s) * e.h0(&h, -s) * (1.0 + 1e-12));
        }
    }
}
