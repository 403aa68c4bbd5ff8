//! Anisotropic Littlewood–Paley blocks on the periodic grid.
//!
//! The low-pass profile `ψ` equals one on `|ξ| ≤ 3/4`, vanishes for `|ξ| ≥ 4/3`
//! and is glued by a `C^∞` step. The band-pass profile is `φ(ξ) = ψ(ξ/2) − ψ(ξ)`,
//! so the partition `ψ + Σ_{q≥0} φ(2^{-q}·) = 1` telescopes.

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AnisoGrid, SpectralField};

/// `C^∞` step from 0 on `t ≤ 0` to 1 on `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBankParams {
    /// `ψ ≡ 1` below this modulus.
    pub inner_knot: f64,
    /// `ψ ≡ 0` above this modulus.
    pub outer_knot: f64,
    /// Interaction width of the paraproduct support rule.
    pub n0: i32,
    /// Lowest block index (`-1` for the nonhomogeneous bank).
    pub q_min: i32,
}

impl Default for FilterBankParams {
    fn default() -> Self {
        Self {
            inner_knot: 0.75,
            outer_knot: 4.0 / 3.0,
            n0: 5,
            q_min: -1,
        }
    }
}

impl FilterBankParams {
    fn validate(&self) -> Result<()> {
        let (a, b) = (self.inner_knot, self.outer_knot);
        if !(a > 0.0 && a < b && b < 2.0 * a) {
            return Err(Error::Constraint(format!(
                "filter knots need 0 < inner < outer < 2·inner, got ({a}, {b})"
            )));
        }
        if self.q_min != -1 {
            return Err(Error::Constraint("only q_min = -1 is supported".into()));
        }
        Ok(())
    }

    pub fn psi(&self, xi: f64) -> f64 {
        let r = xi.abs();
        1.0 - smooth_step((r - self.inner_knot) / (self.outer_knot - self.inner_knot))
    }

    pub fn phi(&self, xi: f64) -> f64 {
        self.psi(0.5 * xi) - self.psi(xi)
    }

    /// Nonhomogeneous block multiplier at modulus `r`.
    pub fn block(&self, q: i32, r: f64) -> f64 {
        match q {
            q if q < -1 => 0.0,
            -1 => self.psi(r),
            q => self.phi(r * (-q as f64).exp2()),
        }
    }

    /// Homogeneous block multiplier, defined for every integer `q`.
    pub fn block_hom(&self, q: i32, r: f64) -> f64 {
        self.phi(r * (-q as f64).exp2())
    }
}

/// Terms of the vertical paraproduct decomposition `ab = T_a b + T_b a + R(a, b)`.
#[derive(Clone, Debug)]
pub struct Bony {
    pub t_ab: SpectralField,
    pub t_ba: SpectralField,
    pub rest: SpectralField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoeffMode {
    Block,
    Lowpass,
}

/// Normalized dyadic coefficients of a field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCoeffs {
    pub values: BTreeMap<i32, f64>,
    pub s: f64,
    pub total: f64,
}

impl BlockCoeffs {
    pub fn sum_sq(&self) -> f64 {
        self.values.values().map(|c| c * c).sum()
    }
}

/// Precomputed horizontal and vertical block multipliers for one grid.
#[derive(Clone, Debug)]
pub struct DyadicFilterBank {
    grid: AnisoGrid,
    params: FilterBankParams,
    q_max_v: i32,
    q_max_h: i32,
    /// `v[q + 1][l]`: vertical block `q` at vertical FFT index `l`.
    v: Vec<Vec<f64>>,
    /// `h[q + 1][(i, j)]`.
    h: Vec<Array2<f64>>,
}

impl DyadicFilterBank {
    pub fn new(grid: AnisoGrid) -> Self {
        Self::with_params(grid, FilterBankParams::default()).expect("default params are valid")
    }

    pub fn with_params(grid: AnisoGrid, params: FilterBankParams) -> Result<Self> {
        params.validate()?;
        let vmods: Vec<f64> = (0..grid.nv).map(|l| grid.xi_v(l).abs()).collect();
        let hmod = Array2::from_shape_fn((grid.nh, grid.nh), |(i, j)| {
            grid.xi_h(i).hypot(grid.xi_h(j))
        });
        let top = |max_r: f64| -> i32 {
            let mut q = -1;
            while params.inner_knot * ((q + 1) as f64).exp2() < max_r {
                q += 1;
            }
            q
        };
        let q_max_v = top(vmods.iter().cloned().fold(0.0, f64::max));
        let q_max_h = top(hmod.iter().cloned().fold(0.0, f64::max));
        let v = (-1..=q_max_v)
            .map(|q| vmods.iter().map(|&r| params.block(q, r)).collect())
            .collect();
        let h = (-1..=q_max_h)
            .map(|q| hmod.mapv(|r| params.block(q, r)))
            .collect();
        Ok(Self {
            grid,
            params,
            q_max_v,
            q_max_h,
            v,
            h,
        })
    }

    pub fn grid(&self) -> &AnisoGrid {
        &self.grid
    }

    pub fn params(&self) -> &FilterBankParams {
        &self.params
    }

    pub fn n0(&self) -> i32 {
        self.params.n0
    }

    pub fn q_max_v(&self) -> i32 {
        self.q_max_v
    }

    pub fn q_max_h(&self) -> i32 {
        self.q_max_h
    }

    pub fn v_blocks(&self) -> std::ops::RangeInclusive<i32> {
        -1..=self.q_max_v
    }

    pub fn h_blocks(&self) -> std::ops::RangeInclusive<i32> {
        -1..=self.q_max_h
    }

    /// Vertical multiplier table row for block `q`, `None` when the block is empty.
    pub fn v_row(&self, q: i32) -> Option<&[f64]> {
        if q < -1 || q > self.q_max_v {
            None
        } else {
            Some(&self.v[(q + 1) as usize])
        }
    }

    pub fn h_table(&self, q: i32) -> Option<&Array2<f64>> {
        if q < -1 || q > self.q_max_h {
            None
        } else {
            Some(&self.h[(q + 1) as usize])
        }
    }

    fn apply_v(&self, f: &SpectralField, row: &[f64]) -> SpectralField {
        f.map_indexed(|(_, _, l), c| c * row[l])
    }

    fn apply_h(&self, f: &SpectralField, t: &Array2<f64>) -> SpectralField {
        f.map_indexed(|(i, j, _), c| c * t[(i, j)])
    }

    /// Vertical block `Δ_q^v`. Blocks outside `[-1, q_max]` are zero.
    pub fn delta_v(&self, q: i32, f: &SpectralField) -> SpectralField {
        match self.v_row(q) {
            Some(row) => self.apply_v(f, row),
            None => SpectralField::zeros(*f.grid()),
        }
    }

    /// Horizontal block `Δ_j^h`.
    pub fn delta_h(&self, j: i32, f: &SpectralField) -> SpectralField {
        match self.h_table(j) {
            Some(t) => self.apply_h(f, t),
            None => SpectralField::zeros(*f.grid()),
        }
    }

    /// Vertical low-pass `S_q^v = Σ_{m ≤ q-1} Δ_m^v`.
    pub fn s_v(&self, q: i32, f: &SpectralField) -> SpectralField {
        let row = self.s_v_row(q);
        self.apply_v(f, &row)
    }

    fn s_v_row(&self, q: i32) -> Vec<f64> {
        let mut row = vec![0.0; self.grid.nv];
        for m in -1..=(q - 1).min(self.q_max_v) {
            for (r, b) in row.iter_mut().zip(&self.v[(m + 1) as usize]) {
                *r += b;
            }
        }
        row
    }

    /// Horizontal low-pass `S_j^h = Σ_{m ≤ j-1} Δ_m^h`.
    pub fn s_h(&self, j: i32, f: &SpectralField) -> SpectralField {
        let mut t = Array2::zeros((self.grid.nh, self.grid.nh));
        for m in -1..=(j - 1).min(self.q_max_h) {
            t += &self.h[(m + 1) as usize];
        }
        self.apply_h(f, &t)
    }

    /// Homogeneous vertical block `Δ̇_q^v`, defined for every integer `q`.
    pub fn delta_v_hom(&self, q: i32, f: &SpectralField) -> SpectralField {
        let g = self.grid;
        let p = self.params;
        f.map_indexed(|(_, _, l), c| c * p.block_hom(q, g.xi_v(l).abs()))
    }

    /// Homogeneous vertical low-pass `Ṡ_q^v = Σ_{m ≤ q-1} Δ̇_m^v`, which is zero on the mean.
    pub fn s_v_hom(&self, q: i32, f: &SpectralField) -> SpectralField {
        let g = self.grid;
        let p = self.params;
        f.map_indexed(|(_, _, l), c| {
            let r = g.xi_v(l).abs();
            if r == 0.0 {
                c * 0.0
            } else {
                c * p.psi(r * (-q as f64).exp2())
            }
        })
    }

    /// Homogeneous horizontal block `Δ̇_j^h`.
    pub fn delta_h_hom(&self, j: i32, f: &SpectralField) -> SpectralField {
        let g = self.grid;
        let p = self.params;
        f.map_indexed(|(i, k, _), c| c * p.block_hom(j, g.xi_h(i).hypot(g.xi_h(k))))
    }

    /// `Σ_q 2^{2qs} Δ_q^v(ξ₃)²` per vertical FFT index.
    pub fn vertical_weights(&self, s: f64) -> Vec<f64> {
        let mut w = vec![0.0; self.grid.nv];
        for q in self.v_blocks() {
            let f = (2.0 * q as f64 * s).exp2();
            for (wl, b) in w.iter_mut().zip(&self.v[(q + 1) as usize]) {
                *wl += f * b * b;
            }
        }
        w
    }

    /// `Σ_j 2^{2jt} Δ_j^h(ξ_h)²` per horizontal index pair.
    pub fn horizontal_weights(&self, t: f64) -> Array2<f64> {
        let mut w = Array2::zeros((self.grid.nh, self.grid.nh));
        for j in self.h_blocks() {
            let f = (2.0 * j as f64 * t).exp2();
            let tab = &self.h[(j + 1) as usize];
            w.zip_mut_with(tab, |a, b| *a += f * b * b);
        }
        w
    }

    /// `‖Δ_q^v f‖_{L²}` for every vertical block, computed from coefficients.
    pub fn v_block_norms(&self, f: &SpectralField) -> Vec<f64> {
        let mut acc = vec![0.0; self.v.len()];
        for ((_, _, l), c) in f.coeffs().indexed_iter() {
            let n = c.norm_sqr();
            if n == 0.0 {
                continue;
            }
            for (a, row) in acc.iter_mut().zip(&self.v) {
                *a += n * row[l] * row[l];
            }
        }
        let vol = self.grid.box_volume();
        acc.into_iter().map(|a| (vol * a).sqrt()).collect()
    }

    /// `‖Δ_j^h f‖_{L²}` for every horizontal block.
    pub fn h_block_norms(&self, f: &SpectralField) -> Vec<f64> {
        let mut acc = vec![0.0; self.h.len()];
        for ((i, j, _), c) in f.coeffs().indexed_iter() {
            let n = c.norm_sqr();
            if n == 0.0 {
                continue;
            }
            for (a, tab) in acc.iter_mut().zip(&self.h) {
                let m = tab[(i, j)];
                *a += n * m * m;
            }
        }
        let vol = self.grid.box_volume();
        acc.into_iter().map(|a| (vol * a).sqrt()).collect()
    }

    /// Vertical paraproduct decomposition, each term built from exact products.
    pub fn bony_v(&self, a: &SpectralField, b: &SpectralField) -> Bony {
        let g = self.grid;
        let blocks_a: Vec<SpectralField> = self.v_blocks().map(|q| self.delta_v(q, a)).collect();
        let blocks_b: Vec<SpectralField> = self.v_blocks().map(|q| self.delta_v(q, b)).collect();
        let q_max = self.q_max_v;
        fn block(v: &[SpectralField], q: i32, q_max: i32) -> Option<&SpectralField> {
            if q < -1 || q > q_max {
                None
            } else {
                Some(&v[(q + 1) as usize])
            }
        }
        let mut t_ab = SpectralField::zeros(g);
        let mut t_ba = SpectralField::zeros(g);
        let mut rest = SpectralField::zeros(g);
        for q in self.v_blocks() {
            let db = &blocks_b[(q + 1) as usize];
            let da = &blocks_a[(q + 1) as usize];
            if q >= 1 {
                t_ab += &self.s_v(q - 1, a).exact_product(db);
                t_ba += &self.s_v(q - 1, b).exact_product(da);
            }
            for i in -1..=1 {
                if let Some(ai) = block(&blocks_a, q + i, q_max) {
                    rest += &ai.exact_product(db);
                }
            }
        }
        Bony { t_ab, t_ba, rest }
    }

    /// Dyadic coefficients normalized so that `Σ c_q² ≤ 1`.
    ///
    /// `Block` mode: `c_q = 2^{qs}‖Δ_q f‖ / ‖f‖_{0,s}`, which sums to one.
    /// `Lowpass` mode (requires `s < 0`): `c_q = 2^{qs}‖S_q f‖ / (K_s‖f‖_{0,s})`
    /// with `K_s = 2^s / (1 - 2^s)` the ℓ¹ mass of the kernel `2^{ds}`, `d ≥ 1`.
    pub fn block_coeffs(&self, f: &SpectralField, s: f64, mode: CoeffMode) -> Result<BlockCoeffs> {
        if mode == CoeffMode::Lowpass && s >= 0.0 {
            return Err(Error::Constraint(format!(
                "low-pass coefficients need s < 0, got s = {s}"
            )));
        }
        let norms = self.v_block_norms(f);
        let total = self
            .v_blocks()
            .zip(&norms)
            .map(|(q, n)| (2.0 * q as f64 * s).exp2() * n * n)
            .sum::<f64>()
            .sqrt();
        let mut values = BTreeMap::new();
        match mode {
            CoeffMode::Block => {
                for (q, n) in self.v_blocks().zip(&norms) {
                    let c = if total > 0.0 {
                        (q as f64 * s).exp2() * n / total
                    } else {
                        0.0
                    };
                    values.insert(q, c);
                }
            }
            CoeffMode::Lowpass => {
                let k = s.exp2() / (1.0 - s.exp2());
                for q in 0..=self.q_max_v + 1 {
                    let c = if total > 0.0 {
                        let lp = self.s_v(q, f).l2_norm();
                        (q as f64 * s).exp2() * lp / (k * total)
                    } else {
                        0.0
                    };
                    values.insert(q, c);
                }
            }
        }
        Ok(BlockCoeffs { values, s, total })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Direction;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(g: AnisoGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phys = ndarray::Array3::from_shape_fn(g.shape(), |_| rng.random_range(-1.0..1.0));
        SpectralField::forward(&phys, g).unwrap()
    }

    #[test]
    fn profile_supports() {
        let p = FilterBankParams::default();
        for k in 0..4000 {
            let x = k as f64 * 1e-3;
            let (s, f) = (p.psi(x), p.phi(x));
            assert!((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&f));
            if x >= 4.0 / 3.0 {
                assert_eq!(s, 0.0);
            }
            if x <= 0.75 || x >= 8.0 / 3.0 {
                assert_eq!(f, 0.0, "phi({x})");
            }
        }
        assert_eq!(p.psi(0.0), 1.0);
        assert_eq!(p.psi(-0.5), p.psi(0.5));
    }

    #[test]
    fn q_max_scan() {
        let b = DyadicFilterBank::new(AnisoGrid::unit(16, 64).unwrap());
        assert_eq!(b.q_max_v(), 5);
        assert!(b.delta_v(6, &random_field(*b.grid(), 1)).is_zero());
        let b = DyadicFilterBank::new(AnisoGrid::new(8, 32, 1.0, 0.5).unwrap());
        // |ξ₃| reaches 32 when Lv = 1/2.
        assert_eq!(b.q_max_v(), 5);
    }

    #[test]
    fn partition_residuals() {
        let g = AnisoGrid::new(32, 32, 1.0, 0.6).unwrap();
        let b = DyadicFilterBank::new(g);
        for l in 0..g.nv {
            let s: f64 = b.v_blocks().map(|q| b.v_row(q).unwrap()[l]).sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
        for i in 0..g.nh {
            for j in 0..g.nh {
                let s: f64 = b.h_blocks().map(|q| b.h_table(q).unwrap()[(i, j)]).sum();
                assert!((s - 1.0).abs() <= 1e-12);
            }
        }
        let p = b.params();
        for l in 1..g.nv {
            let r = g.xi_v(l).abs();
            let s: f64 = (-60..=60).map(|q| p.block_hom(q, r)).sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_lives_in_low_block() {
        let g = AnisoGrid::unit(16, 32).unwrap();
        let b = DyadicFilterBank::new(g);
        let c = SpectralField::constant(g, 2.0);
        for q in b.v_blocks() {
            assert_eq!(b.delta_v(q, &c).is_zero(), q != -1);
            assert_eq!(b.delta_h(q.min(b.q_max_h()), &c).is_zero(), q != -1);
        }
    }

    #[test]
    fn single_mode_block_weight() {
        let g = AnisoGrid::new(8, 64, 1.0, 1.3).unwrap();
        let b = DyadicFilterBank::new(g);
        let p = FilterBankParams::default();
        for k3 in 1..32i64 {
            let mut f = SpectralField::zeros(g);
            f.set_coeff([0, 0, k3], Complex64::new(1.0, 0.0));
            f.set_coeff([0, 0, -k3], Complex64::new(1.0, 0.0));
            let xi = k3 as f64 / g.lv;
            for q in b.v_blocks() {
                let expect = if q == -1 {
                    p.psi(xi)
                } else {
                    p.phi(xi / (q as f64).exp2())
                };
                let got = b.delta_v(q, &f).coeff([0, 0, k3]).re;
                assert_eq!(got, expect);
            }
        }
        let mut f = SpectralField::zeros(g);
        f.set_coeff([3, 1, 0], Complex64::new(1.0, 0.0));
        f.set_coeff([-3, -1, 0], Complex64::new(1.0, 0.0));
        let r = (10.0f64).sqrt();
        for j in b.h_blocks() {
            let expect = if j == -1 {
                p.psi(r)
            } else {
                p.phi(r / (j as f64).exp2())
            };
            assert!((b.delta_h(j, &f).coeff([3, 1, 0]).re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn almost_orthogonality_band() {
        let g = AnisoGrid::unit(16, 64).unwrap();
        let b = DyadicFilterBank::new(g);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for seed in 0..20 {
            let f = random_field(g, seed);
            let s: f64 = b.v_block_norms(&f).iter().map(|n| n * n).sum();
            let r = s / f.l2_norm_sq();
            lo = lo.min(r);
            hi = hi.max(r);
        }
        assert!(lo >= 0.5 && hi <= 1.0 + 1e-12, "[{lo}, {hi}]");
    }

    #[test]
    fn low_pass_edges_and_monotonicity() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let b = DyadicFilterBank::new(g);
        let f = random_field(g, 5);
        assert!(b.s_v(-1, &f).is_zero());
        assert!((&b.s_v(40, &f) - &f).l2_norm() <= 1e-14 * f.l2_norm());
        let mut prev = 0.0;
        for q in -1..=b.q_max_v() + 1 {
            let n = b.s_v(q, &f).l2_norm();
            assert!(n + 1e-14 >= prev);
            prev = n;
            let mut tail = b.s_v(q, &f);
            for m in q.max(-1)..=b.q_max_v() {
                tail += &b.delta_v(m, &f);
            }
            assert!((&tail - &f).l2_norm() <= 1e-10 * f.l2_norm());
        }
    }

    #[test]
    fn homogeneous_low_pass_kills_mean() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let b = DyadicFilterBank::new(g);
        let f = &random_field(g, 3) + &SpectralField::constant(g, 5.0);
        assert_eq!(b.s_v_hom(10, &f).mean(), 0.0);
        let mut acc = SpectralField::zeros(g);
        for q in -8..=6 {
            acc += &b.delta_v_hom(q, &f);
        }
        let mean_free = &f - &SpectralField::constant(g, f.mean());
        let zero_v = mean_free.map_indexed(|(_, _, l), c| if l == 0 { c * 0.0 } else { c });
        let acc_v = acc.map_indexed(|(_, _, l), c| if l == 0 { c * 0.0 } else { c });
        assert!((&acc_v - &zero_v).l2_norm() <= 1e-12 * f.l2_norm());
    }

    #[test]
    fn bony_decomposition() {
        let g = AnisoGrid::unit(16, 16).unwrap();
        let b = DyadicFilterBank::new(g);
        let x = random_field(g, 11);
        let y = random_field(g, 12);
        let parts = b.bony_v(&x, &y);
        let prod = x.exact_product(&y);
        let sum = &(&parts.t_ab + &parts.t_ba) + &parts.rest;
        assert!((&sum - &prod).l2_norm() <= 1e-9 * prod.l2_norm());

        // Support audit: Δ_m(S_{m'-1}x Δ_{m'}y) vanishes for |m - m'| ≥ N0 up to transform round-off.
        let g2 = AnisoGrid::unit(8, 128).unwrap();
        let b2 = DyadicFilterBank::new(g2);
        let x2 = random_field(g2, 13);
        let y2 = random_field(g2, 14);
        for mp in 1..=b2.q_max_v() {
            let term = b2.s_v(mp - 1, &x2).exact_product(&b2.delta_v(mp, &y2));
            for m in b2.v_blocks() {
                if (m - mp).abs() >= b2.n0() {
                    let leak = b2.delta_v(m, &term).l2_norm();
                    assert!(leak <= 1e-14 * term.l2_norm(), "m={m} m'={mp}: {leak:e}");
                }
            }
            // The spectrum itself sits in |ξ₃| ≤ (10/3)2^{m'} up to round-off.
            let outside = term
                .map_indexed(|(_, _, l), c| {
                    if g2.xi_v(l).abs() > 10.0 / 3.0 * (mp as f64).exp2() {
                        c
                    } else {
                        c * 0.0
                    }
                })
                .l2_norm();
            assert!(outside <= 1e-13 * (1.0 + term.l2_norm()));
        }
    }

    #[test]
    fn bony_with_constant_factor() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let b = DyadicFilterBank::new(g);
        let a = SpectralField::constant(g, 3.0);
        let y = random_field(g, 2);
        let parts = b.bony_v(&a, &y);
        // Only Δ_{-1}a is nonzero: T_a y = 3(y − Δ_{-1}y − Δ_0 y), R = 3(Δ_{-1} + Δ_0)y, T_y a = 0.
        let low = &b.delta_v(-1, &y) + &b.delta_v(0, &y);
        let expect_t = (&y - &low).scaled(3.0).without_nyquist();
        assert!((&parts.t_ab - &expect_t).l2_norm() < 1e-12);
        assert!(parts.t_ba.l2_norm() < 1e-12);
        assert!((&parts.rest - &low.scaled(3.0).without_nyquist()).l2_norm() < 1e-12);
    }

    #[test]
    fn block_coeff_cases() {
        let g = AnisoGrid::unit(8, 64).unwrap();
        let b = DyadicFilterBank::new(g);
        let z = b
            .block_coeffs(&SpectralField::zeros(g), 0.5, CoeffMode::Block)
            .unwrap();
        assert!(z.values.values().all(|c| *c == 0.0));
        // φ(2^{-4}ξ) = 1 exactly for |ξ| ∈ [64/3, 24], so this mode sits in block 4 alone.
        let f = SpectralField::from_fn(g, |_, _, z| (22.0 * z).cos());
        let c = b.block_coeffs(&f, 0.7, CoeffMode::Block).unwrap();
        let nonzero: Vec<i32> = c
            .values
            .iter()
            .filter(|(_, v)| **v > 1e-14)
            .map(|(q, _)| *q)
            .collect();
        assert_eq!(nonzero, vec![4]);
        assert!((c.values[&4] - 1.0).abs() < 1e-14);
        let r = random_field(g, 8);
        for s in [-0.8, 0.0, 0.75] {
            let c = b.block_coeffs(&r, s, CoeffMode::Block).unwrap();
            assert!((c.sum_sq() - 1.0).abs() <= 1e-10);
        }
        assert!(b.block_coeffs(&r, 0.2, CoeffMode::Lowpass).is_err());
        let lp = b.block_coeffs(&r, -0.5, CoeffMode::Lowpass).unwrap();
        assert!(lp.sum_sq() <= 1.0 + 1e-10);
    }

    #[test]
    fn params_round_trip() {
        let p = FilterBankParams::default();
        let s = serde_json::to_string(&p).unwrap();
        let back: FilterBankParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, back);
        let bad = FilterBankParams {
            outer_knot: 2.0,
            ..p
        };
        assert!(DyadicFilterBank::with_params(AnisoGrid::unit(8, 8).unwrap(), bad).is_err());
    }

    #[test]
    fn derivative_commutes_with_blocks() {
        let g = AnisoGrid::unit(8, 32).unwrap();
        let b = DyadicFilterBank::new(g);
        let f = random_field(g, 21);
        let a = b.delta_v(2, &f.derivative(Direction::X3));
        let c = b.delta_v(2, &f).derivative(Direction::X3);
        assert!((&a - &c).l2_norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn reconstruction_and_orthogonality(seed in any::<u64>(), lv in 0.4f64..2.5) {
            let g = AnisoGrid::new(8, 32, 1.0, lv).unwrap();
            let b = DyadicFilterBank::new(g);
            let f = random_field(g, seed);
            let mut acc = SpectralField::zeros(g);
            for q in b.v_blocks() {
                acc += &b.delta_v(q, &f);
            }
            prop_assert!((&acc - &f).l2_norm() <= 1e-10 * f.l2_norm());
            let mut acc = SpectralField::zeros(g);
            for j in b.h_blocks() {
                acc += &b.delta_h(j, &f);
            }
            prop_assert!((&acc - &f).l2_norm() <= 1e-10 * f.l2_norm());
            for m in b.v_blocks() {
                for mp in b.v_blocks() {
                    if (m - mp).abs() >= 2 {
                        prop_assert!(b.delta_v(m, &b.delta_v(mp, &f)).is_zero());
                    }
                }
            }
        }
    }
}
