//! Anisotropic periodic grid and the spectral field representation.
//!
//! Fields live on the torus `[0, 2πLh)² × [0, 2πLv)` sampled at `Nh × Nh × Nv`
//! points. Coefficients follow `c_k = N⁻¹ Σ_x f(x) e^{-ik·x}`, so a constant
//! field `c` has `c_0 = c` and `‖f‖²_{L²} = |box| Σ |c_k|²`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use ndarray::{Array3, Axis, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative Hermitian defect accepted by [`SpectralField::inverse`].
pub const HERMITIAN_TOL: f64 = 1e-10;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

fn fft_axis(data: &mut Array3<Complex64>, axis: usize, inverse: bool) {
    let n = data.shape()[axis];
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for mut lane in data.lanes_mut(Axis(axis)) {
        if let Some(s) = lane.as_slice_mut() {
            fft.process_with_scratch(s, &mut scratch);
        } else {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }
}

/// Unnormalized 3-D transform in place (`e^{-ikx}` forward, `e^{+ikx}` inverse).
pub(crate) fn fft3(data: &mut Array3<Complex64>, inverse: bool) {
    for axis in 0..3 {
        fft_axis(data, axis, inverse);
    }
}

/// Signed integer wavenumber stored at FFT index `i` of an axis with `n` points.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// FFT index of the signed wavenumber `k`.
#[inline]
pub fn index_of(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

/// Coordinate direction on the anisotropic torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    X1,
    X2,
    X3,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::X1, Direction::X2, Direction::X3];

    pub fn index(self) -> usize {
        match self {
            Direction::X1 => 0,
            Direction::X2 => 1,
            Direction::X3 => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisoGrid {
    pub nh: usize,
    pub nv: usize,
    pub lh: f64,
    pub lv: f64,
}

impl AnisoGrid {
    pub fn new(nh: usize, nv: usize, lh: f64, lv: f64) -> Result<Self> {
        for (name, n) in [("Nh", nh), ("Nv", nv)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n} must be a power of two and at least 8"
                )));
            }
        }
        for (name, l) in [("Lh", lh), ("Lv", lv)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        Ok(Self { nh, nv, lh, lv })
    }

    /// Unit-scale grid with `nh` horizontal and `nv` vertical points.
    pub fn unit(nh: usize, nv: usize) -> Result<Self> {
        Self::new(nh, nv, 1.0, 1.0)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nh, self.nh, self.nv)
    }

    pub fn len(&self) -> usize {
        self.nh * self.nh * self.nv
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of the periodic box, `(2π)³ Lh² Lv`.
    pub fn box_volume(&self) -> f64 {
        (2.0 * PI).powi(3) * self.lh * self.lh * self.lv
    }

    pub fn dx_h(&self) -> f64 {
        2.0 * PI * self.lh / self.nh as f64
    }

    pub fn dx_v(&self) -> f64 {
        2.0 * PI * self.lv / self.nv as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx_h() * self.dx_h() * self.dx_v()
    }

    /// Physical horizontal wavenumber at FFT index `i`.
    #[inline]
    pub fn xi_h(&self, i: usize) -> f64 {
        wavenumber(i, self.nh) as f64 / self.lh
    }

    /// Physical vertical wavenumber at FFT index `i`.
    #[inline]
    pub fn xi_v(&self, i: usize) -> f64 {
        wavenumber(i, self.nv) as f64 / self.lv
    }

    /// Physical wavenumber vector at a multi-index.
    #[inline]
    pub fn xi(&self, (i, j, l): (usize, usize, usize)) -> [f64; 3] {
        [self.xi_h(i), self.xi_h(j), self.xi_v(l)]
    }

    /// Signed integer wavenumbers at a multi-index.
    #[inline]
    pub fn k(&self, (i, j, l): (usize, usize, usize)) -> [i64; 3] {
        [
            wavenumber(i, self.nh),
            wavenumber(j, self.nh),
            wavenumber(l, self.nv),
        ]
    }

    /// Whether the multi-index touches a Nyquist plane.
    #[inline]
    pub fn is_nyquist(&self, (i, j, l): (usize, usize, usize)) -> bool {
        i == self.nh / 2 || j == self.nh / 2 || l == self.nv / 2
    }

    /// Index of `-k`.
    #[inline]
    pub fn mirror(&self, (i, j, l): (usize, usize, usize)) -> (usize, usize, usize) {
        (
            (self.nh - i) % self.nh,
            (self.nh - j) % self.nh,
            (self.nv - l) % self.nv,
        )
    }

    /// Largest physical wavenumber modulus on the grid, `|ξ|` at the Nyquist corner.
    pub fn nyquist_radius(&self) -> f64 {
        let h = (self.nh / 2) as f64 / self.lh;
        let v = (self.nv / 2) as f64 / self.lv;
        (2.0 * h * h + v * v).sqrt()
    }

    pub fn coords(&self, (i, j, l): (usize, usize, usize)) -> [f64; 3] {
        [
            i as f64 * self.dx_h(),
            j as f64 * self.dx_h(),
            l as f64 * self.dx_v(),
        ]
    }

    /// The same box sampled at twice the resolution along every axis.
    pub fn refined(&self) -> Self {
        Self {
            nh: 2 * self.nh,
            nv: 2 * self.nv,
            lh: self.lh,
            lv: self.lv,
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Fourier coefficients of a real scalar field on an [`AnisoGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: AnisoGrid,
    coeffs: Array3<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: AnisoGrid) -> Self {
        Self {
            grid,
            coeffs: Array3::zeros(grid.shape()),
        }
    }

    pub fn constant(grid: AnisoGrid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[(0, 0, 0)] = Complex64::new(c, 0.0);
        f
    }

    pub fn from_coeffs(grid: AnisoGrid, coeffs: Array3<Complex64>) -> Result<Self> {
        let got = coeffs.dim();
        if got != grid.shape() {
            return Err(Error::DimensionMismatch {
                expected: grid.shape(),
                got,
            });
        }
        Ok(Self { grid, coeffs })
    }

    /// Transform physical samples to coefficients.
    pub fn forward(field: &Array3<f64>, grid: AnisoGrid) -> Result<Self> {
        let got = field.dim();
        if got != grid.shape() {
            return Err(Error::DimensionMismatch {
                expected: grid.shape(),
                got,
            });
        }
        let mut c = field.mapv(|v| Complex64::new(v, 0.0));
        fft3(&mut c, false);
        let scale = 1.0 / grid.len() as f64;
        c.mapv_inplace(|v| v * scale);
        Ok(Self { grid, coeffs: c })
    }

    /// Sample `f(x1, x2, x3)` at the grid points and transform.
    pub fn from_fn(grid: AnisoGrid, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let phys = Array3::from_shape_fn(grid.shape(), |idx| {
            let [x, y, z] = grid.coords(idx);
            f(x, y, z)
        });
        Self::forward(&phys, grid).expect("shape matches by construction")
    }

    /// Physical samples. Fails when the coefficients are not Hermitian.
    pub fn inverse(&self) -> Result<Array3<f64>> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian { defect });
        }
        Ok(self.to_physical())
    }

    pub(crate) fn to_physical(&self) -> Array3<f64> {
        let mut c = self.coeffs.clone();
        fft3(&mut c, true);
        c.mapv(|v| v.re)
    }

    /// `max_k |c(k) - conj c(-k)|` relative to `max_k |c(k)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let g = self.grid;
        let mut worst = 0.0f64;
        for (idx, c) in self.coeffs.indexed_iter() {
            let m = self.coeffs[g.mirror(idx)];
            worst = worst.max((c - m.conj()).norm());
        }
        worst / scale
    }

    pub fn grid(&self) -> &AnisoGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array3<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        let g = self.grid;
        self.coeffs[(
            index_of(k[0], g.nh),
            index_of(k[1], g.nh),
            index_of(k[2], g.nv),
        )]
    }

    pub fn set_coeff(&mut self, k: [i64; 3], v: Complex64) {
        let g = self.grid;
        self.coeffs[(
            index_of(k[0], g.nh),
            index_of(k[1], g.nh),
            index_of(k[2], g.nv),
        )] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[(0, 0, 0)].re
    }

    /// Multiply every coefficient by a real multiplier of the physical wavenumber.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 3]) -> f64) -> Self {
        let g = self.grid;
        let mut out = self.coeffs.clone();
        Zip::indexed(&mut out).for_each(|idx, c| *c *= m(g.xi(idx)));
        Self {
            grid: g,
            coeffs: out,
        }
    }

    /// Same as [`apply_multiplier`](Self::apply_multiplier) but the multiplier sees the multi-index.
    pub fn map_indexed(&self, f: impl Fn((usize, usize, usize), Complex64) -> Complex64) -> Self {
        let mut out = self.coeffs.clone();
        Zip::indexed(&mut out).for_each(|idx, c| *c = f(idx, *c));
        Self {
            grid: self.grid,
            coeffs: out,
        }
    }

    /// Partial derivative along `dir`. Nyquist modes are sent to zero.
    pub fn derivative(&self, dir: Direction) -> Self {
        let g = self.grid;
        let a = dir.index();
        let nyq = if a == 2 { g.nv / 2 } else { g.nh / 2 };
        self.map_indexed(|idx, c| {
            let i = [idx.0, idx.1, idx.2][a];
            if i == nyq {
                return Complex64::new(0.0, 0.0);
            }
            let xi = g.xi(idx)[a];
            c * Complex64::new(0.0, xi)
        })
    }

    /// Horizontal heat semigroup `e^{tΔ_h}`.
    pub fn horizontal_heat(&self, t: f64) -> Result<Self> {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
        Ok(self.apply_multiplier(|[a, b, _]| (-t * (a * a + b * b)).exp()))
    }

    /// Squared physical L² norm by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.box_volume() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Real L² inner product.
    pub fn inner(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.grid, other.grid);
        let s: f64 = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum();
        self.grid.box_volume() * s
    }

    /// Zero every mode on a Nyquist plane.
    pub fn without_nyquist(&self) -> Self {
        let g = self.grid;
        self.map_indexed(|idx, c| {
            if g.is_nyquist(idx) {
                Complex64::new(0.0, 0.0)
            } else {
                c
            }
        })
    }

    /// Physical samples on the twice-refined grid (trigonometric interpolation).
    pub fn padded_physical(&self) -> Array3<f64> {
        let g = self.grid;
        let fine = g.refined();
        let mut big: Array3<Complex64> = Array3::zeros(fine.shape());
        let targets = |i: usize, n: usize| -> Vec<(usize, f64)> {
            let k = wavenumber(i, n);
            let m = 2 * n;
            if i == n / 2 {
                vec![(index_of(k, m), 0.5), (index_of(-k, m), 0.5)]
            } else {
                vec![(index_of(k, m), 1.0)]
            }
        };
        for ((i, j, l), c) in self.coeffs.indexed_iter() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            for &(a, wa) in &targets(i, g.nh) {
                for &(b, wb) in &targets(j, g.nh) {
                    for &(d, wd) in &targets(l, g.nv) {
                        big[(a, b, d)] += c * (wa * wb * wd);
                    }
                }
            }
        }
        fft3(&mut big, true);
        big.mapv(|v| v.re)
    }

    /// Coefficients of physical samples on the refined grid, truncated back to
    /// this grid with Nyquist modes dropped.
    pub fn from_padded_physical(grid: AnisoGrid, fine_values: &Array3<f64>) -> Self {
        let fine = grid.refined();
        debug_assert_eq!(fine_values.dim(), fine.shape());
        let mut c = fine_values.mapv(|v| Complex64::new(v, 0.0));
        fft3(&mut c, false);
        let scale = 1.0 / fine.len() as f64;
        let out = Array3::from_shape_fn(grid.shape(), |idx| {
            if grid.is_nyquist(idx) {
                return Complex64::new(0.0, 0.0);
            }
            let [k1, k2, k3] = grid.k(idx);
            c[(
                index_of(k1, fine.nh),
                index_of(k2, fine.nh),
                index_of(k3, fine.nv),
            )] * scale
        });
        Self { grid, coeffs: out }
    }

    /// Alias-free product of two fields, truncated to this grid without Nyquist modes.
    pub fn exact_product(&self, other: &Self) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        let mut a = self.padded_physical();
        let b = other.padded_physical();
        a.zip_mut_with(&b, |x, y| *x *= *y);
        Self::from_padded_physical(self.grid, &a)
    }

    /// `Σ_k |c_k|² w(ξ)` scaled by the box volume.
    pub fn weighted_energy(&self, w: impl Fn([f64; 3]) -> f64) -> f64 {
        let g = self.grid;
        let mut s = 0.0;
        for (idx, c) in self.coeffs.indexed_iter() {
            let n = c.norm_sqr();
            if n != 0.0 {
                s += n * w(g.xi(idx));
            }
        }
        g.box_volume() * s
    }

    /// Iterated mixed Lebesgue norm evaluated on the physical samples.
    pub fn mixed_norm(&self, spec: MixedNormSpec) -> Result<f64> {
        spec.validate()?;
        Ok(mixed_norm_physical(&self.to_physical(), &self.grid, spec))
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.mapv(|c| c * a),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.grid, x.grid);
        self.coeffs.zip_mut_with(&x.coeffs, |y, v| *y += v * a);
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)
    }
}

impl Add<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, rhs.grid);
        SpectralField {
            grid: self.grid,
            coeffs: &self.coeffs + &rhs.coeffs,
        }
    }
}

impl Sub<&SpectralField> for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, rhs.grid);
        SpectralField {
            grid: self.grid,
            coeffs: &self.coeffs - &rhs.coeffs,
        }
    }
}

impl Add for SpectralField {
    type Output = SpectralField;
    fn add(mut self, rhs: SpectralField) -> SpectralField {
        self += &rhs;
        self
    }
}

impl Sub for SpectralField {
    type Output = SpectralField;
    fn sub(mut self, rhs: SpectralField) -> SpectralField {
        self -= &rhs;
        self
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        debug_assert_eq!(self.grid, rhs.grid);
        self.coeffs += &rhs.coeffs;
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        debug_assert_eq!(self.grid, rhs.grid);
        self.coeffs -= &rhs.coeffs;
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, a: f64) -> SpectralField {
        self.scaled(a)
    }
}

/// Three components on a shared grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: [SpectralField; 3],
    divergence_free: bool,
}

impl VectorField {
    pub fn new(comps: [SpectralField; 3]) -> Result<Self> {
        comps[0].check_grid(&comps[1])?;
        comps[0].check_grid(&comps[2])?;
        Ok(Self {
            comps,
            divergence_free: false,
        })
    }

    pub fn zeros(grid: AnisoGrid) -> Self {
        Self {
            comps: [
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
            ],
            divergence_free: true,
        }
    }

    pub fn grid(&self) -> &AnisoGrid {
        self.comps[0].grid()
    }

    pub fn comps(&self) -> &[SpectralField; 3] {
        &self.comps
    }

    pub fn comp(&self, dir: Direction) -> &SpectralField {
        &self.comps[dir.index()]
    }

    pub fn into_comps(self) -> [SpectralField; 3] {
        self.comps
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Set the flag after verifying the residual against `tol`.
    pub fn mark_divergence_free(mut self, tol: f64) -> Result<Self> {
        let r = self.divergence_residual();
        if r > tol {
            return Err(Error::NotDivergenceFree(r));
        }
        self.divergence_free = true;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
            divergence_free: false,
        }
    }

    /// Componentwise map of a multiplier that commutes with the divergence.
    pub(crate) fn map_keep_flag(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        let mut v = self.map(f);
        v.divergence_free = self.divergence_free;
        v
    }

    /// Orthogonal projection onto divergence-free fields. The mean passes through.
    pub fn leray_project(&self) -> Self {
        let g = *self.grid();
        let shape = g.shape();
        let mut out = [
            Array3::zeros(shape),
            Array3::zeros(shape),
            Array3::zeros(shape),
        ];
        for idx in ndarray::indices(shape) {
            let xi = g.xi(idx);
            let u = [
                self.comps[0].coeffs[idx],
                self.comps[1].coeffs[idx],
                self.comps[2].coeffs[idx],
            ];
            let k2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            if k2 == 0.0 {
                for c in 0..3 {
                    out[c][idx] = u[c];
                }
                continue;
            }
            let dot = u[0] * xi[0] + u[1] * xi[1] + u[2] * xi[2];
            for c in 0..3 {
                out[c][idx] = u[c] - dot * (xi[c] / k2);
            }
        }
        let [a, b, c] = out;
        Self {
            comps: [
                SpectralField { grid: g, coeffs: a },
                SpectralField { grid: g, coeffs: b },
                SpectralField { grid: g, coeffs: c },
            ],
            divergence_free: true,
        }
    }

    pub fn divergence(&self) -> SpectralField {
        let mut d = self.comps[0].derivative(Direction::X1);
        d += &self.comps[1].derivative(Direction::X2);
        d += &self.comps[2].derivative(Direction::X3);
        d
    }

    /// `max_k |ξ·û(k)| / max_k |ξ||û(k)|`, zero for the zero field.
    pub fn divergence_residual(&self) -> f64 {
        let g = *self.grid();
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for idx in ndarray::indices(g.shape()) {
            let xi = g.xi(idx);
            let u = [
                self.comps[0].coeffs[idx],
                self.comps[1].coeffs[idx],
                self.comps[2].coeffs[idx],
            ];
            let dot = u[0] * xi[0] + u[1] * xi[1] + u[2] * xi[2];
            let kn = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
            let un = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
            num = num.max(dot.norm());
            den = den.max(kn * un);
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    }

    pub fn curl(&self) -> Self {
        use Direction::*;
        let [u1, u2, u3] = &self.comps;
        let c1 = &u3.derivative(X2) - &u2.derivative(X3);
        let c2 = &u1.derivative(X3) - &u3.derivative(X1);
        let c3 = &u2.derivative(X1) - &u1.derivative(X2);
        Self {
            comps: [c1, c2, c3],
            divergence_free: false,
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.comps.iter().map(SpectralField::l2_norm_sq).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        (0..3).map(|c| self.comps[c].inner(&other.comps[c])).sum()
    }

    /// `‖∇_h u‖²_{L²}` summed over components.
    pub fn grad_h_norm_sq(&self) -> f64 {
        self.comps
            .iter()
            .map(|f| f.weighted_energy(|[a, b, _]| a * a + b * b))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0f64, |m, c| m.max(c.max_abs()))
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map_keep_flag(|f| f.scaled(a))
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(SpectralField::is_zero)
    }
}

impl Add<&VectorField> for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        VectorField {
            comps: [
                &self.comps[0] + &rhs.comps[0],
                &self.comps[1] + &rhs.comps[1],
                &self.comps[2] + &rhs.comps[2],
            ],
            divergence_free: self.divergence_free && rhs.divergence_free,
        }
    }
}

impl Sub<&VectorField> for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        VectorField {
            comps: [
                &self.comps[0] - &rhs.comps[0],
                &self.comps[1] - &rhs.comps[1],
                &self.comps[2] - &rhs.comps[2],
            ],
            divergence_free: self.divergence_free && rhs.divergence_free,
        }
    }
}

/// Lebesgue exponent used by the mixed norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exponent {
    One,
    Two,
    Four,
    Inf,
}

impl Exponent {
    pub fn value(self) -> f64 {
        match self {
            Exponent::One => 1.0,
            Exponent::Two => 2.0,
            Exponent::Four => 4.0,
            Exponent::Inf => f64::INFINITY,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "1" => Some(Exponent::One),
            "2" => Some(Exponent::Two),
            "4" => Some(Exponent::Four),
            "inf" | "∞" | "oo" => Some(Exponent::Inf),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Exponent::One => "1",
            Exponent::Two => "2",
            Exponent::Four => "4",
            Exponent::Inf => "inf",
        }
    }

    /// Discrete `L^p` norm with uniform quadrature weight `w`.
    pub fn norm(self, values: impl Iterator<Item = f64>, w: f64) -> f64 {
        match self {
            Exponent::Inf => values.fold(0.0f64, |m, v| m.max(v.abs())),
            Exponent::One => w * values.map(f64::abs).sum::<f64>(),
            Exponent::Two => (w * values.map(|v| v * v).sum::<f64>()).sqrt(),
            Exponent::Four => (w * values.map(|v| v.powi(4)).sum::<f64>()).powf(0.25),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MixedOrder {
    /// `L^p_h(L^q_v)`: vertical norm first, horizontal norm of the result.
    HorizontalOuter,
    /// `L^q_v(L^p_h)`: horizontal norm first.
    VerticalOuter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedNormSpec {
    pub p_h: Exponent,
    pub q_v: Exponent,
    pub order: MixedOrder,
}

impl MixedNormSpec {
    pub fn new(p_h: Exponent, q_v: Exponent, order: MixedOrder) -> Result<Self> {
        let s = Self { p_h, q_v, order };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p_h == Exponent::One {
            return Err(Error::UnsupportedExponent(format!(
                "horizontal exponent {} (supported: 2, 4, inf)",
                self.p_h.label()
            )));
        }
        if !matches!(self.q_v, Exponent::Two | Exponent::Inf) {
            return Err(Error::UnsupportedExponent(format!(
                "vertical exponent {} (supported: 2, inf)",
                self.q_v.label()
            )));
        }
        Ok(())
    }
}

/// Mixed norm of physical samples.
pub fn mixed_norm_physical(phys: &Array3<f64>, grid: &AnisoGrid, spec: MixedNormSpec) -> f64 {
    let da = grid.dx_h() * grid.dx_h();
    let dz = grid.dx_v();
    match spec.order {
        MixedOrder::HorizontalOuter => {
            let inner: Vec<f64> = phys
                .lanes(Axis(2))
                .into_iter()
                .map(|col| spec.q_v.norm(col.iter().copied(), dz))
                .collect();
            spec.p_h.norm(inner.into_iter(), da)
        }
        MixedOrder::VerticalOuter => {
            let inner: Vec<f64> = phys
                .axis_iter(Axis(2))
                .map(|slab| spec.p_h.norm(slab.iter().copied(), da))
                .collect();
            spec.q_v.norm(inner.into_iter(), dz)
        }
    }
}
