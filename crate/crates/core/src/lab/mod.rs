//! Randomized checks of the functional inequalities.
//!
//! A constant-free inequality `lhs ≲ rhs` is probed through the ratio `lhs / rhs`
//! over an ensemble: it must stay finite, stable in the ensemble size and stable
//! under the dyadic rescalings the proofs exploit.

pub mod bernstein;
pub mod commutator;
pub mod embedding;
pub mod lemma5;
pub mod osgood;
pub mod product;
pub mod prop1;
mod report;

pub use report::{digest, fit_slope, RatioReport, Sample};

use ndarray::Array3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{index_of, SpectralField};

/// `f(2^{h} x_h, 2^{v} x₃)` on the same torus. Fails if content above roundoff
/// level would leave the grid.
pub fn dilate(f: &SpectralField, h: u32, v: u32) -> Result<SpectralField> {
    let g = *f.grid();
    let floor = 1e-13 * f.max_abs();
    let (mh, mv) = (1i64 << h, 1i64 << v);
    let mut out = Array3::<Complex64>::zeros(g.shape());
    for (idx, c) in f.coeffs().indexed_iter() {
        if c.norm() <= floor {
            continue;
        }
        let [k1, k2, k3] = g.k(idx);
        let (n1, n2, n3) = (k1 * mh, k2 * mh, k3 * mv);
        let hh = (g.nh / 2) as i64;
        let hv = (g.nv / 2) as i64;
        if n1.abs() >= hh || n2.abs() >= hh || n3.abs() >= hv {
            return Err(Error::Invalid(format!(
                "dilation by (2^{h}, 2^{v}) pushes mode {:?} past the grid",
                [k1, k2, k3]
            )));
        }
        out[(index_of(n1, g.nh), index_of(n2, g.nh), index_of(n3, g.nv))] = *c;
    }
    SpectralField::from_coeffs(g, out)
}

/// Keep only modes with `|k_h| < kh` (per axis) and `|k₃| < kv`.
pub fn band_limit(f: &SpectralField, kh: i64, kv: i64) -> SpectralField {
    let g = *f.grid();
    f.map_indexed(|idx, c| {
        let [k1, k2, k3] = g.k(idx);
        if k1.abs() < kh && k2.abs() < kh && k3.abs() < kv {
            c
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AnisoGrid, Exponent, MixedNormSpec, MixedOrder};

    #[test]
    fn dilation_is_compression() {
        let g = AnisoGrid::unit(16, 16).unwrap();
        let f = SpectralField::from_fn(g, |x, y, z| (x - y).cos() * (2.0 * z).sin());
        let d = dilate(&f, 1, 1).unwrap();
        let e = SpectralField::from_fn(g, |x, y, z| (2.0 * x - 2.0 * y).cos() * (4.0 * z).sin());
        assert!((&d - &e).l2_norm() < 1e-12);
        // Periodic compression keeps every Lebesgue norm.
        let s =
            MixedNormSpec::new(Exponent::Four, Exponent::Inf, MixedOrder::HorizontalOuter).unwrap();
        assert!((d.mixed_norm(s).unwrap() - f.mixed_norm(s).unwrap()).abs() < 1e-12);
        let hi = SpectralField::from_fn(g, |_, _, z| (6.0 * z).cos());
        assert!(dilate(&hi, 0, 1).is_err());
        let b = band_limit(&hi, 8, 6);
        assert!(b.max_abs() < 1e-15);
    }
}
