//! The nine trilinear block sums controlling the difference of two solutions.
//!
//! With `w = u − v` and `θ = ρ − η`, each `L_i` is a vertically weighted pairing
//! of an advection or buoyancy term against `w` or `θ`.

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use super::{digest, RatioReport, Sample};
use crate::ensemble::{random_scalar, random_vector, EnsembleSpec};
use crate::error::{Error, Result};
use crate::grid::{AnisoGrid, Direction, SpectralField, VectorField};
use crate::norms::NormEngine;

/// Two solutions and their difference.
#[derive(Clone, Debug, PartialEq)]
pub struct Sextet {
    pub u: VectorField,
    pub v: VectorField,
    pub w: VectorField,
    pub rho: SpectralField,
    pub eta: SpectralField,
    pub theta: SpectralField,
}

impl Sextet {
    pub fn from_pair(
        u: VectorField,
        rho: SpectralField,
        v: VectorField,
        eta: SpectralField,
    ) -> Self {
        let w = &u - &v;
        let theta = &rho - &eta;
        Sextet {
            u,
            v,
            w,
            rho,
            eta,
            theta,
        }
    }

    pub fn grid(&self) -> &AnisoGrid {
        self.u.grid()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prop1Values {
    /// Signed block sums `L₁ … L₉`.
    pub l: [f64; 9],
    /// Constant-free right sides.
    pub bounds: [f64; 9],
}

impl Prop1Values {
    pub fn ratio(&self, i: usize) -> f64 {
        self.l[i].abs() / self.bounds[i]
    }

    pub fn abs_sum(&self) -> f64 {
        self.l.iter().map(|x| x.abs()).sum()
    }
}

pub fn check_index(s: f64) -> Result<()> {
    if s > 0.5 && s <= 1.0 {
        Ok(())
    } else {
        Err(Error::Constraint(format!(
            "s must lie in (1/2, 1], got {s}"
        )))
    }
}

/// Padded samples of a field and its three derivatives.
struct Jet {
    val: Array3<f64>,
    d: [Array3<f64>; 3],
}

impl Jet {
    fn new(f: &SpectralField) -> Self {
        Jet {
            val: f.padded_physical(),
            d: Direction::ALL.map(|dir| f.derivative(dir).padded_physical()),
        }
    }
}

fn jets(v: &VectorField) -> [Jet; 3] {
    [0, 1, 2].map(|c| Jet::new(&v.comps()[c]))
}

/// `Σ_{j ∈ dirs} a^j ∂_j f` on the padded grid, brought back to the base grid.
fn advect(grid: AnisoGrid, a: &[Jet; 3], f: &Jet, dirs: &[usize]) -> SpectralField {
    let mut acc = Array3::<f64>::zeros(f.val.dim());
    for &j in dirs {
        ndarray::Zip::from(&mut acc)
            .and(&a[j].val)
            .and(&f.d[j])
            .for_each(|o, x, y| *o += x * y);
    }
    SpectralField::from_padded_physical(grid, &acc)
}

const HORIZONTAL: [usize; 2] = [0, 1];
const VERTICAL: [usize; 1] = [2];

/// All nine signed block sums and their bounds.
pub fn prop1_terms(engine: &NormEngine, x: &Sextet, s: f64) -> Result<Prop1Values> {
    check_index(s)?;
    for (name, f) in [("u", &x.u), ("v", &x.v), ("w", &x.w)] {
        if !f.is_divergence_free() {
            return Err(Error::Invalid(format!(
                "{name} is not flagged divergence-free"
            )));
        }
    }
    let g = *x.grid();
    let (ju, jv, jw) = (jets(&x.u), jets(&x.v), jets(&x.w));
    let (jt, je) = (Jet::new(&x.theta), Jet::new(&x.eta));
    let w = x.w.comps();
    let sw = s - 1.0;

    let vec_pair = |field: &[Jet; 3], by: &[Jet; 3], dirs: &[usize]| -> f64 {
        (0..3)
            .map(|c| engine.h0_pairing(&advect(g, by, &field[c], dirs), &w[c], sw))
            .sum()
    };
    let l1 = vec_pair(&jw, &ju, &HORIZONTAL);
    let l2 = vec_pair(&jw, &ju, &VERTICAL);
    let l3 = vec_pair(&jv, &jw, &HORIZONTAL);
    let l4 = vec_pair(&jv, &jw, &VERTICAL);
    let l5 = engine.h0_pairing(&advect(g, &ju, &jt, &HORIZONTAL), &x.theta, -s);
    let l6 = engine.h0_pairing(&advect(g, &ju, &jt, &VERTICAL), &x.theta, -s);
    let l7 = engine.h0_pairing(&advect(g, &jw, &je, &HORIZONTAL), &x.theta, -s);
    let l8 = engine.h0_pairing(&advect(g, &jw, &je, &VERTICAL), &x.theta, -s);
    let l9 = engine.h0_pairing(&x.theta, &w[2], sw);

    let e = engine;
    let u_half = e.hts_vec(&x.u, 0.5, s);
    let grad_u = e.grad_h_h0_vec_sq(&x.u, s).sqrt();
    let grad_v = e.grad_h_h0_vec_sq(&x.v, s).sqrt();
    let v_half = e.hts_vec(&x.v, 0.5, s);
    let w0 = e.h0_vec(&x.w, sw);
    let grad_w = e.grad_h_h0_vec_sq(&x.w, sw).sqrt();
    let w_half = e.hts_vec(&x.w, 0.5, sw);
    let t0 = e.h0(&x.theta, -s);
    let grad_t = e.grad_h_h0_sq(&x.theta, -s).sqrt();
    let t_half = e.hts_sq(&x.theta, 0.5, -s).sqrt();
    let grad_eta = e.grad_h_h0_sq(&x.eta, 1.0 - s).sqrt();
    let eta_half = e.hts_sq(&x.eta, 0.5, 1.0 - s).sqrt();

    Ok(Prop1Values {
        l: [l1, l2, l3, l4, l5, l6, l7, l8, l9],
        bounds: [
            u_half * grad_w * w_half,
            grad_u * w_half * w_half,
            grad_v * w_half * w_half,
            v_half * (w0 + grad_w) * w_half,
            u_half * grad_t * t_half,
            grad_u * t_half * t_half,
            grad_eta * w_half * t_half,
            eta_half * (w0 + grad_w) * t_half,
            t0 * (grad_w + w0),
        ],
    })
}

/// Ratio report for one term on one sextet (`i` in `1..=9`).
pub fn check_prop1_term(i: usize, engine: &NormEngine, x: &Sextet, s: f64) -> Result<RatioReport> {
    if !(1..=9).contains(&i) {
        return Err(Error::Invalid(format!("term index {i} not in 1..=9")));
    }
    let vals = prop1_terms(engine, x, s)?;
    let sample = Sample {
        lhs: vals.l[i - 1].abs(),
        rhs: vals.bounds[i - 1],
        digest: digest(&[&x.w.comps()[0], &x.theta]),
    };
    Ok(RatioReport::from_samples(&format!("prop1_L{i}"), &[sample]))
}

/// Random admissible sextet: two independent divergence-free velocities and densities.
pub fn random_sextet(ens: &EnsembleSpec, rng: &mut impl rand::Rng) -> Sextet {
    let u = random_vector(ens.grid, ens.profile, true, rng);
    let v = random_vector(ens.grid, ens.profile, true, rng);
    let rho = random_scalar(ens.grid, ens.profile, rng);
    let eta = random_scalar(ens.grid, ens.profile, rng);
    Sextet::from_pair(u, rho, v, eta)
}

/// Nine reports over an ensemble of random sextets.
pub fn check_prop1_ensemble(ens: &EnsembleSpec, s: f64) -> Result<Vec<RatioReport>> {
    check_index(s)?;
    ens.validate()?;
    let engine = NormEngine::new(ens.grid);
    let rows: Vec<Result<(Prop1Values, String)>> = ens.par_map(|_, rng| {
        let x = random_sextet(ens, rng);
        Ok((
            prop1_terms(&engine, &x, s)?,
            digest(&[&x.w.comps()[0], &x.theta]),
        ))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..9)
        .map(|i| {
            let samples: Vec<Sample> = rows
                .iter()
                .map(|(v, d)| Sample {
                    lhs: v.l[i].abs(),
                    rhs: v.bounds[i],
                    digest: d.clone(),
                })
                .collect();
            RatioReport::from_samples(&format!("prop1_L{}", i + 1), &samples)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{member_rng, SpectrumProfile};

    fn ens(count: usize) -> EnsembleSpec {
        EnsembleSpec {
            count,
            profile: SpectrumProfile::PowerLaw { gamma: 1.5 },
            seed: 11,
            grid: AnisoGrid::unit(8, 16).unwrap(),
        }
    }

    #[test]
    fn identical_solutions_give_zero_terms() {
        let e = ens(1);
        let engine = NormEngine::new(e.grid);
        let mut rng = member_rng(1, 0);
        let u = random_vector(e.grid, e.profile, true, &mut rng);
        let rho = random_scalar(e.grid, e.profile, &mut rng);
        let x = Sextet::from_pair(u.clone(), rho.clone(), u, rho);
        let vals = prop1_terms(&engine, &x, 0.75).unwrap();
        assert!(vals.l.iter().all(|&l| l == 0.0), "{:?}", vals.l);
    }

    #[test]
    fn rejects_index_outside_range() {
        let e = ens(1);
        let engine = NormEngine::new(e.grid);
        let x = random_sextet(&e, &mut member_rng(0, 0));
        assert!(prop1_terms(&engine, &x, 0.5).is_err());
        assert!(prop1_terms(&engine, &x, 1.2).is_err());
        assert!(check_prop1_term(10, &engine, &x, 0.75).is_err());
    }

    #[test]
    fn advection_is_skew_in_plain_l2() {
        // With v = 0 the L² pairing ⟨u·∇u, u⟩ vanishes.
        let e = ens(1);
        let mut rng = member_rng(3, 0);
        let u = random_vector(e.grid, e.profile, true, &mut rng);
        let ju = jets(&u);
        let total: f64 = (0..3)
            .map(|c| advect(e.grid, &ju, &ju[c], &[0, 1, 2]).inner(&u.comps()[c]))
            .sum();
        assert!(
            total.abs() < 1e-9 * u.l2_norm_sq() * u.max_abs().max(1.0),
            "{total}"
        );
    }

    #[test]
    fn ensemble_ratios_are_finite() {
        let reps = check_prop1_ensemble(&ens(3), 0.75).unwrap();
        assert_eq!(reps.len(), 9);
        for r in reps {
            assert!(r.ratio.is_finite() && r.ratio > 0.0, "{r:?}");
        }
    }
}
