//! Anisotropic Littlewood–Paley calculus on a periodic box, a Friedrichs–Galerkin
//! solver for the Navier–Stokes–Boussinesq system with horizontal dissipation,
//! and randomized checks of the functional inequalities behind its uniqueness theory.

pub mod ensemble;
pub mod error;
pub mod filterbank;
pub mod grid;
pub mod lab;
pub mod norms;
pub mod solver;
pub mod uniqueness;

pub use error::{Error, Result};
pub use filterbank::{BlockCoeffs, CoeffMode, DyadicFilterBank, FilterBankParams};
pub use grid::{
    AnisoGrid, Direction, Exponent, MixedNormSpec, MixedOrder, SpectralField, VectorField,
};
pub use norms::{NormEngine, NormSpec, PairingSpec};
