//! Numerical laboratory for charged Q-balls of the nonlinear Klein-Gordon-Maxwell
//! system in the radial sector.
//!
//! The crate evaluates the energy and hylenic charge on a finite-volume radial
//! grid, certifies the admissibility of a self-interaction, estimates the
//! coupling threshold below which the existence argument applies, computes
//! soliton profiles by shooting, fixed-point iteration and constrained
//! gradient flow, and evolves perturbed solitons in time.

pub mod dynamics;
pub mod fields;
pub mod grid;
pub mod hylomorphy;
pub mod io;
pub mod potential;
pub mod solver;
pub mod tridiag;

pub use fields::{FieldError, FieldState, Functionals};
pub use grid::{GridError, RadialGrid};
pub use potential::{AlphaPolicy, PotentialError, PotentialSpec, Preset};
