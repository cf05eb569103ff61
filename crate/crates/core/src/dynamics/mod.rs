//! Radial time evolution in the electrostatic sector `A ≡ 0`.
//!
//! The matter field `ψ` is paired with its covariant time derivative
//! `Π = ∂ₜψ + iqφψ`. In these canonical variables the Gauss source
//! `ρ = −q·Im(ψ̄Π)` does not involve `φ`, so the potential is a single linear
//! solve per evaluation, and the reduced Hamiltonian
//!
//! `H = ½∫|Π|² + ½∫|∇ψ|² + ∫W(|ψ|) + ½∫|∇φ|²`
//!
//! coincides with the phase-space energy of the gauge-invariant state.

mod integrator;
mod probe;

use std::sync::Arc;

use thiserror::Error;

use crate::fields::{self, FieldError, FieldState};
use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;
use crate::solver::SolitonProfile;

pub use integrator::{
    default_dt, evolve, step, EvolutionFailure, EvolutionTrace, EvolveOptions, Reference, Sponge};
pub use probe::{
    orbit_distance, perturb, probe_run, stability_probe, Classification, Perturbation, ProbeReport,
    ProbeRow,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("time step {dt} violates the CFL bound {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("non-finite field at t = {t}")]
    BlowUp { t: f64 },
    #[error("perturbation size must be nonnegative and finite, got {0}")]
    BadEpsilon(f64),
    #[error("noise normalization did not converge")]
    NoiseNormalization,
    #[error("invalid evolution option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Complex radial matter field with its canonical momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct DynState {
    pub psi_re: Vec<f64>,
    pub psi_im: Vec<f64>,
    /// Real part of `Π = ∂ₜψ + iqφψ`.
    pub pi_re: Vec<f64>,
    /// Imaginary part of `Π`.
    pub pi_im: Vec<f64>,
    /// Gauss potential of the current `(ψ, Π)`.
    pub phi: Vec<f64>,
    pub q: f64,
    pub grid: Arc<RadialGrid>,
    pub t: f64,
}

impl DynState {
    /// Builds a state and solves Gauss's law for its potential.
    pub fn new(
        grid: Arc<RadialGrid>,
        q: f64,
        psi: (Vec<f64>, Vec<f64>),
        pi: (Vec<f64>, Vec<f64>),
    ) -> Result<Self, DynamicsError> {
        let n = grid.n();
        let mut s = Self {
            psi_re: psi.0,
            psi_im: psi.1,
            pi_re: pi.0,
            pi_im: pi.1,
            phi: vec![0.0; n],
            q,
            grid,
            t: 0.0,
        };
        for (field, v) in [
            ("psi_re", &s.psi_re),
            ("psi_im", &s.psi_im),
            ("pi_re", &s.pi_re),
            ("pi_im", &s.pi_im),
        ] {
            if v.len() != n {
                return Err(FieldError::LengthMismatch {
                    field,
                    got: v.len(),
                    expected: n,
                }
                .into());
            }
        }
        s.resolve_phi()?;
        Ok(s)
    }

    pub fn zeros(grid: Arc<RadialGrid>, q: f64) -> Self {
        let n = grid.n();
        Self {
            psi_re: vec![0.0; n],
            psi_im: vec![0.0; n],
            pi_re: vec![0.0; n],
            pi_im: vec![0.0; n],
            phi: vec![0.0; n],
            q,
            grid,
            t: 0.0,
        }
    }

    /// Charge density `Im(ψ̄Π)`, the product `θu` of the gauge-invariant variables.
    pub fn charge_density(&self) -> Vec<f64> {
        (0..self.grid.n())
            .map(|i| self.psi_re[i] * self.pi_im[i] - self.psi_im[i] * self.pi_re[i])
            .collect()
    }

    /// Gauss source `ρ = −q·Im(ψ̄Π)`.
    pub fn gauss_source(&self) -> Vec<f64> {
        self.charge_density().into_iter().map(|d| -self.q * d).collect()
    }

    /// Re-solves the potential from the current fields.
    pub fn resolve_phi(&mut self) -> Result<(), DynamicsError> {
        if self.q == 0.0 {
            self.phi.iter_mut().for_each(|p| *p = 0.0);
            return Ok(());
        }
        self.phi = fields::solve_poisson(&self.gauss_source(), &self.grid)?.phi;
        Ok(())
    }

    /// Radial electric field at the faces.
    pub fn electric_field(&self) -> Vec<f64> {
        fields::potential_gradient(&self.phi, &self.grid)
            .into_iter()
            .map(|d| -d)
            .collect()
    }

    pub fn charge(&self) -> f64 {
        self.grid.integrate(&self.charge_density())
    }

    /// Reduced Hamiltonian on the grid.
    pub fn energy(&self, spec: &PotentialSpec) -> f64 {
        let g = &self.grid;
        let kinetic = g.inner(&self.pi_re, &self.pi_re) + g.inner(&self.pi_im, &self.pi_im);
        let gradient = g.dirichlet(&self.psi_re) + g.dirichlet(&self.psi_im);
        let potential: f64 = (0..g.n())
            .map(|i| g.volumes()[i] * spec.w(self.psi_re[i].hypot(self.psi_im[i])))
            .sum();
        0.5 * (kinetic + gradient) + potential + fields::field_energy(&self.electric_field(), g)
    }

    /// Squared energy norm `∫(|Π|² + |∇ψ|² + m²|ψ|² + |E|²)`.
    pub fn norm_sq(&self, spec: &PotentialSpec) -> f64 {
        let g = &self.grid;
        let m2 = spec.m() * spec.m();
        g.inner(&self.pi_re, &self.pi_re)
            + g.inner(&self.pi_im, &self.pi_im)
            + g.dirichlet(&self.psi_re)
            + g.dirichlet(&self.psi_im)
            + m2 * (g.inner(&self.psi_re, &self.psi_re) + g.inner(&self.psi_im, &self.psi_im))
            + 2.0 * fields::field_energy(&self.electric_field(), g)
    }

    pub fn max_modulus(&self) -> f64 {
        self.psi_re
            .iter()
            .zip(&self.psi_im)
            .fold(0.0f64, |a, (x, y)| a.max(x.hypot(*y)))
    }

    /// `∂ₜψ = Π − iqφψ`.
    pub fn time_derivative(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n();
        let q = self.q;
        let re = (0..n).map(|i| self.pi_re[i] + q * self.phi[i] * self.psi_im[i]).collect();
        let im = (0..n).map(|i| self.pi_im[i] - q * self.phi[i] * self.psi_re[i]).collect();
        (re, im)
    }

    /// Gauge-invariant state: `u = |ψ|`, `û = Re(ψ̄Π)/u`, `θ = Im(ψ̄Π)/u`,
    /// `Θ = Im(ψ̄∂ᵣψ)/u`, all set to zero where `ψ` vanishes.
    pub fn field_state(&self) -> FieldState {
        let g = &self.grid;
        let n = g.n();
        let mut s = FieldState::zeros(g.clone(), self.q);
        for i in 0..n {
            let (a, b) = (self.psi_re[i], self.psi_im[i]);
            let u = a.hypot(b);
            s.u[i] = u;
            if u > 0.0 {
                s.u_hat[i] = (a * self.pi_re[i] + b * self.pi_im[i]) / u;
                s.theta[i] = (a * self.pi_im[i] - b * self.pi_re[i]) / u;
                let j = if i + 1 < n { i } else { i - 1 };
                let dr = g.dr();
                let (da, db) = (
                    (self.psi_re[j + 1] - self.psi_re[j]) / dr,
                    (self.psi_im[j + 1] - self.psi_im[j]) / dr,
                );
                s.theta_vec[i] = (a * db - b * da) / u;
            }
        }
        s.e_r = self.electric_field();
        s
    }

    /// Time reversal `Π → −Π`, which also flips the potential.
    pub fn reversed(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        Self {
            pi_re: neg(&self.pi_re),
            pi_im: neg(&self.pi_im),
            phi: neg(&self.phi),
            ..self.clone()
        }
    }

    /// Squared energy norm of `self − other` without phase alignment.
    pub fn distance_sq(&self, other: &Self, spec: &PotentialSpec) -> f64 {
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>();
        let g = &self.grid;
        let m2 = spec.m() * spec.m();
        let (dre, dim) = (diff(&self.psi_re, &other.psi_re), diff(&self.psi_im, &other.psi_im));
        let (pre, pim) = (diff(&self.pi_re, &other.pi_re), diff(&self.pi_im, &other.pi_im));
        let de = diff(&self.electric_field(), &other.electric_field());
        g.dirichlet(&dre)
            + g.dirichlet(&dim)
            + m2 * (g.inner(&dre, &dre) + g.inner(&dim, &dim))
            + g.inner(&pre, &pre)
            + g.inner(&pim, &pim)
            + 2.0 * fields::field_energy(&de, g)
    }
}

/// Stationary initial data `ψ = u`, `∂ₜψ = −iωu`, so `Π = −i(ω − qφ)u`.
/// The potential is re-solved from the lifted fields, so it differs from the
/// profile's own `φ` only by the profile's convergence error.
pub fn lift_profile(p: &SolitonProfile) -> DynState {
    let n = p.grid.n();
    let mut s = DynState {
        psi_re: p.u.clone(),
        psi_im: vec![0.0; n],
        pi_re: vec![0.0; n],
        pi_im: p.theta.clone(),
        phi: p.phi.clone(),
        q: p.q,
        grid: p.grid.clone(),
        t: 0.0,
    };
    s.resolve_phi()
        .expect("a converged profile has finite fields on its own grid");
    s
}
