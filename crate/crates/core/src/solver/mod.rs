//! Stationary charged Q-ball profiles.
//!
//! Two independent routes reach the same discrete system:
//!
//! * [`solve_profile`] fixes the frequency `ω`, shoots the modulus against a
//!   given potential, re-solves the screened Poisson problem for `φ`, and
//!   alternates with damping until both stationary equations hold;
//! * [`minimize_j`] descends the penalized functional `J = E/|C| + δE²` over
//!   `(u, θ)` with the electric field eliminated through Gauss's law, and
//!   recovers `ω` afterwards from `θ = −(ω − qφ)u`.
//!
//! Both discretize the stationary equations with the same finite-volume
//! operators, so a converged profile of one route is a converged profile of
//! the other.

mod fixed_point;
mod flow;
mod shooting;
mod sweep;

use std::sync::Arc;

use thiserror::Error;

use crate::fields::{self, FieldError, FieldState};
use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;
use crate::tridiag::SingularSystem;

pub use fixed_point::{solve_phi_given_u, solve_profile, solve_profile_from};
pub use flow::{minimize_j, penalized_functional, FlowResult, PenalizedValue};
pub use shooting::{shoot_u_given_phi, ShotProfile};
pub use sweep::{family_sweep, SweepEntry, SweepList};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("frequency {omega} outside the existence window (0, {m})")]
    OmegaOutOfWindow { omega: f64, m: f64 },
    #[error("no ground state with u(0) in [{lo}, {hi}] at omega = {omega}")]
    NoGroundStateInBracket { lo: f64, hi: f64, omega: f64 },
    #[error("not converged after {iterations} iterations (res1 = {res1:e}, res2 = {res2:e})")]
    NotConverged {
        iterations: usize,
        res1: f64,
        res2: f64,
    },
    #[error("profile not localized: u(r_max)/u(0) = {tail:e} exceeds {tolerance:e}")]
    NotLocalized { tail: f64, tolerance: f64 },
    #[error("profile not monotone at node {index}")]
    NotMonotone { index: usize },
    #[error("Newton polish diverged (residual {residual:e})")]
    PolishFailed { residual: f64 },
    #[error("charge collapsed from {initial} to {charge} during the flow")]
    ChargeCollapse { charge: f64, initial: f64 },
    #[error("penalized functional did not decrease after {halvings} step halvings (J = {j})")]
    StepFailure { halvings: usize, j: f64 },
    #[error("initial state is degenerate: zero charge")]
    DegenerateInit,
    #[error("initial state violates Gauss's law (residual {residual:e})")]
    GaussViolated { residual: f64 },
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("internal error: {0}")]
    Singular(#[from] SingularSystem),
}

/// Options of the gradient-flow route.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowOptions {
    pub max_iterations: usize,
    /// Stop when `‖∇J‖` in the preconditioned dual norm falls below
    /// `gradient_tolerance·|J|`.
    pub gradient_tolerance: f64,
    /// Stop when the relative decrease of `J` stays below this for
    /// `stall_iterations` accepted steps in a row.
    pub relative_decrease: f64,
    pub stall_iterations: usize,
    /// Quasi-Newton memory.
    pub history: usize,
    pub max_halvings: usize,
    /// A drop of `|C|` below this fraction of the initial charge aborts the flow.
    pub collapse_fraction: f64,
    /// Localization threshold on `|u(r_max)|/max|u|` for accepted minimizers.
    pub tail_tolerance: f64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            gradient_tolerance: 1e-10,
            relative_decrease: 1e-15,
            stall_iterations: 20,
            history: 12,
            max_halvings: 20,
            collapse_fraction: 1e-2,
            tail_tolerance: 1e-4,
        }
    }
}

/// Options shared by the solver routes.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Shooting bracket for `u(0)`; `None` uses `[s̄/10, 10s̄]`.
    pub bracket: Option<(f64, f64)>,
    /// Plateau height used for the default bracket.
    pub s_bar: f64,
    /// Log-spaced trial values of `u(0)` scanned inside the bracket.
    pub scan_points: usize,
    /// Weight of the newly solved potential in each alternation step.
    pub damping: f64,
    pub max_iterations: usize,
    /// Target for both stationary residuals in the fixed-point route.
    pub tolerance: f64,
    /// `u(r_max) < tail_tolerance·u(0)` defines a decayed shooting profile.
    pub tail_tolerance: f64,
    pub flow: FlowOptions,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            bracket: None,
            s_bar: 1.0,
            scan_points: 200,
            damping: 0.5,
            max_iterations: 200,
            tolerance: 1e-9,
            tail_tolerance: 1e-8,
            flow: FlowOptions::default(),
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |s: &str| Err(SolverError::InvalidOption(s.to_string()));
        if let Some((lo, hi)) = self.bracket {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return bad("bracket must satisfy 0 < lo < hi");
            }
        }
        if !(self.s_bar > 0.0) {
            return bad("s_bar must be positive");
        }
        if self.scan_points < 2 {
            return bad("scan_points must be at least 2");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tolerance > 0.0 && self.tail_tolerance > 0.0) {
            return bad("tolerances must be positive");
        }
        let f = &self.flow;
        if !(f.gradient_tolerance > 0.0 && f.relative_decrease > 0.0 && f.tail_tolerance > 0.0) {
            return bad("flow tolerances must be positive");
        }
        if f.history == 0 || f.max_iterations == 0 {
            return bad("flow history and iteration budget must be positive");
        }
        Ok(())
    }

    pub(crate) fn bracket(&self) -> (f64, f64) {
        self.bracket
            .unwrap_or((0.1 * self.s_bar, 10.0 * self.s_bar))
    }
}

/// A stationary solution `ψ = u e^{−iωt}` with its electrostatic potential.
#[derive(Debug, Clone, PartialEq)]
pub struct SolitonProfile {
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
    /// `θ = −(ω − qφ)u` for fixed-point profiles; the minimizer's own `θ`
    /// for gradient-flow profiles.
    pub theta: Vec<f64>,
    pub omega: f64,
    pub q: f64,
    pub delta: Option<f64>,
    pub energy: f64,
    pub charge: f64,
    pub ratio: f64,
    /// Discrete L² residual of `−Δu + W′(u) − (ω − qφ)²u`.
    pub res1: f64,
    /// Discrete L² residual of `−Δφ + q²u²φ − qωu²`.
    pub res2: f64,
    /// `‖θ + (ω − qφ)u‖/‖θ‖`.
    pub omega_fit_residual: f64,
    pub grid: Arc<RadialGrid>,
}

impl SolitonProfile {
    pub fn u0(&self) -> f64 {
        self.u[0]
    }

    pub fn is_hylomorphic(&self, m: f64) -> bool {
        self.ratio < m
    }

    /// Phase-space state `(u, 0, θ, 0, −∇φ)`.
    pub fn field_state(&self) -> FieldState {
        let mut s = FieldState::zeros(self.grid.clone(), self.q);
        s.u = self.u.clone();
        s.theta = self.theta.clone();
        s.e_r = fields::potential_gradient(&self.phi, &self.grid)
            .into_iter()
            .map(|d| -d)
            .collect();
        s
    }

    /// Charge conjugate `(θ, φ, ω) → (−θ, −φ, −ω)`, again a solution.
    pub fn conjugate(&self) -> Self {
        let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
        Self {
            phi: neg(&self.phi),
            theta: neg(&self.theta),
            omega: -self.omega,
            charge: -self.charge,
            ..self.clone()
        }
    }

    /// Relative energy-norm distance to another profile on the same grid.
    pub fn distance(&self, other: &Self, spec: &PotentialSpec) -> Result<f64, FieldError> {
        let a = self.field_state();
        let b = other.field_state();
        let mut d = a.clone();
        for (x, (p, r)) in [
            (&mut d.u, (&a.u, &b.u)),
            (&mut d.theta, (&a.theta, &b.theta)),
            (&mut d.e_r, (&a.e_r, &b.e_r)),
        ] {
            for (xi, (pi, ri)) in x.iter_mut().zip(p.iter().zip(r)) {
                *xi = pi - ri;
            }
        }
        Ok((fields::energy_norm_sq(&d, spec)? / fields::energy_norm_sq(&a, spec)?).sqrt())
    }
}

/// Stationary residuals `(res1, res2)` of `(u, φ, ω)` on the grid.
pub fn stationary_residuals(
    spec: &PotentialSpec,
    u: &[f64],
    phi: &[f64],
    omega: f64,
    q: f64,
    grid: &RadialGrid,
) -> (f64, f64) {
    let n = grid.n();
    let vols = grid.volumes();
    let mut ku = vec![0.0; n];
    grid.stiffness_apply(u, &mut ku);
    let mut kphi = vec![0.0; n];
    grid.stiffness_apply(phi, &mut kphi);
    kphi[n - 1] += grid.robin_weight() * phi[n - 1];
    let (mut r1, mut r2) = (0.0, 0.0);
    for i in 0..n {
        let w = omega - q * phi[i];
        let a = ku[i] / vols[i] + spec.dw(u[i]) - w * w * u[i];
        let b = kphi[i] / vols[i] - q * w * u[i] * u[i];
        r1 += vols[i] * a * a;
        r2 += vols[i] * b * b;
    }
    (r1.sqrt(), r2.sqrt())
}

/// Least-squares `ω` in `θ = −(ω − qφ)u` and the relative fit residual.
pub fn fit_omega(theta: &[f64], u: &[f64], phi: &[f64], q: f64, grid: &RadialGrid) -> (f64, f64) {
    let vols = grid.volumes();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..u.len() {
        num += vols[i] * u[i] * (q * phi[i] * u[i] - theta[i]);
        den += vols[i] * u[i] * u[i];
    }
    let omega = num / den;
    let (mut res, mut norm) = (0.0, 0.0);
    for i in 0..u.len() {
        let r = theta[i] + (omega - q * phi[i]) * u[i];
        res += vols[i] * r * r;
        norm += vols[i] * theta[i] * theta[i];
    }
    (omega, (res / norm).sqrt())
}

/// Assembles the profile record and its functionals.
pub(crate) fn assemble_profile(
    spec: &PotentialSpec,
    grid: &Arc<RadialGrid>,
    u: Vec<f64>,
    phi: Vec<f64>,
    theta: Vec<f64>,
    q: f64,
    delta: Option<f64>,
) -> Result<SolitonProfile, SolverError> {
    let (omega, omega_fit_residual) = fit_omega(&theta, &u, &phi, q, grid);
    let (res1, res2) = stationary_residuals(spec, &u, &phi, omega, q, grid);
    let mut profile = SolitonProfile {
        u,
        phi,
        theta,
        omega,
        q,
        delta,
        energy: 0.0,
        charge: 0.0,
        ratio: 0.0,
        res1,
        res2,
        omega_fit_residual,
        grid: grid.clone(),
    };
    let f = fields::functionals(&profile.field_state(), spec)?;
    profile.energy = f.energy;
    profile.charge = f.charge;
    profile.ratio = f.energy / f.charge.abs();
    Ok(profile)
}

/// Checks `u(r_max) < tol·max|u|`.
pub(crate) fn check_localized(u: &[f64], tolerance: f64) -> Result<(), SolverError> {
    let peak = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let tail = u[u.len() - 1].abs() / peak;
    if !(tail < tolerance) {
        return Err(SolverError::NotLocalized { tail, tolerance });
    }
    Ok(())
}
