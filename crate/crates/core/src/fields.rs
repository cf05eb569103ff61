//! Radial phase-space states in the gauge-invariant variables
//! `(u, û, θ, Θ, E)` and the functionals evaluated on them.
//!
//! The modulus and the charge densities live on grid nodes. The radial
//! electric field lives on cell faces (see [`RadialGrid::face_radii`]), which
//! makes the discrete Gauss law a finite-volume balance and keeps the
//! electrostatic energy an exact quadratic form in the potential.

use std::sync::Arc;

use thiserror::Error;

use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;
use crate::tridiag::{self, SingularSystem};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field `{field}` has a non-finite sample at index {index}")]
    NonFinite { field: &'static str, index: usize },
    #[error("field `{field}` has {got} samples, grid has {expected}")]
    LengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("charge on shell [{r_lo}, {r_hi}] vanishes; ratio undefined")]
    RatioUndefined { r_lo: f64, r_hi: f64 },
    #[error("invalid shell [{r_lo}, {r_hi}]")]
    BadShell { r_lo: f64, r_hi: f64 },
    #[error("internal error: {0}")]
    Singular(#[from] SingularSystem),
}

/// A radial state. All node fields have `grid.n()` samples; `e_r` holds the
/// radial electric field at the `grid.n()` cell faces.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub u_hat: Vec<f64>,
    pub theta: Vec<f64>,
    /// Radial component of the vector density `Θ`.
    pub theta_vec: Vec<f64>,
    pub e_r: Vec<f64>,
    pub q: f64,
    pub grid: Arc<RadialGrid>,
}

impl FieldState {
    pub fn zeros(grid: Arc<RadialGrid>, q: f64) -> Self {
        let n = grid.n();
        Self {
            u: vec![0.0; n],
            u_hat: vec![0.0; n],
            theta: vec![0.0; n],
            theta_vec: vec![0.0; n],
            e_r: vec![0.0; n],
            q,
            grid,
        }
    }

    /// Checks lengths and finiteness of every sample.
    pub fn validate(&self) -> Result<(), FieldError> {
        let n = self.grid.n();
        for (field, data) in self.named_fields() {
            if data.len() != n {
                return Err(FieldError::LengthMismatch {
                    field,
                    got: data.len(),
                    expected: n,
                });
            }
            if let Some(index) = data.iter().position(|x| !x.is_finite()) {
                return Err(FieldError::NonFinite { field, index });
            }
        }
        if !self.q.is_finite() {
            return Err(FieldError::NonFinite {
                field: "q",
                index: 0,
            });
        }
        Ok(())
    }

    fn named_fields(&self) -> [(&'static str, &[f64]); 5] {
        [
            ("u", &self.u),
            ("u_hat", &self.u_hat),
            ("theta", &self.theta),
            ("Theta", &self.theta_vec),
            ("E_r", &self.e_r),
        ]
    }
}

/// Energy split used by the solvers and reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals {
    pub energy: f64,
    pub charge: f64,
    pub norm_sq: f64,
    /// `½∫(û² + |∇u|² + θ² + Θ² + E²)`; the energy without `∫W`.
    pub quadratic: f64,
    /// `∫W(u)`.
    pub potential: f64,
    /// `∫N(u)`.
    pub nonlinear: f64,
}

/// `½Σ w_f E_f²` over the face samples, exterior Coulomb tail included.
pub fn field_energy(e: &[f64], grid: &RadialGrid) -> f64 {
    0.5 * e
        .iter()
        .enumerate()
        .map(|(f, x)| grid.field_weight(f) * x * x)
        .sum::<f64>()
}

fn kinetic_sum(state: &FieldState) -> f64 {
    let g = &state.grid;
    g.inner(&state.u_hat, &state.u_hat)
        + g.dirichlet(&state.u)
        + g.inner(&state.theta, &state.theta)
        + g.inner(&state.theta_vec, &state.theta_vec)
        + 2.0 * field_energy(&state.e_r, g)
}

pub fn functionals(state: &FieldState, spec: &PotentialSpec) -> Result<Functionals, FieldError> {
    state.validate()?;
    let g = &state.grid;
    let quadratic = 0.5 * kinetic_sum(state);
    let potential = g.integrate(&state.u.iter().map(|&s| spec.w(s)).collect::<Vec<_>>());
    let nonlinear = g.integrate(&state.u.iter().map(|&s| spec.n(s)).collect::<Vec<_>>());
    let mass = spec.m() * spec.m() * g.inner(&state.u, &state.u);
    Ok(Functionals {
        energy: quadratic + potential,
        charge: g.inner(&state.theta, &state.u),
        norm_sq: 2.0 * quadratic + mass,
        quadratic,
        potential,
        nonlinear,
    })
}

pub fn energy(state: &FieldState, spec: &PotentialSpec) -> Result<f64, FieldError> {
    Ok(functionals(state, spec)?.energy)
}

pub fn charge(state: &FieldState) -> Result<f64, FieldError> {
    state.validate()?;
    Ok(state.grid.inner(&state.theta, &state.u))
}

pub fn energy_norm_sq(state: &FieldState, spec: &PotentialSpec) -> Result<f64, FieldError> {
    state.validate()?;
    let mass = spec.m() * spec.m() * state.grid.inner(&state.u, &state.u);
    Ok(kinetic_sum(state) + mass)
}

/// `½‖state‖²_shell / |C_shell|` on the radial shell `[r_lo, r_hi]`.
///
/// Node terms use the nodes inside the shell, gradient terms the faces whose
/// two nodes are both inside, field terms the faces lying inside the shell.
pub fn local_ratio(
    state: &FieldState,
    r_lo: f64,
    r_hi: f64,
    spec: &PotentialSpec,
) -> Result<f64, FieldError> {
    state.validate()?;
    let g = &state.grid;
    if !(r_lo >= 0.0 && r_lo < r_hi && r_hi <= g.r_max() * (1.0 + 1e-12)) {
        return Err(FieldError::BadShell { r_lo, r_hi });
    }
    let inside = |r: f64| r >= r_lo && r <= r_hi;
    let m2 = spec.m() * spec.m();
    let (mut norm_sq, mut shell_charge) = (0.0, 0.0);
    for i in 0..g.n() {
        if !inside(g.radius(i)) {
            continue;
        }
        let v = g.volumes()[i];
        let (u, t) = (state.u[i], state.theta[i]);
        norm_sq += v
            * (state.u_hat[i].powi(2) + m2 * u * u + t * t + state.theta_vec[i].powi(2));
        shell_charge += v * t * u;
        if i + 1 < g.n() && inside(g.radius(i + 1)) {
            norm_sq += g.conductance(i) * (state.u[i + 1] - u).powi(2);
        }
    }
    for (f, &rf) in g.face_radii().iter().enumerate() {
        if inside(rf) {
            norm_sq += g.field_weight(f) * state.e_r[f].powi(2);
        }
    }
    if shell_charge == 0.0 {
        return Err(FieldError::RatioUndefined { r_lo, r_hi });
    }
    Ok(0.5 * norm_sq / shell_charge.abs())
}

/// `‖∇·E + qθu‖` in the volume-weighted discrete L² norm.
pub fn gauss_residual(state: &FieldState) -> Result<f64, FieldError> {
    state.validate()?;
    let g = &state.grid;
    let div = g.divergence(&state.e_r);
    let r: Vec<f64> = div
        .iter()
        .zip(state.theta.iter().zip(&state.u))
        .map(|(d, (t, u))| d + state.q * t * u)
        .collect();
    Ok(g.inner(&r, &r).sqrt())
}

/// Gauss-law charge density `−qθu` at the nodes.
pub fn gauss_source(state: &FieldState) -> Vec<f64> {
    state
        .theta
        .iter()
        .zip(&state.u)
        .map(|(t, u)| -state.q * t * u)
        .collect()
}

/// Electrostatic potential with its face derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    /// Potential at the nodes.
    pub phi: Vec<f64>,
    /// `φ′` at the faces. The last entry is the Robin value `−φ(r_max)/r_max`.
    pub dphi: Vec<f64>,
    /// Set when the source is not negligible at `r_max`, so the Coulomb
    /// closure is only approximate.
    pub source_truncated: bool,
}

impl PoissonSolution {
    /// Radial field `E = −φ′` at the faces.
    pub fn field(&self) -> Vec<f64> {
        self.dphi.iter().map(|d| -d).collect()
    }
}

/// Relative size of `|source(r_max)|` above which the closure is flagged.
const TRUNCATION_TOL: f64 = 1e-8;

/// Solves `Δφ = −source` with `φ′(0) = 0` and `φ′(r_max) = −φ/r_max`.
pub fn solve_poisson(source: &[f64], grid: &RadialGrid) -> Result<PoissonSolution, FieldError> {
    solve_screened_poisson(source, &vec![0.0; grid.n()], grid)
}

/// Solves `−Δφ + κφ = source` with the same boundary closure, for a
/// nonnegative node coefficient `κ`.
pub fn solve_screened_poisson(
    source: &[f64],
    kappa: &[f64],
    grid: &RadialGrid,
) -> Result<PoissonSolution, FieldError> {
    let n = grid.n();
    for (field, data) in [("source", source), ("kappa", kappa)] {
        if data.len() != n {
            return Err(FieldError::LengthMismatch {
                field,
                got: data.len(),
                expected: n,
            });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite { field, index });
        }
    }
    let (off, mut diag) = grid.stiffness_bands();
    diag[n - 1] += grid.robin_weight();
    let vols = grid.volumes();
    for i in 0..n {
        diag[i] += vols[i] * kappa[i];
    }
    let rhs: Vec<f64> = source.iter().zip(vols).map(|(s, v)| s * v).collect();
    let phi = tridiag::solve_symmetric(&off, &diag, &rhs)?;
    let peak = source.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    Ok(PoissonSolution {
        dphi: potential_gradient(&phi, grid),
        source_truncated: source[n - 1].abs() > TRUNCATION_TOL * peak.max(f64::MIN_POSITIVE),
        phi,
    })
}

/// Face derivative of a node potential, closed with the Coulomb condition.
pub fn potential_gradient(phi: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let n = grid.n();
    let dr = grid.dr();
    (0..n)
        .map(|f| {
            if f + 1 == n {
                -phi[n - 1] / grid.r_max()
            } else {
                (phi[f + 1] - phi[f]) / dr
            }
        })
        .collect()
}

/// Solves Gauss's law for the state's current `(θ, u)` and stores the field.
/// Returns the potential.
pub fn impose_gauss(state: &mut FieldState) -> Result<Vec<f64>, FieldError> {
    let sol = solve_poisson(&gauss_source(state), &state.grid)?;
    state.e_r = sol.field();
    Ok(sol.phi)
}
