//! Damped alternation between the modulus equation and the screened Poisson
//! problem at fixed frequency.

use std::sync::Arc;

use crate::fields;
use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;

use super::{
    assemble_profile, check_localized, shoot_u_given_phi, stationary_residuals, SolitonProfile,
    SolveOptions, SolverError,
};

/// Solves `−Δφ + q²u²φ = qωu²` with the Coulomb closure at `r_max`.
pub fn solve_phi_given_u(
    u: &[f64],
    omega: f64,
    q: f64,
    grid: &RadialGrid,
) -> Result<Vec<f64>, SolverError> {
    if q == 0.0 {
        return Ok(vec![0.0; grid.n()]);
    }
    let kappa: Vec<f64> = u.iter().map(|x| q * q * x * x).collect();
    let source: Vec<f64> = u.iter().map(|x| q * omega * x * x).collect();
    Ok(fields::solve_screened_poisson(&source, &kappa, grid)?.phi)
}

/// Fixed-frequency profile starting from `φ ≡ 0`.
pub fn solve_profile(
    spec: &PotentialSpec,
    q: f64,
    omega: f64,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
) -> Result<SolitonProfile, SolverError> {
    solve_profile_from(spec, q, omega, grid, opts, None)
}

/// Fixed-frequency profile warm-started from a given potential.
pub fn solve_profile_from(
    spec: &PotentialSpec,
    q: f64,
    omega: f64,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
    phi_init: Option<&[f64]>,
) -> Result<SolitonProfile, SolverError> {
    opts.validate()?;
    let m = spec.m();
    if !(omega > 0.0 && omega < m) {
        return Err(SolverError::OmegaOutOfWindow { omega, m });
    }
    if !(q >= 0.0 && q.is_finite()) {
        return Err(SolverError::InvalidOption(format!("coupling must be nonnegative, got {q}")));
    }
    let n = grid.n();
    let mut phi = phi_init.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let (mut res1, mut res2) = (f64::INFINITY, f64::INFINITY);
    for _ in 0..opts.max_iterations {
        let shot = shoot_u_given_phi(spec, omega, &phi, q, grid, opts)?;
        (res1, res2) = stationary_residuals(spec, &shot.u, &phi, omega, q, grid);
        if res1 < opts.tolerance && res2 < opts.tolerance {
            return finish(spec, grid, shot.u, phi, omega, q, opts);
        }
        let fresh = solve_phi_given_u(&shot.u, omega, q, grid)?;
        for (p, f) in phi.iter_mut().zip(&fresh) {
            *p += opts.damping * (f - *p);
        }
    }
    Err(SolverError::NotConverged {
        iterations: opts.max_iterations,
        res1,
        res2,
    })
}

fn finish(
    spec: &PotentialSpec,
    grid: &Arc<RadialGrid>,
    u: Vec<f64>,
    phi: Vec<f64>,
    omega: f64,
    q: f64,
    opts: &SolveOptions,
) -> Result<SolitonProfile, SolverError> {
    let floor = opts.tail_tolerance * u[0];
    for i in 1..u.len() {
        if u[i] < floor {
            break;
        }
        if !(u[i] < u[i - 1]) {
            return Err(SolverError::NotMonotone { index: i });
        }
    }
    check_localized(&u, opts.tail_tolerance)?;
    let theta: Vec<f64> = u
        .iter()
        .zip(&phi)
        .map(|(x, p)| -(omega - q * p) * x)
        .collect();
    assemble_profile(spec, grid, u, phi, theta, q, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<RadialGrid> {
        Arc::new(RadialGrid::new(40.0, 4000).unwrap())
    }

    #[test]
    fn uncoupled_profile_has_no_potential() {
        let g = grid();
        let spec = PotentialSpec::default();
        let p = solve_profile(&spec, 0.0, 0.8, &g, &SolveOptions::default()).unwrap();
        assert!(p.phi.iter().all(|&x| x == 0.0));
        assert!(p.res1 < 1e-6 && p.res2 < 1e-6);
        assert!((p.omega - 0.8).abs() < 1e-14);
        assert!(p.ratio < 1.0);
        // Frozen continuum values at ω = 0.8: E ≈ 12.558, C ≈ −13.766.
        assert!((p.energy - 12.558).abs() < 0.02 * 12.558, "E = {}", p.energy);
        assert!((p.charge + 13.766).abs() < 0.02 * 13.766, "C = {}", p.charge);
    }

    #[test]
    fn coupled_profile_converges_with_bounded_potential() {
        let g = grid();
        let spec = PotentialSpec::default();
        let q = 0.02;
        let p = solve_profile(&spec, q, 0.8, &g, &SolveOptions::default()).unwrap();
        assert!(p.res1 < 1e-6 && p.res2 < 1e-6);
        assert!(p.omega_fit_residual < 1e-12);
        for &x in &p.phi {
            assert!(q * x >= 0.0 && q * x <= p.omega);
        }
        let state = p.field_state();
        let f = fields::functionals(&state, &spec).unwrap();
        assert!((f.energy - p.energy).abs() <= 1e-10 * p.energy);
        assert!((f.charge - p.charge).abs() <= 1e-10 * p.charge.abs());
        let gauss = fields::gauss_residual(&state).unwrap();
        assert!(gauss < 1e-8, "gauss {gauss}");
    }

    #[test]
    fn phi_is_zero_without_coupling() {
        let g = grid();
        let u = g.sample(|r| (-r).exp());
        assert!(solve_phi_given_u(&u, 0.8, 0.0, &g).unwrap().iter().all(|&x| x == 0.0));
    }
}
