//! Shooting on the central value `u(0)` for the modulus equation
//! `−Δu + W′(u) − (ω − qφ)²u = 0` with a prescribed potential `φ`.
//!
//! The march uses the rows of the discrete operator itself, so the separatrix
//! found by bisection is already close to a root of the discrete system; a
//! Newton polish on the tridiagonal Jacobian then removes the exponentially
//! growing marching error in the tail.

use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;
use crate::tridiag;

use super::{SolveOptions, SolverError};

/// Result of a single shooting solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotProfile {
    pub u: Vec<f64>,
    pub u0: f64,
    pub bisections: usize,
    pub newton_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    /// `u` crossed zero.
    Over,
    /// `u` turned upward while positive, at the given node.
    Under(usize),
    /// Neither happened before `r_max`.
    Undecided,
}

struct March<'a> {
    spec: &'a PotentialSpec,
    grid: &'a RadialGrid,
    w2: Vec<f64>,
}

impl<'a> March<'a> {
    fn new(spec: &'a PotentialSpec, grid: &'a RadialGrid, omega: f64, phi: &[f64], q: f64) -> Self {
        let w2 = phi.iter().map(|p| (omega - q * p).powi(2)).collect();
        Self { spec, grid, w2 }
    }

    /// Marches the discrete rows from `u(0) = u0`, filling `out`.
    fn run(&self, u0: f64, out: &mut Vec<f64>) -> Outcome {
        let g = self.grid;
        let n = g.n();
        let vols = g.volumes();
        out.clear();
        out.push(u0);
        let mut inner_flux = 0.0;
        for i in 0..n - 1 {
            let ui = out[i];
            let source = vols[i] * (self.spec.dw(ui) - self.w2[i] * ui);
            // Row i: g_i(u_i − u_{i+1}) + inner flux + source = 0.
            let outer = inner_flux + source;
            let next = ui + outer / g.conductance(i);
            inner_flux = outer;
            if !(next > 0.0) {
                out.push(next);
                return Outcome::Over;
            }
            if next > ui {
                out.push(next);
                return Outcome::Under(i);
            }
            out.push(next);
        }
        Outcome::Undecided
    }
}

/// Shoots to the nodeless ground state and polishes it on the full grid.
pub fn shoot_u_given_phi(
    spec: &PotentialSpec,
    omega: f64,
    phi: &[f64],
    q: f64,
    grid: &RadialGrid,
    opts: &SolveOptions,
) -> Result<ShotProfile, SolverError> {
    let m = spec.m();
    if !(omega > 0.0 && omega < m) {
        return Err(SolverError::OmegaOutOfWindow { omega, m });
    }
    let march = March::new(spec, grid, omega, phi, q);
    let (lo, hi) = opts.bracket();
    let mut buf = Vec::with_capacity(grid.n());

    // Scan for the lowest undershoot → overshoot transition.
    let k = opts.scan_points;
    let trial = |j: usize| lo * (hi / lo).powf(j as f64 / (k - 1) as f64);
    let mut prev = (trial(0), march.run(trial(0), &mut buf));
    let mut found = None;
    for j in 1..k {
        let cur = (trial(j), march.run(trial(j), &mut buf));
        if matches!(prev.1, Outcome::Under(_)) && !matches!(cur.1, Outcome::Under(_)) {
            found = Some((prev.0, cur.0));
            break;
        }
        prev = cur;
    }
    let Some((mut a, mut b)) = found else {
        return Err(SolverError::NoGroundStateInBracket { lo, hi, omega });
    };

    let mut bisections = 0;
    while bisections < 200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        match march.run(mid, &mut buf) {
            Outcome::Under(_) => a = mid,
            _ => b = mid,
        }
        bisections += 1;
    }

    let outcome = march.run(a, &mut buf);
    let mut u = buf.clone();
    let cut = match outcome {
        Outcome::Under(i) => i,
        _ => u.len() - 1,
    };
    extend_tail(&mut u, cut, grid, march.w2[grid.n() - 1], m);
    let newton_iterations = newton_polish(&march, &mut u)?;
    Ok(ShotProfile {
        u0: u[0],
        u,
        bisections,
        newton_iterations,
    })
}

/// Replaces the marched profile beyond node `cut` by a Yukawa tail.
fn extend_tail(u: &mut Vec<f64>, cut: usize, grid: &RadialGrid, w2_far: f64, m: f64) {
    let n = grid.n();
    u.truncate(cut + 1);
    let kappa = (m * m - w2_far).max(0.0).sqrt();
    let (rc, uc) = (grid.radius(cut).max(grid.dr()), u[cut].max(0.0));
    for i in cut + 1..n {
        let r = grid.radius(i);
        u.push(uc * rc / r * (-kappa * (r - rc)).exp());
    }
}

/// Newton iteration on `Ku + V(W′(u) − w²u) = 0`; returns the iteration count.
fn newton_polish(march: &March<'_>, u: &mut [f64]) -> Result<usize, SolverError> {
    let g = march.grid;
    let n = g.n();
    let vols = g.volumes();
    let (off, kdiag) = g.stiffness_bands();
    let mut ku = vec![0.0; n];
    let residual = |u: &[f64], ku: &mut Vec<f64>| -> (Vec<f64>, f64) {
        g.stiffness_apply(u, ku);
        let f: Vec<f64> = (0..n)
            .map(|i| ku[i] + vols[i] * (march.spec.dw(u[i]) - march.w2[i] * u[i]))
            .collect();
        let norm = f.iter().zip(vols).map(|(x, v)| x * x / v).sum::<f64>().sqrt();
        (f, norm)
    };
    let (mut f, mut norm) = residual(u, &mut ku);
    let scale = u[0].abs() * vols.iter().sum::<f64>().sqrt();
    let target = 1e-14 * scale;
    for it in 0..60 {
        if norm <= target {
            return Ok(it);
        }
        let diag: Vec<f64> = (0..n)
            .map(|i| kdiag[i] + vols[i] * (march.spec.d2w(u[i]) - march.w2[i]))
            .collect();
        let du = tridiag::solve_symmetric(&off, &diag, &f)?;
        let mut step = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(&du).map(|(x, d)| x - step * d).collect();
            let (tf, tn) = residual(&trial, &mut ku);
            if tn < norm || step < 1e-3 {
                u.copy_from_slice(&trial);
                f = tf;
                if tn >= norm && norm > 1e3 * target {
                    return Err(SolverError::PolishFailed { residual: norm });
                }
                let stalled = tn >= 0.5 * norm;
                norm = tn;
                if stalled && norm <= 1e3 * target {
                    return Ok(it + 1);
                }
                break;
            }
            step *= 0.5;
        }
    }
    if norm <= 1e3 * target {
        Ok(60)
    } else {
        Err(SolverError::PolishFailed { residual: norm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> RadialGrid {
        RadialGrid::new(40.0, 4000).unwrap()
    }

    #[test]
    fn ground_state_at_point_eight() {
        let g = grid();
        let spec = PotentialSpec::default();
        let shot = shoot_u_given_phi(&spec, 0.8, &vec![0.0; g.n()], 0.0, &g, &SolveOptions::default())
            .unwrap();
        // Continuum shooting gives u(0) ≈ 0.5308 at this frequency.
        assert!((shot.u0 - 0.5308).abs() < 2e-3, "u0 = {}", shot.u0);
        for i in 1..g.n() {
            if shot.u[i] < 1e-8 * shot.u0 {
                break;
            }
            assert!(shot.u[i] < shot.u[i - 1], "not decreasing at {i}");
        }
        assert!(shot.u[g.n() - 1] < 1e-8 * shot.u0);
    }

    #[test]
    fn rejects_frequency_at_or_above_mass() {
        let g = grid();
        let spec = PotentialSpec::default();
        for omega in [1.0, 1.5] {
            assert!(matches!(
                shoot_u_given_phi(&spec, omega, &vec![0.0; g.n()], 0.0, &g, &SolveOptions::default()),
                Err(SolverError::OmegaOutOfWindow { .. })
            ));
        }
    }

    #[test]
    fn reports_bracket_without_ground_state() {
        let g = grid();
        let spec = PotentialSpec::default();
        let opts = SolveOptions {
            bracket: Some((2.0, 5.0)),
            ..SolveOptions::default()
        };
        assert!(matches!(
            shoot_u_given_phi(&spec, 0.8, &vec![0.0; g.n()], 0.0, &g, &opts),
            Err(SolverError::NoGroundStateInBracket { .. })
        ));
    }
}
