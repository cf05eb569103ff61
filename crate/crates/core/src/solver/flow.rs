//! Preconditioned quasi-Newton descent of `J = E/|C| + δE²` over `(u, θ)`,
//! the stationary sector with `û = Θ = 0` and the electric field slaved to
//! `(θ, u)` through Gauss's law.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::fields::{self, FieldState};
use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;
use crate::tridiag;

use super::{assemble_profile, check_localized, FlowOptions, SolitonProfile, SolverError};

/// Value and Euclidean gradient of the penalized functional.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedValue {
    pub j: f64,
    pub energy: f64,
    pub charge: f64,
    /// Gauss potential of the current `(θ, u)`.
    pub phi: Vec<f64>,
    pub grad_u: Vec<f64>,
    pub grad_theta: Vec<f64>,
}

/// Evaluates `J(u, θ)` and its gradient on the grid.
///
/// With `s = −qθu` and `K_φφ = Vs`, the field energy is `½sᵀVφ` and its
/// gradient in `s` is `Vφ`; the remaining terms are local or tridiagonal.
pub fn penalized_functional(
    spec: &PotentialSpec,
    delta: f64,
    q: f64,
    grid: &RadialGrid,
    u: &[f64],
    theta: &[f64],
) -> Result<PenalizedValue, SolverError> {
    let n = grid.n();
    let vols = grid.volumes();
    let source: Vec<f64> = theta.iter().zip(u).map(|(t, x)| -q * t * x).collect();
    let phi = fields::solve_poisson(&source, grid)?.phi;
    let mut ku = vec![0.0; n];
    grid.stiffness_apply(u, &mut ku);
    let mut energy = 0.0;
    let mut charge = 0.0;
    let mut grad_e_u = vec![0.0; n];
    let mut grad_e_t = vec![0.0; n];
    for i in 0..n {
        let v = vols[i];
        energy += 0.5 * u[i] * ku[i]
            + v * (0.5 * theta[i] * theta[i] + spec.w(u[i]) + 0.5 * source[i] * phi[i]);
        charge += v * theta[i] * u[i];
        grad_e_u[i] = ku[i] + v * (spec.dw(u[i]) - q * theta[i] * phi[i]);
        grad_e_t[i] = v * (theta[i] - q * u[i] * phi[i]);
    }
    let sign = charge.signum();
    let abs_c = charge.abs();
    let j = energy / abs_c + delta * energy * energy;
    let a = 1.0 / abs_c + 2.0 * delta * energy;
    let b = sign * energy / (abs_c * abs_c);
    let grad_u = (0..n).map(|i| a * grad_e_u[i] - b * vols[i] * theta[i]).collect();
    let grad_theta = (0..n).map(|i| a * grad_e_t[i] - b * vols[i] * u[i]).collect();
    Ok(PenalizedValue {
        j,
        energy,
        charge,
        phi,
        grad_u,
        grad_theta,
    })
}

/// Outcome of a gradient-flow minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// Minimizer in the positive-frequency convention.
    pub profile: SolitonProfile,
    /// `J` after every accepted step, starting with the initial value.
    pub j_history: Vec<f64>,
    pub iterations: usize,
}

/// Block preconditioner `diag(K + m²V, V)`.
struct Preconditioner {
    off: Vec<f64>,
    diag: Vec<f64>,
    vols: Vec<f64>,
    m2: f64,
}

impl Preconditioner {
    fn new(grid: &RadialGrid, m: f64) -> Self {
        let (off, mut diag) = grid.stiffness_bands();
        let vols = grid.volumes().to_vec();
        let m2 = m * m;
        for (d, v) in diag.iter_mut().zip(&vols) {
            *d += m2 * v;
        }
        Self { off, diag, vols, m2 }
    }

    /// `xᵀMx`.
    fn energy(&self, grid: &RadialGrid, x: &[f64]) -> f64 {
        let n = self.vols.len();
        let (u, t) = x.split_at(n);
        grid.dirichlet(u) + self.m2 * grid.inner(u, u) + grid.inner(t, t)
    }

    fn solve(&self, g: &[f64]) -> Result<Vec<f64>, SolverError> {
        let n = self.vols.len();
        let mut out = tridiag::solve_symmetric(&self.off, &self.diag, &g[..n])?;
        out.extend(g[n..].iter().zip(&self.vols).map(|(x, v)| x / v));
        Ok(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Eval {
    value: PenalizedValue,
    grad: Vec<f64>,
}

/// Minimizes `J` from a Gauss-consistent initial state.
///
/// The sign of `C(init)` is kept fixed along the flow; steps that would
/// change it are treated as rejected. Every accepted step strictly lowers `J`.
pub fn minimize_j(
    spec: &PotentialSpec,
    q: f64,
    delta: f64,
    init: &FieldState,
    opts: &FlowOptions,
) -> Result<FlowResult, SolverError> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(SolverError::InvalidOption(format!("penalty weight must be nonnegative, got {delta}")));
    }
    let c0 = fields::charge(init)?;
    if c0 == 0.0 {
        return Err(SolverError::DegenerateInit);
    }
    let tu: Vec<f64> = init.theta.iter().zip(&init.u).map(|(t, u)| q * t * u).collect();
    let scale = init.grid.inner(&tu, &tu).sqrt();
    let gauss = fields::gauss_residual(init)?;
    if gauss > 1e-8 * scale.max(1e-300) && gauss > 1e-300 {
        return Err(SolverError::GaussViolated { residual: gauss });
    }
    let grid: &Arc<RadialGrid> = &init.grid;
    let n = grid.n();
    let sign = c0.signum();
    let evaluate = |x: &[f64]| -> Result<Eval, SolverError> {
        let value = penalized_functional(spec, delta, q, grid, &x[..n], &x[n..])?;
        let mut grad = value.grad_u.clone();
        grad.extend_from_slice(&value.grad_theta);
        Ok(Eval { value, grad })
    };
    let admissible = |e: &Eval| e.value.j.is_finite() && e.value.charge * sign > 0.0;

    let precond = Preconditioner::new(grid, spec.m());
    let mut x: Vec<f64> = init.u.iter().chain(&init.theta).copied().collect();
    let mut cur = evaluate(&x)?;
    let mut j_history = vec![cur.value.j];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut stall = 0;
    let x_scale = precond.energy(grid, &x).sqrt();

    for iteration in 0..opts.max_iterations {
        let mg = precond.solve(&cur.grad)?;
        let gnorm = dot(&cur.grad, &mg).max(0.0).sqrt();
        if gnorm <= opts.gradient_tolerance * cur.value.j.abs() || stall >= opts.stall_iterations {
            return finish(spec, grid, x, cur.value, q, delta, j_history, iteration, opts);
        }
        if cur.value.charge.abs() < opts.collapse_fraction * c0.abs() {
            return Err(SolverError::ChargeCollapse {
                charge: cur.value.charge,
                initial: c0,
            });
        }

        let mut direction = two_loop(&cur.grad, &memory, &precond)?;
        let mut slope = dot(&cur.grad, &direction);
        if !(slope < 0.0) {
            memory.clear();
            direction = mg.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = if memory.is_empty() {
            let dnorm = precond.energy(grid, &direction).sqrt();
            (0.05 * x_scale / dnorm).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&direction).map(|(a, d)| a + step * d).collect();
            let e = evaluate(&trial)?;
            if admissible(&e) && e.value.j <= cur.value.j + 1e-4 * step * slope && e.value.j < cur.value.j {
                accepted = Some((trial, e));
                break;
            }
            step *= 0.5;
        }
        let Some((next_x, next)) = accepted else {
            if !memory.is_empty() {
                memory.clear();
                continue;
            }
            // Rounding floor: no representable decrease is left.
            if gnorm <= 1e-6 * cur.value.j.abs() {
                return finish(spec, grid, x, cur.value, q, delta, j_history, iteration, opts);
            }
            return Err(SolverError::StepFailure {
                halvings: opts.max_halvings,
                j: cur.value.j,
            });
        };

        let s: Vec<f64> = next_x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if memory.len() == opts.history {
                memory.pop_front();
            }
            memory.push_back((s, y, sy));
        }
        let decrease = (cur.value.j - next.value.j) / cur.value.j.abs();
        stall = if decrease < opts.relative_decrease { stall + 1 } else { 0 };
        x = next_x;
        cur = next;
        j_history.push(cur.value.j);
    }
    let (res1, res2) = {
        let p = assemble_profile(
            spec,
            grid,
            x[..n].to_vec(),
            cur.value.phi.clone(),
            x[n..].to_vec(),
            q,
            Some(delta),
        )?;
        (p.res1, p.res2)
    };
    Err(SolverError::NotConverged {
        iterations: opts.max_iterations,
        res1,
        res2,
    })
}

/// L-BFGS two-loop recursion with `H₀ = γM⁻¹`.
fn two_loop(
    grad: &[f64],
    memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    precond: &Preconditioner,
) -> Result<Vec<f64>, SolverError> {
    let mut qv = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, sy) in memory.iter().rev() {
        let a = dot(s, &qv) / sy;
        qv.iter_mut().zip(y).for_each(|(q, yi)| *q -= a * yi);
        alphas.push(a);
    }
    let mut r = precond.solve(&qv)?;
    if let Some((_, y, sy)) = memory.back() {
        let my = precond.solve(y)?;
        let gamma = sy / dot(y, &my);
        r.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, sy), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = dot(y, &r) / sy;
        r.iter_mut().zip(s).for_each(|(ri, si)| *ri += (a - b) * si);
    }
    Ok(r.into_iter().map(|v| -v).collect())
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &PotentialSpec,
    grid: &Arc<RadialGrid>,
    x: Vec<f64>,
    value: PenalizedValue,
    q: f64,
    delta: f64,
    j_history: Vec<f64>,
    iterations: usize,
    opts: &FlowOptions,
) -> Result<FlowResult, SolverError> {
    let n = grid.n();
    let u = x[..n].to_vec();
    check_localized(&u, opts.tail_tolerance)?;
    let mut profile = assemble_profile(spec, grid, u, value.phi, x[n..].to_vec(), q, Some(delta))?;
    if profile.omega < 0.0 {
        profile = profile.conjugate();
    }
    Ok(FlowResult {
        profile,
        j_history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = RadialGrid::new(20.0, 401).unwrap();
        let spec = PotentialSpec::default();
        let u = grid.sample(|r| 0.8 * (-r * r / 8.0).exp());
        let theta = grid.sample(|r| 0.3 * (-r * r / 6.0).exp());
        let (q, delta) = (0.1, 1e-3);
        let v = penalized_functional(&spec, delta, q, &grid, &u, &theta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-6;
        for _ in 0..10 {
            let c1: f64 = rng.gen_range(0.5..3.0);
            let c2: f64 = rng.gen_range(0.0..8.0);
            let du: Vec<f64> = grid.sample(|r| (-((r - c2) / c1).powi(2)).exp());
            let dt: Vec<f64> = (0..grid.n())
                .map(|i| rng.gen_range(-1.0..1.0) * (-grid.radius(i) / c1).exp())
                .collect();
            let shift = |s: f64| {
                let uu: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + s * b).collect();
                let tt: Vec<f64> = theta.iter().zip(&dt).map(|(a, b)| a + s * b).collect();
                penalized_functional(&spec, delta, q, &grid, &uu, &tt).unwrap().j
            };
            let fd = (shift(h) - shift(-h)) / (2.0 * h);
            let an = dot(&v.grad_u, &du) + dot(&v.grad_theta, &dt);
            assert!((fd - an).abs() <= 1e-5 * an.abs(), "fd {fd} analytic {an}");
        }
    }
}
