//! Perturbations of lifted profiles, the phase-minimized orbit distance and
//! the stability probe built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields;
use crate::potential::PotentialSpec;
use crate::solver::SolitonProfile;

use super::integrator::{evolve, EvolutionTrace, EvolveOptions, Reference};
use super::{lift_profile, DynState, DynamicsError};

/// Number of compact bumps summed per noise component.
const NOISE_BUMPS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Perturbation {
    /// `ψ → (1+ε)ψ` and `∂ₜψ → (1+ε)∂ₜψ`.
    Amplitude,
    /// `∂ₜψ → ∂ₜψ + εψ`.
    Velocity,
    /// Smooth compactly supported noise of energy-norm size `ε‖state‖`.
    Noise,
}

impl Perturbation {
    pub const ALL: [Perturbation; 3] = [Perturbation::Amplitude, Perturbation::Velocity, Perturbation::Noise];

    pub fn name(&self) -> &'static str {
        match self {
            Perturbation::Amplitude => "amplitude",
            Perturbation::Velocity => "velocity",
            Perturbation::Noise => "noise",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }
}

/// Energy-norm distance from `state` to the phase orbit of `orbit`,
/// minimized over the global phase in closed form.
pub fn orbit_distance(state: &DynState, orbit: &DynState, spec: &PotentialSpec) -> f64 {
    let g = &state.grid;
    let n = g.n();
    let vols = g.volumes();
    let m2 = spec.m() * spec.m();
    // Complex pairing ⟨orbit, state⟩ of the matter part of the energy norm.
    let mut k_re = vec![0.0; n];
    let mut k_im = vec![0.0; n];
    g.stiffness_apply(&state.psi_re, &mut k_re);
    g.stiffness_apply(&state.psi_im, &mut k_im);
    let (mut re, mut im) = (0.0, 0.0);
    for i in 0..n {
        let (a, b) = (orbit.psi_re[i], orbit.psi_im[i]);
        let (x, y) = (state.psi_re[i], state.psi_im[i]);
        re += a * (k_re[i] + m2 * vols[i] * x) + b * (k_im[i] + m2 * vols[i] * y);
        im += a * (k_im[i] + m2 * vols[i] * y) - b * (k_re[i] + m2 * vols[i] * x);
        let (a, b) = (orbit.pi_re[i], orbit.pi_im[i]);
        let (x, y) = (state.pi_re[i], state.pi_im[i]);
        re += vols[i] * (a * x + b * y);
        im += vols[i] * (a * y - b * x);
    }
    // The pairing is maximal when the orbit is rotated by arg⟨orbit, state⟩.
    let norm = re.hypot(im);
    let (s, c) = if norm > 0.0 { (im / norm, re / norm) } else { (0.0, 1.0) };
    let rot = |x: &[f64], y: &[f64]| -> (Vec<f64>, Vec<f64>) {
        (
            x.iter().zip(y).map(|(a, b)| c * a - s * b).collect(),
            x.iter().zip(y).map(|(a, b)| s * a + c * b).collect(),
        )
    };
    let (psi_re, psi_im) = rot(&orbit.psi_re, &orbit.psi_im);
    let (pi_re, pi_im) = rot(&orbit.pi_re, &orbit.pi_im);
    // The potential is phase invariant, so the rotated orbit keeps its φ.
    let aligned = DynState {
        psi_re,
        psi_im,
        pi_re,
        pi_im,
        ..orbit.clone()
    };
    state.distance_sq(&aligned, spec).max(0.0).sqrt()
}

fn bump(r: f64, centre: f64, width: f64) -> f64 {
    let x = (r - centre) / width;
    if x.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - x * x).powi(3)
    }
}

/// Random smooth direction for the four real components, supported inside
/// `0.8·r_max` so that it never touches the sponge.
fn noise_direction(state: &DynState, seed: u64) -> [Vec<f64>; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = 0.8 * state.grid.r_max();
    let mut draw = || {
        let bumps: Vec<(f64, f64, f64)> = (0..NOISE_BUMPS)
            .map(|_| {
                let width = rng.gen_range(0.1..0.3) * reach;
                let centre = rng.gen_range(0.0..reach - width);
                (rng.gen_range(-1.0..1.0), centre, width)
            })
            .collect();
        state
            .grid
            .sample(|r| bumps.iter().map(|&(a, c, w)| a * bump(r, c, w)).sum())
    };
    [draw(), draw(), draw(), draw()]
}

fn shifted(state: &DynState, dir: &[Vec<f64>; 4], lambda: f64) -> Result<DynState, DynamicsError> {
    let add = |x: &[f64], d: &[f64]| x.iter().zip(d).map(|(a, b)| a + lambda * b).collect::<Vec<_>>();
    let mut s = DynState {
        psi_re: add(&state.psi_re, &dir[0]),
        psi_im: add(&state.psi_im, &dir[1]),
        pi_re: add(&state.pi_re, &dir[2]),
        pi_im: add(&state.pi_im, &dir[3]),
        ..state.clone()
    };
    s.resolve_phi()?;
    Ok(s)
}

/// Applies a perturbation of size `ε` and re-imposes Gauss's law. `seed`
/// only matters for [`Perturbation::Noise`].
pub fn perturb(
    state: &DynState,
    mode: Perturbation,
    eps: f64,
    spec: &PotentialSpec,
    seed: u64,
) -> Result<DynState, DynamicsError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(DynamicsError::BadEpsilon(eps));
    }
    if eps == 0.0 {
        return Ok(state.clone());
    }
    match mode {
        Perturbation::Amplitude => {
            let f = 1.0 + eps;
            let (dre, dim) = state.time_derivative();
            let psi_re: Vec<f64> = state.psi_re.iter().map(|x| f * x).collect();
            let psi_im: Vec<f64> = state.psi_im.iter().map(|x| f * x).collect();
            let (dre, dim): (Vec<f64>, Vec<f64>) =
                (dre.iter().map(|x| f * x).collect(), dim.iter().map(|x| f * x).collect());
            // With ∂ₜψ fixed, Gauss's law for φ is screened:
            // −Δφ + q²|ψ|²φ = −q·Im(ψ̄∂ₜψ).
            let q = state.q;
            let n = state.grid.n();
            let phi = if q == 0.0 {
                vec![0.0; n]
            } else {
                let kappa: Vec<f64> = (0..n).map(|i| q * q * (psi_re[i].powi(2) + psi_im[i].powi(2))).collect();
                let source: Vec<f64> =
                    (0..n).map(|i| -q * (psi_re[i] * dim[i] - psi_im[i] * dre[i])).collect();
                fields::solve_screened_poisson(&source, &kappa, &state.grid)?.phi
            };
            let pi_re = (0..n).map(|i| dre[i] - q * phi[i] * psi_im[i]).collect();
            let pi_im = (0..n).map(|i| dim[i] + q * phi[i] * psi_re[i]).collect();
            Ok(DynState {
                psi_re,
                psi_im,
                pi_re,
                pi_im,
                phi,
                ..state.clone()
            })
        }
        Perturbation::Velocity => {
            // Adding a real multiple of ψ leaves Im(ψ̄Π), hence φ, unchanged.
            let mut s = state.clone();
            for i in 0..s.grid.n() {
                s.pi_re[i] += eps * s.psi_re[i];
                s.pi_im[i] += eps * s.psi_im[i];
            }
            Ok(s)
        }
        Perturbation::Noise => {
            let target = eps * state.norm_sq(spec).sqrt();
            let dir = noise_direction(state, seed);
            let dist = |lambda: f64| -> Result<f64, DynamicsError> {
                Ok(shifted(state, &dir, lambda)?.distance_sq(state, spec).sqrt())
            };
            // The distance is linear in λ up to the quadratic field term, so a
            // secant iteration from the linear estimate converges in a few steps.
            let (mut l0, mut d0) = (0.0, 0.0);
            let mut l1 = target / dist(1.0)?;
            let mut d1 = dist(l1)?;
            for _ in 0..50 {
                if (d1 - target).abs() <= 1e-12 * target {
                    return shifted(state, &dir, l1);
                }
                let next = l1 - (d1 - target) * (l1 - l0) / (d1 - d0);
                if !next.is_finite() {
                    break;
                }
                (l0, d0) = (l1, d1);
                l1 = next;
                d1 = dist(l1)?;
            }
            Err(DynamicsError::NoiseNormalization)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    StableLike,
    Marginal,
    UnstableLike,
}

impl Classification {
    /// Thresholds 10 and 100 on `max_t d(t)/(ε‖profile‖)`.
    pub fn from_ratio(ratio: f64) -> Self {
        if ratio <= 10.0 {
            Classification::StableLike
        } else if ratio <= 100.0 {
            Classification::Marginal
        } else {
            Classification::UnstableLike
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Classification::StableLike => "stable-like",
            Classification::Marginal => "marginal",
            Classification::UnstableLike => "unstable-like",
        }
    }
}

/// One `(mode, ε)` run of the probe.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub mode: Perturbation,
    pub eps: f64,
    /// `max_t d(t)`.
    pub max_distance: f64,
    /// `max_t d(t)/(ε‖profile‖)`; absent for `ε = 0`.
    pub ratio: Option<f64>,
    pub classification: Option<Classification>,
    pub trace: EvolutionTrace,
    /// Failure of this run, if any; the trace then stops at the failure.
    pub error: Option<DynamicsError>,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub profile_norm: f64,
    pub rows: Vec<ProbeRow>,
}

impl ProbeReport {
    /// Worst classification over the successful runs with `ε > 0`.
    pub fn overall(&self) -> Option<Classification> {
        let rank = |c: &Classification| match c {
            Classification::StableLike => 0,
            Classification::Marginal => 1,
            Classification::UnstableLike => 2,
        };
        self.rows.iter().filter_map(|r| r.classification).max_by_key(rank)
    }

    /// Whether `max_t d` is non-decreasing in `ε` within each mode.
    pub fn monotone_in_eps(&self) -> bool {
        Perturbation::ALL.iter().all(|mode| {
            let mut rows: Vec<&ProbeRow> =
                self.rows.iter().filter(|r| r.mode == *mode && r.error.is_none()).collect();
            rows.sort_by(|a, b| a.eps.total_cmp(&b.eps));
            rows.windows(2).all(|w| w[1].max_distance >= w[0].max_distance)
        })
    }
}

/// Evolves one perturbed copy of the lifted profile.
pub fn probe_run(
    p: &SolitonProfile,
    spec: &PotentialSpec,
    mode: Perturbation,
    eps: f64,
    opts: &EvolveOptions,
    seed: u64,
) -> ProbeRow {
    let lifted = lift_profile(p);
    let norm = lifted.norm_sq(spec).sqrt();
    let reference = Reference::from_profile(p);
    let finish = |trace: EvolutionTrace, error: Option<DynamicsError>| {
        let max_distance = trace.max_distance();
        let ratio = (eps > 0.0 && error.is_none()).then(|| max_distance / (eps * norm));
        ProbeRow {
            mode,
            eps,
            max_distance,
            ratio,
            classification: ratio.map(Classification::from_ratio),
            trace,
            error,
        }
    };
    let start = match perturb(&lifted, mode, eps, spec, seed) {
        Ok(s) => s,
        Err(e) => return finish(EvolutionTrace::default(), Some(e)),
    };
    match evolve(start, spec, &reference, opts) {
        Ok((_, trace)) => finish(trace, None),
        Err(f) => finish(f.trace, Some(f.error)),
    }
}

/// Runs every mode against every `ε` sequentially.
pub fn stability_probe(
    p: &SolitonProfile,
    spec: &PotentialSpec,
    eps_list: &[f64],
    modes: &[Perturbation],
    opts: &EvolveOptions,
    seed: u64,
) -> ProbeReport {
    let rows = modes
        .iter()
        .flat_map(|&mode| eps_list.iter().map(move |&eps| (mode, eps)))
        .map(|(mode, eps)| probe_run(p, spec, mode, eps, opts, seed))
        .collect();
    ProbeReport {
        profile_norm: lift_profile(p).norm_sq(spec).sqrt(),
        rows,
    }
}
