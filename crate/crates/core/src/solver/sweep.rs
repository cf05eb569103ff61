//! Continuation sweeps along a frequency or penalty-weight list.

use std::sync::Arc;

use crate::fields::FieldState;
use crate::grid::RadialGrid;
use crate::potential::PotentialSpec;

use super::{minimize_j, solve_profile_from, SolitonProfile, SolveOptions, SolverError};

/// Parameter list of a family sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepList {
    /// Fixed-point solves at each frequency.
    Omega(Vec<f64>),
    /// Gradient-flow minimizations at each penalty weight, the first one
    /// started from `init`.
    Delta { deltas: Vec<f64>, init: FieldState },
}

/// One point of a sweep; failures are recorded, the sweep goes on.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub param: f64,
    pub result: Result<SolitonProfile, SolverError>,
}

impl SweepEntry {
    /// Converged and hylomorphic.
    pub fn accepted(&self, m: f64) -> bool {
        matches!(&self.result, Ok(p) if p.is_hylomorphic(m))
    }
}

/// Solves along the list, warm-starting each point from the last success.
pub fn family_sweep(
    spec: &PotentialSpec,
    q: f64,
    list: &SweepList,
    grid: &Arc<RadialGrid>,
    opts: &SolveOptions,
) -> Vec<SweepEntry> {
    match list {
        SweepList::Omega(omegas) => {
            let mut warm: Option<Vec<f64>> = None;
            omegas
                .iter()
                .map(|&omega| {
                    let result = solve_profile_from(spec, q, omega, grid, opts, warm.as_deref());
                    if let Ok(p) = &result {
                        warm = Some(p.phi.clone());
                    }
                    SweepEntry { param: omega, result }
                })
                .collect()
        }
        SweepList::Delta { deltas, init } => {
            let mut start = init.clone();
            deltas
                .iter()
                .map(|&delta| {
                    let result = minimize_j(spec, q, delta, &start, &opts.flow).map(|r| r.profile);
                    if let Ok(p) = &result {
                        start = p.field_state();
                    }
                    SweepEntry { param: delta, result }
                })
                .collect()
        }
    }
}
