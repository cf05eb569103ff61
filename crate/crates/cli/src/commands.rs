//! Subcommand implementations. Each step writes its artifacts into the
//! staged output directory and returns a one-line summary.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

use qball::dynamics::{probe_run, EvolveOptions, Perturbation, ProbeRow};
use qball::hylomorphy::{build_test_state, Hylomorphy};
use qball::io::{fmt_f64, write_profile};
use qball::solver::{family_sweep, solve_profile, SweepEntry, SweepList};
use qball::RadialGrid;

use crate::artifacts::{Artifacts, Cell, Csv, KeyValues};
use crate::config::RunConfig;

/// Number of samples used by the admissibility check.
const ADMISSIBILITY_SAMPLES: usize = 1001;

pub const SWEEP_COLUMNS: [&str; 8] = ["q", "omega_or_delta", "E", "C", "Lambda", "res1", "res2", "u0"];
pub const HYLOMORPHY_COLUMNS: [&str; 5] = ["q", "R", "ratio", "bound", "verdict"];
pub const TRACE_COLUMNS: [&str; 7] = ["t", "E", "C", "V", "d", "max_psi", "sponge_flux"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    CheckPotential,
    Hylomorphy,
    Solve,
    Evolve,
    Threshold,
    All,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::CheckPotential => "check-potential",
            Subcommand::Hylomorphy => "hylomorphy",
            Subcommand::Solve => "solve",
            Subcommand::Evolve => "evolve",
            Subcommand::Threshold => "threshold",
            Subcommand::All => "all",
        }
    }
}

/// A failure attributed to the library operation that raised it.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandError {
    pub module: &'static str,
    pub operation: &'static str,
    pub message: String,
}

impl CommandError {
    fn new(module: &'static str, operation: &'static str, e: impl fmt::Display) -> Self {
        Self {
            module,
            operation,
            message: e.to_string(),
        }
    }

    /// Machine-readable `key=value` record.
    pub fn record(&self, subcommand: &str) -> String {
        let mut kv = KeyValues::default();
        kv.s("status", "failed")
            .s("subcommand", subcommand)
            .s("module", self.module)
            .s("operation", self.operation)
            .s("message", &self.message);
        kv.finish()
    }
}

impl fmt::Display for CommandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}: {}", self.module, self.operation, self.message)
    }
}

/// Result of a run whose artifacts were committed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub summary: Vec<String>,
    /// Set when the run completed but a check did not pass.
    pub failure: Option<CommandError>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    grid: Arc<RadialGrid>,
    art: Artifacts,
    summary: Vec<String>,
}

/// Runs a subcommand and commits its artifacts.
pub fn run(cmd: Subcommand, cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.run.workers)
        .build()
        .map_err(|e| CommandError::new("cli", "worker_pool", e))?;
    pool.install(|| run_in_pool(cmd, cfg))
}

fn run_in_pool(cmd: Subcommand, cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let grid = Arc::new(
        RadialGrid::new(cfg.grid.r_max, cfg.grid.n).map_err(|e| CommandError::new("grid", "new", e))?,
    );
    let art = Artifacts::stage(&cfg.run.out).map_err(|e| CommandError::new("cli", "stage_artifacts", e))?;
    let mut ctx = Context {
        cfg,
        grid,
        art,
        summary: Vec::new(),
    };
    let failure = match cmd {
        Subcommand::CheckPotential => check_potential(&mut ctx)?,
        Subcommand::Hylomorphy => {
            hylomorphy(&mut ctx)?;
            None
        }
        Subcommand::Threshold => {
            threshold(&mut ctx)?;
            None
        }
        Subcommand::Solve => {
            solve(&mut ctx)?;
            None
        }
        Subcommand::Evolve => {
            evolve(&mut ctx)?;
            None
        }
        Subcommand::All => match check_potential(&mut ctx)? {
            Some(f) => Some(f),
            None => {
                hylomorphy(&mut ctx)?;
                threshold(&mut ctx)?;
                solve(&mut ctx)?;
                evolve(&mut ctx)?;
                None
            }
        },
    };
    let Context { art, summary, .. } = ctx;
    let out_dir = art.commit().map_err(|e| CommandError::new("cli", "commit_artifacts", e))?;
    Ok(Outcome {
        out_dir,
        summary,
        failure,
    })
}

fn write(ctx: &Context<'_>, name: &str, contents: &str) -> Result<(), CommandError> {
    ctx.art
        .write(name, contents)
        .map_err(|e| CommandError::new("cli", "write_artifact", format!("{name}: {e}")))
}

fn list(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(",")
}

fn check_potential(ctx: &mut Context<'_>) -> Result<Option<CommandError>, CommandError> {
    let pc = &ctx.cfg.potential;
    let spec = &pc.spec;
    let r = spec.admissibility_report(spec.default_s_max(), ADMISSIBILITY_SAMPLES, pc.alpha_floor);
    let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), fmt_f64);
    let mut kv = KeyValues::default();
    kv.s("preset", spec.preset().name())
        .s("coefficients", &list(&spec.preset().coefficients()))
        .f("m", spec.m())
        .s("positivity", &r.positivity.to_string())
        .s("nondegeneracy", &r.nondegeneracy.to_string())
        .s("hylomorphy", &r.hylomorphy.to_string())
        .s("growth", &r.growth.to_string())
        .s("s_bar", &opt(r.s_bar))
        .s("alpha", &opt(r.alpha))
        .f("min_ratio", r.min_ratio)
        .f("min_w", r.min_w)
        .f("w2_fd", r.w2_fd)
        .f("growth_exponent", r.growth_exponent)
        .f("growth_fit_a", r.growth_fit.0)
        .f("growth_fit_b", r.growth_fit.1)
        .f("small_s_linear", r.small_s_linear)
        .f("s_max", r.s_max)
        .s("n_samples", &r.n_samples.to_string())
        .s(
            "first_violation",
            &r.first_violation().map_or_else(|| "none".to_string(), |a| a.to_string()),
        )
        .s("pass", &r.all_pass().to_string());
    write(ctx, "admissibility.txt", &kv.finish())?;
    let verdict = if r.all_pass() { "pass" } else { "FAIL" };
    ctx.summary.push(format!(
        "check-potential: {verdict} (positivity={}, nondegeneracy={}, hylomorphy={}, growth={})",
        r.positivity, r.nondegeneracy, r.hylomorphy, r.growth
    ));
    Ok(r.first_violation().map(|a| CommandError {
        module: "potential",
        operation: "check_admissibility",
        message: format!("assumption `{a}` violated"),
    }))
}

fn build_hylomorphy(ctx: &Context<'_>) -> Result<Hylomorphy, CommandError> {
    let pc = &ctx.cfg.potential;
    Hylomorphy::new(pc.spec.clone(), pc.policy, ctx.grid.clone(), &ctx.cfg.hylomorphy.radii)
        .map_err(|e| CommandError::new("hylomorphy", "new", e))
}

fn hylomorphy(ctx: &mut Context<'_>) -> Result<(), CommandError> {
    let hc = &ctx.cfg.hylomorphy;
    let hy = build_hylomorphy(ctx)?;
    let cal = hy.calibrate(&hc.calibration_q);
    let mut csv = Csv::new(&HYLOMORPHY_COLUMNS);
    for p in hy.sweep(&hc.q_list, &cal) {
        csv.row(&[Cell::F(p.q), Cell::F(p.radius), Cell::F(p.ratio), Cell::F(p.bound), Cell::B(p.verdict)]);
    }
    write(ctx, "hylomorphy.csv", &csv.finish())?;
    let k = hy.constants();
    let m = ctx.cfg.potential.spec.m();
    let mut kv = KeyValues::default();
    kv.f("m", m)
        .f("alpha", k.alpha)
        .f("s_bar", k.s_bar)
        .f("lambda0", m)
        .f("c1", cal.c1)
        .f("c6", cal.c6)
        .s("calibration_monotone", &cal.monotone.to_string())
        .s("radii", &list(hy.radii()));
    let mut best = Vec::new();
    for (i, &q) in hc.q_list.iter().enumerate() {
        let (ratio, radius) = hy.estimate_lambda_star(q);
        let bound = qball::hylomorphy::ratio_bound(k.alpha, k.s_bar, q, radius, cal.c1, cal.c6);
        kv.f(&format!("q.{i}"), q)
            .f(&format!("lambda_star.{i}"), ratio)
            .f(&format!("best_radius.{i}"), radius)
            .f(&format!("bound.{i}"), bound)
            .s(&format!("verdict.{i}"), &(ratio < m).to_string());
        best.push(format!("q={q}: Λ*≈{ratio:.6} at R={radius}"));
    }
    write(ctx, "hylomorphy_report.txt", &kv.finish())?;
    ctx.summary.push(format!("hylomorphy: {}", best.join("; ")));
    Ok(())
}

fn threshold(ctx: &mut Context<'_>) -> Result<(), CommandError> {
    let hy = build_hylomorphy(ctx)?;
    let cal = hy.calibrate(&ctx.cfg.hylomorphy.calibration_q);
    let t = hy
        .q_threshold(&cal)
        .map_err(|e| CommandError::new("hylomorphy", "q_threshold", e))?;
    let mut kv = KeyValues::default();
    kv.f("q_est", t.q_est)
        .f("q_upper", t.q_upper)
        .f("q_analytic", t.q_analytic)
        .f("c", t.c)
        .f("c1", cal.c1)
        .f("c6", cal.c6)
        .s("iterations", &t.iterations.to_string())
        .s("predicate_at_zero", &hy.predicate(0.0).to_string())
        .s("predicate_at_upper", &hy.predicate(t.q_upper).to_string());
    write(ctx, "threshold.txt", &kv.finish())?;
    ctx.summary.push(format!(
        "threshold: q_est={:.6} (bracket [{:.6}, {:.6}], {} bisections), analytic {:.6}",
        t.q_est, t.q_est, t.q_upper, t.iterations, t.q_analytic
    ));
    Ok(())
}

/// Sweep results of one coupling.
struct CouplingSweep {
    q: f64,
    omega: Vec<SweepEntry>,
    delta: Vec<SweepEntry>,
}

fn solve(ctx: &mut Context<'_>) -> Result<(), CommandError> {
    let sc = &ctx.cfg.solver;
    let pc = &ctx.cfg.potential;
    let spec = &pc.spec;
    let m = spec.m();
    let grid = ctx.grid.clone();
    let constants = if sc.delta_list.is_empty() {
        None
    } else {
        Some(
            spec.hylomorphy_constants(pc.policy, spec.default_s_max(), ADMISSIBILITY_SAMPLES)
                .map_err(|e| CommandError::new("potential", "hylomorphy_constants", e))?,
        )
    };
    let sweeps: Vec<Result<CouplingSweep, CommandError>> = sc
        .q_values
        .par_iter()
        .map(|&q| {
            let omega = family_sweep(spec, q, &SweepList::Omega(sc.omega_list.clone()), &grid, &sc.options);
            let delta = match constants {
                None => Vec::new(),
                Some(k) => {
                    let params = qball::hylomorphy::TestStateParams::new(k.s_bar, k.alpha, sc.init_radius, q)
                        .map_err(|e| CommandError::new("hylomorphy", "test_state", e))?;
                    let init = build_test_state(&params, grid.clone())
                        .map_err(|e| CommandError::new("hylomorphy", "build_test_state", e))?;
                    let list = SweepList::Delta {
                        deltas: sc.delta_list.clone(),
                        init,
                    };
                    family_sweep(spec, q, &list, &grid, &sc.options)
                }
            };
            Ok(CouplingSweep { q, omega, delta })
        })
        .collect();
    let sweeps: Vec<CouplingSweep> = sweeps.into_iter().collect::<Result<_, _>>()?;

    let mut failures = Csv::new(&["kind", "q", "param", "operation", "error"]);
    let (mut points, mut converged, mut accepted, mut failed) = (0usize, 0usize, 0usize, 0usize);
    let mut failure_lines = Vec::new();
    for (kind, operation, file) in [
        ("omega", "solve_profile", "sweep_omega.csv"),
        ("delta", "minimize_j", "sweep_delta.csv"),
    ] {
        let mut csv = Csv::new(&SWEEP_COLUMNS);
        for (iq, s) in sweeps.iter().enumerate() {
            let entries = if kind == "omega" { &s.omega } else { &s.delta };
            for (k, e) in entries.iter().enumerate() {
                points += 1;
                match &e.result {
                    Ok(p) => {
                        converged += 1;
                        accepted += usize::from(e.accepted(m));
                        csv.row(&[
                            Cell::F(s.q),
                            Cell::F(e.param),
                            Cell::F(p.energy),
                            Cell::F(p.charge),
                            Cell::F(p.ratio),
                            Cell::F(p.res1),
                            Cell::F(p.res2),
                            Cell::F(p.u0()),
                        ]);
                        write(ctx, &format!("profiles/{kind}_q{iq:02}_{k:02}.txt"), &write_profile(p, m))?;
                    }
                    Err(err) => {
                        failed += 1;
                        let msg = err.to_string();
                        failures.row(&[Cell::S(kind), Cell::F(s.q), Cell::F(e.param), Cell::S(operation), Cell::S(&msg)]);
                        failure_lines.push(format!("{kind} q={} param={}: {msg}", s.q, e.param));
                    }
                }
            }
        }
        write(ctx, file, &csv.finish())?;
    }
    write(ctx, "failures.csv", &failures.finish())?;
    let mut kv = KeyValues::default();
    kv.s("points", &points.to_string())
        .s("converged", &converged.to_string())
        .s("accepted", &accepted.to_string())
        .s("failures", &failed.to_string());
    for (i, line) in failure_lines.iter().enumerate() {
        kv.s(&format!("failure.{i}"), line);
    }
    write(ctx, "solve_summary.txt", &kv.finish())?;
    ctx.summary.push(format!(
        "solve: {points} points, {converged} converged, {accepted} hylomorphic, {failed} failure(s)"
    ));
    ctx.summary.extend(failure_lines.into_iter().map(|l| format!("  failure: {l}")));
    Ok(())
}

fn trace_csv(row: &ProbeRow) -> String {
    let t = &row.trace;
    let mut csv = Csv::new(&TRACE_COLUMNS);
    for i in 0..t.len() {
        csv.row(&[
            Cell::F(t.t[i]),
            Cell::F(t.energy[i]),
            Cell::F(t.charge[i]),
            Cell::F(t.liapunov[i]),
            Cell::F(t.distance[i]),
            Cell::F(t.max_psi[i]),
            Cell::F(t.sponge_flux[i]),
        ]);
    }
    csv.finish()
}

fn evolve(ctx: &mut Context<'_>) -> Result<(), CommandError> {
    let dc = &ctx.cfg.dynamics;
    let spec = &ctx.cfg.potential.spec;
    let profile = solve_profile(spec, dc.q, dc.omega, &ctx.grid, &ctx.cfg.solver.options)
        .map_err(|e| CommandError::new("solver", "solve_profile", e))?;
    write(ctx, "evolve_profile.txt", &write_profile(&profile, spec.m()))?;
    let opts = EvolveOptions {
        t_final: dc.t_final,
        dt: dc.dt,
        sample_every: dc.sample_every,
        sponge: dc.sponge,
        ..EvolveOptions::default()
    };
    let runs: Vec<(Perturbation, usize, f64)> = dc
        .modes
        .iter()
        .flat_map(|&mode| dc.eps_list.iter().enumerate().map(move |(k, &eps)| (mode, k, eps)))
        .collect();
    let seed = ctx.cfg.run.seed;
    let rows: Vec<(Perturbation, usize, ProbeRow)> = runs
        .par_iter()
        .map(|&(mode, k, eps)| (mode, k, probe_run(&profile, spec, mode, eps, &opts, seed)))
        .collect();
    let norm = qball::dynamics::lift_profile(&profile).norm_sq(spec).sqrt();
    let mut probe = Csv::new(&["mode", "eps", "max_distance", "ratio", "classification", "sponge_onset", "status"]);
    let mut worst: Option<qball::dynamics::Classification> = None;
    let mut failed = 0;
    for (mode, k, row) in &rows {
        write(ctx, &format!("traces/{}_{k:02}.csv", mode.name()), &trace_csv(row))?;
        let status = row.error.as_ref().map_or_else(|| "ok".to_string(), |e| e.to_string());
        failed += usize::from(row.error.is_some());
        let onset = row.trace.sponge_onset.map_or_else(|| "none".to_string(), fmt_f64);
        probe.row(&[
            Cell::S(mode.name()),
            Cell::F(row.eps),
            Cell::F(row.max_distance),
            Cell::S(&row.ratio.map_or_else(|| "none".to_string(), fmt_f64)),
            Cell::S(row.classification.map_or("none", |c| c.name())),
            Cell::S(&onset),
            Cell::S(&status),
        ]);
        if let Some(c) = row.classification {
            worst = Some(match worst {
                Some(w) if rank(w) >= rank(c) => w,
                _ => c,
            });
        }
    }
    write(ctx, "probe.csv", &probe.finish())?;
    let mut kv = KeyValues::default();
    kv.f("q", dc.q)
        .f("omega", profile.omega)
        .f("energy", profile.energy)
        .f("charge", profile.charge)
        .f("ratio", profile.ratio)
        .f("profile_norm", norm)
        .f("t_final", dc.t_final)
        .s("runs", &rows.len().to_string())
        .s("failures", &failed.to_string())
        .s("classification", worst.map_or("none", |c| c.name()));
    write(ctx, "evolve_summary.txt", &kv.finish())?;
    ctx.summary.push(format!(
        "evolve: {} run(s), {failed} failure(s), worst classification {}",
        rows.len(),
        worst.map_or("none", |c| c.name())
    ));
    Ok(())
}

fn rank(c: qball::dynamics::Classification) -> u8 {
    use qball::dynamics::Classification::*;
    match c {
        StableLike => 0,
        Marginal => 1,
        UnstableLike => 2,
    }
}
