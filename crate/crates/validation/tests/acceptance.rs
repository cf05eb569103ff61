//! Acceptance criteria 1 to 10, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line to the real stdout, so the verdicts show
//! up even when the harness captures output.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use qball::dynamics::{
    self, lift_profile, step, DynState, EvolutionTrace, EvolveOptions, Perturbation, Reference,
};
use qball::fields::{self, FieldState};
use qball::hylomorphy::{
    build_test_state, coulomb_energy, ratio_bound, Hylomorphy, TestStateParams, DEFAULT_CALIBRATION_Q,
    DEFAULT_R_LIST,
};
use qball::solver::{
    minimize_j, penalized_functional, solve_profile, solve_profile_from, SolitonProfile, SolverError,
};
use qball::{PotentialSpec, RadialGrid};
use qball_cli::{run, RunConfig, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: usize, pass: bool, detail: &str) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn defaults() -> RunConfig {
    RunConfig::from_text("").expect("the empty configuration is valid")
}

fn default_grid(cfg: &RunConfig) -> Arc<RadialGrid> {
    Arc::new(RadialGrid::new(cfg.grid.r_max, cfg.grid.n).unwrap())
}

fn default_hylomorphy(cfg: &RunConfig) -> Hylomorphy {
    Hylomorphy::new(cfg.potential.spec.clone(), cfg.potential.policy, default_grid(cfg), &DEFAULT_R_LIST).unwrap()
}

/// `q̄_est/10` for the default potential.
fn small_coupling(cfg: &RunConfig) -> f64 {
    let h = default_hylomorphy(cfg);
    h.q_threshold(&h.calibrate(&DEFAULT_CALIBRATION_Q)).unwrap().q_est / 10.0
}

/// Gradient-flow minimizer started from the radius-`init_radius` test state.
fn flow_from_test_state(cfg: &RunConfig, q: f64, delta: f64) -> Result<SolitonProfile, SolverError> {
    let spec = cfg.potential.spec.clone();
    let k = spec
        .hylomorphy_constants(cfg.potential.policy, spec.default_s_max(), 1001)
        .unwrap();
    let params = TestStateParams::new(k.s_bar, k.alpha, cfg.solver.init_radius, q).unwrap();
    let init = build_test_state(&params, default_grid(cfg)).unwrap();
    minimize_j(&spec, q, delta, &init, &cfg.solver.options.flow).map(|r| r.profile)
}

#[test]
fn criterion_01_local_ratio_never_drops_below_the_mass() {
    let spec = PotentialSpec::default();
    let m = spec.m();
    let grid = Arc::new(RadialGrid::new(15.0, 301).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let bump = |rng: &mut ChaCha8Rng, amp: f64| {
        let (a, w, c) = (rng.gen_range(-amp..amp), rng.gen_range(0.3..5.0), rng.gen_range(0.0..12.0));
        move |r: f64| a * (-((r - c) / w).powi(2)).exp()
    };
    let (mut shells, mut worst) = (0usize, f64::INFINITY);
    for _ in 0..10_000 {
        let q = rng.gen_range(0.0..2.0);
        let mut s = FieldState::zeros(grid.clone(), q);
        let (b1, b2) = (bump(&mut rng, 3.0), bump(&mut rng, 3.0));
        s.u = grid.sample(|r| (b1(r) + b2(r)).abs());
        let (b3, b4) = (bump(&mut rng, 3.0), bump(&mut rng, 1.0));
        s.theta = grid.sample(|r| b3(r) + b4(r) * r.sin());
        let b5 = bump(&mut rng, 2.0);
        s.u_hat = grid.sample(b5);
        let b6 = bump(&mut rng, 2.0);
        s.theta_vec = grid.sample(b6);
        fields::impose_gauss(&mut s).unwrap();
        for _ in 0..4 {
            let lo: f64 = rng.gen_range(0.0..14.0);
            let hi = (lo + rng.gen_range(0.05..15.0)).min(15.0);
            if let Ok(ratio) = fields::local_ratio(&s, lo, hi, &spec) {
                shells += 1;
                worst = worst.min(ratio);
            }
        }
    }
    // Equality case: θ = m·u with u constant on the shell and no field.
    let mut eq = FieldState::zeros(grid.clone(), 0.0);
    eq.u = vec![0.7; grid.n()];
    eq.theta = eq.u.iter().map(|u| m * u).collect();
    let equality = fields::local_ratio(&eq, 2.0, 9.0, &spec).unwrap();
    let pass = worst >= m - 1e-9 && (equality - m).abs() <= 1e-9 && shells > 30_000;
    verdict(
        1,
        pass,
        &format!("min ratio {worst:.12} over {shells} shells, equality case {equality:.15}"),
    );
}

#[test]
fn criterion_02_test_state_ratio_below_mass_and_below_closed_form() {
    let cfg = defaults();
    let h = default_hylomorphy(&cfg);
    let cal = h.calibrate(&DEFAULT_CALIBRATION_Q);
    let k = h.constants();
    let mut pass = k.alpha == 0.25 && k.s_bar == 1.0;
    let mut detail = format!("alpha {} s_bar {} c1 {:.4} c6 {:.4};", k.alpha, k.s_bar, cal.c1, cal.c6);
    for q in [0.0, 1e-3, 1e-2] {
        let (ratio, radius) = h.estimate_lambda_star(q);
        let bound = ratio_bound(k.alpha, k.s_bar, q, radius, cal.c1, cal.c6);
        let direct = h.test_ratio(radius, q).unwrap();
        pass &= ratio < 1.0 && ratio <= bound + 1e-6 && (direct - ratio).abs() <= 1e-10;
        detail += &format!(" q={q}: ratio {ratio:.6} at R={radius}, bound {bound:.6};");
    }
    for p in &cal.points {
        pass &= p.ratio <= p.bound + 1e-6;
    }
    verdict(2, pass, &detail);
}

#[test]
fn criterion_03_coulomb_energy_scales_like_r5_and_q2() {
    let grid = RadialGrid::new(80.0, 8000).unwrap();
    let radii = [5.0, 10.0, 20.0, 40.0];
    let energy = |r: f64, q: f64| coulomb_energy(&TestStateParams::new(1.0, 0.25, r, q).unwrap(), &grid).unwrap();
    let xs: Vec<f64> = radii.iter().map(|r: &f64| r.ln()).collect();
    let ys: Vec<f64> = radii.iter().map(|&r| energy(r, 0.01).ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let quad = radii
        .iter()
        .map(|&r| energy(r, 0.02) / energy(r, 0.01))
        .fold(0.0f64, |w, f| w.max((f - 4.0).abs()));
    let pass = (4.5..=5.0).contains(&slope) && quad <= 1e-10;
    verdict(3, pass, &format!("log-log slope {slope:.4}, max |ratio - 4| under doubling {quad:.2e}"));
}

#[test]
fn criterion_04_coupling_threshold_exists() {
    let cfg = defaults();
    let h = default_hylomorphy(&cfg);
    let t = h.q_threshold(&h.calibrate(&DEFAULT_CALIBRATION_Q)).unwrap();
    let at_zero = h.predicate(0.0);
    let at_ceiling = h.predicate(t.q_upper);
    let width = (t.q_upper - t.q_est) / t.q_est;
    let pass = t.q_est > 0.0 && at_zero && !at_ceiling && t.iterations <= 40 && width <= 0.01;
    verdict(
        4,
        pass,
        &format!(
            "q_est {:.6}, ceiling {:.6}, relative width {width:.2e}, {} bisections, analytic {:.4}",
            t.q_est, t.q_upper, t.iterations, t.q_analytic
        ),
    );
}

#[test]
fn criterion_05_stationary_residuals_and_flow_agreement() {
    let cfg = defaults();
    let spec = cfg.potential.spec.clone();
    let grid = default_grid(&cfg);
    let opts = &cfg.solver.options;
    let q_small = small_coupling(&cfg);
    let mut pass = true;
    let mut detail = String::new();
    for q in [0.0, q_small] {
        match solve_profile(&spec, q, 0.8, &grid, opts) {
            Ok(p) => {
                pass &= p.res1 < 1e-6 && p.res2 < 1e-6;
                detail += &format!("fixed point q={q:.5}: res {:.1e} {:.1e}; ", p.res1, p.res2);
            }
            Err(e) => {
                pass = false;
                detail += &format!("fixed point q={q:.5}: {e}; ");
            }
        }
    }
    match flow_from_test_state(&cfg, q_small, 1e-4) {
        Ok(flow) => {
            pass &= flow.res1 < 1e-4 && flow.res2 < 1e-4;
            detail += &format!("flow: res {:.1e} {:.1e}, omega {:.6}; ", flow.res1, flow.res2, flow.omega);
            match solve_profile_from(&spec, q_small, flow.omega, &grid, opts, Some(&flow.phi)) {
                Ok(polished) => {
                    let d = polished.distance(&flow, &spec).unwrap();
                    pass &= d <= 1e-3;
                    detail += &format!("energy-norm distance to polished fixed point {d:.2e}");
                }
                Err(e) => {
                    pass = false;
                    detail += &format!("polish: {e}");
                }
            }
        }
        Err(e) => {
            pass = false;
            detail += &format!("flow: {e}");
        }
    }
    verdict(5, pass, &detail);
}

fn csv_column(path: &Path, column: &str) -> Vec<f64> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == column).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().parse().unwrap()).collect()
}

#[test]
fn criterion_06_accepted_sweep_profiles_are_hylomorphic() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = defaults();
    cfg.run.out = dir.path().join("out");
    let outcome = run(Subcommand::Solve, &cfg).unwrap();
    let mut lambdas = csv_column(&outcome.out_dir.join("sweep_omega.csv"), "Lambda");
    let omega_rows = lambdas.len();
    lambdas.extend(csv_column(&outcome.out_dir.join("sweep_delta.csv"), "Lambda"));
    let worst = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pass = omega_rows > 0 && worst < 1.0;
    verdict(
        6,
        pass,
        &format!("{} accepted profiles ({omega_rows} fixed-frequency), largest Lambda {worst:.6}", lambdas.len()),
    );
}

#[test]
fn criterion_07_penalty_weights_give_distinct_solitons() {
    let cfg = defaults();
    let q = small_coupling(&cfg);
    let (d1, d2) = (1e-3, 1e-2);
    let a = flow_from_test_state(&cfg, q, d1);
    let b = flow_from_test_state(&cfg, q, d2);
    let (pass, detail) = match (&a, &b) {
        (Ok(a), Ok(b)) => {
            let rel = (a.energy - b.energy).abs() / a.energy;
            (rel > 1e-3, format!("E({d1}) {:.6}, E({d2}) {:.6}, relative gap {rel:.3e}", a.energy, b.energy))
        }
        _ => (
            false,
            format!(
                "q={q:.5}: delta {d1}: {}; delta {d2}: {}",
                a.as_ref().map_or_else(|e| e.to_string(), |p| format!("E {:.6}", p.energy)),
                b.as_ref().map_or_else(|e| e.to_string(), |p| format!("E {:.6}", p.energy)),
            ),
        ),
    };
    verdict(7, pass, &detail);
}

#[test]
fn criterion_08_conservation_over_long_run() {
    let cfg = defaults();
    let spec = cfg.potential.spec.clone();
    let grid = default_grid(&cfg);
    let dc = &cfg.dynamics;
    let profile = solve_profile(&spec, dc.q, dc.omega, &grid, &cfg.solver.options).unwrap();
    let reference = Reference::from_profile(&profile);
    let opts = EvolveOptions {
        t_final: 200.0 / spec.m(),
        sample_every: dc.sample_every,
        sponge: dc.sponge,
        ..EvolveOptions::default()
    };
    let (_, trace) = dynamics::evolve(lift_profile(&profile), &spec, &reference, &opts).unwrap();
    let clean = trace.clean_len();
    let de = EvolutionTrace::relative_drift(&trace.energy, clean);
    let dc_ = EvolutionTrace::relative_drift(&trace.charge, clean);
    let v_max = trace.liapunov.iter().copied().fold(0.0f64, f64::max);
    let v_scale = reference.energy.powi(2) + reference.charge.powi(2);
    let pass = clean == trace.len() && de <= 1e-5 && dc_ <= 1e-5 && v_max <= 1e-6 * v_scale;
    verdict(
        8,
        pass,
        &format!(
            "T={}, {} samples, drift E {de:.2e}, drift C {dc_:.2e}, max V / (e0^2+c0^2) {:.2e}",
            opts.t_final,
            trace.len(),
            v_max / v_scale
        ),
    );
}

#[test]
fn criterion_09_stability_probe_is_stable_like() {
    let cfg = defaults();
    let spec = cfg.potential.spec.clone();
    let grid = default_grid(&cfg);
    let dc = &cfg.dynamics;
    let profile = solve_profile(&spec, dc.q, dc.omega, &grid, &cfg.solver.options).unwrap();
    let opts = EvolveOptions {
        t_final: 200.0 / spec.m(),
        sample_every: dc.sample_every,
        sponge: dc.sponge,
        ..EvolveOptions::default()
    };
    let report = dynamics::stability_probe(&profile, &spec, &[0.01], &Perturbation::ALL, &opts, cfg.run.seed);
    let mut pass = profile.is_hylomorphic(spec.m()) && report.rows.len() == 3;
    let mut detail = format!("q={} omega={} Lambda {:.4};", profile.q, profile.omega, profile.ratio);
    for row in &report.rows {
        match (row.ratio, &row.error) {
            (Some(ratio), None) => {
                pass &= ratio <= 10.0;
                detail += &format!(" {} {ratio:.3};", row.mode.name());
            }
            (_, e) => {
                pass = false;
                detail += &format!(" {}: {:?};", row.mode.name(), e);
            }
        }
    }
    verdict(9, pass, &detail);
}

/// Smooth, even radial data; odd powers of `r` would put a kink at the origin.
fn pulse(grid: &Arc<RadialGrid>, q: f64) -> DynState {
    let psi_re = grid.sample(|r| 0.6 * (-r * r / 4.0).exp());
    let psi_im = grid.sample(|r| 0.2 * (-r * r / 2.0).exp());
    let pi_re = grid.sample(|r| 0.1 * (-r * r / 3.0).exp());
    let pi_im = grid.sample(|r| -0.5 * (-r * r / 4.0).exp());
    DynState::new(grid.clone(), q, (psi_re, psi_im), (pi_re, pi_im)).unwrap()
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_10_numerical_hygiene() {
    let spec = PotentialSpec::default();

    // Gradient of the penalized functional against central differences.
    let grid = RadialGrid::new(20.0, 401).unwrap();
    let u = grid.sample(|r| 0.8 * (-r * r / 8.0).exp());
    let theta = grid.sample(|r| 0.3 * (-r * r / 6.0).exp());
    let (q, delta) = (0.1, 1e-3);
    let v = penalized_functional(&spec, delta, q, &grid, &u, &theta).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut grad_err = 0.0f64;
    for _ in 0..10 {
        let (w, c): (f64, f64) = (rng.gen_range(0.5..3.0), rng.gen_range(0.0..8.0));
        let du = grid.sample(|r| (-((r - c) / w).powi(2)).exp());
        let dt: Vec<f64> = (0..grid.n()).map(|i| rng.gen_range(-1.0..1.0) * (-grid.radius(i) / w).exp()).collect();
        let j_at = |h: f64| {
            let uu: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + h * b).collect();
            let tt: Vec<f64> = theta.iter().zip(&dt).map(|(a, b)| a + h * b).collect();
            penalized_functional(&spec, delta, q, &grid, &uu, &tt).unwrap().j
        };
        let fd = (j_at(1e-6) - j_at(-1e-6)) / 2e-6;
        let an: f64 = v.grad_u.iter().zip(&du).map(|(a, b)| a * b).sum::<f64>()
            + v.grad_theta.iter().zip(&dt).map(|(a, b)| a * b).sum::<f64>();
        grad_err = grad_err.max((fd - an).abs() / an.abs());
    }

    // Time-step self-convergence of the integrator.
    let g = Arc::new(RadialGrid::new(20.0, 401).unwrap());
    let at = |dt: f64| {
        let mut s = pulse(&g, 0.3);
        for _ in 0..(2.0 / dt).round() as usize {
            step(&mut s, &spec, dt).unwrap();
        }
        s
    };
    let (s1, s2, s4) = (at(0.02), at(0.01), at(0.005));
    let time_order = (s1.distance_sq(&s2, &spec).sqrt() / s2.distance_sq(&s4, &spec).sqrt()).log2();

    // Spatial convergence of the energy quadrature.
    let e_at = |n: usize| {
        let g = Arc::new(RadialGrid::new(12.0, n).unwrap());
        let mut s = FieldState::zeros(g.clone(), 0.5);
        s.u = g.sample(|r| 0.8 * (-r * r / 4.0).exp());
        s.theta = g.sample(|r| 0.5 * (-r * r / 4.0).exp() * (1.0 + 0.2 * r));
        s.u_hat = g.sample(|r| 0.2 * (-r * r / 2.0).exp());
        fields::impose_gauss(&mut s).unwrap();
        fields::energy(&s, &spec).unwrap()
    };
    let (a, b, c) = (e_at(241), e_at(481), e_at(961));
    let space_order = ((a - b) / (b - c)).abs().log2();

    // Byte-identical reruns of the full pipeline, with different worker counts.
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\nr_max = 40\nn = 2000\n[solver]\nq = 0, 0.02\nomega_list = 0.7, 0.8\ndelta_list = 1e-4\n\
                [dynamics]\nt_final = 2\nsample_every = 20\neps_list = 0, 0.01\n[run]\nseed = 3\n";
    let mut trees = Vec::new();
    for (name, workers) in [("a", 1), ("b", 2)] {
        let mut cfg = RunConfig::from_text(text).unwrap();
        cfg.run.out = dir.path().join(name);
        cfg.run.workers = workers;
        let outcome = run(Subcommand::All, &cfg).unwrap();
        assert!(outcome.failure.is_none());
        trees.push(tree(&outcome.out_dir));
    }
    let identical = !trees[0].is_empty() && trees[0] == trees[1];

    let pass = grad_err <= 1e-5 && time_order >= 1.9 && space_order >= 1.9 && identical;
    verdict(
        10,
        pass,
        &format!(
            "gradient rel. error {grad_err:.2e}, time order {time_order:.3}, quadrature order {space_order:.3}, \
             reruns identical {identical} ({} files)",
            trees[0].len()
        ),
    );
}
