//! Experiment orchestration: every run validates the hypotheses first,
//! dispatches to the owning module, writes CSV artifacts and a JSON report,
//! and returns the report (exit code 0 all-pass / 1 check failure / 2 error
//! at the CLI).  Identical configs produce byte-identical artifacts; all
//! randomness flows from the config seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::energy::{
    check_growth_bound, check_two_sided_bounds, energy_trace, fit_decay_exponent,
};
use crate::error::{Error, Result};
use crate::greens::{build_kernel_even, build_kernel_odd, certify_asymptotics, green_limit, log_grid};
use crate::hypotheses::check_hypotheses;
use crate::nonlinear::{critical_point_search, small_solution, DualContext};
use crate::normscan::{ball_norm_profile, classify_strichartz_threshold};
use crate::profile::CoefficientProfile;
use crate::quad::linear_fit;
use crate::report::{write_csv, CheckResult, Report};
use crate::resolvent::{bump, convolve_kernel, homogeneous_pair, norm_probe};
use crate::solver::{solve_radial_ivp, zero_spacing_at};

pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            out_dir: PathBuf::from("out"),
            seed: None,
            jobs: 1,
        }
    }
}

pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut report = Report::new(cfg.kind.name(), cfg.echo.clone(), seed);
    let started = Instant::now();

    // hypothesis gate: failures abort before any solving
    let hyp = check_hypotheses(&cfg.geometry, &cfg.coeffs, cfg.r_max.max(20.0), 1e-4);
    report.checks.push(CheckResult::new(
        "hypotheses_h1_h2_h3",
        hyp.all_ok(),
        hyp.margin,
        0.0,
        hyp.r_max,
    ));
    if !hyp.all_ok() {
        report.wall_clock_s = started.elapsed().as_secs_f64();
        let msg = hyp.failure_message().unwrap_or_default();
        report.checks.push(CheckResult::new(
            &format!("aborted: {msg}"),
            false,
            f64::NAN,
            0.0,
            0.0,
        ));
        let path = opts.out_dir.join("report.json");
        report.write_json(&path)?;
        return Ok(report);
    }

    match cfg.kind {
        ExperimentKind::Solve | ExperimentKind::Zeros => run_solve(cfg, opts, &mut report)?,
        ExperimentKind::Energy => run_energy(cfg, opts, &mut report)?,
        ExperimentKind::Green => run_green(cfg, opts, &mut report)?,
        ExperimentKind::Resolvent => run_resolvent(cfg, opts, seed, &mut report)?,
        ExperimentKind::SmallSol => run_smallsol(cfg, opts, &mut report)?,
        ExperimentKind::DualVar => run_dualvar(cfg, opts, seed, &mut report)?,
        ExperimentKind::Strichartz => run_strichartz(cfg, opts, &mut report)?,
        ExperimentKind::Sweep => run_sweep(cfg, opts, &mut report)?,
    }

    report.wall_clock_s = started.elapsed().as_secs_f64();
    report.write_json(&opts.out_dir.join("report.json"))?;
    Ok(report)
}

fn artifact(report: &mut Report, opts: &RunOptions, name: &str) -> PathBuf {
    report.artifacts.push(name.to_string());
    opts.out_dir.join(name)
}

/// Zero-spacing checks shared by solve/zeros/sweep: spacing at the 30th
/// zero against pi / sqrt(V_inf - kappa^2 / 4), plus linear zero counting.
fn spacing_checks(
    sol: &crate::solver::RadialSolution,
    cfg_margin: f64,
    checks: &mut Vec<CheckResult>,
) {
    let predicted = std::f64::consts::PI / cfg_margin.sqrt();
    if sol.zeros.len() > 30 {
        if let Ok(spac) = zero_spacing_at(sol, 30) {
            checks.push(CheckResult::le(
                "zero_spacing_at_30th",
                (spac - predicted).abs(),
                1e-3,
                sol.zeros[30],
            ));
        }
        // zero count growth is linear in R
        let quarters: Vec<f64> = (1..=4).map(|k| sol.r_max * k as f64 / 4.0).collect();
        let counts: Vec<f64> = quarters
            .iter()
            .map(|&cap| sol.zeros.iter().filter(|&&z| z <= cap).count() as f64)
            .collect();
        let (slope, intercept) = linear_fit(&quarters, &counts);
        let worst_dev = quarters
            .iter()
            .zip(&counts)
            .map(|(&x, &c)| (c - (slope * x + intercept)).abs())
            .fold(0.0f64, f64::max);
        checks.push(CheckResult::le(
            "zero_count_linear_in_radius",
            worst_dev,
            1.5,
            sol.r_max,
        ));
        checks.push(CheckResult::le(
            "zero_count_slope",
            (slope - cfg_margin.sqrt() / std::f64::consts::PI).abs()
                / (cfg_margin.sqrt() / std::f64::consts::PI),
            0.05,
            sol.r_max,
        ));
    }
}

fn margin_of(cfg: &ExperimentConfig) -> f64 {
    cfg.coeffs.v_inf() - 0.25 * cfg.geometry.kappa() * cfg.geometry.kappa()
}

fn run_solve(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut Report) -> Result<()> {
    let sol = solve_radial_ivp(&cfg.geometry, &cfg.coeffs, cfg.gamma0, cfg.r_max, cfg.tol)?;
    report.checks.push(CheckResult::le(
        "solver_defect_ratio",
        sol.stats.max_defect_ratio,
        1.0,
        sol.r_max,
    ));
    let constant_coeffs = matches!(
        cfg.coeffs.v,
        crate::profile::RadialProfile::Constant(_)
    ) && (cfg.coeffs.gamma.is_zero()
        || matches!(cfg.coeffs.gamma, crate::profile::RadialProfile::Constant(_)));
    if constant_coeffs {
        spacing_checks(&sol, margin_of(cfg), &mut report.checks);
    }

    let path = artifact(report, opts, "solution.csv");
    write_csv(&path, &["r", "u", "du"], &[&sol.grid, &sol.u, &sol.du])?;
    if cfg.kind == ExperimentKind::Zeros {
        let path = artifact(report, opts, "zeros.csv");
        let idx: Vec<f64> = (1..=sol.zeros.len()).map(|i| i as f64).collect();
        write_csv(&path, &["index", "r"], &[&idx, &sol.zeros])?;
    }
    Ok(())
}

fn run_energy(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut Report) -> Result<()> {
    let sol = solve_radial_ivp(&cfg.geometry, &cfg.coeffs, cfg.gamma0, cfg.r_max, cfg.tol)?;
    let trace = energy_trace(&sol, &cfg.geometry, &cfg.coeffs)?;
    report.checks.push(CheckResult::le(
        "z0_identity",
        (trace.z[0] - trace.z0).abs(),
        1e-12 * trace.z0.abs().max(1e-300),
        0.0,
    ));
    report
        .checks
        .extend(check_growth_bound(&trace, &cfg.coeffs, 1e-8, 0.01));
    match check_two_sided_bounds(&trace) {
        Ok(b) => {
            report.checks.push(CheckResult::new(
                "two_sided_ratio",
                b.c_lower > 0.0 && b.c_upper.is_finite(),
                b.c_upper / b.c_lower,
                f64::INFINITY,
                b.onset,
            ));
        }
        Err(e) => report.checks.push(CheckResult::new(
            &format!("two_sided_ratio_unavailable: {e}"),
            true,
            f64::NAN,
            0.0,
            0.0,
        )),
    }
    if let Ok(sigma) = fit_decay_exponent(&sol) {
        report.checks.push(CheckResult::le(
            "decay_exponent_vs_kappa_half",
            (sigma - 0.5 * cfg.geometry.kappa()).abs() / (0.5 * cfg.geometry.kappa()).max(1e-9),
            0.01,
            sol.r_max,
        ));
    }

    let path = artifact(report, opts, "energy_trace.csv");
    write_csv(
        &path,
        &["r", "u", "du", "Z", "psi", "c", "f", "ratio"],
        &[
            &trace.grid,
            &trace.u,
            &trace.du,
            &trace.z,
            &trace.psi,
            &trace.c,
            &trace.f,
            &trace.ratio,
        ],
    )?;
    Ok(())
}

fn run_green(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut Report) -> Result<()> {
    let n = cfg.dim;
    let t_small = log_grid(1e-3, 1.0, 40);
    let t_large: Vec<f64> = (0..40).map(|i| 1.0 + 14.0 * i as f64 / 39.0).collect();
    let kern = if n % 2 == 1 {
        build_kernel_odd(n, cfg.lambda, 0.0)?
    } else {
        build_kernel_even(n, cfg.lambda, cfg.mu)?
    };
    let rep = certify_asymptotics(&kern, &t_small, &t_large, 1e-9)?;
    report.checks.push(CheckResult::new(
        "kernel_asymptotics_certified",
        rep.pass,
        rep.large_t_sup,
        f64::INFINITY,
        15.0,
    ));
    // mu -> 0 limit stability probe at a few radii
    let mut worst = (0.0f64, 0.0f64);
    for &t in &[0.5, 1.0, 2.0, 5.0] {
        let gl = green_limit(n, cfg.lambda, t, 1e-7)?;
        if gl.error_estimate > worst.1 {
            worst = (t, gl.error_estimate);
        }
    }
    report
        .checks
        .push(CheckResult::le("green_limit_stability", worst.1, 1e-6, worst.0));

    // kernel table
    let ts: Vec<f64> = (1..=300).map(|i| 15.0 * i as f64 / 300.0).collect();
    let mut re = Vec::with_capacity(ts.len());
    let mut im = Vec::with_capacity(ts.len());
    for &t in &ts {
        let g = kern.eval(t, 1e-9)?;
        re.push(g.re);
        im.push(g.im);
    }
    let path = artifact(report, opts, "kernel.csv");
    write_csv(&path, &["t", "ReG", "ImG"], &[&ts, &re, &im])?;
    Ok(())
}

fn run_resolvent(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: u64,
    report: &mut Report,
) -> Result<()> {
    let pair = homogeneous_pair(&cfg.geometry, cfg.lambda, cfg.r_max, cfg.tol, cfg.grid_n)?;
    report
        .checks
        .push(CheckResult::le("abel_wronskian_drift", pair.w_drift, 1e-8, pair.r_max));

    let g: Vec<f64> = pair
        .grid
        .iter()
        .map(|&r| bump((r - cfg.bump_center) / cfg.bump_width))
        .collect();
    let field = pair.apply_resolvent(&g)?;
    let (res_r, res_e) = pair.residuals(&field, &g);
    report
        .checks
        .push(CheckResult::le("helmholtz_residual", res_r, 1e-7, 0.0));
    report
        .checks
        .push(CheckResult::le("homogeneous_part_residual", res_e, 1e-7, 0.0));

    if cfg.check_convolution && (cfg.dim == 2 || cfg.dim == 3) {
        let out_grid: Vec<f64> = (0..=40).map(|i| 5.0 * i as f64 / 40.0).collect();
        let center = cfg.bump_center;
        let width = cfg.bump_width;
        let gf = move |r: f64| bump((r - center) / width);
        let conv = convolve_kernel(
            cfg.dim,
            cfg.lambda,
            &gf,
            (center - width, center + width),
            &out_grid,
            1e-7,
        )?;
        let mut worst = 0.0f64;
        for (k, &r0) in out_grid.iter().enumerate() {
            let idx = (r0 / pair.h).round() as usize;
            worst = worst.max((conv[k] - field.re[idx]).abs());
        }
        report
            .checks
            .push(CheckResult::le("route_agreement", worst, 1e-5, 5.0));
    }

    let probe = norm_probe(&pair, cfg.dim, cfg.pq.0, cfg.pq.1, 20, seed)?;
    report.checks.push(CheckResult::le(
        "norm_probe_stabilization",
        probe.stabilization,
        10.0,
        probe.max_ratio,
    ));

    let path = artifact(report, opts, "resolvent_field.csv");
    write_csv(
        &path,
        &["r", "re", "im"],
        &[&field.grid, &field.re, &field.im],
    )?;
    Ok(())
}

fn run_smallsol(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut Report) -> Result<()> {
    let sol = small_solution(
        &cfg.geometry,
        cfg.lambda,
        &cfg.coeffs.gamma,
        cfg.coeffs.p,
        cfg.epsilon,
        cfg.r_max,
        cfg.tol,
        cfg.max_iter,
        cfg.grid_n,
    )?;
    report.checks.push(CheckResult::new(
        "fixed_point_converged",
        sol.history.converged,
        sol.history.iterations as f64,
        cfg.max_iter as f64,
        0.0,
    ));
    report.checks.push(CheckResult::le(
        "nlh_residual",
        sol.history.final_residual,
        1e-8,
        0.0,
    ));
    report
        .checks
        .push(CheckResult::le("cutoff_sup_u", sol.history.sup_norm, 0.5, 0.0));

    let path = artifact(report, opts, "small_solution.csv");
    write_csv(
        &path,
        &["r", "u", "du"],
        &[&sol.field.grid, &sol.field.u, &sol.field.du],
    )?;
    let path = artifact(report, opts, "iteration_history.csv");
    let iters: Vec<f64> = (1..=sol.history.step_norms.len()).map(|i| i as f64).collect();
    write_csv(&path, &["iter", "step_norm"], &[&iters, &sol.history.step_norms])?;
    Ok(())
}

fn run_dualvar(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    seed: u64,
    report: &mut Report,
) -> Result<()> {
    let pair = homogeneous_pair(&cfg.geometry, cfg.lambda, cfg.r_max, cfg.tol, cfg.grid_n)?;
    let ctx = DualContext::new(&pair, &cfg.coeffs.gamma, cfg.coeffs.p, cfg.dim)?;
    let state = critical_point_search(&ctx, 1e-4, cfg.max_iter, seed)?;
    report
        .checks
        .push(CheckResult::le("dual_relative_residual", state.rel_residual, 1e-4, 0.0));
    report
        .checks
        .push(CheckResult::le("recovered_nlh_residual", state.nlh_residual, 1e-3, 0.0));
    report.checks.push(CheckResult::new(
        "mountain_pass_geometry",
        state.j_ray_max > 0.0 && state.j_far < 0.0,
        state.j_ray_max,
        0.0,
        0.0,
    ));

    let path = artifact(report, opts, "dual_variable.csv");
    write_csv(&path, &["r", "v"], &[&state.grid, &state.v])?;
    let path = artifact(report, opts, "recovered_field.csv");
    write_csv(&path, &["r", "u", "du"], &[&state.grid, &state.u, &state.du])?;
    Ok(())
}

fn run_strichartz(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut Report) -> Result<()> {
    let rep = classify_strichartz_threshold(
        &cfg.geometry,
        cfg.lambda,
        &cfg.r_exponents,
        &cfg.radii,
        cfg.tol.max(1e-9),
    )?;
    let straddles = cfg.r_exponents.iter().any(|&e| e <= 2.0)
        && cfg.r_exponents.iter().any(|&e| e > 2.0);
    report.checks.push(CheckResult::new(
        "threshold_bracketed",
        rep.bracketed || !straddles,
        rep.lower.unwrap_or(f64::NAN),
        2.0,
        rep.upper.unwrap_or(f64::NAN),
    ));
    if straddles {
        report.checks.push(CheckResult::new(
            "threshold_at_two",
            rep.lower == Some(2.0),
            rep.lower.unwrap_or(f64::NAN),
            2.0,
            0.0,
        ));
    }

    // per-exponent profiles over the configured radii
    let coeffs = CoefficientProfile::helmholtz(
        &cfg.geometry,
        cfg.lambda,
        crate::profile::RadialProfile::Zero,
        3.0,
    )?;
    let sol = solve_radial_ivp(
        &cfg.geometry,
        &coeffs,
        1.0,
        *cfg.radii.last().unwrap(),
        cfg.tol.max(1e-9),
    )?;
    for &r_exp in &cfg.r_exponents {
        let profile = ball_norm_profile(&sol, &cfg.geometry, &coeffs, r_exp, &cfg.radii)?;
        let path = artifact(report, opts, &format!("norms_r{r_exp}.csv"));
        write_csv(&path, &["R", "norm"], &[&profile.radii, &profile.norms])?;
    }
    Ok(())
}

fn run_sweep(cfg: &ExperimentConfig, opts: &RunOptions, report: &mut Report) -> Result<()> {
    // gamma0 x p sweep of the two-sided bound; pooled interval must stay
    // within a fixed ratio
    let mut jobs = Vec::new();
    for &p in &cfg.sweep_p {
        for &g0 in &cfg.sweep_gamma0 {
            jobs.push((p, g0));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Solver(format!("thread pool: {e}")))?;
    let results: Result<Vec<(f64, f64, f64, f64)>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, g0)| {
                let coeffs = CoefficientProfile::helmholtz(
                    &cfg.geometry,
                    cfg.lambda,
                    cfg.coeffs.gamma.clone(),
                    p,
                )?;
                let sol = solve_radial_ivp(&cfg.geometry, &coeffs, g0, cfg.r_max, cfg.tol)?;
                let trace = energy_trace(&sol, &cfg.geometry, &coeffs)?;
                let b = check_two_sided_bounds(&trace)?;
                Ok((p, g0, b.c_lower, b.c_upper))
            })
            .collect()
    });
    let results = results?;

    let pooled_lo = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let pooled_hi = results.iter().map(|r| r.3).fold(0.0f64, f64::max);
    report.checks.push(CheckResult::le(
        "pooled_two_sided_ratio",
        pooled_hi / pooled_lo,
        100.0,
        pooled_lo,
    ));

    let path = artifact(report, opts, "sweep.csv");
    let ps: Vec<f64> = results.iter().map(|r| r.0).collect();
    let g0s: Vec<f64> = results.iter().map(|r| r.1).collect();
    let lows: Vec<f64> = results.iter().map(|r| r.2).collect();
    let highs: Vec<f64> = results.iter().map(|r| r.3).collect();
    write_csv(
        &path,
        &["p", "gamma0", "c_lower", "c_upper"],
        &[&ps, &g0s, &lows, &highs],
    )?;
    Ok(())
}

/// Extract plot series from a report artifact (columns by name).
pub fn emit_plot_data(
    report: &Report,
    out_dir: &Path,
    artifact_name: &str,
    series: &[&str],
) -> Result<PathBuf> {
    if !report.artifacts.iter().any(|a| a == artifact_name) {
        return Err(Error::MissingArtifact(format!(
            "report has no artifact {artifact_name:?} (have {:?})",
            report.artifacts
        )));
    }
    let src = out_dir.join(artifact_name);
    let dst = out_dir.join(format!("plot_{}.csv", series.join("_")));
    crate::report::emit_plot_data(&src, series, &dst)
}
