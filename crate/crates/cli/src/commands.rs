use std::path::PathBuf;

use serde::Serialize;

use crate::args::{CheckLemmasArgs, Claim, Command, DemoExplosionArgs, RateArgs, RegimeArg, SimulateArgs, SkeletonArgs, Suite, VerifyLdpArgs};
use crate::config::merge;
use crate::inputs::{initial_profile, load_control, parse_event, parse_grid};
use crate::report::{control_table, trajectory_table, Report, Status, Table};
use crate::CliError;
use fw_srde::coefficients::hypothesis_suite;
use fw_srde::gronwall::gronwall_suite;
use fw_srde::heat_kernel::kernel_inequality_suite;
use fw_srde::ldp::{c1_experiment, c2_experiment, ldp_curve, DEFAULT_C2_DELTA, DEFAULT_C2_EPS, DEFAULT_EPS_GRID, DEFAULT_M_LIST};
use fw_srde::noise::{sample_stats, SampleStats};
use fw_srde::rate::minimize_rate_endpoint;
use fw_srde::skeleton::{solve_skeleton_lipschitz, solve_skeleton_mollified, DEFAULT_N_SCHEDULE};
use fw_srde::spde::{ensemble, explosion_demo, solve_spde};
use fw_srde::{builtin, Error, GridSpec, InequalityReport, OptimizerConfig, Regime, SkeletonOptions, SolveConfig};

const DEFAULT_SEED: u64 = 0;

pub fn dispatch(command: Command) -> Result<(Report, Option<PathBuf>), CliError> {
    let name = command.name();
    match command {
        Command::Simulate(a) => {
            let out = a.io.out.clone();
            let merged = merge(name, &a, a.io.config.as_deref())?;
            Ok((simulate(merged)?, out))
        }
        Command::Skeleton(a) => {
            let out = a.io.out.clone();
            let merged = merge(name, &a, a.io.config.as_deref())?;
            Ok((skeleton(merged)?, out))
        }
        Command::Rate(a) => {
            let out = a.io.out.clone();
            let merged = merge(name, &a, a.io.config.as_deref())?;
            Ok((rate(merged)?, out))
        }
        Command::VerifyLdp(a) => {
            let out = a.io.out.clone();
            let merged = merge(name, &a, a.io.config.as_deref())?;
            Ok((verify_ldp(merged)?, out))
        }
        Command::CheckLemmas(a) => {
            let out = a.io.out.clone();
            let merged = merge(name, &a, a.io.config.as_deref())?;
            Ok((check_lemmas(merged)?, out))
        }
        Command::DemoExplosion(a) => {
            let out = a.io.out.clone();
            let merged = merge(name, &a, a.io.config.as_deref())?;
            Ok((demo_explosion(merged)?, out))
        }
    }
}

fn grid_or_default(grid: &Option<String>) -> Result<GridSpec, CliError> {
    grid.as_deref().map(parse_grid).transpose().map(Option::unwrap_or_default)
}

#[derive(Serialize)]
struct SimulateConfig {
    coeff: String,
    eps: f64,
    grid: String,
    samples: usize,
    seed: u64,
    streams: u64,
    u0: String,
    control: Option<String>,
}

#[derive(Serialize)]
struct SingleRun {
    value_at_origin: f64,
    max_abs: f64,
    weighted_sup: f64,
    log_weight: Option<f64>,
}

#[derive(Serialize)]
struct EnsembleRun {
    samples: usize,
    origin: Option<SampleStats>,
    /// Mean likelihood ratio, present for controlled runs.
    mean_weight: Option<f64>,
}

fn simulate(a: SimulateArgs) -> Result<Report, CliError> {
    let grid = grid_or_default(&a.grid)?;
    let cfg = SimulateConfig {
        coeff: a.coeff.unwrap_or_else(|| "zero_drift_unit_sigma".into()),
        eps: a.eps.unwrap_or(1.0),
        grid: grid.to_string(),
        samples: a.samples.unwrap_or(1),
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        streams: a.streams.unwrap_or(0),
        u0: a.u0.unwrap_or_else(|| "zero".into()),
        control: a.control,
    };
    if cfg.samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let mut solve = SolveConfig::new(builtin(&cfg.coeff)?, grid, cfg.eps)
        .with_u0(initial_profile(&cfg.u0, grid)?)
        .with_seed(cfg.seed, cfg.streams);
    if let Some(c) = &cfg.control {
        solve = solve.with_control(load_control(c, grid)?);
    }
    let o = grid.origin_index();
    if cfg.samples == 1 {
        let sol = solve_spde(&solve)?;
        let result = SingleRun {
            value_at_origin: sol.path.at(grid.time_steps, o),
            max_abs: sol.path.max_abs(),
            weighted_sup: sol.weighted_sup,
            log_weight: sol.log_weight,
        };
        return Ok(Report::new("simulate", &cfg, &result)?.with_table(trajectory_table(&sol.path)));
    }
    let ends = ensemble(&solve, cfg.samples, |e| (e.last.to_vec(), e.log_weight))?;
    let n = cfg.samples as f64;
    let mut table = Table::new("profile", &["x_index", "x", "mean", "variance"]);
    for j in 0..grid.space_points {
        let mean = ends.iter().map(|(u, _)| u[j]).sum::<f64>() / n;
        let var = ends.iter().map(|(u, _)| (u[j] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        table.push(vec![j.into(), grid.x(j).into(), mean.into(), var.into()]);
    }
    let at_origin: Vec<f64> = ends.iter().map(|(u, _)| u[o]).collect();
    let result = EnsembleRun {
        samples: cfg.samples,
        origin: (cfg.samples >= 3).then(|| sample_stats(&at_origin)).transpose()?,
        mean_weight: cfg.control.as_ref().map(|_| ends.iter().map(|(_, w)| w.exp()).sum::<f64>() / n),
    };
    Ok(Report::new("simulate", &cfg, &result)?.with_table(table))
}

#[derive(Serialize)]
struct SkeletonConfig {
    coeff: String,
    control: String,
    grid: String,
    regime: RegimeArg,
    u0: String,
    tol: f64,
    max_iter: usize,
    n_schedule: Vec<u32>,
    gap_tol: f64,
}

#[derive(Serialize)]
struct PicardRun {
    iterations: usize,
    residual: f64,
    max_abs: f64,
}

fn skeleton(a: SkeletonArgs) -> Result<Report, CliError> {
    let grid = grid_or_default(&a.grid)?;
    let coeff_name = a.coeff.unwrap_or_else(|| "linear".into());
    let set = builtin(&coeff_name)?;
    let defaults = SkeletonOptions::default();
    let cfg = SkeletonConfig {
        regime: a.regime.unwrap_or(match set.regime {
            Regime::H0Lipschitz { .. } => RegimeArg::H0,
            Regime::H1LogLipschitz(_) => RegimeArg::H1,
        }),
        coeff: coeff_name,
        control: a.control.unwrap_or_else(|| "gaussian".into()),
        grid: grid.to_string(),
        u0: a.u0.unwrap_or_else(|| "zero".into()),
        tol: a.tol.unwrap_or(defaults.tol),
        max_iter: a.max_iter.unwrap_or(defaults.max_iter),
        n_schedule: a.n_schedule.unwrap_or_else(|| DEFAULT_N_SCHEDULE.to_vec()),
        gap_tol: a.gap_tol.unwrap_or(1e-3),
    };
    let opts = SkeletonOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..defaults
    };
    let u0 = initial_profile(&cfg.u0, grid)?;
    let h = load_control(&cfg.control, grid)?;
    match cfg.regime {
        RegimeArg::H0 => {
            let sol = solve_skeleton_lipschitz(&set, &u0, &h, &opts)?;
            let result = PicardRun {
                iterations: sol.iterations,
                residual: sol.residual,
                max_abs: sol.path.max_abs(),
            };
            Ok(Report::new("skeleton", &cfg, &result)?.with_table(trajectory_table(&sol.path)))
        }
        RegimeArg::H1 => {
            let sol = solve_skeleton_mollified(&set, &u0, &h, &cfg.n_schedule, cfg.gap_tol, &opts)?;
            let mut schedule = Table::new("schedule", &["n", "iterations", "weighted_sup", "gap"]);
            for r in &sol.rows {
                schedule.push(vec![r.n.into(), r.iterations.into(), r.weighted_sup.into(), r.gap.unwrap_or(f64::NAN).into()]);
            }
            let status = if sol.converged {
                Status::Ok
            } else {
                Status::NotConverged(format!("mollified gaps {:?} did not fall below {:e}", sol.gaps(), cfg.gap_tol))
            };
            let result = serde_json::json!({
                "rows": sol.rows,
                "gap_tol": sol.gap_tol,
                "converged": sol.converged,
                "max_abs": sol.path.max_abs(),
            });
            Ok(Report::new("skeleton", &cfg, &result)?
                .with_table(trajectory_table(&sol.path))
                .with_table(schedule)
                .with_status(status))
        }
    }
}

#[derive(Serialize)]
struct RateConfig {
    coeff: String,
    target: f64,
    x0: f64,
    #[serde(rename = "T")]
    horizon: f64,
    grid: String,
    u0: String,
    optimizer: OptimizerConfig,
}

fn rate(a: RateArgs) -> Result<Report, CliError> {
    let mut grid = grid_or_default(&a.grid)?;
    if let Some(t) = a.horizon {
        grid = grid.with_time(t, grid.time_steps)?;
    }
    let defaults = OptimizerConfig::default();
    let cfg = RateConfig {
        coeff: a.coeff.unwrap_or_else(|| "zero_drift_unit_sigma".into()),
        target: a.target.unwrap_or(1.0),
        x0: a.x0.unwrap_or(0.0),
        horizon: grid.final_time,
        grid: grid.to_string(),
        u0: a.u0.unwrap_or_else(|| "zero".into()),
        optimizer: OptimizerConfig {
            mu0: a.mu0.unwrap_or(defaults.mu0),
            rounds: a.rounds.unwrap_or(defaults.rounds),
            restarts: a.restarts.unwrap_or(defaults.restarts),
            constraint_tol: a.constraint_tol.unwrap_or(defaults.constraint_tol),
            seed: a.seed.unwrap_or(DEFAULT_SEED),
            ..defaults
        },
    };
    let set = builtin(&cfg.coeff)?;
    let u0 = initial_profile(&cfg.u0, grid)?;
    let constraint = fw_srde::EndpointConstraint {
        x0: cfg.x0,
        a: cfg.target,
        t: cfg.horizon,
    };
    let (sol, status) = match minimize_rate_endpoint(&set, &u0, &constraint, &cfg.optimizer) {
        Ok(sol) => (sol, Status::Ok),
        Err(Error::Stalled { reason, best }) => (*best, Status::NotConverged(format!("optimization stalled: {reason}"))),
        Err(e) => return Err(e.into()),
    };
    let mut history = Table::new(
        "history",
        &["start", "round", "mu", "iteration", "objective", "energy", "endpoint", "grad_norm"],
    );
    for r in &sol.history {
        history.push(vec![
            r.start.into(),
            r.round.into(),
            r.mu.into(),
            r.iteration.into(),
            r.objective.into(),
            r.energy.into(),
            r.endpoint.into(),
            r.grad_norm.into(),
        ]);
    }
    Ok(Report::new("rate", &cfg, &sol)?
        .with_table(control_table(&sol.control))
        .with_table(history)
        .with_status(status))
}

#[derive(Serialize)]
struct LdpConfig {
    coeff: String,
    event: String,
    eps_grid: Vec<f64>,
    samples: usize,
    seed: u64,
    grid: String,
    u0: String,
}

#[derive(Serialize)]
struct ClaimConfig {
    claim: Claim,
    coeff: String,
    control: String,
    grid: String,
    u0: String,
    m_list: Option<Vec<u32>>,
    amplitude: Option<f64>,
    eps_grid: Option<Vec<f64>>,
    samples: Option<usize>,
    delta: Option<f64>,
    seed: Option<u64>,
}

fn verify_ldp(a: VerifyLdpArgs) -> Result<Report, CliError> {
    match a.claim {
        Some(claim) => verify_claim(claim, a),
        None => verify_rate(a),
    }
}

fn verify_rate(a: VerifyLdpArgs) -> Result<Report, CliError> {
    let event = parse_event(a.event.as_deref().unwrap_or("1,0,1"))?;
    let mut grid = grid_or_default(&a.grid)?;
    grid = grid.with_time(event.t, grid.time_steps)?;
    let cfg = LdpConfig {
        coeff: a.coeff.unwrap_or_else(|| "zero_drift_unit_sigma".into()),
        event: format!("{},{},{}", event.a, event.x0, event.t),
        eps_grid: a.eps_grid.unwrap_or_else(|| DEFAULT_EPS_GRID.to_vec()),
        samples: a.samples.unwrap_or(1000),
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        grid: grid.to_string(),
        u0: a.u0.unwrap_or_else(|| "zero".into()),
    };
    let set = builtin(&cfg.coeff)?;
    let u0 = initial_profile(&cfg.u0, grid)?;
    let opt = OptimizerConfig {
        seed: cfg.seed,
        ..OptimizerConfig::default()
    };
    let rate = minimize_rate_endpoint(&set, &u0, &event, &opt)?;
    let curve = ldp_curve(&event, &set, &u0, &cfg.eps_grid, cfg.samples, &rate.control, rate.rate, cfg.seed)?;
    let mut table = Table::new(
        "curve",
        &["eps", "p", "std_error", "ci_low", "ci_high", "effective_samples", "tilted", "eps_log_p", "minus_rate"],
    );
    for r in &curve.rows {
        let e = &r.estimate;
        table.push(vec![
            r.eps.into(),
            e.p.into(),
            e.std_error.into(),
            e.ci_low.into(),
            e.ci_high.into(),
            e.effective_samples.into(),
            e.tilted.into(),
            r.eps_log_p.into(),
            r.minus_rate.into(),
        ]);
    }
    let result = serde_json::json!({
        "rate": rate.rate,
        "rate_converged": rate.converged,
        "final_relative_gap": curve.final_relative_gap(),
        "curve": curve,
    });
    Ok(Report::new("verify-ldp", &cfg, &result)?.with_table(table))
}

fn verify_claim(claim: Claim, a: VerifyLdpArgs) -> Result<Report, CliError> {
    let grid = grid_or_default(&a.grid)?;
    let mut cfg = ClaimConfig {
        claim,
        coeff: a.coeff.unwrap_or_else(|| "linear".into()),
        control: a.control.unwrap_or_else(|| "gaussian".into()),
        grid: grid.to_string(),
        u0: a.u0.unwrap_or_else(|| "bump".into()),
        m_list: None,
        amplitude: None,
        eps_grid: None,
        samples: None,
        delta: None,
        seed: None,
    };
    let set = builtin(&cfg.coeff)?;
    let u0 = initial_profile(&cfg.u0, grid)?;
    let h = load_control(&cfg.control, grid)?;
    match claim {
        Claim::C1 => {
            let m_list = a.m_list.unwrap_or_else(|| DEFAULT_M_LIST.to_vec());
            let amplitude = a.amplitude.unwrap_or(1.0);
            cfg.m_list = Some(m_list.clone());
            cfg.amplitude = Some(amplitude);
            let t = c1_experiment(&set, &u0, &h, &m_list, amplitude)?;
            let mut table = Table::new("c1", &["m", "distance", "energy"]);
            for r in &t.rows {
                table.push(vec![r.m.into(), r.distance.into(), r.energy.into()]);
            }
            let status = claim_status(t.passed, format!("c1: final distance ratio {:.4} is not below 0.05", t.final_ratio));
            Ok(Report::new("verify-ldp", &cfg, &t)?.with_table(table).with_status(status))
        }
        Claim::C2 => {
            let eps_list = a.eps_grid.unwrap_or_else(|| DEFAULT_C2_EPS.to_vec());
            let samples = a.samples.unwrap_or(200);
            let delta = a.delta.unwrap_or(DEFAULT_C2_DELTA);
            let seed = a.seed.unwrap_or(DEFAULT_SEED);
            cfg.eps_grid = Some(eps_list.clone());
            cfg.samples = Some(samples);
            cfg.delta = Some(delta);
            cfg.seed = Some(seed);
            let t = c2_experiment(&set, &u0, &h, &eps_list, samples, delta, seed)?;
            let mut table = Table::new("c2", &["eps", "mean_distance", "std_error", "exceedance"]);
            for r in &t.rows {
                table.push(vec![r.eps.into(), r.mean_distance.into(), r.std_error.into(), r.exceedance.into()]);
            }
            let status = claim_status(t.passed, format!("c2: fitted slope {:.4} outside [0.4, 0.6]", t.slope));
            Ok(Report::new("verify-ldp", &cfg, &t)?.with_table(table).with_status(status))
        }
    }
}

fn claim_status(passed: bool, message: String) -> Status {
    if passed {
        Status::Ok
    } else {
        Status::Failed(message)
    }
}

#[derive(Serialize)]
struct LemmaConfig {
    suite: Suite,
    samples: usize,
    seed: u64,
    coeff: Option<String>,
}

fn check_lemmas(a: CheckLemmasArgs) -> Result<Report, CliError> {
    let suite = a.suite.ok_or_else(|| CliError::Usage("check-lemmas needs --suite heat-kernel|hypotheses|gronwall".into()))?;
    let cfg = LemmaConfig {
        suite,
        samples: a.samples.unwrap_or(match suite {
            Suite::Gronwall => 200,
            _ => 10_000,
        }),
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        coeff: match suite {
            Suite::Hypotheses => Some(a.coeff.unwrap_or_else(|| "ulogu_bounded_sigma".into())),
            _ => None,
        },
    };
    let (reports, extra) = match suite {
        Suite::HeatKernel => (kernel_inequality_suite(cfg.samples, cfg.seed)?, None),
        Suite::Hypotheses => {
            let set = builtin(cfg.coeff.as_deref().unwrap_or_default())?;
            (hypothesis_suite(&set, cfg.samples, cfg.seed)?, None)
        }
        Suite::Gronwall => {
            let s = gronwall_suite(cfg.samples, cfg.seed)?;
            let passed = s.passed();
            (s.reports, Some((s.equality_case_max_relative_gap, passed)))
        }
    };
    let mut passed = reports.iter().all(InequalityReport::passed);
    if let Some((_, ok)) = extra {
        passed &= ok;
    }
    let mut table = Table::new("reports", &["inequality_id", "samples", "violations", "worst_slack", "worst_point"]);
    for r in &reports {
        let point = r
            .worst_point
            .iter()
            .map(|(k, v)| format!("{k}={}", crate::report::format_number(*v)))
            .collect::<Vec<_>>()
            .join(";");
        table.push(vec![r.inequality_id.clone().into(), r.samples.into(), r.violations.into(), r.worst_slack.into(), point.into()]);
    }
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let result = serde_json::json!({
        "passed": passed,
        "reports": reports,
        "equality_case_max_relative_gap": extra.map(|(g, _)| g),
    });
    let status = claim_status(passed, format!("{violations} violations in the {} suite", suite_name(suite)));
    Ok(Report::new("check-lemmas", &cfg, &result)?.with_table(table).with_status(status))
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::HeatKernel => "heat-kernel",
        Suite::Hypotheses => "hypotheses",
        Suite::Gronwall => "gronwall",
    }
}

#[derive(Serialize)]
struct ExplosionConfig {
    #[serde(rename = "T")]
    horizon: f64,
    windows: Vec<f64>,
    samples: usize,
    seed: u64,
}

fn demo_explosion(a: DemoExplosionArgs) -> Result<Report, CliError> {
    let cfg = ExplosionConfig {
        horizon: a.horizon.unwrap_or(1.0),
        windows: a.windows.unwrap_or_else(|| (0..7).map(|i| 2f64.powi(i)).collect()),
        samples: a.samples.unwrap_or(1000),
        seed: a.seed.unwrap_or(DEFAULT_SEED),
    };
    let t = explosion_demo(cfg.horizon, &cfg.windows, cfg.samples, cfg.seed)?;
    let mut table = Table::new("windows", &["window", "mean_sup", "std_error"]);
    for r in &t.rows {
        table.push(vec![r.window.into(), r.mean_sup.into(), r.std_error.into()]);
    }
    let result = serde_json::json!({ "passed": t.passed(), "table": t });
    Ok(Report::new("demo-explosion", &cfg, &result)?.with_table(table))
}
