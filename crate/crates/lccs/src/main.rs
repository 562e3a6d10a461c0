//! Command-line entry point: simulate scenarios, sweep the gain curve,
//! train and evaluate the gain-tuning agent, and compare algorithms.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical failure,
//! 3 training abort. All CSV artifacts are byte-deterministic for a fixed
//! config and seed; host-clock timings go to `run.log` only.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};

use lccs::agent::{self, Algo, Td3Bundle};
use lccs::config::{parse_frequency, parse_time, LoopMode, RunConfig};
use lccs::error::Error;
use lccs::pi::PiController;
use lccs::report;
use lccs::sim::{
    self, compute_metrics, frequency_sweep, recommended_sign, Scenario, SwitchDriver,
};

/// Environment variable naming the default output root directory.
const OUTPUT_ROOT_ENV: &str = "LCCS_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "lccs", about = "LCC-S converter simulation and PI gain tuning")]
struct Cli {
    /// Configuration file (sectioned key=value); defaults reproduce the
    /// bundled 85 kHz bench preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for this run (overrides the config and the
    /// LCCS_OUTPUT_ROOT environment variable).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one open- or closed-loop scenario and export waveforms + metrics.
    Simulate {
        /// Override the scenario duration, e.g. `10ms`.
        #[arg(long)]
        duration: Option<String>,
        /// Override the open-loop switching frequency, e.g. `85kHz`.
        #[arg(long)]
        f_s: Option<String>,
    },
    /// Map steady output voltage over a frequency range; recommends the
    /// controller sign.
    Sweep {
        #[arg(long, default_value = "79kHz")]
        f_min: String,
        #[arg(long, default_value = "90kHz")]
        f_max: String,
        #[arg(long, default_value_t = 12)]
        points: usize,
    },
    /// Train the gain-tuning agent and export the reward log, checkpoint,
    /// and final gains.
    Train {
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        /// Episode horizon, e.g. `2ms`.
        #[arg(long)]
        horizon: Option<String>,
    },
    /// Run the disturbance-rejection scenario with fixed gains and report
    /// per-segment metrics.
    Evaluate {
        /// Gains as `kp,ki`; defaults to the controller section.
        #[arg(long)]
        gains: Option<String>,
        /// Ramp the reference in 8 steps instead of one cold step.
        #[arg(long)]
        soft_start: bool,
    },
    /// Train TD3 and DDPG on matched seeds and tabulate them against the
    /// published gains.
    Compare {
        /// Comma-separated seed list.
        #[arg(long, default_value = "0")]
        seeds: String,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        horizon: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> ExitCode {
    match e {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::NonPhysicalCoupling(_)
        | Error::ShapeMismatch(_)
        | Error::InsufficientData { .. }
        | Error::Io(_) => ExitCode::from(1),
        Error::NumericalBlowup { .. } | Error::Unsettled { .. } => ExitCode::from(2),
        Error::TrainingAborted(_) => ExitCode::from(3),
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig, Error> {
    match path {
        Some(p) => RunConfig::from_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn output_dir(cli_out: &Option<PathBuf>, cfg: &RunConfig, sub: &str) -> PathBuf {
    if let Some(out) = cli_out {
        return out.clone();
    }
    if let Some(dir) = &cfg.output_dir {
        return dir.clone();
    }
    let root = std::env::var(OUTPUT_ROOT_ENV).unwrap_or_else(|_| "runs".to_string());
    Path::new(&root).join(sub)
}

/// Host-clock record, kept out of every CSV so reruns stay byte-identical.
fn run_log(started: SystemTime, elapsed: std::time::Duration) -> String {
    let epoch = started
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("started_unix = {epoch}\nelapsed_s = {:.3}\n", elapsed.as_secs_f64())
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    let cfg = load_config(&cli.config)?;
    let started = SystemTime::now();
    let clock = Instant::now();
    match cli.cmd {
        Cmd::Simulate { duration, f_s } => cmd_simulate(cfg, &cli.out, duration, f_s, started, clock),
        Cmd::Sweep {
            f_min,
            f_max,
            points,
        } => cmd_sweep(cfg, &cli.out, &f_min, &f_max, points, started, clock),
        Cmd::Train {
            algo,
            seed,
            episodes,
            horizon,
        } => cmd_train(cfg, &cli.out, algo, seed, episodes, horizon, started, clock),
        Cmd::Evaluate { gains, soft_start } => {
            cmd_evaluate(cfg, &cli.out, gains, soft_start, started, clock)
        }
        Cmd::Compare {
            seeds,
            episodes,
            horizon,
        } => cmd_compare(cfg, &cli.out, &seeds, episodes, horizon, started, clock),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    mut cfg: RunConfig,
    out: &Option<PathBuf>,
    duration: Option<String>,
    f_s: Option<String>,
    started: SystemTime,
    clock: Instant,
) -> Result<(), Error> {
    if let Some(d) = duration {
        cfg.scenario.duration = parse_time(&d)?;
        if cfg.scenario.duration < 0.0 {
            return Err(Error::Config("duration must be non-negative".into()));
        }
    }
    if let Some(f) = f_s {
        cfg.scenario.f_s = parse_frequency(&f)?;
    }
    let scenario = cfg.build_scenario();
    let ctrl = cfg.build_controller();
    let driver = match cfg.scenario.mode {
        LoopMode::Open => SwitchDriver::frequency(cfg.scenario.f_s)?,
        LoopMode::Closed => SwitchDriver::frequency(cfg.controller.f_base)?,
    };
    let (wave, metrics) = sim::run(scenario, driver, ctrl, &cfg.converter, cfg.scenario.variant)?;
    let dir = output_dir(out, &cfg, "simulate");
    report::write_run_dir(
        &dir,
        &[
            ("config.resolved", &cfg.resolved()),
            ("waveforms.csv", &report::waveforms_csv(&wave)),
            ("metrics.txt", &report::metrics_text(&metrics, "")),
            ("run.log", &run_log(started, clock.elapsed())),
        ],
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    cfg: RunConfig,
    out: &Option<PathBuf>,
    f_min: &str,
    f_max: &str,
    points: usize,
    started: SystemTime,
    clock: Instant,
) -> Result<(), Error> {
    let f_lo = parse_frequency(f_min)?;
    let f_hi = parse_frequency(f_max)?;
    if points == 0 {
        return Err(Error::Config("points must be >= 1".into()));
    }
    if points > 1 && f_hi <= f_lo {
        return Err(Error::Config("f_max must exceed f_min".into()));
    }
    let list: Vec<f64> = if points == 1 {
        vec![f_lo]
    } else {
        (0..points)
            .map(|i| f_lo + (f_hi - f_lo) * i as f64 / (points - 1) as f64)
            .collect()
    };
    let curve = frequency_sweep(&cfg.converter, cfg.scenario.variant, &list, 30e-3)?;
    let sign = recommended_sign(&curve, cfg.controller.f_base);
    let max = curve
        .iter()
        .cloned()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, p| {
            if p.1 > acc.1 {
                p
            } else {
                acc
            }
        });
    let summary = format!(
        "recommended_sign = {}\nf_at_max = {}\nvout_max = {}\n",
        report::fmt_f(sign),
        report::fmt_f(max.0),
        report::fmt_f(max.1),
    );
    let dir = output_dir(out, &cfg, "sweep");
    report::write_run_dir(
        &dir,
        &[
            ("config.resolved", &cfg.resolved()),
            ("sweep.csv", &report::sweep_csv(&curve)),
            ("summary.txt", &summary),
            ("run.log", &run_log(started, clock.elapsed())),
        ],
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    mut cfg: RunConfig,
    out: &Option<PathBuf>,
    algo: Option<String>,
    seed: Option<u64>,
    episodes: Option<usize>,
    horizon: Option<String>,
    started: SystemTime,
    clock: Instant,
) -> Result<(), Error> {
    if let Some(a) = algo {
        cfg.agent.td3.algo = match a.as_str() {
            "td3" => Algo::Td3,
            "ddpg" => Algo::Ddpg,
            other => return Err(Error::Config(format!("algo must be td3 or ddpg, got '{other}'"))),
        };
    }
    if let Some(s) = seed {
        cfg.agent.td3.seed = s;
    }
    if let Some(e) = episodes {
        cfg.agent.td3.episodes = e;
    }
    if let Some(h) = horizon {
        cfg.agent.horizon = parse_time(&h)?;
    }
    let env = cfg.build_env();
    let (bundle, logs) = agent::train(cfg.agent.td3.clone(), &env)?;
    let (kp, ki) = bundle.deployment_gains()?;
    let (mean, var) = report::trailing_reward_stats(&logs, 50);
    let algo_name = match cfg.agent.td3.algo {
        Algo::Td3 => "td3",
        Algo::Ddpg => "ddpg",
    };
    let summary = format!(
        "algo = {algo_name}\nseed = {}\nepisodes = {}\nfinal_kp = {}\nfinal_ki = {}\n\
         trailing_reward_mean = {}\ntrailing_reward_var = {}\n",
        cfg.agent.td3.seed,
        logs.len(),
        report::fmt_f(kp),
        report::fmt_f(ki),
        report::fmt_f(mean),
        report::fmt_f(var),
    );
    let checkpoint = serde_json::to_string_pretty(&bundle.checkpoint())
        .map_err(|e| Error::Config(format!("cannot serialize checkpoint: {e}")))?;
    let dir = output_dir(out, &cfg, "train");
    report::write_run_dir(
        &dir,
        &[
            ("config.resolved", &cfg.resolved()),
            ("train.csv", &report::train_csv(&logs)),
            ("checkpoint.json", &checkpoint),
            ("summary.txt", &summary),
            ("run.log", &run_log(started, clock.elapsed())),
        ],
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn parse_gains(raw: &str) -> Result<(f64, f64), Error> {
    let (kp, ki) = raw
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("gains must be 'kp,ki', got '{raw}'")))?;
    let kp: f64 = kp
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse kp from '{raw}'")))?;
    let ki: f64 = ki
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("cannot parse ki from '{raw}'")))?;
    Ok((kp, ki))
}

/// Disturbance scenario from the config's operating point.
fn eval_scenario(cfg: &RunConfig, soft: bool) -> Scenario {
    let vref = cfg.scenario.vref.value_at(0.0);
    let mut sc = Scenario::disturbance(vref, cfg.converter.vin, cfg.converter.r_load);
    sc.dt = cfg.scenario.dt;
    sc.control_period = cfg.scenario.control_period;
    sc.seed = cfg.scenario.seed;
    sc.decimation = cfg.scenario.decimation;
    if soft {
        sc.vref = sim::soft_start(vref, 8, 1e-3);
    }
    sc
}

fn eval_controller(cfg: &RunConfig, kp: f64, ki: f64) -> PiController {
    let mut ctrl = cfg.controller.build();
    ctrl.kp = kp;
    ctrl.ki = ki;
    ctrl
}

fn cmd_evaluate(
    cfg: RunConfig,
    out: &Option<PathBuf>,
    gains: Option<String>,
    soft_start: bool,
    started: SystemTime,
    clock: Instant,
) -> Result<(), Error> {
    let (kp, ki) = match gains {
        Some(g) => parse_gains(&g)?,
        None => (cfg.controller.kp, cfg.controller.ki),
    };
    let sc = eval_scenario(&cfg, soft_start);
    let vref = cfg.scenario.vref.value_at(0.0);
    let ctrl = eval_controller(&cfg, kp, ki);
    let driver = SwitchDriver::frequency(cfg.controller.f_base)?;
    let (wave, _) = sim::run(sc, driver, Some(ctrl), &cfg.converter, cfg.scenario.variant)?;
    let mut metrics_block = String::new();
    let segments = [("step", 0.0, 0.04), ("vin_sag", 0.04, 0.07), ("load_drop", 0.07, 0.1001)];
    for (name, t0, t1) in segments {
        let m = compute_metrics(&wave.slice(t0, t1), vref, 2.0, t0);
        metrics_block.push_str(&report::metrics_text(&m, name));
    }
    let overall = compute_metrics(&wave, vref, 2.0, 0.0);
    metrics_block.push_str(&report::metrics_text(&overall, "overall"));
    metrics_block.push_str(&format!(
        "kp = {}\nki = {}\n",
        report::fmt_f(kp),
        report::fmt_f(ki)
    ));
    let dir = output_dir(out, &cfg, "evaluate");
    report::write_run_dir(
        &dir,
        &[
            ("config.resolved", &cfg.resolved()),
            ("waveforms.csv", &report::waveforms_csv(&wave)),
            ("metrics.txt", &metrics_block),
            ("run.log", &run_log(started, clock.elapsed())),
        ],
    )?;
    println!("wrote {}", dir.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    mut cfg: RunConfig,
    out: &Option<PathBuf>,
    seeds: &str,
    episodes: Option<usize>,
    horizon: Option<String>,
    started: SystemTime,
    clock: Instant,
) -> Result<(), Error> {
    let seed_list: Vec<u64> = seeds
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse seed '{s}'")))
        })
        .collect::<Result<_, _>>()?;
    if seed_list.is_empty() {
        return Err(Error::Config("at least one seed required".into()));
    }
    if let Some(e) = episodes {
        cfg.agent.td3.episodes = e;
    }
    if let Some(h) = horizon {
        cfg.agent.horizon = parse_time(&h)?;
    }
    let env = cfg.build_env();
    let vref = cfg.scenario.vref.value_at(0.0);
    let eval_with = |kp: f64, ki: f64| -> Result<lccs::sim::Metrics, Error> {
        let sc = eval_scenario(&cfg, false);
        let ctrl = eval_controller(&cfg, kp, ki);
        let driver = SwitchDriver::frequency(cfg.controller.f_base)?;
        let (wave, _) = sim::run(sc, driver, Some(ctrl), &cfg.converter, cfg.scenario.variant)?;
        Ok(compute_metrics(&wave, vref, 2.0, 0.07))
    };

    let mut rows = Vec::new();
    let mut train_logs: Vec<(String, String)> = Vec::new();
    for &seed in &seed_list {
        for algo in [Algo::Td3, Algo::Ddpg] {
            let mut tc = cfg.agent.td3.clone();
            tc.algo = algo;
            tc.seed = seed;
            let (bundle, logs): (Td3Bundle, _) = agent::train(tc, &env)?;
            let (kp, ki) = bundle.deployment_gains()?;
            let (mean, var) = report::trailing_reward_stats(&logs, 20);
            let name = match algo {
                Algo::Td3 => format!("td3_seed{seed}"),
                Algo::Ddpg => format!("ddpg_seed{seed}"),
            };
            train_logs.push((format!("train_{name}.csv"), report::train_csv(&logs)));
            rows.push(report::CompareRow {
                label: name,
                kp,
                ki,
                final_reward_mean: mean,
                final_reward_var: var,
                eval: eval_with(kp, ki)?,
            });
        }
    }
    let published = PiController::published();
    rows.push(report::CompareRow {
        label: "published".to_string(),
        kp: published.kp,
        ki: published.ki,
        final_reward_mean: f64::NAN,
        final_reward_var: f64::NAN,
        eval: eval_with(published.kp, published.ki)?,
    });

    let dir = output_dir(out, &cfg, "compare");
    let resolved = cfg.resolved();
    let table = report::comparison_csv(&rows);
    let log = run_log(started, clock.elapsed());
    let mut files: Vec<(&str, &str)> = vec![
        ("config.resolved", &resolved),
        ("comparison.csv", &table),
        ("run.log", &log),
    ];
    for (name, content) in &train_logs {
        files.push((name.as_str(), content.as_str()));
    }
    report::write_run_dir(&dir, &files)?;
    println!("wrote {}", dir.display());
    Ok(())
}
