//! Deterministic text artifacts: waveform/sweep/training CSVs, metrics in
//! key=value and CSV-row form, and the algorithm comparison table. All
//! numbers use the shortest round-trip decimal form, so identical inputs
//! always produce byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::agent::EpisodeLog;
use crate::error::Result;
use crate::sim::{Metrics, Waveforms};

/// Shortest decimal representation that parses back to the same f64.
pub fn fmt_f(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

pub const WAVEFORMS_HEADER: &str = "t,x1,x2,x3,x4,x5,x6,x7,mode,s,f_cmd";

pub fn waveforms_csv(w: &Waveforms) -> String {
    let mut out = String::with_capacity(64 * (w.len() + 1));
    out.push_str(WAVEFORMS_HEADER);
    out.push('\n');
    for i in 0..w.len() {
        let x = &w.x[i];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f(w.t[i]),
            fmt_f(x[0]),
            fmt_f(x[1]),
            fmt_f(x[2]),
            fmt_f(x[3]),
            fmt_f(x[4]),
            fmt_f(x[5]),
            fmt_f(x[6]),
            w.mode[i],
            w.s[i],
            fmt_f(w.f_cmd[i]),
        );
    }
    out
}

const METRIC_KEYS: [&str; 7] = [
    "rise_time_10_90",
    "overshoot_pct",
    "settling_time_2pct",
    "steady_mean",
    "steady_ripple_pp",
    "rms_error",
    "settled",
];

fn metric_values(m: &Metrics) -> [String; 7] {
    [
        fmt_f(m.rise_time_10_90),
        fmt_f(m.overshoot_pct),
        fmt_f(m.settling_time_2pct),
        fmt_f(m.steady_mean),
        fmt_f(m.steady_ripple_pp),
        fmt_f(m.rms_error),
        m.settled.to_string(),
    ]
}

/// Flat `key = value` block. `prefix` namespaces the keys (for multi-segment
/// reports); pass "" for none.
pub fn metrics_text(m: &Metrics, prefix: &str) -> String {
    let mut out = String::new();
    for (k, v) in METRIC_KEYS.iter().zip(metric_values(m)) {
        if prefix.is_empty() {
            let _ = writeln!(out, "{k} = {v}");
        } else {
            let _ = writeln!(out, "{prefix}.{k} = {v}");
        }
    }
    out
}

/// Same metrics as a CSV header plus one row.
pub fn metrics_csv(m: &Metrics) -> String {
    format!("{}\n{}\n", METRIC_KEYS.join(","), metric_values(m).join(","))
}

pub const TRAIN_HEADER: &str = "episode,reward,kp,ki,epsilon_events,wall_time";

/// Per-episode training log. `wall_time` is the simulated plant time the
/// episode covered (deterministic); host-clock timings belong in the
/// separate run log.
pub fn train_csv(logs: &[EpisodeLog]) -> String {
    let mut out = String::new();
    out.push_str(TRAIN_HEADER);
    out.push('\n');
    for l in logs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            l.episode,
            fmt_f(l.reward),
            fmt_f(l.kp),
            fmt_f(l.ki),
            l.epsilon_events,
            fmt_f(l.sim_time),
        );
    }
    out
}

pub const SWEEP_HEADER: &str = "f_s,vout_steady";

pub fn sweep_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for &(f, v) in points {
        let _ = writeln!(out, "{},{}", fmt_f(f), fmt_f(v));
    }
    out
}

/// One row of the TD3/DDPG/published comparison table.
#[derive(Clone, Debug)]
pub struct CompareRow {
    pub label: String,
    pub kp: f64,
    pub ki: f64,
    /// Mean and variance of the trailing-window episode rewards
    /// (NaN for rows that were not trained).
    pub final_reward_mean: f64,
    pub final_reward_var: f64,
    /// Step-response metrics on the shared evaluation scenario.
    pub eval: Metrics,
}

pub const COMPARE_HEADER: &str = "label,kp,ki,final_reward_mean,final_reward_var,\
rise_time_10_90,overshoot_pct,settling_time_2pct,steady_mean,steady_ripple_pp,rms_error,settled";

pub fn comparison_csv(rows: &[CompareRow]) -> String {
    let mut out = String::new();
    out.push_str(COMPARE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.label,
            fmt_f(r.kp),
            fmt_f(r.ki),
            fmt_f(r.final_reward_mean),
            fmt_f(r.final_reward_var),
            metric_values(&r.eval).join(","),
        );
    }
    out
}

/// Mean and (population) variance of the trailing `window` episode rewards.
pub fn trailing_reward_stats(logs: &[EpisodeLog], window: usize) -> (f64, f64) {
    let tail: Vec<f64> = logs
        .iter()
        .rev()
        .take(window)
        .map(|l| l.reward)
        .collect();
    if tail.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = tail.len() as f64;
    let mean = tail.iter().sum::<f64>() / n;
    let var = tail.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Create the directory (and parents) and write every named file into it.
pub fn write_run_dir(dir: &Path, files: &[(&str, &str)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, content) in files {
        std::fs::write(dir.join(name), content)?;
    }
    Ok(())
}
