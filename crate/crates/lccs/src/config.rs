//! Run configuration: flat sectioned `key = value` text with unit suffixes
//! (`L1 = 73.4uH`). Unknown sections and keys are rejected, units are
//! validated against each key's dimension, and defaults reproduce the bench
//! component table and the published training settings.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::agent::{ActionBounds, ActionTiming, Algo, Td3Config};
use crate::error::{Error, Result};
use crate::model::MatrixVariant;
use crate::params::ConverterParams;
use crate::pi::PiController;
use crate::sim::{default_dt, NoiseConfig, Scenario, Schedule};

/// Bundled preset reproducing the bench component table, open loop at 85 kHz.
pub const PRESET_TABLE2_85KHZ: &str = include_str!("../presets/table2_85khz.cfg");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dim {
    Inductance,
    Capacitance,
    Resistance,
    Voltage,
    Frequency,
    Time,
    Plain,
}

/// Parse `value[suffix]`, checking the suffix against the expected dimension.
/// A bare number is always accepted and read in SI base units.
fn parse_quantity(raw: &str, dim: Dim, key: &str) -> Result<f64> {
    let raw = raw.trim();
    let split = raw
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .map(|(i, _)| i)
        .unwrap_or(raw.len());
    let (num_str, suffix) = raw.split_at(split);
    let value: f64 = num_str
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse number from '{raw}'")))?;
    let (mult, suffix_dim) = match suffix {
        "" => (1.0, dim),
        "V" => (1.0, Dim::Voltage),
        "H" => (1.0, Dim::Inductance),
        "mH" => (1e-3, Dim::Inductance),
        "uH" => (1e-6, Dim::Inductance),
        "nH" => (1e-9, Dim::Inductance),
        "F" => (1.0, Dim::Capacitance),
        "mF" => (1e-3, Dim::Capacitance),
        "uF" => (1e-6, Dim::Capacitance),
        "nF" => (1e-9, Dim::Capacitance),
        "pF" => (1e-12, Dim::Capacitance),
        "ohm" | "Ohm" => (1.0, Dim::Resistance),
        "mohm" => (1e-3, Dim::Resistance),
        "kohm" => (1e3, Dim::Resistance),
        "Hz" => (1.0, Dim::Frequency),
        "kHz" => (1e3, Dim::Frequency),
        "MHz" => (1e6, Dim::Frequency),
        "s" => (1.0, Dim::Time),
        "ms" => (1e-3, Dim::Time),
        "us" => (1e-6, Dim::Time),
        "ns" => (1e-9, Dim::Time),
        other => {
            return Err(Error::Config(format!(
                "{key}: unknown unit suffix '{other}' in '{raw}'"
            )))
        }
    };
    if suffix_dim != dim {
        return Err(Error::Config(format!(
            "{key}: unit '{suffix}' does not match the expected dimension"
        )));
    }
    Ok(value * mult)
}

/// Parse a duration such as `2ms`, `100us`, or a bare number of seconds.
pub fn parse_time(raw: &str) -> Result<f64> {
    parse_quantity(raw, Dim::Time, "time")
}

/// Parse a frequency such as `85kHz` or a bare number of hertz.
pub fn parse_frequency(raw: &str) -> Result<f64> {
    parse_quantity(raw, Dim::Frequency, "frequency")
}

fn parse_bool(raw: &str, key: &str) -> Result<bool> {
    match raw.trim() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("{key}: expected a boolean, got '{other}'"))),
    }
}

fn parse_usize(raw: &str, key: &str) -> Result<usize> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected an integer, got '{raw}'")))
}

fn parse_u64(raw: &str, key: &str) -> Result<u64> {
    raw.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected an integer, got '{raw}'")))
}

/// `t:v` pairs separated by commas, or a single value for a constant.
fn parse_schedule(raw: &str, dim: Dim, key: &str) -> Result<Schedule> {
    if !raw.contains(':') {
        return Ok(Schedule::constant(parse_quantity(raw, dim, key)?));
    }
    let mut steps = Vec::new();
    for part in raw.split(',') {
        let (t_str, v_str) = part
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("{key}: expected 't:value' in '{part}'")))?;
        let t = parse_quantity(t_str, Dim::Time, key)?;
        let v = parse_quantity(v_str, dim, key)?;
        steps.push((t, v));
    }
    let sched = Schedule(steps);
    sched.validate()?;
    Ok(sched)
}

fn format_schedule(s: &Schedule) -> String {
    if s.0.len() == 1 && s.0[0].0 == 0.0 {
        return format!("{}", s.0[0].1);
    }
    s.0.iter()
        .map(|(t, v)| format!("{t}:{v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Whether the simulate command closes the loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopMode {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub duration: f64,
    pub dt: f64,
    pub control_period: f64,
    pub mode: LoopMode,
    pub vref: Schedule,
    /// Overrides for the source and load; the converter section's values
    /// are used when absent.
    pub vin: Option<Schedule>,
    pub load: Option<Schedule>,
    pub noise: NoiseConfig,
    pub seed: u64,
    pub decimation: usize,
    pub variant: MatrixVariant,
    pub conduction_latch: bool,
    pub x5_reset_on_block: bool,
    pub f_s: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration: 10e-3,
            dt: default_dt(),
            control_period: 100e-6,
            mode: LoopMode::Open,
            vref: Schedule::constant(200.0),
            vin: None,
            load: None,
            noise: NoiseConfig::default(),
            seed: 0,
            decimation: 1,
            variant: MatrixVariant::Corrected,
            conduction_latch: true,
            x5_reset_on_block: false,
            f_s: 85e3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerConfig {
    pub kp: f64,
    pub ki: f64,
    pub f_base: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub sign: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let c = PiController::published();
        ControllerConfig {
            kp: c.kp,
            ki: c.ki,
            f_base: c.f_base,
            f_min: c.f_min,
            f_max: c.f_max,
            sign: c.sign,
        }
    }
}

impl ControllerConfig {
    pub fn build(&self) -> PiController {
        let mut c = PiController::new(self.kp, self.ki);
        c.f_base = self.f_base;
        c.f_min = self.f_min;
        c.f_max = self.f_max;
        c.sign = self.sign;
        c
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentConfig {
    pub td3: Td3Config,
    /// Episode horizon (s).
    pub horizon: f64,
    pub vref_min: f64,
    pub vref_max: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            td3: Td3Config::default(),
            horizon: 20e-3,
            vref_min: 190.0,
            vref_max: 210.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RunConfig {
    pub converter: ConverterParams,
    pub scenario: ScenarioConfig,
    pub controller: ControllerConfig,
    pub agent: AgentConfig,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !matches!(
                    section.as_str(),
                    "converter" | "scenario" | "controller" | "agent" | "output"
                ) {
                    return Err(Error::Config(format!(
                        "line {lineno}: unknown section [{section}]"
                    )));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {lineno}: expected 'key = value', got '{line}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {lineno}: {msg}")),
                other => other,
            })?;
        }
        cfg.converter.validate()?;
        cfg.agent.td3.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        match section {
            "converter" => self.apply_converter(key, value),
            "scenario" => self.apply_scenario(key, value),
            "controller" => self.apply_controller(key, value),
            "agent" => self.apply_agent(key, value),
            "output" => match key {
                "dir" => {
                    self.output_dir = Some(PathBuf::from(value));
                    Ok(())
                }
                other => Err(Error::Config(format!("unknown key '{other}' in [output]"))),
            },
            "" => Err(Error::Config(format!(
                "key '{key}' appears before any section header"
            ))),
            other => Err(Error::Config(format!("unknown section [{other}]"))),
        }
    }

    fn apply_converter(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.converter;
        match key {
            "L1" => p.l1 = parse_quantity(value, Dim::Inductance, key)?,
            "C1" => p.c1 = parse_quantity(value, Dim::Capacitance, key)?,
            "Cs1" => p.cs1 = parse_quantity(value, Dim::Capacitance, key)?,
            "Cs2" => p.cs2 = parse_quantity(value, Dim::Capacitance, key)?,
            "R1" => p.r1_series = parse_quantity(value, Dim::Resistance, key)?,
            "rp" => p.rp = parse_quantity(value, Dim::Resistance, key)?,
            "rs" => p.rs = parse_quantity(value, Dim::Resistance, key)?,
            "Vin" => p.vin = parse_quantity(value, Dim::Voltage, key)?,
            "Lp" => p.lp = parse_quantity(value, Dim::Inductance, key)?,
            "Ls" => p.ls = parse_quantity(value, Dim::Inductance, key)?,
            "k" => p.k = parse_quantity(value, Dim::Plain, key)?,
            "VF" => p.vf = parse_quantity(value, Dim::Voltage, key)?,
            "C_out" => p.c_out = parse_quantity(value, Dim::Capacitance, key)?,
            "R_load" => p.r_load = parse_quantity(value, Dim::Resistance, key)?,
            other => {
                return Err(Error::Config(format!("unknown key '{other}' in [converter]")))
            }
        }
        Ok(())
    }

    fn apply_scenario(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.scenario;
        match key {
            "duration" => s.duration = parse_quantity(value, Dim::Time, key)?,
            "dt" => s.dt = parse_quantity(value, Dim::Time, key)?,
            "control_period" => s.control_period = parse_quantity(value, Dim::Time, key)?,
            "mode" => {
                s.mode = match value {
                    "open_loop" => LoopMode::Open,
                    "closed_loop" => LoopMode::Closed,
                    other => {
                        return Err(Error::Config(format!(
                            "mode must be open_loop or closed_loop, got '{other}'"
                        )))
                    }
                }
            }
            "vref" => s.vref = parse_schedule(value, Dim::Voltage, key)?,
            "vin" => s.vin = Some(parse_schedule(value, Dim::Voltage, key)?),
            "load" => s.load = Some(parse_schedule(value, Dim::Resistance, key)?),
            "noise" => s.noise.enabled = parse_bool(value, key)?,
            "noise_amplitude" => s.noise.amplitude = parse_quantity(value, Dim::Voltage, key)?,
            "noise_period" => s.noise.period = parse_quantity(value, Dim::Time, key)?,
            "seed" => s.seed = parse_u64(value, key)?,
            "decimation" => s.decimation = parse_usize(value, key)?,
            "matrix_variant" => {
                s.variant = match value {
                    "corrected" => MatrixVariant::Corrected,
                    "verbatim" => MatrixVariant::Verbatim,
                    other => {
                        return Err(Error::Config(format!(
                            "matrix_variant must be corrected or verbatim, got '{other}'"
                        )))
                    }
                }
            }
            "conduction_latch" => s.conduction_latch = parse_bool(value, key)?,
            "x5_reset_on_block" => s.x5_reset_on_block = parse_bool(value, key)?,
            "f_s" => s.f_s = parse_quantity(value, Dim::Frequency, key)?,
            other => return Err(Error::Config(format!("unknown key '{other}' in [scenario]"))),
        }
        Ok(())
    }

    fn apply_controller(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.controller;
        match key {
            "kp" => c.kp = parse_quantity(value, Dim::Plain, key)?,
            "ki" => c.ki = parse_quantity(value, Dim::Plain, key)?,
            "f_base" => c.f_base = parse_quantity(value, Dim::Frequency, key)?,
            "f_min" => c.f_min = parse_quantity(value, Dim::Frequency, key)?,
            "f_max" => c.f_max = parse_quantity(value, Dim::Frequency, key)?,
            "sign" => {
                c.sign = parse_quantity(value, Dim::Plain, key)?;
                if c.sign != 1.0 && c.sign != -1.0 {
                    return Err(Error::Config(format!("sign must be 1 or -1, got {}", c.sign)));
                }
            }
            other => {
                return Err(Error::Config(format!("unknown key '{other}' in [controller]")))
            }
        }
        Ok(())
    }

    fn apply_agent(&mut self, key: &str, value: &str) -> Result<()> {
        let a = &mut self.agent;
        match key {
            "algo" => {
                a.td3.algo = match value {
                    "td3" => Algo::Td3,
                    "ddpg" => Algo::Ddpg,
                    other => {
                        return Err(Error::Config(format!(
                            "algo must be td3 or ddpg, got '{other}'"
                        )))
                    }
                }
            }
            "gamma" => a.td3.gamma = parse_quantity(value, Dim::Plain, key)?,
            "tau" => a.td3.tau = parse_quantity(value, Dim::Plain, key)?,
            "policy_delay" => a.td3.policy_delay = parse_usize(value, key)?,
            "target_noise_std" => a.td3.target_noise_std = parse_quantity(value, Dim::Plain, key)?,
            "target_noise_clip" => {
                a.td3.target_noise_clip = parse_quantity(value, Dim::Plain, key)?
            }
            "explore_noise_std" => {
                a.td3.explore_noise_std = parse_quantity(value, Dim::Plain, key)?
            }
            "batch_size" => a.td3.batch_size = parse_usize(value, key)?,
            "episodes" => a.td3.episodes = parse_usize(value, key)?,
            "warmup_steps" => a.td3.warmup_steps = parse_usize(value, key)?,
            "buffer_capacity" => a.td3.buffer_capacity = parse_usize(value, key)?,
            "lr" => a.td3.lr = parse_quantity(value, Dim::Plain, key)?,
            "seed" => a.td3.seed = parse_u64(value, key)?,
            "action_timing" => {
                a.td3.action_timing = match value {
                    "per_step" => ActionTiming::PerStep,
                    "per_episode" => ActionTiming::PerEpisode,
                    other => {
                        return Err(Error::Config(format!(
                            "action_timing must be per_step or per_episode, got '{other}'"
                        )))
                    }
                }
            }
            "kp_min" => a.td3.bounds.kp.0 = parse_quantity(value, Dim::Plain, key)?,
            "kp_max" => a.td3.bounds.kp.1 = parse_quantity(value, Dim::Plain, key)?,
            "ki_min" => a.td3.bounds.ki.0 = parse_quantity(value, Dim::Plain, key)?,
            "ki_max" => a.td3.bounds.ki.1 = parse_quantity(value, Dim::Plain, key)?,
            "horizon" => a.horizon = parse_quantity(value, Dim::Time, key)?,
            "vref_min" => a.vref_min = parse_quantity(value, Dim::Voltage, key)?,
            "vref_max" => a.vref_max = parse_quantity(value, Dim::Voltage, key)?,
            other => return Err(Error::Config(format!("unknown key '{other}' in [agent]"))),
        }
        Ok(())
    }

    /// Scenario with overrides applied; source and load fall back to the
    /// converter section.
    pub fn build_scenario(&self) -> Scenario {
        let s = &self.scenario;
        let mut sc = Scenario::open_loop(s.duration, self.converter.vin, self.converter.r_load);
        sc.dt = s.dt;
        sc.control_period = s.control_period;
        sc.vref = s.vref.clone();
        if let Some(vin) = &s.vin {
            sc.vin = vin.clone();
        }
        if let Some(load) = &s.load {
            sc.load = load.clone();
        }
        sc.noise = s.noise;
        sc.seed = s.seed;
        sc.decimation = s.decimation;
        sc.conduction_latch = s.conduction_latch;
        sc.x5_reset_on_block = s.x5_reset_on_block;
        sc
    }

    pub fn build_controller(&self) -> Option<PiController> {
        match self.scenario.mode {
            LoopMode::Open => None,
            LoopMode::Closed => Some(self.controller.build()),
        }
    }

    /// Environment template for training, from the converter and agent
    /// sections.
    pub fn build_env(&self) -> crate::agent::EnvTemplate {
        crate::agent::EnvTemplate {
            params: self.converter,
            variant: self.scenario.variant,
            horizon: self.agent.horizon,
            control_period: self.scenario.control_period,
            dt: self.scenario.dt,
            noise: self.scenario.noise,
            vref_range: (self.agent.vref_min, self.agent.vref_max),
            warm_start: true,
        }
    }

    /// Full dump in SI base units; parsing it back reproduces the config.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        let p = &self.converter;
        let _ = writeln!(out, "[converter]");
        let _ = writeln!(out, "L1 = {}", p.l1);
        let _ = writeln!(out, "C1 = {}", p.c1);
        let _ = writeln!(out, "Cs1 = {}", p.cs1);
        let _ = writeln!(out, "Cs2 = {}", p.cs2);
        let _ = writeln!(out, "R1 = {}", p.r1_series);
        let _ = writeln!(out, "rp = {}", p.rp);
        let _ = writeln!(out, "rs = {}", p.rs);
        let _ = writeln!(out, "Vin = {}", p.vin);
        let _ = writeln!(out, "Lp = {}", p.lp);
        let _ = writeln!(out, "Ls = {}", p.ls);
        let _ = writeln!(out, "k = {}", p.k);
        let _ = writeln!(out, "VF = {}", p.vf);
        let _ = writeln!(out, "C_out = {}", p.c_out);
        let _ = writeln!(out, "R_load = {}", p.r_load);
        let s = &self.scenario;
        let _ = writeln!(out, "\n[scenario]");
        let _ = writeln!(out, "duration = {}", s.duration);
        let _ = writeln!(out, "dt = {}", s.dt);
        let _ = writeln!(out, "control_period = {}", s.control_period);
        let _ = writeln!(
            out,
            "mode = {}",
            match s.mode {
                LoopMode::Open => "open_loop",
                LoopMode::Closed => "closed_loop",
            }
        );
        let _ = writeln!(out, "vref = {}", format_schedule(&s.vref));
        if let Some(vin) = &s.vin {
            let _ = writeln!(out, "vin = {}", format_schedule(vin));
        }
        if let Some(load) = &s.load {
            let _ = writeln!(out, "load = {}", format_schedule(load));
        }
        let _ = writeln!(out, "noise = {}", s.noise.enabled);
        let _ = writeln!(out, "noise_amplitude = {}", s.noise.amplitude);
        let _ = writeln!(out, "noise_period = {}", s.noise.period);
        let _ = writeln!(out, "seed = {}", s.seed);
        let _ = writeln!(out, "decimation = {}", s.decimation);
        let _ = writeln!(
            out,
            "matrix_variant = {}",
            match s.variant {
                MatrixVariant::Corrected => "corrected",
                MatrixVariant::Verbatim => "verbatim",
            }
        );
        let _ = writeln!(out, "conduction_latch = {}", s.conduction_latch);
        let _ = writeln!(out, "x5_reset_on_block = {}", s.x5_reset_on_block);
        let _ = writeln!(out, "f_s = {}", s.f_s);
        let c = &self.controller;
        let _ = writeln!(out, "\n[controller]");
        let _ = writeln!(out, "kp = {}", c.kp);
        let _ = writeln!(out, "ki = {}", c.ki);
        let _ = writeln!(out, "f_base = {}", c.f_base);
        let _ = writeln!(out, "f_min = {}", c.f_min);
        let _ = writeln!(out, "f_max = {}", c.f_max);
        let _ = writeln!(out, "sign = {}", c.sign);
        let a = &self.agent;
        let _ = writeln!(out, "\n[agent]");
        let _ = writeln!(
            out,
            "algo = {}",
            match a.td3.algo {
                Algo::Td3 => "td3",
                Algo::Ddpg => "ddpg",
            }
        );
        let _ = writeln!(out, "gamma = {}", a.td3.gamma);
        let _ = writeln!(out, "tau = {}", a.td3.tau);
        let _ = writeln!(out, "policy_delay = {}", a.td3.policy_delay);
        let _ = writeln!(out, "target_noise_std = {}", a.td3.target_noise_std);
        let _ = writeln!(out, "target_noise_clip = {}", a.td3.target_noise_clip);
        let _ = writeln!(out, "explore_noise_std = {}", a.td3.explore_noise_std);
        let _ = writeln!(out, "batch_size = {}", a.td3.batch_size);
        let _ = writeln!(out, "episodes = {}", a.td3.episodes);
        let _ = writeln!(out, "warmup_steps = {}", a.td3.warmup_steps);
        let _ = writeln!(out, "buffer_capacity = {}", a.td3.buffer_capacity);
        let _ = writeln!(out, "lr = {}", a.td3.lr);
        let _ = writeln!(out, "seed = {}", a.td3.seed);
        let _ = writeln!(
            out,
            "action_timing = {}",
            match a.td3.action_timing {
                ActionTiming::PerStep => "per_step",
                ActionTiming::PerEpisode => "per_episode",
            }
        );
        let b: &ActionBounds = &a.td3.bounds;
        let _ = writeln!(out, "kp_min = {}", b.kp.0);
        let _ = writeln!(out, "kp_max = {}", b.kp.1);
        let _ = writeln!(out, "ki_min = {}", b.ki.0);
        let _ = writeln!(out, "ki_max = {}", b.ki.1);
        let _ = writeln!(out, "horizon = {}", a.horizon);
        let _ = writeln!(out, "vref_min = {}", a.vref_min);
        let _ = writeln!(out, "vref_max = {}", a.vref_max);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "\n[output]");
            let _ = writeln!(out, "dir = {}", dir.display());
        }
        out
    }
}
