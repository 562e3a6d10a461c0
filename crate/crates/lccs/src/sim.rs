//! Time-domain simulation of the switched converter.
//!
//! A [`Simulation`] owns one run: the subsystem matrices (rebuilt when the
//! input-voltage or load schedule fires), the switch driver, an optional PI
//! controller, the measurement-noise stream, and the recorded waveforms.
//! Runs are strictly sequential; concurrent workers each own their context.

use crate::error::{Error, Result};
use crate::integrator::{blown_up, rk4_step, DEFAULT_BLOWUP_BOUND};
use crate::model::{
    build_subsystems, classify_mode, rectifier_voltage, switch_state, MatrixVariant, Mode,
    StateVector, SubsystemSet, SwitchingSurface,
};
use crate::params::{derive_params, ConverterParams, DerivedParams};
use crate::pi::PiController;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

pub const WPT_BAND_MIN_HZ: f64 = 79e3;
pub const WPT_BAND_MAX_HZ: f64 = 90e3;

/// Square-wave bridge drive: either a fixed-duty frequency command (a phase
/// accumulator, continuous across frequency changes) or the state-based
/// switching surface.
#[derive(Clone, Debug)]
pub enum SwitchDriver {
    Frequency {
        f_s: f64,
        /// Phase in [0, 1); first half of the period drives s = +1.
        phase: f64,
        /// Reject commands outside the 79-90 kHz WPT band. Off for sweeps.
        band_guard: bool,
    },
    Dpwa(SwitchingSurface),
}

impl SwitchDriver {
    pub fn frequency(f_s: f64) -> Result<Self> {
        Self::frequency_guarded(f_s, true)
    }

    pub fn frequency_guarded(f_s: f64, band_guard: bool) -> Result<Self> {
        if !(f_s > 0.0) || !f_s.is_finite() {
            return Err(Error::InvalidParameter(format!("f_s must be positive, got {f_s}")));
        }
        if band_guard && !(WPT_BAND_MIN_HZ..=WPT_BAND_MAX_HZ).contains(&f_s) {
            return Err(Error::InvalidParameter(format!(
                "f_s = {f_s} Hz outside the 79-90 kHz WPT band"
            )));
        }
        Ok(SwitchDriver::Frequency {
            f_s,
            phase: 0.0,
            band_guard,
        })
    }

    pub fn dpwa(surface: SwitchingSurface) -> Result<Self> {
        surface.validate()?;
        Ok(SwitchDriver::Dpwa(surface))
    }

    /// Current switch logic value.
    pub fn drive_switch(&self, x: &StateVector) -> i8 {
        match self {
            SwitchDriver::Frequency { phase, .. } => {
                if *phase < 0.5 {
                    1
                } else {
                    -1
                }
            }
            SwitchDriver::Dpwa(surface) => switch_state(surface, x),
        }
    }

    /// Advance the phase accumulator. No-op for the state-based driver.
    pub fn advance(&mut self, dt: f64) {
        if let SwitchDriver::Frequency { f_s, phase, .. } = self {
            *phase += *f_s * dt;
            if *phase >= 1.0 {
                *phase -= phase.floor();
            }
        }
    }

    /// Change the commanded frequency, keeping the phase continuous.
    pub fn set_frequency(&mut self, f: f64) {
        if let SwitchDriver::Frequency { f_s, .. } = self {
            *f_s = f;
        }
    }

    pub fn current_frequency(&self) -> Option<f64> {
        match self {
            SwitchDriver::Frequency { f_s, .. } => Some(*f_s),
            SwitchDriver::Dpwa(_) => None,
        }
    }
}

/// Piecewise-constant schedule as (time, value) pairs, first entry at t = 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule(pub Vec<(f64, f64)>);

impl Schedule {
    pub fn constant(v: f64) -> Self {
        Schedule(vec![(0.0, v)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::Config("schedule must have at least one entry".into()));
        }
        if self.0[0].0 != 0.0 {
            return Err(Error::Config("schedule must start at t = 0".into()));
        }
        if self.0.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config("schedule times must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let mut v = self.0[0].1;
        for &(tk, vk) in &self.0 {
            if t >= tk {
                v = vk;
            } else {
                break;
            }
        }
        v
    }

    /// Times of the steps after t = 0.
    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().skip(1).map(|&(t, _)| t)
    }

    pub fn last_change_before(&self, t_end: f64) -> f64 {
        self.0
            .iter()
            .map(|&(t, _)| t)
            .filter(|&t| t < t_end)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Zero-mean uniform amplitude on the sampled output voltage (V).
    pub amplitude: f64,
    /// Refresh period (s); default matches the 85 kHz switching period.
    pub period: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            amplitude: 0.5,
            period: 1.0 / 85e3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub duration: f64,
    pub dt: f64,
    pub control_period: f64,
    pub vref: Schedule,
    pub vin: Schedule,
    pub load: Schedule,
    pub noise: NoiseConfig,
    pub initial_state: StateVector,
    pub seed: u64,
    pub decimation: usize,
    pub blowup_bound: f64,
    /// Hold a conducting mode until the secondary current crosses zero, then
    /// block the rectifier (modes 2/5); re-entry is decided by the mode
    /// condition function on the frozen state. Without the latch the
    /// condition function is re-evaluated every step, which ends each
    /// conduction lobe at its current peak (the rectifier-off voltage test
    /// tracks d(x5)/dt while the clamp is active) and collapses the power
    /// transfer. The latch is the circuit-faithful reading: a bridge diode
    /// stops conducting when its current reaches zero, not before.
    pub conduction_latch: bool,
    /// Clear the secondary current on entry into modes 2/5 instead of
    /// freezing it at its entry value. With the conduction latch the entry
    /// value is already within one step of zero, so this is off by default.
    pub x5_reset_on_block: bool,
}

/// Default step: 200 samples per 85 kHz switching cycle.
pub fn default_dt() -> f64 {
    1.0 / (200.0 * 85e3)
}

impl Scenario {
    pub fn open_loop(duration: f64, vin: f64, r_load: f64) -> Self {
        Self {
            duration,
            dt: default_dt(),
            control_period: 100e-6,
            vref: Schedule::constant(0.0),
            vin: Schedule::constant(vin),
            load: Schedule::constant(r_load),
            noise: NoiseConfig::default(),
            initial_state: [0.0; 7],
            seed: 0,
            decimation: 1,
            blowup_bound: DEFAULT_BLOWUP_BOUND,
            conduction_latch: true,
            x5_reset_on_block: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.duration < 0.0 {
            return Err(Error::Config("duration must be non-negative".into()));
        }
        let ratio = self.control_period / self.dt;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "control_period ({}) must be an integer multiple of dt ({})",
                self.control_period, self.dt
            )));
        }
        if self.decimation == 0 {
            return Err(Error::Config("decimation must be >= 1".into()));
        }
        for s in [&self.vref, &self.vin, &self.load] {
            s.validate()?;
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("initial state must be finite".into()));
        }
        Ok(())
    }

    pub fn steps_per_control(&self) -> usize {
        (self.control_period / self.dt).round() as usize
    }

    /// Closed-loop disturbance-rejection scenario: full reference step at
    /// t = 0, source sag of 5% at 40 ms, load drop of 10% at 70 ms,
    /// measurement noise on, 100 ms total.
    pub fn disturbance(vref: f64, vin: f64, r_load: f64) -> Self {
        let mut sc = Scenario::open_loop(0.1, vin, r_load);
        sc.vref = Schedule::constant(vref);
        sc.vin = Schedule(vec![(0.0, vin), (0.04, 0.95 * vin)]);
        sc.load = Schedule(vec![(0.0, r_load), (0.07, 0.9 * r_load)]);
        sc.noise.enabled = true;
        sc
    }
}

/// Stepped reference ramp from `vref/steps` up to `vref`, one step per
/// `step_period`; softens turn-on overshoot at low-voltage operating points.
pub fn soft_start(vref: f64, steps: usize, step_period: f64) -> Schedule {
    assert!(steps >= 1);
    Schedule(
        (0..steps)
            .map(|i| {
                (
                    i as f64 * step_period,
                    vref * (i + 1) as f64 / steps as f64,
                )
            })
            .collect(),
    )
}

#[derive(Clone, Debug, Default)]
pub struct Waveforms {
    pub t: Vec<f64>,
    pub x: Vec<StateVector>,
    pub mode: Vec<u8>,
    pub s: Vec<i8>,
    pub f_cmd: Vec<f64>,
    pub decimation: usize,
}

impl Waveforms {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn vout(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.x.iter().map(|x| x[6]))
    }

    /// Copy of the samples with `t0 <= t < t1`, for per-segment metrics.
    pub fn slice(&self, t0: f64, t1: f64) -> Waveforms {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.t[i] >= t0 && self.t[i] < t1)
            .collect();
        Waveforms {
            t: keep.iter().map(|&i| self.t[i]).collect(),
            x: keep.iter().map(|&i| self.x[i]).collect(),
            mode: keep.iter().map(|&i| self.mode[i]).collect(),
            s: keep.iter().map(|&i| self.s[i]).collect(),
            f_cmd: keep.iter().map(|&i| self.f_cmd[i]).collect(),
            decimation: self.decimation,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rise_time_10_90: f64,
    pub overshoot_pct: f64,
    pub settling_time_2pct: f64,
    pub steady_mean: f64,
    pub steady_ripple_pp: f64,
    pub rms_error: f64,
    pub settled: bool,
}

impl Metrics {
    pub fn unsettled() -> Self {
        Self {
            rise_time_10_90: f64::NAN,
            overshoot_pct: f64::NAN,
            settling_time_2pct: f64::NAN,
            steady_mean: f64::NAN,
            steady_ripple_pp: f64::NAN,
            rms_error: f64::NAN,
            settled: false,
        }
    }
}

/// Step-response metrics of the output voltage against `target`, over the
/// samples at `t >= window_start`. `band_pct` is the settling band.
pub fn compute_metrics(w: &Waveforms, target: f64, band_pct: f64, window_start: f64) -> Metrics {
    let pts: Vec<(f64, f64)> = w.vout().filter(|&(t, _)| t >= window_start).collect();
    if pts.is_empty() || target == 0.0 {
        return Metrics::unsettled();
    }
    let band = band_pct / 100.0 * target.abs();

    // Settling: earliest time after which the trajectory stays in the band.
    let mut settle_idx = None;
    for i in (0..pts.len()).rev() {
        if (pts[i].1 - target).abs() > band {
            break;
        }
        settle_idx = Some(i);
    }
    let settled = settle_idx.is_some();
    let settling_time = settle_idx
        .map(|i| pts[i].0 - window_start)
        .unwrap_or(f64::NAN);

    // Rise time 10% -> 90%.
    let t90 = pts.iter().find(|&&(_, v)| v >= 0.9 * target).map(|&(t, _)| t);
    let rise = match t90 {
        Some(t90) => {
            let t_low = pts
                .iter()
                .take_while(|&&(t, _)| t < t90)
                .filter(|&&(_, v)| v < 0.1 * target)
                .last()
                .map(|&(t, _)| t)
                .unwrap_or(t90);
            t90 - t_low
        }
        None => f64::NAN,
    };

    let peak = pts.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let overshoot = ((peak - target) / target.abs() * 100.0).max(0.0);

    let (mean, pp, rms) = match settle_idx {
        Some(i) => {
            let win = &pts[i..];
            let mean = win.iter().map(|&(_, v)| v).sum::<f64>() / win.len() as f64;
            let lo = win.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
            let hi = win.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
            let rms = (win.iter().map(|&(_, v)| (v - target) * (v - target)).sum::<f64>()
                / win.len() as f64)
                .sqrt();
            (mean, hi - lo, rms)
        }
        None => (f64::NAN, f64::NAN, f64::NAN),
    };

    Metrics {
        rise_time_10_90: rise,
        overshoot_pct: overshoot,
        settling_time_2pct: settling_time,
        steady_mean: mean,
        steady_ripple_pp: pp,
        rms_error: rms,
        settled,
    }
}

/// Information returned for each control sample.
#[derive(Clone, Copy, Debug)]
pub struct ControlSample {
    pub t: f64,
    pub v_meas: f64,
    pub e: f64,
    pub f_cmd: f64,
}

const MODE_TAIL_LEN: usize = 16;

pub struct Simulation {
    p: ConverterParams,
    d: DerivedParams,
    variant: MatrixVariant,
    set: SubsystemSet,
    pub scenario: Scenario,
    pub driver: SwitchDriver,
    pub ctrl: Option<PiController>,
    x: StateVector,
    step: usize,
    n_steps: usize,
    ctrl_every: usize,
    prev_mode: Mode,
    noise_rng: ChaCha8Rng,
    noise_value: f64,
    noise_epoch: i64,
    events: Vec<(usize, f64, f64)>,
    next_event: usize,
    wave: Waveforms,
    f_cmd_current: f64,
    mode_tail: VecDeque<u8>,
}

impl Simulation {
    pub fn new(
        scenario: Scenario,
        driver: SwitchDriver,
        ctrl: Option<PiController>,
        p: &ConverterParams,
        variant: MatrixVariant,
    ) -> Result<Self> {
        scenario.validate()?;
        if ctrl.is_some() && !matches!(driver, SwitchDriver::Frequency { .. }) {
            return Err(Error::Config(
                "a PI controller requires the frequency switch driver".into(),
            ));
        }
        let mut p = *p;
        p.vin = scenario.vin.value_at(0.0);
        p.r_load = scenario.load.value_at(0.0);
        let d = derive_params(&p)?;
        let set = build_subsystems(&p, &d, variant)?;
        let n_steps = (scenario.duration / scenario.dt).round() as usize;

        // Schedule events snapped to step boundaries.
        let mut events: Vec<(usize, f64, f64)> = Vec::new();
        let mut times: Vec<f64> = scenario
            .vin
            .event_times()
            .chain(scenario.load.event_times())
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.dedup();
        for t in times {
            let k = (t / scenario.dt).round() as usize;
            if k <= n_steps {
                events.push((k, scenario.vin.value_at(t), scenario.load.value_at(t)));
            }
        }

        let f_cmd_current = driver.current_frequency().unwrap_or(f64::NAN);
        let x = scenario.initial_state;
        let noise_rng = ChaCha8Rng::seed_from_u64(scenario.seed ^ 0x6e6f_6973);
        let ctrl_every = scenario.steps_per_control();
        Ok(Self {
            p,
            d,
            variant,
            set,
            scenario,
            driver,
            ctrl,
            x,
            step: 0,
            n_steps,
            ctrl_every,
            prev_mode: Mode::new(1).unwrap(),
            noise_rng,
            noise_value: 0.0,
            noise_epoch: -1,
            events,
            next_event: 0,
            wave: Waveforms {
                decimation: 1,
                ..Default::default()
            },
            f_cmd_current,
            mode_tail: VecDeque::with_capacity(MODE_TAIL_LEN),
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.x
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scenario.dt
    }

    pub fn done(&self) -> bool {
        self.step >= self.n_steps
    }

    pub fn params(&self) -> &ConverterParams {
        &self.p
    }

    /// Measurement of the output voltage, with noise if enabled.
    pub fn measure_vout(&mut self) -> f64 {
        let t = self.time();
        let mut v = self.x[6];
        if self.scenario.noise.enabled {
            let epoch = (t / self.scenario.noise.period).floor() as i64;
            while self.noise_epoch < epoch {
                self.noise_value = self
                    .noise_rng
                    .gen_range(-self.scenario.noise.amplitude..=self.scenario.noise.amplitude);
                self.noise_epoch += 1;
            }
            v += self.noise_value;
        }
        v
    }

    fn fire_events(&mut self) {
        while self.next_event < self.events.len() && self.events[self.next_event].0 == self.step {
            let (_, vin, load) = self.events[self.next_event];
            self.p.vin = vin;
            self.p.r_load = load;
            self.set = build_subsystems(&self.p, &self.d, self.variant)
                .expect("schedule produced invalid parameters");
            self.next_event += 1;
        }
    }

    fn record(&mut self, s: i8, mode: Mode) {
        if self.step % self.scenario.decimation == 0 {
            self.wave.t.push(self.time());
            self.wave.x.push(self.x);
            self.wave.mode.push(mode.index());
            self.wave.s.push(s);
            self.wave.f_cmd.push(self.f_cmd_current);
        }
    }

    /// Mode for the current step. With the latch, a conducting mode persists
    /// until the rectified secondary current reaches zero, the rectifier then
    /// blocks until |v_pr| reaches the output voltage, and the polarity of
    /// the new conduction path is the polarity of v_pr (the forward-biased
    /// diode pair). Without the latch the condition function is re-evaluated
    /// on every step.
    fn select_mode(&self, s: i8) -> Mode {
        if !self.scenario.conduction_latch {
            return classify_mode(s, &self.x, &self.p, &self.d, self.prev_mode);
        }
        if !self.prev_mode.rectifier_off() {
            let rect = self.prev_mode.rectifier_sign();
            return if (rect as f64) * self.x[4] > 0.0 {
                Mode::conducting(s, rect)
            } else {
                Mode::blocking(s)
            };
        }
        let v_pr = rectifier_voltage(&self.x, &self.p, &self.d);
        if v_pr.abs() < self.x[6] {
            Mode::blocking(s)
        } else {
            Mode::conducting(s, if v_pr >= 0.0 { 1 } else { -1 })
        }
    }

    /// Integrate exactly one dt step.
    fn step_dt(&mut self) -> Result<()> {
        self.fire_events();
        let s = self.driver.drive_switch(&self.x);
        let mode = self.select_mode(s);
        self.record(s, mode);
        if self.scenario.x5_reset_on_block
            && mode.rectifier_off()
            && !self.prev_mode.rectifier_off()
        {
            self.x[4] = 0.0;
        }
        self.prev_mode = mode;
        if self.mode_tail.len() == MODE_TAIL_LEN {
            self.mode_tail.pop_front();
        }
        self.mode_tail.push_back(mode.index());
        self.x = rk4_step(
            self.set.a_of(mode),
            self.set.b_of(mode),
            &self.x,
            self.scenario.dt,
        );
        self.driver.advance(self.scenario.dt);
        self.step += 1;
        if blown_up(&self.x, self.scenario.blowup_bound) {
            return Err(Error::NumericalBlowup {
                t: self.time(),
                bound: self.scenario.blowup_bound,
                mode_tail: self.mode_tail.iter().copied().collect(),
            });
        }
        Ok(())
    }

    /// One control period: sample the output, update the controller (with
    /// freshly supplied gains if any), then integrate to the next control
    /// sample or the end of the scenario, whichever is first.
    pub fn control_cycle(&mut self, gains: Option<(f64, f64)>) -> Result<ControlSample> {
        let t = self.time();
        let v_meas = self.measure_vout();
        let e = self.scenario.vref.value_at(t) - v_meas;
        if let Some(ctrl) = self.ctrl.as_mut() {
            if let Some((kp, ki)) = gains {
                ctrl.kp = kp;
                ctrl.ki = ki;
            }
            let f = ctrl.pi_step(e, self.scenario.control_period);
            self.driver.set_frequency(f);
            self.f_cmd_current = f;
        }
        let sample = ControlSample {
            t,
            v_meas,
            e,
            f_cmd: self.f_cmd_current,
        };
        let remaining = self.n_steps - self.step;
        for _ in 0..self.ctrl_every.min(remaining) {
            self.step_dt()?;
        }
        Ok(sample)
    }

    /// Run to the end of the scenario.
    pub fn run_to_end(&mut self) -> Result<()> {
        while !self.done() {
            self.control_cycle(None)?;
        }
        Ok(())
    }

    /// Consume the context, returning waveforms and metrics over the final
    /// reference segment.
    pub fn finish(mut self) -> (Waveforms, Metrics) {
        if self.step == self.n_steps && self.n_steps > 0 {
            // Capture the final state.
            let s = self.driver.drive_switch(&self.x);
            let mode = self.select_mode(s);
            self.record(s, mode);
        }
        let target = self.scenario.vref.value_at(self.scenario.duration);
        let window_start = self
            .scenario
            .vref
            .last_change_before(self.scenario.duration);
        let metrics = if self.wave.is_empty() {
            Metrics::unsettled()
        } else {
            compute_metrics(&self.wave, target, 2.0, window_start)
        };
        self.wave.decimation = self.scenario.decimation;
        (self.wave, metrics)
    }
}

/// Run a scenario to completion.
pub fn run(
    scenario: Scenario,
    driver: SwitchDriver,
    ctrl: Option<PiController>,
    p: &ConverterParams,
    variant: MatrixVariant,
) -> Result<(Waveforms, Metrics)> {
    let mut sim = Simulation::new(scenario, driver, ctrl, p, variant)?;
    sim.run_to_end()?;
    Ok(sim.finish())
}

/// Steady-state detector window and ripple threshold.
const STEADY_WINDOW_S: f64 = 2e-3;
const STEADY_RIPPLE_FRACTION: f64 = 0.01;

/// Open-loop steady output voltage for each frequency in `f_list`.
///
/// Each point runs for `settle` seconds; the trailing window must have
/// cycle-mean ripple below 1% of its mean to count as settled.
pub fn frequency_sweep(
    p: &ConverterParams,
    variant: MatrixVariant,
    f_list: &[f64],
    settle: f64,
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(f_list.len());
    for &f in f_list {
        if !(70e3..=100e3).contains(&f) {
            return Err(Error::InvalidParameter(format!(
                "sweep frequency {f} Hz outside 70-100 kHz"
            )));
        }
        let mut scenario = Scenario::open_loop(settle, p.vin, p.r_load);
        scenario.dt = 1.0 / (200.0 * f);
        scenario.decimation = 10;
        let driver = SwitchDriver::frequency_guarded(f, false)?;
        let (w, _) = run(scenario, driver, None, p, variant)?;
        let vout = steady_mean(&w, settle).ok_or(Error::Unsettled { f_s: Some(f) })?;
        out.push((f, vout));
    }
    Ok(out)
}

/// Mean of the trailing steady window, or None if the cycle-averaged output
/// still drifts by more than 1% across it.
pub fn steady_mean(w: &Waveforms, t_end: f64) -> Option<f64> {
    let window: Vec<f64> = w
        .vout()
        .filter(|&(t, _)| t >= t_end - STEADY_WINDOW_S)
        .map(|(_, v)| v)
        .collect();
    if window.len() < 8 {
        return None;
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    // Compare half-window means so switching ripple does not mask drift.
    let half = window.len() / 2;
    let m1 = window[..half].iter().sum::<f64>() / half as f64;
    let m2 = window[half..].iter().sum::<f64>() / (window.len() - half) as f64;
    if (m2 - m1).abs() <= STEADY_RIPPLE_FRACTION * mean.abs().max(1e-9) {
        Some(mean)
    } else {
        None
    }
}

/// Loop polarity for the PI controller from the gain-curve slope at `f_base`:
/// +1 when raising the frequency raises the output, else -1.
pub fn recommended_sign(curve: &[(f64, f64)], f_base: f64) -> f64 {
    if curve.len() < 2 {
        return -1.0;
    }
    let mut sorted = curve.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // Slope of the segment containing (or nearest to) f_base.
    let idx = sorted
        .windows(2)
        .position(|w| f_base <= w[1].0)
        .unwrap_or(sorted.len() - 2);
    let (f0, v0) = sorted[idx];
    let (f1, v1) = sorted[idx + 1];
    if (v1 - v0) / (f1 - f0) > 0.0 {
        1.0
    } else {
        -1.0
    }
}
