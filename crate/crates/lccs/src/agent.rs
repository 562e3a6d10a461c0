//! TD3 trainer (with a DDPG degenerate mode) that tunes the PI gains
//! against the simulated converter: environment adapter, clipped double-Q
//! targets, delayed actor updates, and Polyak target tracking.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MatrixVariant;
use crate::nn::{AdamState, Gradients, Head, Mlp};
use crate::params::ConverterParams;
use crate::pi::PiController;
use crate::replay::{ReplayBuffer, Transition};
use crate::sim::{default_dt, NoiseConfig, Scenario, Schedule, Simulation, SwitchDriver};

/// Observation scale factors: the integrator is scaled by 1/0.2 V*s and
/// the error by 1/20 V, keeping both components O(1) on the default horizon.
pub const OBS_SCALE_INTEG: f64 = 1.0 / 0.2;
pub const OBS_SCALE_ERROR: f64 = 1.0 / 20.0;

/// Reward for one control sample.
pub fn reward(vref: f64, vout: f64) -> f64 {
    let e = vref - vout;
    -(e * e)
}

/// Agent observation from the controller integrator and the current error.
pub fn observe(integ: f64, e: f64) -> [f64; 2] {
    [integ * OBS_SCALE_INTEG, e * OBS_SCALE_ERROR]
}

/// Gain ranges the normalized action maps onto.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionBounds {
    pub kp: (f64, f64),
    pub ki: (f64, f64),
}

impl Default for ActionBounds {
    fn default() -> Self {
        ActionBounds {
            kp: (0.0, 10.0),
            ki: (0.0, 50.0),
        }
    }
}

/// Affine map from a normalized action in `[-1, 1]^2` (clipped if outside)
/// to a gain pair.
pub fn map_action(a: [f64; 2], bounds: &ActionBounds) -> (f64, f64) {
    let unit = |v: f64, (lo, hi): (f64, f64)| {
        let c = v.clamp(-1.0, 1.0);
        lo + (hi - lo) * (c + 1.0) / 2.0
    };
    (unit(a[0], bounds.kp), unit(a[1], bounds.ki))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algo {
    Td3,
    Ddpg,
}

/// Whether the agent emits a fresh action every control sample or holds the
/// episode's first action throughout.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionTiming {
    PerStep,
    PerEpisode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Td3Config {
    pub algo: Algo,
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: usize,
    pub target_noise_std: f64,
    pub target_noise_clip: f64,
    pub explore_noise_std: f64,
    pub batch_size: usize,
    pub episodes: usize,
    pub warmup_steps: usize,
    pub buffer_capacity: usize,
    pub lr: f64,
    pub seed: u64,
    pub action_timing: ActionTiming,
    pub bounds: ActionBounds,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for Td3Config {
    fn default() -> Self {
        Td3Config {
            algo: Algo::Td3,
            gamma: 0.99,
            tau: 5e-3,
            policy_delay: 2,
            target_noise_std: 0.1f64.sqrt(),
            target_noise_clip: 0.5,
            explore_noise_std: 0.1,
            batch_size: 128,
            episodes: 500,
            warmup_steps: 1000,
            buffer_capacity: 1_000_000,
            lr: 1e-4,
            seed: 0,
            action_timing: ActionTiming::PerStep,
            bounds: ActionBounds::default(),
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64, 64],
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1], got {}", self.gamma)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau must be in (0, 1], got {}", self.tau)));
        }
        if self.policy_delay == 0 {
            return Err(Error::Config("policy_delay must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }

    /// Effective delay: DDPG updates the actor on every critic update.
    fn delay(&self) -> usize {
        match self.algo {
            Algo::Td3 => self.policy_delay,
            Algo::Ddpg => 1,
        }
    }
}

/// Environment template an episode is stamped from.
#[derive(Clone, Debug)]
pub struct EnvTemplate {
    pub params: ConverterParams,
    pub variant: MatrixVariant,
    /// Episode horizon (s).
    pub horizon: f64,
    /// Control sample period (s).
    pub control_period: f64,
    pub dt: f64,
    pub noise: NoiseConfig,
    /// Reference draw range (V).
    pub vref_range: (f64, f64),
    /// Start each episode from the open-loop steady state at the base
    /// frequency instead of a discharged converter. A cold 0 -> 200 V step
    /// saturates the frequency command for every sensible gain pair, which
    /// makes all actions equivalent; regulation around the operating point
    /// is the regime where the gains matter (and the regime the observation
    /// scaling assumes).
    pub warm_start: bool,
}

impl Default for EnvTemplate {
    fn default() -> Self {
        EnvTemplate {
            params: ConverterParams::table2(),
            variant: MatrixVariant::Corrected,
            horizon: 20e-3,
            control_period: 100e-6,
            dt: default_dt(),
            noise: NoiseConfig::default(),
            vref_range: (190.0, 210.0),
            warm_start: true,
        }
    }
}

impl EnvTemplate {
    pub fn scenario(&self, vref: f64, seed: u64) -> Scenario {
        let mut sc = Scenario::open_loop(self.horizon, self.params.vin, self.params.r_load);
        sc.dt = self.dt;
        sc.control_period = self.control_period;
        sc.vref = Schedule::constant(vref);
        sc.noise = self.noise;
        sc.seed = seed;
        // Training only consumes control samples; skip dense waveforms.
        sc.decimation = usize::MAX;
        sc
    }

    pub fn steps_per_episode(&self) -> usize {
        (self.horizon / self.control_period).round() as usize
    }

    /// Open-loop steady state at 85 kHz, used as the warm-start episode
    /// initial condition.
    pub fn warm_state(&self) -> Result<crate::model::StateVector> {
        let mut sc = Scenario::open_loop(20e-3, self.params.vin, self.params.r_load);
        sc.dt = self.dt;
        sc.decimation = usize::MAX;
        let driver = SwitchDriver::frequency(85e3)?;
        let mut sim = Simulation::new(sc, driver, None, &self.params, self.variant)?;
        sim.run_to_end()?;
        Ok(*sim.state())
    }
}

/// Networks, targets, optimizers, and replay storage for one training run.
pub struct Td3Bundle {
    pub cfg: Td3Config,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub target_actor: Mlp,
    pub target_critic1: Mlp,
    pub target_critic2: Mlp,
    pub opt_actor: AdamState,
    pub opt_critic1: AdamState,
    pub opt_critic2: AdamState,
    pub buffer: ReplayBuffer,
    pub critic_updates: usize,
    pub actor_updates: usize,
    rng_target: ChaCha8Rng,
    rng_sample: ChaCha8Rng,
}

impl Td3Bundle {
    pub fn new(cfg: Td3Config) -> Result<Self> {
        cfg.validate()?;
        let mut actor_sizes = vec![2];
        actor_sizes.extend(&cfg.actor_hidden);
        actor_sizes.push(2);
        let mut critic_sizes = vec![4];
        critic_sizes.extend(&cfg.critic_hidden);
        critic_sizes.push(1);
        let head = Head::Bounded(vec![(-1.0, 1.0), (-1.0, 1.0)]);
        let actor = Mlp::new(&actor_sizes, head, cfg.seed.wrapping_add(1))?;
        let critic1 = Mlp::new(&critic_sizes, Head::Linear, cfg.seed.wrapping_add(2))?;
        let critic2 = Mlp::new(&critic_sizes, Head::Linear, cfg.seed.wrapping_add(3))?;
        let opt_actor = AdamState::new(&actor, cfg.lr);
        let opt_critic1 = AdamState::new(&critic1, cfg.lr);
        let opt_critic2 = AdamState::new(&critic2, cfg.lr);
        Ok(Td3Bundle {
            target_actor: actor.clone(),
            target_critic1: critic1.clone(),
            target_critic2: critic2.clone(),
            actor,
            critic1,
            critic2,
            opt_actor,
            opt_critic1,
            opt_critic2,
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            critic_updates: 0,
            actor_updates: 0,
            rng_target: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7461_7267),
            rng_sample: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7361_6d70),
            cfg,
        })
    }

    fn critic_input(obs: &[f64; 2], action: &[f64; 2]) -> [f64; 4] {
        [obs[0], obs[1], action[0], action[1]]
    }

    fn min_target_q(&self, obs: &[f64; 2], action: &[f64; 2]) -> Result<f64> {
        let input = Self::critic_input(obs, action);
        let q1 = self.target_critic1.forward(&input)?[0];
        match self.cfg.algo {
            Algo::Ddpg => Ok(q1),
            Algo::Td3 => {
                let q2 = self.target_critic2.forward(&input)?[0];
                Ok(q1.min(q2))
            }
        }
    }

    /// Bellman targets `y_i` with target-policy smoothing (TD3 only).
    pub fn compute_targets(&mut self, batch: &[Transition]) -> Result<Vec<f64>> {
        let normal = Normal::new(0.0, self.cfg.target_noise_std)
            .expect("target noise std must be finite");
        let mut ys = Vec::with_capacity(batch.len());
        for tr in batch {
            let mut a = self.target_actor.forward(&tr.next_obs)?;
            if matches!(self.cfg.algo, Algo::Td3) {
                for v in &mut a {
                    let eps = normal
                        .sample(&mut self.rng_target)
                        .clamp(-self.cfg.target_noise_clip, self.cfg.target_noise_clip);
                    *v = (*v + eps).clamp(-1.0, 1.0);
                }
            }
            let a = [a[0], a[1]];
            let q = self.min_target_q(&tr.next_obs, &a)?;
            let cont = if tr.done { 0.0 } else { 1.0 };
            ys.push(tr.reward + cont * self.cfg.gamma * q);
        }
        Ok(ys)
    }

    /// One Adam step per critic on `L_k = 1/(2M) sum (y_i - Q_k)^2`.
    pub fn update_critics(&mut self, batch: &[Transition]) -> Result<(f64, f64)> {
        let ys = self.compute_targets(batch)?;
        let m = batch.len() as f64;
        let mut losses = [0.0; 2];
        let single = matches!(self.cfg.algo, Algo::Ddpg);
        for (ci, loss_slot) in losses.iter_mut().enumerate() {
            if ci == 1 && single {
                break;
            }
            let critic = if ci == 0 { &self.critic1 } else { &self.critic2 };
            let mut grads = Gradients::zeros_like(critic);
            let mut loss = 0.0;
            for (tr, y) in batch.iter().zip(&ys) {
                let input = Self::critic_input(&tr.obs, &tr.action);
                let (out, trace) = critic.forward_trace(&input)?;
                let q = out[0];
                loss += (y - q) * (y - q);
                let upstream = [-(y - q) / m];
                let (g, _) = critic.backward(&trace, &upstream)?;
                grads.add(&g);
            }
            *loss_slot = loss / (2.0 * m);
            if ci == 0 {
                self.opt_critic1.step(&mut self.critic1, &grads)?;
            } else {
                self.opt_critic2.step(&mut self.critic2, &grads)?;
            }
        }
        self.critic_updates += 1;
        Ok((losses[0], losses[1]))
    }

    /// Ascend the mean (minimum-)critic value of the actor's actions;
    /// critics' parameters untouched. Returns the objective estimate.
    pub fn update_actor(&mut self, batch: &[Transition]) -> Result<f64> {
        let m = batch.len() as f64;
        let mut grads = Gradients::zeros_like(&self.actor);
        let mut objective = 0.0;
        for tr in batch {
            let (a, actor_trace) = self.actor.forward_trace(&tr.obs)?;
            let input = Self::critic_input(&tr.obs, &[a[0], a[1]]);
            let (q1_out, t1) = self.critic1.forward_trace(&input)?;
            let (use_first, q) = match self.cfg.algo {
                Algo::Ddpg => (true, q1_out[0]),
                Algo::Td3 => {
                    let q2 = self.critic2.forward(&input)?[0];
                    (q1_out[0] <= q2, q1_out[0].min(q2))
                }
            };
            objective += q / m;
            let upstream = [1.0 / m];
            let input_grad = if use_first {
                self.critic1.backward(&t1, &upstream)?.1
            } else {
                let (_, t2) = self.critic2.forward_trace(&input)?;
                self.critic2.backward(&t2, &upstream)?.1
            };
            // Ascent on the objective = descent on its negation.
            let action_grad = [-input_grad[2], -input_grad[3]];
            let (g, _) = self.actor.backward(&actor_trace, &action_grad)?;
            grads.add(&g);
        }
        self.opt_actor.step(&mut self.actor, &grads)?;
        self.actor_updates += 1;
        Ok(objective)
    }

    /// Polyak-track every target network.
    pub fn soft_update(&mut self) {
        let tau = self.cfg.tau;
        self.target_actor.soft_update_from(&self.actor, tau);
        self.target_critic1.soft_update_from(&self.critic1, tau);
        if matches!(self.cfg.algo, Algo::Td3) {
            self.target_critic2.soft_update_from(&self.critic2, tau);
        }
    }

    /// Greedy action with optional exploration noise; returns the action
    /// and the number of components that hit the [-1, 1] clip.
    pub fn select_action(
        &self,
        obs: &[f64; 2],
        explore: bool,
        rng: &mut ChaCha8Rng,
    ) -> Result<([f64; 2], usize)> {
        let mut a = self.actor.forward(obs)?;
        let mut clips = 0;
        if explore {
            let normal = Normal::new(0.0, self.cfg.explore_noise_std)
                .expect("exploration noise std must be finite");
            for v in &mut a {
                let noisy = *v + normal.sample(rng);
                let clipped = noisy.clamp(-1.0, 1.0);
                if clipped != noisy {
                    clips += 1;
                }
                *v = clipped;
            }
        }
        Ok(([a[0], a[1]], clips))
    }

    /// Converged gains as deployed: the greedy action at the zero
    /// observation, mapped to gain units.
    pub fn deployment_gains(&self) -> Result<(f64, f64)> {
        let a = self.actor.forward(&[0.0, 0.0])?;
        Ok(map_action([a[0], a[1]], &self.cfg.bounds))
    }

    /// One learner update on a sampled batch: critics always, actor and
    /// targets every `delay`-th call.
    pub fn learn_step(&mut self) -> Result<()> {
        if self.buffer.len() < self.cfg.batch_size {
            return Ok(());
        }
        let batch = {
            let rng = &mut self.rng_sample;
            self.buffer.sample(self.cfg.batch_size, rng)?
        };
        self.update_critics(&batch)?;
        if self.critic_updates % self.cfg.delay() == 0 {
            self.update_actor(&batch)?;
            self.soft_update();
        }
        Ok(())
    }
}

/// Serializable snapshot of a training run: networks, targets, optimizer
/// states, update counters, and replay statistics (the transitions
/// themselves are not persisted; a restored run refills the buffer).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub cfg: Td3Config,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub target_actor: Mlp,
    pub target_critic1: Mlp,
    pub target_critic2: Mlp,
    pub opt_actor: AdamState,
    pub opt_critic1: AdamState,
    pub opt_critic2: AdamState,
    pub critic_updates: usize,
    pub actor_updates: usize,
    pub buffer_len: usize,
    pub buffer_capacity: usize,
}

impl Td3Bundle {
    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            cfg: self.cfg.clone(),
            actor: self.actor.clone(),
            critic1: self.critic1.clone(),
            critic2: self.critic2.clone(),
            target_actor: self.target_actor.clone(),
            target_critic1: self.target_critic1.clone(),
            target_critic2: self.target_critic2.clone(),
            opt_actor: self.opt_actor.clone(),
            opt_critic1: self.opt_critic1.clone(),
            opt_critic2: self.opt_critic2.clone(),
            critic_updates: self.critic_updates,
            actor_updates: self.actor_updates,
            buffer_len: self.buffer.len(),
            buffer_capacity: self.buffer.capacity(),
        }
    }

    pub fn restore(ck: Checkpoint) -> Result<Self> {
        let mut bundle = Td3Bundle::new(ck.cfg)?;
        bundle.actor = ck.actor;
        bundle.critic1 = ck.critic1;
        bundle.critic2 = ck.critic2;
        bundle.target_actor = ck.target_actor;
        bundle.target_critic1 = ck.target_critic1;
        bundle.target_critic2 = ck.target_critic2;
        bundle.opt_actor = ck.opt_actor;
        bundle.opt_critic1 = ck.opt_critic1;
        bundle.opt_critic2 = ck.opt_critic2;
        bundle.critic_updates = ck.critic_updates;
        bundle.actor_updates = ck.actor_updates;
        Ok(bundle)
    }
}

/// Reward recorded for an episode that failed with numerical blowup.
pub const FAILED_EPISODE_REWARD: f64 = -1e9;

/// Per-episode training record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub reward: f64,
    /// Episode-end gains (the last action taken, in gain units).
    pub kp: f64,
    pub ki: f64,
    /// Exploration-noise clip events during the episode.
    pub epsilon_events: usize,
    pub blown_up: bool,
    pub vref: f64,
    /// Simulated plant time covered by the episode (s); shorter than the
    /// horizon when the episode ended in blowup.
    pub sim_time: f64,
}

/// Roll one episode. When `bundle` is given with `train = true`, pushes
/// transitions and runs learner updates per control sample (after warmup).
#[allow(clippy::too_many_arguments)]
fn run_episode(
    env: &EnvTemplate,
    bundle: &mut Td3Bundle,
    vref: f64,
    episode_seed: u64,
    init: Option<&crate::model::StateVector>,
    explore: bool,
    train: bool,
    global_step: &mut usize,
    rng_explore: &mut ChaCha8Rng,
) -> Result<EpisodeLog> {
    let mut sc = env.scenario(vref, episode_seed);
    if let Some(x0) = init {
        sc.initial_state = *x0;
    }
    let driver = SwitchDriver::frequency(85e3)?;
    let ctrl = PiController::new(0.0, 0.0);
    let mut sim = Simulation::new(sc, driver, Some(ctrl), &env.params, env.variant)?;
    let n_steps = env.steps_per_episode();

    let mut epsilon_events = 0;
    let mut total = 0.0;
    let mut blown = false;
    let mut held_action: Option<[f64; 2]> = None;
    let mut last_gains = (f64::NAN, f64::NAN);
    let mut steps_done = 0usize;

    let e0 = vref - sim.measure_vout();
    let mut obs = observe(0.0, e0);
    for k in 0..n_steps {
        let (action, clips) =
            env_action_held(bundle, &mut held_action, &obs, explore, rng_explore)?;
        epsilon_events += clips;
        let (kp, ki) = map_action(action, &bundle.cfg.bounds);
        last_gains = (kp, ki);
        let done = k == n_steps - 1;
        match sim.control_cycle(Some((kp, ki))) {
            Ok(_) => {
                steps_done += 1;
                let v = sim.measure_vout();
                let e_next = vref - v;
                let integ = sim.ctrl.as_ref().map(|c| c.integ).unwrap_or(0.0);
                let next_obs = observe(integ, e_next);
                let r = reward(vref, v);
                total += r;
                if train {
                    bundle.buffer.push(Transition {
                        obs,
                        action,
                        reward: r,
                        next_obs,
                        done,
                    });
                    *global_step += 1;
                    if *global_step > bundle.cfg.warmup_steps {
                        bundle.learn_step()?;
                    }
                }
                obs = next_obs;
            }
            Err(Error::NumericalBlowup { .. }) => {
                blown = true;
                total = FAILED_EPISODE_REWARD;
                if train {
                    bundle.buffer.push(Transition {
                        obs,
                        action,
                        reward: FAILED_EPISODE_REWARD,
                        next_obs: obs,
                        done: true,
                    });
                    *global_step += 1;
                }
                break;
            }
            Err(other) => return Err(other),
        }
    }
    Ok(EpisodeLog {
        episode: 0,
        reward: total,
        kp: last_gains.0,
        ki: last_gains.1,
        epsilon_events,
        blown_up: blown,
        vref,
        sim_time: steps_done as f64 * env.control_period,
    })
}

fn env_action_held(
    bundle: &Td3Bundle,
    held: &mut Option<[f64; 2]>,
    obs: &[f64; 2],
    explore: bool,
    rng: &mut ChaCha8Rng,
) -> Result<([f64; 2], usize)> {
    match bundle.cfg.action_timing {
        ActionTiming::PerStep => bundle.select_action(obs, explore, rng),
        ActionTiming::PerEpisode => {
            if let Some(a) = held {
                Ok((*a, 0))
            } else {
                let (a, clips) = bundle.select_action(obs, explore, rng)?;
                *held = Some(a);
                Ok((a, clips))
            }
        }
    }
}

/// Full training run. Aborts when more than half of any trailing 50-episode
/// window fails with numerical blowup.
pub fn train(cfg: Td3Config, env: &EnvTemplate) -> Result<(Td3Bundle, Vec<EpisodeLog>)> {
    let mut bundle = Td3Bundle::new(cfg)?;
    let mut rng_vref = ChaCha8Rng::seed_from_u64(bundle.cfg.seed ^ 0x7672_6566);
    let mut rng_explore = ChaCha8Rng::seed_from_u64(bundle.cfg.seed ^ 0x6578_706c);
    let mut logs: Vec<EpisodeLog> = Vec::with_capacity(bundle.cfg.episodes);
    let mut global_step = 0usize;
    let mut recent_failures: Vec<bool> = Vec::new();
    let warm = if env.warm_start {
        Some(env.warm_state()?)
    } else {
        None
    };
    for ep in 0..bundle.cfg.episodes {
        let (lo, hi) = env.vref_range;
        let vref = rng_vref.gen_range(lo..=hi);
        let episode_seed = bundle.cfg.seed.wrapping_add(ep as u64);
        let mut log = run_episode(
            env,
            &mut bundle,
            vref,
            episode_seed,
            warm.as_ref(),
            true,
            true,
            &mut global_step,
            &mut rng_explore,
        )?;
        log.episode = ep;
        recent_failures.push(log.blown_up);
        if recent_failures.len() > 50 {
            recent_failures.remove(0);
        }
        let fails = recent_failures.iter().filter(|b| **b).count();
        logs.push(log);
        if recent_failures.len() == 50 && fails > 25 {
            return Err(Error::TrainingAborted(format!(
                "{fails} of the last 50 episodes failed with numerical blowup"
            )));
        }
    }
    Ok((bundle, logs))
}

/// Episode reward for a fixed gain pair on the template's environment,
/// without exploration or learning. Blowups yield the failed-episode reward.
pub fn evaluate_gains(
    env: &EnvTemplate,
    kp: f64,
    ki: f64,
    vref: f64,
    seed: u64,
) -> Result<f64> {
    let mut sc = env.scenario(vref, seed);
    if env.warm_start {
        sc.initial_state = env.warm_state()?;
    }
    let driver = SwitchDriver::frequency(85e3)?;
    let ctrl = PiController::new(kp, ki);
    let mut sim = Simulation::new(sc, driver, Some(ctrl), &env.params, env.variant)?;
    let n_steps = env.steps_per_episode();
    let mut total = 0.0;
    for _ in 0..n_steps {
        match sim.control_cycle(None) {
            Ok(_) => {
                total += reward(vref, sim.measure_vout());
            }
            Err(Error::NumericalBlowup { .. }) => return Ok(FAILED_EPISODE_REWARD),
            Err(other) => return Err(other),
        }
    }
    Ok(total)
}
