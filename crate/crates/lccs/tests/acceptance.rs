//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line. Run with `--nocapture` to see the lines for passing tests.

mod common;

use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use lccs::agent::{
    evaluate_gains, map_action, train, ActionBounds, Algo, EnvTemplate, EpisodeLog, Td3Bundle,
    Td3Config,
};
use lccs::model::{
    build_subsystems, derivative, energy_gradient, MatrixVariant, Mode, StateVector,
};
use lccs::nn::{Head, Mlp};
use lccs::params::{derive_params, ConverterParams};
use lccs::pi::PiController;
use lccs::replay::{ReplayBuffer, Transition};
use lccs::report;
use lccs::sim::{
    compute_metrics, default_dt, run, soft_start, Scenario, SwitchDriver,
};

fn passed(n: usize, desc: &str) {
    println!("criterion {n} ({desc}): PASS");
}

// ---------------------------------------------------------------------------
// Passivity screen shared by criteria 1 and 2.

struct PassivityFailure {
    mode: u8,
    worst_rel: f64,
}

/// Relative energy-dissipation violation over `n` random states per mode,
/// with the source and diode drops zeroed. Off modes are sampled on the
/// x5 = 0 slice, the only region they are reachable in.
fn passivity_screen(variant: MatrixVariant, n: usize) -> Vec<PassivityFailure> {
    let mut p = ConverterParams::table2();
    p.vin = 0.0;
    p.vf = 0.0;
    let d = derive_params(&p).unwrap();
    let set = build_subsystems(&p, &d, variant).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7061_7373);
    let mut failures = Vec::new();
    for mode in 1..=6u8 {
        let m = Mode::new(mode).unwrap();
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let mut x: StateVector = [0.0; 7];
            for v in x.iter_mut() {
                *v = rng.gen_range(-100.0..100.0);
            }
            if m.rectifier_off() {
                x[4] = 0.0;
            }
            let rate = derivative(m, &x, &set);
            let g = energy_gradient(&x, &p, &d);
            let de: f64 = g.iter().zip(&rate).map(|(a, b)| a * b).sum();
            let scale: f64 = g
                .iter()
                .zip(&rate)
                .map(|(a, b)| (a * b).abs())
                .sum::<f64>()
                .max(1e-30);
            worst = worst.max(de / scale);
        }
        if worst > 1e-9 {
            failures.push(PassivityFailure {
                mode,
                worst_rel: worst,
            });
        }
    }
    failures
}

// ---------------------------------------------------------------------------
// Criterion 1: six-mode cycle at 85 kHz for variants passing the screen.

#[test]
fn criterion_1_six_mode_cycle() {
    let p = ConverterParams::table2();
    let mut checked = 0;
    for variant in [MatrixVariant::Corrected, MatrixVariant::Verbatim] {
        if !passivity_screen(variant, 500).is_empty() {
            continue; // criterion applies only to variants passing the screen
        }
        checked += 1;
        let mut sc = Scenario::open_loop(10e-3, p.vin, p.r_load);
        sc.decimation = 1;
        let driver = SwitchDriver::frequency(85e3).unwrap();
        let (w, _) = run(sc, driver, None, &p, variant).unwrap();
        // Steady tail: the last 2 ms, about 170 switching periods.
        let start = w.t.iter().position(|&t| t >= 8e-3).unwrap();
        let mut compressed: Vec<u8> = Vec::new();
        for &m in &w.mode[start..] {
            if compressed.last() != Some(&m) {
                compressed.push(m);
            }
        }
        let distinct: std::collections::BTreeSet<u8> = compressed.iter().copied().collect();
        assert_eq!(
            distinct.into_iter().collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5, 6],
            "all six modes must appear in the steady cycle"
        );
        // Conduct -> off -> opposite conduct, for both polarities: the
        // steady cycle is exactly 1 -> 2 -> 3 -> 4 -> 5 -> 6 -> 1.
        for pair in compressed.windows(2) {
            assert_eq!(
                pair[1],
                pair[0] % 6 + 1,
                "unexpected transition {} -> {} in steady cycle",
                pair[0],
                pair[1]
            );
        }
        // At 85 kHz for 2 ms the cycle repeats ~170 times; require at least
        // 150 full six-mode cycles to rule out a degenerate tail.
        assert!(compressed.len() > 150 * 6, "only {} segments", compressed.len());
    }
    assert_eq!(checked, 1, "exactly the corrected variant passes the screen");
    passed(1, "six-mode cycle per period at 85 kHz");
}

// ---------------------------------------------------------------------------
// Criterion 2: passivity suite with verbatim-failure flagging.

#[test]
fn criterion_2_passivity() {
    assert!(
        passivity_screen(MatrixVariant::Corrected, 10_000).is_empty(),
        "corrected variant must dissipate in every mode"
    );
    let failures = passivity_screen(MatrixVariant::Verbatim, 10_000);
    assert!(
        !failures.is_empty(),
        "verbatim matrices are expected to fail the screen"
    );
    // Identify the failing entries: where the verbatim matrix differs from
    // the energy-consistent one.
    let p = ConverterParams::table2();
    let d = derive_params(&p).unwrap();
    let verbatim = build_subsystems(&p, &d, MatrixVariant::Verbatim).unwrap();
    let corrected = build_subsystems(&p, &d, MatrixVariant::Corrected).unwrap();
    for f in &failures {
        let m = Mode::new(f.mode).unwrap();
        let av = verbatim.a_of(m);
        let ac = corrected.a_of(m);
        let mut flagged = Vec::new();
        for i in 0..7 {
            for j in 0..7 {
                if (av[i][j] - ac[i][j]).abs() > 1e-12 * ac[i][j].abs().max(1.0) {
                    flagged.push((i + 1, j + 1, av[i][j], ac[i][j]));
                }
            }
        }
        assert!(
            !flagged.is_empty(),
            "mode {}: failing variant must have an identifiable entry",
            f.mode
        );
        for (i, j, bad, good) in &flagged {
            println!(
                "  verbatim mode {} entry ({i},{j}) = {bad:.6e} (energy-consistent: {good:.6e}), worst rel dE = {:.2e}",
                f.mode, f.worst_rel
            );
        }
    }
    passed(2, "passivity over 1e4 states/mode, verbatim failures flagged");
}

// ---------------------------------------------------------------------------
// Criterion 3: RK4 order against the matrix-exponential oracle.

#[test]
fn criterion_3_integrator_order() {
    let p = ConverterParams::table2();
    let d = derive_params(&p).unwrap();
    let set = build_subsystems(&p, &d, MatrixVariant::Corrected).unwrap();
    let mode = Mode::new(1).unwrap();
    let a = set.a_of(mode);
    let b = set.b_of(mode);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut x0: StateVector = [0.0; 7];
    for v in x0.iter_mut() {
        *v = rng.gen_range(-5.0..5.0);
    }
    let horizon = 4e-6;
    let exact = common::exact_hold_solution(a, b, &x0, horizon);
    let err_at = |steps: usize| -> f64 {
        let dt = horizon / steps as f64;
        let mut x = x0;
        for _ in 0..steps {
            x = lccs::integrator::rk4_step(a, b, &x, dt);
        }
        x.iter()
            .zip(&exact)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>()
            .sqrt()
    };
    let errs: Vec<f64> = [16, 32, 64, 128].iter().map(|&n| err_at(n)).collect();
    for pair in errs.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(
            (3.7..=4.3).contains(&order),
            "measured order {order:.3} outside [3.7, 4.3]; errors {errs:?}"
        );
    }
    passed(3, "held-mode RK4 order ~4 vs expm oracle");
}

// ---------------------------------------------------------------------------
// Criterion 4: published-gain regulation with locked recovery fixtures.

/// First-pass recovery times (s), locked as regression fixtures: the time
/// from each event until the trajectory last enters the 2% band within its
/// segment.
const RECOVERY_FIXTURES: [(&str, f64); 3] = [
    ("step", 0.022752529411764706),
    ("vin_sag", 0.00692670588235295),
    ("load_drop", 0.0),
];
const FIXTURES_LOCKED: bool = true;

fn fig9_waveforms() -> (lccs::sim::Waveforms, f64) {
    let p = ConverterParams::table2();
    let sc = Scenario::disturbance(200.0, p.vin, p.r_load);
    let driver = SwitchDriver::frequency(85e3).unwrap();
    let ctrl = PiController::published();
    let (w, _) = run(sc, driver, Some(ctrl), &p, MatrixVariant::Corrected).unwrap();
    (w, 200.0)
}

#[test]
fn criterion_4_published_gain_regulation() {
    let (w, target) = fig9_waveforms();
    let segments = [("step", 0.0, 0.04), ("vin_sag", 0.04, 0.07), ("load_drop", 0.07, 0.1001)];
    let mut recoveries = Vec::new();
    for (name, t0, t1) in segments {
        let m = compute_metrics(&w.slice(t0, t1), target, 2.0, t0);
        assert!(
            m.settled,
            "{name}: output must settle into +-2% of {target} V and stay there"
        );
        recoveries.push((name, m.settling_time_2pct));
        println!("  {name}: recovery {:.17} s", m.settling_time_2pct);
    }
    if FIXTURES_LOCKED {
        for ((name, got), (fname, fixed)) in recoveries.iter().zip(RECOVERY_FIXTURES) {
            assert_eq!(*name, fname);
            assert!(
                (got - fixed).abs() <= 1e-9,
                "{name}: recovery {got} drifted from locked fixture {fixed}"
            );
        }
    }
    passed(4, "published gains regulate the disturbance scenario to +-2%");
}

// ---------------------------------------------------------------------------
// Criterion 5: gradient checks over 100 random configurations.

#[test]
fn criterion_5_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for case in 0..100 {
        let n_in = rng.gen_range(1..=6);
        let n_hidden = rng.gen_range(1..=2);
        let mut sizes = vec![n_in];
        for _ in 0..n_hidden {
            sizes.push(rng.gen_range(2..=16));
        }
        let n_out = rng.gen_range(1..=3);
        sizes.push(n_out);
        let head = if case % 2 == 0 {
            Head::Linear
        } else {
            Head::Bounded((0..n_out).map(|_| (-1.0, 1.0)).collect())
        };
        let net = Mlp::new(&sizes, head, 1000 + case as u64).unwrap();
        let input: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upstream: Vec<f64> = (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, trace) = net.forward_trace(&input).unwrap();
        let (grads, input_grad) = net.backward(&trace, &upstream).unwrap();

        let loss = |net: &Mlp, input: &[f64]| -> f64 {
            net.forward(input)
                .unwrap()
                .iter()
                .zip(&upstream)
                .map(|(o, u)| o * u)
                .sum()
        };
        let eps = 1e-6;
        // Hidden ReLU sign pattern; probes that flip a unit across the kink
        // are not differentiable there and are skipped.
        let pattern = |net: &Mlp, input: &[f64]| -> Vec<bool> {
            let mut x = input.to_vec();
            let mut mask = Vec::new();
            let last = net.layers.len() - 1;
            for (li, layer) in net.layers.iter().enumerate() {
                let mut z: Vec<f64> = layer
                    .w
                    .iter()
                    .zip(&layer.b)
                    .map(|(row, b)| row.iter().zip(&x).map(|(w, xi)| w * xi).sum::<f64>() + b)
                    .collect();
                if li < last {
                    for v in &mut z {
                        mask.push(*v > 0.0);
                        *v = v.max(0.0);
                    }
                }
                x = z;
            }
            mask
        };
        let check = |analytic: f64,
                     numeric: f64,
                     plus_pat: &[bool],
                     minus_pat: &[bool],
                     base_pat: &[bool]| {
            if plus_pat != base_pat || minus_pat != base_pat {
                return; // kink crossed within the probe interval
            }
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            assert!(
                ((analytic - numeric) / denom).abs() < 1e-5,
                "case {case}: grad {analytic} vs fd {numeric}"
            );
        };
        let base_pat = pattern(&net, &input);
        // Parameter gradients (spot-check a handful per layer).
        for (li, layer) in grads.layers.iter().enumerate() {
            for probe in 0..4 {
                let (is_bias, i, j) = if probe == 3 {
                    (true, rng.gen_range(0..layer.b.len()), 0)
                } else {
                    let i = rng.gen_range(0..layer.w.len());
                    (false, i, rng.gen_range(0..layer.w[i].len()))
                };
                let mut plus = net.clone();
                let mut minus = net.clone();
                let analytic = if is_bias {
                    plus.layers[li].b[i] += eps;
                    minus.layers[li].b[i] -= eps;
                    layer.b[i]
                } else {
                    plus.layers[li].w[i][j] += eps;
                    minus.layers[li].w[i][j] -= eps;
                    layer.w[i][j]
                };
                check(
                    analytic,
                    (loss(&plus, &input) - loss(&minus, &input)) / (2.0 * eps),
                    &pattern(&plus, &input),
                    &pattern(&minus, &input),
                    &base_pat,
                );
            }
        }
        // Input gradients.
        for k in 0..n_in {
            let mut ip = input.clone();
            ip[k] += eps;
            let mut im = input.clone();
            im[k] -= eps;
            check(
                input_grad[k],
                (loss(&net, &ip) - loss(&net, &im)) / (2.0 * eps),
                &pattern(&net, &ip),
                &pattern(&net, &im),
                &base_pat,
            );
        }
    }
    passed(5, "backprop matches finite differences over 100 cases");
}

// ---------------------------------------------------------------------------
// Criteria 6, 7, 9 share the training runs.

struct TrainingData {
    td3: Vec<(u64, Vec<EpisodeLog>, (f64, f64))>,
    ddpg: Vec<(u64, Vec<EpisodeLog>, (f64, f64))>,
    td3_seed0_rerun_csv: String,
}

const TRAIN_SEEDS: [u64; 3] = [0, 1, 2];
const TRAIN_EPISODES: usize = 100;
const TRAIN_HORIZON: f64 = 4e-3;
const FINAL_WINDOW: usize = 20;

fn train_env() -> EnvTemplate {
    EnvTemplate {
        horizon: TRAIN_HORIZON,
        ..EnvTemplate::default()
    }
}

fn train_cfg(algo: Algo, seed: u64) -> Td3Config {
    Td3Config {
        algo,
        seed,
        episodes: TRAIN_EPISODES,
        ..Td3Config::default()
    }
}

fn training_data() -> &'static TrainingData {
    static DATA: OnceLock<TrainingData> = OnceLock::new();
    static LOCK: Mutex<()> = Mutex::new(());
    let _guard = LOCK.lock().unwrap();
    DATA.get_or_init(|| {
        let env = train_env();
        let run_one = |algo: Algo, seed: u64| {
            let (bundle, logs): (Td3Bundle, Vec<EpisodeLog>) =
                train(train_cfg(algo, seed), &env).unwrap();
            let gains = bundle.deployment_gains().unwrap();
            (seed, logs, gains)
        };
        let td3: Vec<_> = TRAIN_SEEDS.iter().map(|&s| run_one(Algo::Td3, s)).collect();
        let ddpg: Vec<_> = TRAIN_SEEDS.iter().map(|&s| run_one(Algo::Ddpg, s)).collect();
        let rerun = run_one(Algo::Td3, TRAIN_SEEDS[0]);
        TrainingData {
            td3,
            ddpg,
            td3_seed0_rerun_csv: report::train_csv(&rerun.1),
        }
    })
}

fn window_stats(runs: &[(u64, Vec<EpisodeLog>, (f64, f64))]) -> (f64, f64) {
    let per_seed: Vec<(f64, f64)> = runs
        .iter()
        .map(|(_, logs, _)| report::trailing_reward_stats(logs, FINAL_WINDOW))
        .collect();
    let n = per_seed.len() as f64;
    (
        per_seed.iter().map(|p| p.0).sum::<f64>() / n,
        per_seed.iter().map(|p| p.1).sum::<f64>() / n,
    )
}

#[test]
fn criterion_6_td3_vs_ddpg_direction() {
    let data = training_data();
    let (td3_mean, td3_var) = window_stats(&data.td3);
    let (ddpg_mean, ddpg_var) = window_stats(&data.ddpg);
    println!("  td3:  final-window mean {td3_mean:.1}, var {td3_var:.3e}");
    println!("  ddpg: final-window mean {ddpg_mean:.1}, var {ddpg_var:.3e}");
    assert!(
        td3_mean >= ddpg_mean,
        "TD3 final-window mean reward {td3_mean} must be >= DDPG's {ddpg_mean}"
    );
    assert!(
        td3_var <= ddpg_var,
        "TD3 final-window reward variance {td3_var} must be <= DDPG's {ddpg_var}"
    );
    passed(6, "TD3 >= DDPG mean and <= variance over matched seeds");
}

#[test]
fn criterion_7_learning_efficacy() {
    let data = training_data();
    // Held-out evaluation: longer horizon than training, references spanning
    // the commanded range, same seed for both gain pairs.
    let env = EnvTemplate {
        horizon: 20e-3,
        ..EnvTemplate::default()
    };
    let eval = |kp: f64, ki: f64| -> f64 {
        [190.0, 200.0, 210.0]
            .iter()
            .map(|&vref| evaluate_gains(&env, kp, ki, vref, 777).unwrap())
            .sum::<f64>()
            / 3.0
    };
    let initial = PiController::initial();
    let baseline = eval(initial.kp, initial.ki);
    for (seed, _, (kp, ki)) in &data.td3 {
        let trained = eval(*kp, *ki);
        println!(
            "  seed {seed}: trained ({kp:.3}, {ki:.3}) reward {trained:.1} vs initial reward {baseline:.1}"
        );
        assert!(
            trained >= baseline,
            "seed {seed}: trained gains must match or beat the initial gains"
        );
    }
    passed(7, "trained gains beat the initial gains on held-out evaluation");
}

// ---------------------------------------------------------------------------
// Criterion 8: 28 V operating point.

#[test]
fn criterion_8_low_voltage_operating_point() {
    let mut p = ConverterParams::table2();
    p.vin = 28.0;
    p.r_load = 45.0;
    let mut sc = Scenario::open_loop(0.1, p.vin, p.r_load);
    sc.vref = soft_start(28.0, 8, 1e-3);
    sc.decimation = 10;
    let driver = SwitchDriver::frequency(85e3).unwrap();
    let ctrl = PiController::published();
    let (w, m) = run(sc, driver, Some(ctrl), &p, MatrixVariant::Corrected).unwrap();
    let peak = w.x.iter().map(|x| x[6]).fold(0.0f64, f64::max);
    let overshoot = (peak - 28.0).max(0.0) / 28.0 * 100.0;
    let mean = m.steady_mean;
    println!("  mean {mean:.3} V (target 28 V), overshoot {overshoot:.2}%");
    assert!(
        (mean - 28.0).abs() <= 0.03 * 28.0,
        "steady mean {mean} outside 3% of 28 V"
    );
    assert!(overshoot < 5.0, "overshoot {overshoot}% exceeds 5%");
    passed(8, "28 V / 45 ohm operating point within 3% mean, <5% overshoot");
}

// ---------------------------------------------------------------------------
// Criterion 9: byte-identical reruns.

#[test]
fn criterion_9_determinism() {
    let (w1, _) = fig9_waveforms();
    let (w2, _) = fig9_waveforms();
    let csv1 = report::waveforms_csv(&w1);
    let csv2 = report::waveforms_csv(&w2);
    assert_eq!(csv1, csv2, "regulation waveform CSV must be byte-identical");
    let data = training_data();
    let first = report::train_csv(&data.td3[0].1);
    assert_eq!(
        first, data.td3_seed0_rerun_csv,
        "training CSV must be byte-identical across reruns"
    );
    passed(9, "byte-identical CSVs on rerun");
}

// ---------------------------------------------------------------------------
// Criterion 10: TD3 mechanism suite.

#[test]
fn criterion_10_td3_mechanisms() {
    // Clipped double-Q: the target is the minimum of the two critics.
    let mut cfg = Td3Config {
        batch_size: 2,
        warmup_steps: 0,
        actor_hidden: vec![4],
        critic_hidden: vec![4],
        ..Td3Config::default()
    };
    cfg.gamma = 1.0;
    let mut bundle = Td3Bundle::new(cfg.clone()).unwrap();
    let zero_net = |net: &mut Mlp, out_bias: f64| {
        for l in &mut net.layers {
            for r in &mut l.w {
                r.iter_mut().for_each(|v| *v = 0.0);
            }
            l.b.iter_mut().for_each(|v| *v = 0.0);
        }
        *net.layers.last_mut().unwrap().b.last_mut().unwrap() = out_bias;
    };
    zero_net(&mut bundle.target_critic1, 4.0);
    zero_net(&mut bundle.target_critic2, -11.0);
    let tr = Transition {
        obs: [0.0, 0.0],
        action: [0.0, 0.0],
        reward: 1.0,
        next_obs: [0.0, 0.0],
        done: false,
    };
    let ys = bundle.compute_targets(&[tr]).unwrap();
    assert_eq!(ys[0], 1.0 + -11.0, "target must use min(Q1', Q2')");

    // Target-noise clipping: with a sum-of-inputs critic and a zeroed
    // target actor, y - r isolates the clipped smoothing noise.
    let mut cfg_noise = cfg.clone();
    cfg_noise.target_noise_std = 100.0;
    let mut b2 = Td3Bundle::new(cfg_noise).unwrap();
    zero_net(&mut b2.target_actor, 0.0); // bounded head midpoint = 0
    let sum_critic = |net: &mut Mlp| {
        // layer 1: 8 units = [x; -x], layer 2 reconstructs sum(x) from ReLUs.
        let l1 = &mut net.layers[0];
        for (i, row) in l1.w.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i % 4 == j {
                    if i < 4 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    0.0
                };
            }
        }
        l1.b.iter_mut().for_each(|v| *v = 0.0);
        let l2 = &mut net.layers[1];
        for (j, v) in l2.w[0].iter_mut().enumerate() {
            *v = if j < 4 { 1.0 } else { -1.0 };
        }
        l2.b[0] = 0.0;
    };
    // Needs an 8-wide hidden layer.
    let mut cfg_wide = cfg.clone();
    cfg_wide.critic_hidden = vec![8];
    cfg_wide.target_noise_std = 100.0;
    cfg_wide.gamma = 1.0;
    let mut b3 = Td3Bundle::new(cfg_wide).unwrap();
    zero_net(&mut b3.target_actor, 0.0);
    sum_critic(&mut b3.target_critic1);
    sum_critic(&mut b3.target_critic2);
    let batch: Vec<Transition> = (0..200).map(|_| tr).collect();
    let ys = b3.compute_targets(&batch).unwrap();
    let mut hit_low = false;
    let mut hit_high = false;
    for y in &ys {
        // y = r + a1 + a2 with each ai = clip(noise, -0.5, 0.5).
        let noise_sum = y - 1.0;
        assert!(
            noise_sum.abs() <= 1.0 + 1e-12,
            "clipped noise sum {noise_sum} escaped [-1, 1]"
        );
        if noise_sum < -0.999 {
            hit_low = true;
        }
        if noise_sum > 0.999 {
            hit_high = true;
        }
    }
    assert!(hit_low && hit_high, "huge noise must saturate both clip edges");

    // d-delayed actor updates.
    let mut b4 = Td3Bundle::new(Td3Config {
        batch_size: 4,
        warmup_steps: 0,
        policy_delay: 3,
        actor_hidden: vec![4],
        critic_hidden: vec![4],
        ..Td3Config::default()
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for step in 0..30 {
        b4.buffer.push(Transition {
            obs: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            action: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            reward: -1.0,
            next_obs: [0.0, 0.0],
            done: false,
        });
        if b4.buffer.len() >= 4 {
            b4.learn_step().unwrap();
        }
        assert_eq!(
            b4.actor_updates,
            b4.critic_updates / 3,
            "step {step}: actor updates must lag by the policy delay"
        );
    }
    assert!(b4.critic_updates >= 25 && b4.actor_updates >= 8);

    // Polyak traces for tau in {0, 1, 0.005} on a scalar parameter.
    let online = Mlp::new(&[1, 1], Head::Linear, 1).unwrap();
    let target0 = Mlp::new(&[1, 1], Head::Linear, 2).unwrap();
    for tau in [0.0, 1.0, 0.005] {
        let mut target = target0.clone();
        let w_old = target.layers[0].w[0][0];
        let w_on = online.layers[0].w[0][0];
        target.soft_update_from(&online, tau);
        let expect = tau * w_on + (1.0 - tau) * w_old;
        assert!((target.layers[0].w[0][0] - expect).abs() < 1e-15, "tau {tau}");
    }

    // Replay FIFO.
    let mut buf = ReplayBuffer::new(3);
    for i in 0..5 {
        buf.push(Transition {
            obs: [i as f64, 0.0],
            action: [0.0, 0.0],
            reward: 0.0,
            next_obs: [0.0, 0.0],
            done: false,
        });
    }
    let kept: Vec<f64> = buf.iter().map(|t| t.obs[0]).collect();
    assert_eq!(kept, vec![2.0, 3.0, 4.0], "oldest transitions must be evicted");

    // Replay uniformity: chi-square over 10 cells within 3 sigma.
    let mut buf = ReplayBuffer::new(10);
    for i in 0..10 {
        buf.push(Transition {
            obs: [i as f64, 0.0],
            action: [0.0, 0.0],
            reward: 0.0,
            next_obs: [0.0, 0.0],
            done: false,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let draws = 50_000;
    let mut counts = [0usize; 10];
    for _ in 0..draws {
        let batch = buf.sample(1, &mut rng).unwrap();
        counts[batch[0].obs[0] as usize] += 1;
    }
    let expected = draws as f64 / 10.0;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(
        chi2 < 9.0 + 3.0 * 18f64.sqrt(),
        "chi-square {chi2} outside 3 sigma for 9 degrees of freedom"
    );

    // Action mapping sanity shared by all mechanisms.
    let b = ActionBounds::default();
    assert_eq!(map_action([-1.0, -1.0], &b), (0.0, 0.0));
    assert_eq!(map_action([1.0, 1.0], &b), (10.0, 50.0));

    // Default step matches the simulation contract used above.
    assert!(default_dt() > 0.0);
    passed(10, "TD3 mechanism unit suite");
}
