mod common;

use otmap::datasets::{sample, SourceSpec};
use otmap::lipschitz::L1Projection;
use otmap::nn::OptimizerKind;
use otmap::ot::transport_cost;
use otmap::training::{lambda_schedule, LambdaSchedule, StopReason, TrainConfig, TrainState, Trainer};
use rand::Rng;

fn fixture_state(lambda: f64, eta_g: f64) -> TrainState {
    let cfg = TrainConfig {
        widths: vec![16, 16],
        batch_size: 32,
        lambda,
        eta_g,
        optimizer_g: OptimizerKind::Sgd,
        seed: 5,
        ..TrainConfig::default()
    };
    TrainState::new(&cfg, 2, 64).unwrap()
}

#[test]
fn zero_lambda_step_decreases_quadratic_cost() {
    let cloud = sample(&SourceSpec::uniform_cube(2), 64, 9).unwrap();
    let mut state = fixture_state(0.0, 1e-4);
    let bx = state.sample_batch(&cloud, 32);
    let before = state.loss_breakdown(&bx).unwrap().quad_cost;
    state.generator_step(&bx).unwrap();
    let after = state.loss_breakdown(&bx).unwrap().quad_cost;
    assert!(after < before, "{after} !< {before}");
}

#[test]
fn zero_lambda_regresses_to_identity() {
    let p = sample(&SourceSpec::uniform_cube(2), 512, 3).unwrap();
    let q = sample(&SourceSpec::uniform_cube(2), 512, 4).unwrap();
    let cfg = TrainConfig {
        lambda: 0.0,
        widths: vec![32, 32],
        batch_size: 128,
        n_critic: 1,
        max_outer_steps: 1500,
        eval_every: 500,
        eta_g: 3e-3,
        lr_final_fraction: 0.01,
        ..TrainConfig::default()
    };
    let out = Trainer::new(cfg).run(&p, &q).unwrap();
    let first = out.log.first().unwrap().quad_cost;
    let last = out.log.last().unwrap().quad_cost;
    assert!(last < 1e-3 && last < first / 100.0, "{first} -> {last}");
}

#[test]
fn identical_clouds_keep_generator_near_identity() {
    let p = sample(&SourceSpec::uniform_cube(2), 1024, 21).unwrap();
    let cfg = TrainConfig {
        optimizer_d: OptimizerKind::Sgd,
        eta_d: 3.0,
        lr_final_fraction: 0.01,
        batch_size: 256,
        max_outer_steps: 300,
        eval_every: 50,
        ..TrainConfig::default()
    };
    let out = Trainer::new(cfg).run(&p, &p).unwrap();
    let last = out.log.last().unwrap();
    assert_eq!(last.step, 300);
    assert!(last.quad_cost <= 0.05, "final quad cost {}", last.quad_cost);
}

#[test]
fn every_step_keeps_both_networks_feasible() {
    let cloud = sample(&SourceSpec::uniform_cube(2), 64, 2).unwrap();
    for l1 in [L1Projection::Exact, L1Projection::Rescale] {
        let cfg = TrainConfig {
            widths: vec![8, 8],
            batch_size: 16,
            eta_d: 0.5,
            eta_g: 0.05,
            l1_projection: l1,
            ..TrainConfig::default()
        };
        let mut state = TrainState::new(&cfg, 2, 64).unwrap();
        for _ in 0..20 {
            let bx = state.sample_batch(&cloud, 16);
            let by = state.sample_batch(&cloud, 16);
            state.discriminator_step(&bx, &by).unwrap();
            assert!(state
                .discriminator_constraints()
                .is_satisfied(&state.discriminator, 1e-12));
            state.generator_step(&bx).unwrap();
            assert!(state.generator_constraints().is_satisfied(&state.generator, 1e-12));
        }
    }
}

#[test]
fn identical_configs_give_identical_logs() {
    let p = sample(&SourceSpec::uniform_cube(2), 128, 1).unwrap();
    let q = sample(&SourceSpec::uniform_cube(2), 128, 2).unwrap();
    let cfg = TrainConfig {
        widths: vec![8, 8],
        batch_size: 32,
        max_outer_steps: 30,
        eval_every: 10,
        ..TrainConfig::default()
    };
    let a = Trainer::new(cfg.clone()).run(&p, &q).unwrap();
    let b = Trainer::new(cfg).run(&p, &q).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.state.generator, b.state.generator);
    assert_eq!(a.state.discriminator, b.state.discriminator);
}

#[test]
fn generator_outputs_stay_in_the_ball() {
    let mut r = common::rng(1);
    let p = sample(&SourceSpec::uniform_cube(2), 256, 1).unwrap();
    let cfg = TrainConfig {
        widths: vec![8, 8],
        batch_size: 64,
        max_outer_steps: 50,
        eval_every: 50,
        eta_g: 0.05,
        output_scale: 2.0,
        ..TrainConfig::default()
    };
    let far: Vec<Vec<f64>> = (0..256)
        .map(|_| vec![r.gen_range(3.0..6.0), r.gen_range(-6.0..-3.0)])
        .collect();
    let q = otmap::ot::EmpiricalMeasure::from_points(&far).unwrap();
    let out = Trainer::new(cfg).run(&p, &q).unwrap();
    let probe = sample(&SourceSpec::uniform_cube(2), 1000, 8).unwrap();
    use otmap::ot::TransportMap;
    let img = out.state.generator.push_forward(&probe).unwrap();
    assert!(img
        .iter()
        .all(|y| y.iter().map(|v| v * v).sum::<f64>().sqrt() <= 2.0 + 1e-9));
    // pushing toward far-away targets drives points onto the boundary
    assert!(transport_cost(&out.state.generator, &probe).unwrap() > 1.0);
}

#[test]
fn time_budget_stops_with_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let p = sample(&SourceSpec::uniform_cube(2), 256, 1).unwrap();
    let cfg = TrainConfig {
        widths: vec![8, 8],
        batch_size: 32,
        max_outer_steps: 1_000_000,
        eval_every: 1000,
        time_budget_secs: Some(0.2),
        ..TrainConfig::default()
    };
    let out = Trainer::new(cfg).checkpoint_dir(dir.path()).run(&p, &p).unwrap();
    assert_eq!(out.stop_reason, StopReason::TimeBudget);
    assert!(out.state.step < 1_000_000);
    assert!(dir.path().join("generator.ckpt").exists());
    assert!(dir.path().join("discriminator.ckpt").exists());
}

#[test]
fn consistent_schedule_grows_below_its_envelope() {
    let ns = [100usize, 10_000, 1_000_000];
    for d in 1..=4 {
        let vals: Vec<f64> = ns
            .iter()
            .map(|&n| lambda_schedule(LambdaSchedule::Consistent, n, d, 1.0))
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "d={d}: {vals:?}");
    }
    let ratio: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let n_f = n as f64;
            lambda_schedule(LambdaSchedule::Consistent, n, 2, 1.0) / (n_f.sqrt() / n_f.ln())
        })
        .collect();
    assert!(ratio.windows(2).all(|w| w[1] < w[0]), "{ratio:?}");
    assert_eq!(lambda_schedule(LambdaSchedule::Fixed, 12345, 2, 10.0), 10.0);
}
