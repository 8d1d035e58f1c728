//! The alternating loop written out by hand: several projected ascent steps
//! on the critic, then one projected descent step on the generator.

use otmap::datasets::{apply_map, sample, GroundTruthMap, SourceSpec};
use otmap::nn::OptimizerKind;
use otmap::training::{TrainConfig, TrainState};

fn main() -> otmap::Result<()> {
    let cube = SourceSpec::uniform_cube(2);
    let p = sample(&cube, 1024, 1)?;
    let q = apply_map(&GroundTruthMap::CoordwiseExp, &sample(&cube, 1024, 2)?)?;

    let cfg = TrainConfig {
        widths: vec![32, 32],
        output_scale: 3.0,
        optimizer_d: OptimizerKind::Sgd,
        eta_d: 3.0,
        batch_size: 256,
        ..TrainConfig::default()
    };
    let mut state = TrainState::new(&cfg, 2, p.len())?;

    for step in 0..=300 {
        for _ in 0..cfg.n_critic {
            let bx = state.sample_batch(&p, cfg.batch_size);
            let by = state.sample_batch(&q, cfg.batch_size);
            state.discriminator_step(&bx, &by)?;
        }
        let bx = state.sample_batch(&p, cfg.batch_size);
        let losses = state.generator_step(&bx)?;
        if step % 50 == 0 {
            println!(
                "step {step:4}  quad {:.4}  critic gap {:.4}",
                losses.quad_cost, losses.disc_objective
            );
        }
        debug_assert!(state.generator_constraints().is_satisfied(&state.generator, 1e-12));
    }
    Ok(())
}
