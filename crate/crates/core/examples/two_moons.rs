//! Transports the upper moon onto the lower one and compares against the
//! exact discrete matching on the same 500 points.

use otmap::config::RunConfig;
use otmap::eval::compare_to_discrete;
use otmap::ot::wasserstein1;
use otmap::training::Trainer;

fn main() -> otmap::Result<()> {
    let steps: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("steps"))
        .unwrap_or(2000);
    let mut cfg = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/moons.cfg"))?;
    cfg.train.max_outer_steps = steps;
    let data = cfg.data.load()?;

    let run = Trainer::new(cfg.train).run(&data.p, &data.q)?;
    let cmp = compare_to_discrete(&run.state.generator, &data.p, &data.q)?;
    let w1_before = wasserstein1(&data.p, &data.q)?;

    println!("matching cost   {:.4}", cmp.quad_cost_matching);
    println!(
        "generator cost  {:.4}  ({:.2}x)",
        cmp.quad_cost_gen,
        cmp.quad_cost_gen / cmp.quad_cost_matching
    );
    println!("W1(P, Q)        {:.4}", w1_before);
    println!(
        "W1(G#P, Q)      {:.4}  ({:.3}x)",
        cmp.w1_gen_vs_target,
        cmp.w1_gen_vs_target / w1_before
    );
    Ok(())
}
