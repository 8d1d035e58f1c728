//! Trains on the exp-map benchmark at two sample sizes with the penalty
//! weight growing with n, and compares held-out error.

use otmap::config::RunConfig;
use otmap::training::{lambda_schedule, LambdaSchedule, Trainer};

fn main() -> otmap::Result<()> {
    let steps: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("steps"))
        .unwrap_or(600);
    let base = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/exp2d.cfg"))?;

    for n in [512, 4096] {
        let mut cfg = base.clone();
        cfg.data.n = n;
        cfg.train.lambda_schedule = LambdaSchedule::Consistent;
        cfg.train.lambda = 10.0;
        cfg.train.max_outer_steps = steps;
        cfg.train.eval_every = steps;
        cfg.train.batch_size = cfg.train.batch_size.min(n);
        let data = cfg.data.load()?;
        let run = Trainer::new(cfg.train)
            .holdout(data.holdout.unwrap(), data.ground_truth.unwrap())
            .run(&data.p, &data.q)?;
        let last = run.log.last().unwrap();
        println!(
            "n = {n:5}  lambda = {:6.2}  holdout mse = {:.5}",
            lambda_schedule(LambdaSchedule::Consistent, n, 2, 10.0),
            last.holdout_mse.unwrap()
        );
    }
    Ok(())
}
