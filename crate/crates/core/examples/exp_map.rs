//! Learns the coordinatewise exponential map on the square and writes figures.
//!
//! ```text
//! cargo run --release --example exp_map -- [steps] [out_dir]
//! ```

use std::path::PathBuf;

use otmap::config::RunConfig;
use otmap::datasets::save_csv;
use otmap::ot::TransportMap;
use otmap::plot::emit_figures;
use otmap::training::{metrics_to_csv, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().map(|s| s.parse().expect("steps")).unwrap_or(500);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "target/exp_map".into()));
    std::fs::create_dir_all(&out)?;

    let mut cfg = RunConfig::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/exp2d.cfg"))?;
    cfg.train.max_outer_steps = steps;
    cfg.train.eval_every = (steps / 20).max(1);
    let data = cfg.data.load()?;
    let truth = data.ground_truth.expect("exp2d has a known map");
    let holdout = data.holdout.expect("exp2d draws a holdout set");

    let run = Trainer::new(cfg.train.clone())
        .holdout(holdout.clone(), truth)
        .run(&data.p, &data.q)?;

    for row in run.log.iter().step_by(4) {
        println!(
            "step {:5}  quad {:.4}  ipm {:.4}  mse {:.5}",
            row.step,
            row.quad_cost,
            row.ipm_estimate,
            row.holdout_mse.unwrap_or(f64::NAN)
        );
    }

    std::fs::write(out.join("metrics.csv"), metrics_to_csv(&run.log))?;
    save_csv(out.join("source.csv"), &holdout, None)?;
    save_csv(
        out.join("pushforward.csv"),
        &run.state.generator.push_forward(&holdout)?,
        None,
    )?;
    save_csv(out.join("target.csv"), &data.q, None)?;
    for f in emit_figures(&out, &out)? {
        println!("wrote {}", f.display());
    }
    Ok(())
}
