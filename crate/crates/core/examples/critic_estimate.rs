//! A trained 1-Lipschitz critic gives a lower bound on W1, compared here
//! with the exact value from the assignment solver.

use otmap::datasets::{apply_map, sample, GroundTruthMap, SourceSpec};
use otmap::ot::wasserstein1;
use otmap::training::{fit_critic, CriticConfig};

fn main() -> otmap::Result<()> {
    let cube = SourceSpec::uniform_cube(2);
    let p = sample(&cube, 256, 11)?;
    let q = apply_map(&GroundTruthMap::CoordwiseExp, &sample(&cube, 256, 12)?)?;

    let exact = wasserstein1(&p, &q)?;
    let fit = fit_critic(&q, &p, &CriticConfig::default())?;
    println!("exact W1      {exact:.4}");
    println!("critic value  {:.4}  ({:.1}% of W1)", fit.ipm, 100.0 * fit.ipm / exact);
    for (i, v) in fit.restart_values.iter().enumerate() {
        println!("  restart {i}: {v:.4}");
    }
    Ok(())
}
