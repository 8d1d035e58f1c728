//! Exact matching between two small clouds, checked against enumeration.

use otmap::datasets::{sample, SourceSpec};
use otmap::ot::{brute_force_matching, solve_assignment, wasserstein1, CostKind};

fn main() -> otmap::Result<()> {
    let x = sample(&SourceSpec::uniform_cube(2), 7, 1)?;
    let y = sample(&SourceSpec::uniform_cube(2), 7, 2)?;

    for kind in [CostKind::SquaredEuclidean, CostKind::Euclidean] {
        let fast = solve_assignment(&x, &y, kind)?;
        let slow = brute_force_matching(&x, &y, kind)?;
        println!(
            "{:>3}: sigma = {:?}  cost = {:.6}  enumeration = {:.6}",
            kind.name(),
            fast.permutation,
            fast.cost,
            slow.cost
        );
    }

    // the same solver on larger clouds gives the empirical W1
    let x = sample(&SourceSpec::uniform_cube(2), 400, 3)?;
    let y = sample(&SourceSpec::uniform_cube(2), 400, 4)?;
    println!("W1 between two 400-point uniform samples: {:.4}", wasserstein1(&x, &y)?);
    Ok(())
}
