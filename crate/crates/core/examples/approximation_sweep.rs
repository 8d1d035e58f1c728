//! Fits constrained networks of growing width to 1-Lipschitz targets and
//! reports the median sup error over a few seeds.

use otmap::eval::{suite, width_sweep, ApproxBudget};

fn main() -> otmap::Result<()> {
    let budget = ApproxBudget {
        steps: 1500,
        probe_points: 4000,
        ..ApproxBudget::default()
    };
    let seeds = [0, 1, 2];
    for target in suite(2) {
        let rows = width_sweep(&target, 2, &[8, 16, 32], &seeds, &budget)?;
        let cells: Vec<String> = rows.iter().map(|(w, e)| format!("{w}: {e:.4}")).collect();
        println!("{:>12}  {}", target.name(), cells.join("  "));
    }
    Ok(())
}
