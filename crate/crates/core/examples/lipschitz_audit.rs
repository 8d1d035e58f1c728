//! Projects a deliberately oversized network onto the constraint set and
//! measures its difference quotients before and after.

use otmap::lipschitz::{audit_lipschitz, project_params, BoxDomain, ConstraintSpec};
use otmap::nn::{Architecture, NetworkParams};

fn main() -> otmap::Result<()> {
    let arch = Architecture::new(2, 2, vec![80, 80, 80]);
    let mut net = NetworkParams::init(arch, 4)?;
    for layer in net.layers_mut() {
        for w in layer.weight.as_mut_slice() {
            *w *= 6.0;
        }
    }
    let domain = BoxDomain::cube(2, 1.5);

    let before = audit_lipschitz(&net, &domain, 100_000, 0);
    println!(
        "scaled up:  max ratio {:.3}  feasible {}",
        before.max_ratio, before.constraints_satisfied
    );

    let spec = ConstraintSpec::for_network(&net);
    project_params(&mut net, &spec);
    let after = audit_lipschitz(&net, &domain, 100_000, 0);
    println!(
        "projected:  max ratio {:.6}  feasible {}",
        after.max_ratio, after.constraints_satisfied
    );
    println!("layer norms {:?}", after.layer_norms);
    if let Some((x, y)) = after.argmax {
        println!("worst pair  {x:.3?} -> {y:.3?}");
    }
    Ok(())
}
