//! e^{λ0 t} p_t(x,x) and t e^{λ0 t} p_t(x,x) over a window on the free group.

use dml::spectral::{long_time_decay_check, DecayOutcome};
use dml::GroupSpec;

fn main() -> dml::Result<()> {
    match long_time_decay_check(GroupSpec::free_group(2)?, (5.0, 40.0), 14, 36)? {
        DecayOutcome::Checked(r) => {
            println!("λ0 = {:.6} (Dirichlet ball of radius {}), kernel radius {}", r.lambda0, r.lambda0_radius, r.radius);
            println!("non-increasing: {}, t-weighted bounded: {}", r.checks.non_increasing, r.checks.t_weighted_bounded);
            println!("log-log slope {:.3}", r.checks.slope);
            println!("critical Schrödinger t·trace bounded: {}", r.schrodinger.t_weighted_bounded);
            println!("checks at the starting radius {}: {}", r.initial_radius, r.initial.pass());
        }
        DecayOutcome::Amenable { growth } => println!("amenable, growth {growth:?}"),
    }
    println!("{:?}", long_time_decay_check(GroupSpec::free_abelian(1)?, (5.0, 40.0), 14, 8)?);
    Ok(())
}
