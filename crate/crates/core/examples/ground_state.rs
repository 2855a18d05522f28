//! Ground states by Dirichlet exhaustion, the Doob transform and the bounded
//! initial value problem.

use dml::eigen::lowest_eigenpair;
use dml::ground_state::{ground_state_exhaustion, harnack_check, solve_ivp};
use dml::magnetic::dirichlet_matrix;
use dml::oracle::kesten_tree;
use dml::{build_ball, GroupSpec, VertexFunction};

fn main() -> dml::Result<()> {
    let f2 = ground_state_exhaustion(GroupSpec::free_group(2)?, 2, 12, 1e-6)?;
    println!("F_2: λ by radius {:?}", f2.lambdas().iter().map(|l| format!("{l:.5}")).collect::<Vec<_>>());
    println!("     λ0 estimate {:.6}, Kesten value {:.6}", f2.lambda0_estimate, kesten_tree(4));
    let g = build_ball(GroupSpec::free_group(2)?, f2.trusted_radius)?;
    println!("     Harnack violation {:.1e}", harnack_check(&g, &f2.on_ball(&g)?)?);

    let z = ground_state_exhaustion(GroupSpec::free_abelian(1)?, 2, 50, 1e-8)?;
    println!("Z:   λ0 estimate at radius 50 = {:.6}", z.lambda0_estimate);

    let ball = build_ball(GroupSpec::free_abelian(2)?, 8)?;
    let a = dirichlet_matrix(&ball, None)?;
    let pair = lowest_eigenpair(&a, 1e-12)?;
    let phi = VertexFunction::from_real(&pair.vector.re());
    let u0: Vec<f64> = (0..a.dim()).map(|v| if v % 3 == 0 { 1.0 } else { -0.5 }).collect();
    let sol = solve_ivp(&a, &phi, pair.value, &u0, &[0.5, 1.0, 2.0], 1e-12)?;
    println!("IVP on a Z^2 ball: sup|u0| = {}, sup|u(t)| - bound = {:.2e}", sol.sup_bound, sol.bound_excess());
    Ok(())
}
