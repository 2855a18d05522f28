//! Theta functions and Novikov–Shubin exponents on Z, Z^2 and Harper fluxes.

use dml::magnetic::Flux;
use dml::spectral::{geometric_grid, ns_estimate, theta};
use dml::GroupSpec;

fn main() -> dml::Result<()> {
    let grid = geometric_grid(50.0, 500.0, 12);
    for d in [1, 2] {
        let s = theta(GroupSpec::free_abelian(d)?, None, &grid, 1e-12)?;
        let est = ns_estimate(&s, (50.0, 500.0))?;
        println!("Z^{d}: β = {:.4} (fit residual {:.1e})", est.beta, est.residual);
    }
    for (p, q) in [(1, 3), (1, 2)] {
        let s = theta(GroupSpec::free_abelian(2)?, Some(Flux::rational(p, q)?), &grid, 1e-12)?;
        let est = ns_estimate(&s, (50.0, 500.0))?;
        println!("Harper {p}/{q}: fitted slope {:.2} (exponential decay gives a large value)", est.beta);
    }
    let short = theta(GroupSpec::free_group(2)?, None, &[0.5, 1.0, 2.0, 4.0], 1e-10)?;
    for s in &short.samples {
        println!("F_2 θ({}) = {:.10} ± {:.1e}", s.t, s.value, s.certified_error);
    }
    Ok(())
}
