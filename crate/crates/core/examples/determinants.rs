//! Spectral density functions, Fuglede–Kadison log-determinants and the
//! Riemann-sum resolvent functional.

use dml::magnetic::{ball_operator, harper_multiplier};
use dml::oracle::green_logdet;
use dml::spectral::{logdet_from_density, resolvent_riemann_sum, DensityEstimate, TraceSites};
use dml::{build_ball, Flux, GroupSpec};

fn main() -> dml::Result<()> {
    let z = DensityEstimate::bloch(GroupSpec::free_abelian(1)?, None, 200_000)?;
    println!("Z: F(2) = {:.4}", z.evaluate(2.0));
    let e1 = logdet_from_density(&z, 1e-3)?;
    println!("Z: ln det = {:.5} (raw {:.4}, boundary term {:.4})", e1.value, e1.raw, e1.boundary_term);

    let z2 = DensityEstimate::bloch(GroupSpec::free_abelian(2)?, None, 1024)?;
    let e2 = logdet_from_density(&z2, 1e-3)?;
    println!("Z^2: ln det = {:.5}, quadrature {:.5}, lower bound {:.3}", e2.value, green_logdet(2)?, e2.lower_bound.unwrap_or(f64::NAN));

    let g = build_ball(GroupSpec::free_abelian(2)?, 10)?;
    let sigma = harper_multiplier(&g, Flux::rational(1, 3)?)?;
    let plain = ball_operator(&g, None)?.scaled(0.125);
    let mag = ball_operator(&g, Some(&sigma))?.scaled(0.125);
    for ell in 6..=10 {
        let p = resolvent_riemann_sum(&plain, ell, TraceSites::Root)?;
        let m = resolvent_riemann_sum(&mag, ell, TraceSites::Root)?;
        println!("ℓ = {ell:2}: S(Δ) = {:.6}  S(Δσ) = {:.6}", p.value, m.value);
    }
    Ok(())
}
