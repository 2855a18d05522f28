//! Heat kernels with certified errors, checked against the Bessel closed form
//! and across the three evaluation methods.

use dml::heat::{evolve, kernel_slice, HeatMethod, HeatOptions, HeatRequest};
use dml::magnetic::ball_operator;
use dml::oracle::bessel_zd;
use dml::{build_ball, Error, GroupSpec, Truncation, VertexFunction};

fn main() -> dml::Result<()> {
    let mut g = build_ball(GroupSpec::free_abelian(2)?, 30)?;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let k = match kernel_slice(&g, None, 0, t, 1e-10) {
            Err(Error::Budget { required_radius, .. }) => {
                println!("radius {} is too small at t = {t}; rebuilding at {required_radius}", g.radius());
                g = build_ball(GroupSpec::free_abelian(2)?, required_radius)?;
                kernel_slice(&g, None, 0, t, 1e-10)?
            }
            other => other?,
        };
        let exact = bessel_zd(t, &[0, 0], &[0, 0])?;
        println!(
            "Z^2 p_{t}(0,0) = {:.12}  Bessel {:.12}  |diff| {:.1e}  certified ±{:.1e}",
            k.get(0).re,
            exact,
            (k.get(0).re - exact).abs(),
            k.certified_error[0]
        );
    }

    let small = build_ball(GroupSpec::free_abelian(2)?, 12)?;
    let a = ball_operator(&small, None)?;
    let f = VertexFunction::delta(small.len(), 0);
    let opts = HeatOptions::default();
    let t = 1.0;
    for method in [
        HeatMethod::Series,
        HeatMethod::ResolventPower { steps: 1024 },
        HeatMethod::SpectralWindow { k: a.dim() },
    ] {
        let out = evolve(&a, &HeatRequest::new(t, 1e-10, method)?, &f, &opts)?;
        println!("{method:?}: p_1(0,0) on radius 12 = {:.10}  method error {:.1e}", out.values[0].re, out.method_error);
    }
    Ok(())
}
