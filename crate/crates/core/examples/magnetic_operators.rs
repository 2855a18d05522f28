//! Harper multipliers on Z^2: plaquette flux, gauge freedom and Kato's inequality.

use dml::magnetic::{gauge_transform, harper_multiplier, kato_defect, plaquette_holonomy};
use dml::{build_ball, Flux, GroupSpec, VertexFunction};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> dml::Result<()> {
    let g = build_ball(GroupSpec::free_abelian(2)?, 6)?;
    let flux = Flux::rational(1, 3)?;
    let sigma = harper_multiplier(&g, flux)?;
    let h = plaquette_holonomy(&g, &sigma, 0, 0).expect("plaquette inside the ball");
    println!("holonomy around the unit square at the origin: {h:.6}  (expected e^(2πi/3))");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let chi: Vec<C64> = (0..g.len()).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..6.3))).collect();
    let moved = gauge_transform(&g, &sigma, &chi)?;
    let h2 = plaquette_holonomy(&g, &moved, 2, -1).expect("inside");
    let h1 = plaquette_holonomy(&g, &sigma, 2, -1).expect("inside");
    println!("holonomy is gauge invariant: |Δ| = {:.2e}", (h1 - h2).norm());

    let mut worst = f64::INFINITY;
    for _ in 0..100 {
        let f = VertexFunction::random_complex(g.len(), g.len(), &mut rng);
        let d = kato_defect(&g, &sigma, &f)?;
        worst = worst.min(g.interior().map(|v| d[v]).fold(f64::INFINITY, f64::min));
    }
    println!("min Kato defect over 100 random f: {worst:.3e} (never negative)");
    Ok(())
}
