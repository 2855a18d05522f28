//! |e^{-tΔ_σ} f| <= e^{-tΔ} |f| pointwise for Harper fluxes.

use dml::heat::domination_check;
use dml::magnetic::harper_multiplier;
use dml::{build_ball, Flux, GroupSpec, VertexFunction};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dml::Result<()> {
    let g = build_ball(GroupSpec::free_abelian(2)?, 10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (p, q) in [(1, 3), (1, 2)] {
        let sigma = harper_multiplier(&g, Flux::rational(p, q)?)?;
        for t in [0.5, 1.0, 2.0, 5.0] {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..20 {
                let f = VertexFunction::random_complex(g.len(), g.inner_ball(5).end, &mut rng);
                worst = worst.max(domination_check(&g, &sigma, t, &f, 1e-10)?.max_excess());
            }
            println!("flux {p}/{q}, t = {t}: max(|e^(-tΔσ)f| - e^(-tΔ)|f|) = {worst:.3e}");
        }
    }
    Ok(())
}
