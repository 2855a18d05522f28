//! Balls in Cayley graphs and the growth exponents read off their volumes.

use dml::graph::{ball_volumes, growth_rate, DEFAULT_VERTEX_CAP};
use dml::{build_ball, GroupSpec};

fn main() -> dml::Result<()> {
    let groups = [
        GroupSpec::free_abelian(1)?,
        GroupSpec::free_abelian(2)?,
        GroupSpec::free_group(2)?,
        GroupSpec::heisenberg(),
    ];
    for spec in groups {
        let vols = ball_volumes(spec, 8, DEFAULT_VERTEX_CAP);
        let growth = growth_rate(spec, 30)?;
        println!(
            "{:<8} V(0..=8) = {:?}  growth exponent {}  amenable: {}",
            spec.describe(),
            vols,
            growth.exponent,
            spec.is_amenable()
        );
    }

    let g = build_ball(GroupSpec::heisenberg(), 3)?;
    println!("\nHeisenberg ball of radius 3: {} vertices, {} edges", g.len(), g.edges().len());
    for v in 0..5 {
        println!("  vertex {v} label {:?} at distance {}", g.label(v), g.dist_from_root(v));
    }
    Ok(())
}
