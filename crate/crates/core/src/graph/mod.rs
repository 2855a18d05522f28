//! Cayley graphs, their finite ball truncations and volume growth.

mod ball;
mod group;
mod radial;

use std::collections::HashSet;

pub use ball::{build_ball, Adjacent, BallGraph, DEFAULT_VERTEX_CAP};
pub use group::{GroupKind, GroupSpec};
pub use radial::RadialTree;

use crate::error::{Error, Result};

/// A finite truncation of an infinite bounded-valence graph around a root.
///
/// Vertex `0` is the root. A truncation may be an explicit ball or a
/// quotient in which vertex `v` stands for `multiplicity(v)` ball vertices;
/// neighbour multiplicities then count edges into the represented class.
pub trait Truncation {
    fn vertex_count(&self) -> usize;
    fn radius(&self) -> usize;
    /// Uniform bound `M` on the valence of the ambient graph.
    fn valence_bound(&self) -> usize;
    /// Word distance from the root.
    fn depth(&self, v: usize) -> usize;
    fn multiplicity(&self, v: usize) -> f64;
    /// Calls `f(w, m)` for each neighbour class `w` of `v` inside the truncation.
    fn for_each_neighbor(&self, v: usize, f: &mut dyn FnMut(usize, f64));

    fn root(&self) -> usize {
        0
    }

    /// All ambient neighbours of an interior vertex lie in the truncation.
    fn is_interior(&self, v: usize) -> bool {
        self.depth(v) < self.radius()
    }
}

/// Sizes `V(0), V(1), ...` of the balls around the identity.
///
/// Stops early, returning the prefix computed so far, once the next ball
/// would exceed `vertex_cap`.
pub fn ball_volumes(spec: GroupSpec, r_max: usize, vertex_cap: usize) -> Vec<usize> {
    let mut seen: HashSet<Vec<i32>> = HashSet::new();
    let mut frontier = vec![spec.identity()];
    seen.insert(spec.identity());
    let mut volumes = vec![1];
    let mut buf = Vec::new();
    for _ in 1..=r_max {
        let mut next = Vec::new();
        for g in &frontier {
            for j in 0..spec.generator_count() {
                spec.mul_generator(g, j, &mut buf);
                if !seen.contains(&buf) {
                    seen.insert(buf.clone());
                    next.push(buf.clone());
                }
            }
            if seen.len() > vertex_cap {
                return volumes;
            }
        }
        volumes.push(seen.len());
        frontier = next;
    }
    volumes
}

/// Result of [`growth_rate`].
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthEstimate {
    /// Fitted polynomial degree, or `+inf` when growth is exponential.
    pub exponent: f64,
    /// Least-squares slope of `ln V(r)` against `ln r` over the fit window.
    pub loglog_slope: f64,
    /// RMS residual of the power-law fit.
    pub power_residual: f64,
    /// RMS residual of the exponential fit `ln V ~ a + b r`.
    pub exp_residual: f64,
    /// Largest radius actually reached (may be below `r_max` when capped).
    pub r_reached: usize,
}

impl GrowthEstimate {
    pub fn is_infinite(&self) -> bool {
        self.exponent.is_infinite()
    }
}

/// Growth exponent of a group from ball volumes up to `r_max`.
pub fn growth_rate(spec: GroupSpec, r_max: usize) -> Result<GrowthEstimate> {
    if r_max < 4 {
        return Err(Error::domain("growth_rate needs r_max >= 4"));
    }
    let volumes = ball_volumes(spec, r_max, DEFAULT_VERTEX_CAP);
    let r_reached = volumes.len() - 1;
    if r_reached < 4 {
        return Err(Error::Resource {
            what: "volume growth fit".into(),
            cap: DEFAULT_VERTEX_CAP,
            hint: format!("only reached radius {r_reached}"),
        });
    }
    let lo = (r_reached / 2).max(1);
    let window: Vec<(f64, f64)> = (lo..=r_reached)
        .map(|r| (r as f64, (volumes[r] as f64).ln()))
        .collect();

    let log_pts: Vec<(f64, f64)> = window.iter().map(|&(r, v)| (r.ln(), v)).collect();
    let power = crate::linalg::least_squares_line(&log_pts);
    let exp = crate::linalg::least_squares_line(&window);

    // local slopes over the two halves of the window
    let mid = log_pts.len() / 2;
    let early = crate::linalg::least_squares_line(&log_pts[..=mid]).slope;
    let late = crate::linalg::least_squares_line(&log_pts[mid..]).slope;
    let exponential = exp.rms_residual < power.rms_residual && late > early;

    Ok(GrowthEstimate {
        exponent: if exponential {
            f64::INFINITY
        } else {
            power.slope
        },
        loglog_slope: power.slope,
        power_residual: power.rms_residual,
        exp_residual: exp.rms_residual,
        r_reached,
    })
}
