//! Distance quotient of a free-group ball.
//!
//! In the Cayley graph of `F_k` (a `2k`-regular tree) the spheres around the
//! identity form an equitable partition: a vertex at distance `d >= 1` has
//! one neighbour at distance `d - 1` and `2k - 1` at distance `d + 1`, the
//! root has `2k` at distance one. Functions that depend only on the distance
//! to the root are preserved by the Laplacian, the heat semigroup and the
//! Dirichlet resolvents, so every root-centred quantity is computed exactly
//! on the quotient, a weighted path with `radius + 1` levels. Level `d` is
//! weighted by the sphere size `|S_d|`.

use super::group::{GroupKind, GroupSpec};
use super::Truncation;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RadialTree {
    valence: usize,
    radius: usize,
    sphere: Vec<f64>,
}

impl RadialTree {
    /// Quotient of the radius-`radius` ball of a `valence`-regular tree.
    pub fn new(valence: usize, radius: usize) -> Result<Self> {
        if valence < 2 {
            return Err(Error::domain("a regular tree needs valence at least 2"));
        }
        let mut sphere = Vec::with_capacity(radius + 1);
        sphere.push(1.0);
        for d in 1..=radius {
            let s = if d == 1 {
                valence as f64
            } else {
                sphere[d - 1] * (valence - 1) as f64
            };
            sphere.push(s);
        }
        Ok(RadialTree {
            valence,
            radius,
            sphere,
        })
    }

    /// Quotient of the ball of radius `radius` in the Cayley graph of a free group.
    pub fn for_spec(spec: GroupSpec, radius: usize) -> Result<Self> {
        match spec.kind() {
            GroupKind::FreeGroup { rank } => Self::new(2 * rank, radius),
            _ => Err(Error::domain(format!(
                "the distance partition of {} is not equitable",
                spec.describe()
            ))),
        }
    }

    pub fn levels(&self) -> usize {
        self.radius + 1
    }

    /// Size of the sphere of radius `d`.
    pub fn sphere_size(&self, d: usize) -> f64 {
        self.sphere[d]
    }

    /// Number of neighbours one level further out.
    pub fn forward_degree(&self, d: usize) -> usize {
        if d == 0 {
            self.valence
        } else {
            self.valence - 1
        }
    }

    /// Total number of vertices represented.
    pub fn ball_volume(&self) -> f64 {
        self.sphere.iter().sum()
    }
}

impl Truncation for RadialTree {
    fn vertex_count(&self) -> usize {
        self.levels()
    }

    fn radius(&self) -> usize {
        self.radius
    }

    fn valence_bound(&self) -> usize {
        self.valence
    }

    fn depth(&self, v: usize) -> usize {
        v
    }

    fn multiplicity(&self, v: usize) -> f64 {
        self.sphere[v]
    }

    fn for_each_neighbor(&self, v: usize, f: &mut dyn FnMut(usize, f64)) {
        if v > 0 {
            f(v - 1, 1.0);
        }
        if v < self.radius {
            f(v + 1, self.forward_degree(v) as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_ball;

    #[test]
    fn volumes_match_explicit_balls() {
        for r in 0..6 {
            let q = RadialTree::for_spec(GroupSpec::free_group(2).unwrap(), r).unwrap();
            let b = build_ball(GroupSpec::free_group(2).unwrap(), r).unwrap();
            assert_eq!(q.ball_volume() as usize, b.len());
        }
    }

    #[test]
    fn abelian_is_rejected() {
        assert!(RadialTree::for_spec(GroupSpec::free_abelian(2).unwrap(), 3).is_err());
    }

    #[test]
    fn partition_is_equitable_on_explicit_ball() {
        let b = build_ball(GroupSpec::free_group(2).unwrap(), 5).unwrap();
        let q = RadialTree::for_spec(b.spec(), 5).unwrap();
        for v in 0..b.len() {
            let d = b.dist_from_root(v);
            let mut inward = 0;
            let mut outward = 0;
            for a in b.neighbors(v) {
                if b.dist_from_root(a.vertex) < d {
                    inward += 1;
                } else {
                    outward += 1;
                }
            }
            let mut expect_in = 0.0;
            let mut expect_out = 0.0;
            q.for_each_neighbor(d, &mut |w, m| {
                if w < d {
                    expect_in += m;
                } else {
                    expect_out += m;
                }
            });
            assert_eq!(inward as f64, expect_in);
            assert_eq!(outward as f64, expect_out);
        }
    }
}
