use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::group::GroupSpec;
use super::Truncation;
use crate::error::{Error, Result};

/// Default cap on the number of vertices a ball may hold.
pub const DEFAULT_VERTEX_CAP: usize = 5_000_000;

/// One entry of a vertex's adjacency list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Adjacent {
    pub vertex: usize,
    pub edge: usize,
    /// Index of the generator `s` with `vertex = self * s`.
    pub generator: usize,
}

/// A finite ball of a Cayley graph around the identity.
///
/// Vertex ids follow BFS discovery order, so every vertex at distance `< r`
/// precedes every vertex at distance `r`, and `build_ball(spec, r)` is a
/// prefix of `build_ball(spec, r + 1)`. Interior vertices (all neighbours
/// present) are exactly the ids `0..interior_len()`.
#[derive(Clone, Debug)]
pub struct BallGraph {
    spec: GroupSpec,
    radius: usize,
    labels: Vec<Box<[i32]>>,
    dist: Vec<u32>,
    adj_ptr: Vec<usize>,
    adj: Vec<Adjacent>,
    edges: Vec<(usize, usize)>,
    interior_len: usize,
}

/// Builds the ball of the given radius with the default vertex cap.
pub fn build_ball(spec: GroupSpec, radius: usize) -> Result<BallGraph> {
    BallGraph::build(spec, radius, DEFAULT_VERTEX_CAP)
}

impl BallGraph {
    pub fn build(spec: GroupSpec, radius: usize, vertex_cap: usize) -> Result<Self> {
        spec.validate()?;
        let gens = spec.generator_count();
        let root: Box<[i32]> = spec.identity().into_boxed_slice();
        let mut index: HashMap<Box<[i32]>, usize> = HashMap::new();
        let mut labels = vec![root.clone()];
        let mut dist = vec![0u32];
        index.insert(root, 0);

        let mut buf = Vec::new();
        let mut head = 0;
        while head < labels.len() {
            let d = dist[head];
            if d as usize == radius {
                break;
            }
            for j in 0..gens {
                spec.mul_generator(&labels[head], j, &mut buf);
                if !index.contains_key(buf.as_slice()) {
                    if labels.len() == vertex_cap {
                        return Err(Error::Resource {
                            what: format!("ball of radius {radius} in {}", spec.describe()),
                            cap: vertex_cap,
                            hint: "raise the vertex cap or use a radial truncation".into(),
                        });
                    }
                    let key: Box<[i32]> = buf.clone().into_boxed_slice();
                    index.insert(key.clone(), labels.len());
                    labels.push(key);
                    dist.push(d + 1);
                }
            }
            head += 1;
        }

        let n = labels.len();
        let interior_len = dist.iter().take_while(|&&d| (d as usize) < radius).count();
        let mut adj_ptr = Vec::with_capacity(n + 1);
        let mut adj: Vec<Adjacent> = Vec::with_capacity(n * gens);
        let mut edges = Vec::new();
        adj_ptr.push(0);
        for (u, label) in labels.iter().enumerate().take(n) {
            for j in 0..gens {
                spec.mul_generator(label, j, &mut buf);
                let Some(&v) = index.get(buf.as_slice()) else {
                    continue;
                };
                let edge = if u < v {
                    edges.push((u, v));
                    edges.len() - 1
                } else {
                    // the reverse entry was created while scanning v
                    adj[adj_ptr[v]..adj_ptr[v + 1]]
                        .iter()
                        .find(|a| a.vertex == u && a.generator == j ^ 1)
                        .map(|a| a.edge)
                        .expect("Cayley adjacency is symmetric")
                };
                adj.push(Adjacent {
                    vertex: v,
                    edge,
                    generator: j,
                });
            }
            adj_ptr.push(adj.len());
        }

        Ok(BallGraph {
            spec,
            radius,
            labels,
            dist,
            adj_ptr,
            adj,
            edges,
            interior_len,
        })
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, v: usize) -> &[i32] {
        &self.labels[v]
    }

    pub fn vertex_of(&self, label: &[i32]) -> Option<usize> {
        // labels are unique; linear scan is fine for the occasional lookup
        self.labels.iter().position(|l| &**l == label)
    }

    pub fn dist_from_root(&self, v: usize) -> usize {
        self.dist[v] as usize
    }

    pub fn neighbors(&self, v: usize) -> &[Adjacent] {
        &self.adj[self.adj_ptr[v]..self.adj_ptr[v + 1]]
    }

    /// Valence of `v` in the ambient Cayley graph.
    pub fn valence(&self, _v: usize) -> usize {
        self.spec.generator_count()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn interior_len(&self) -> usize {
        self.interior_len
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        0..self.interior_len
    }

    pub fn boundary(&self) -> std::ops::Range<usize> {
        self.interior_len..self.len()
    }

    pub fn is_interior(&self, v: usize) -> bool {
        v < self.interior_len
    }

    /// Vertices within distance `r` of the root (a prefix of the id range).
    pub fn inner_ball(&self, r: usize) -> std::ops::Range<usize> {
        0..self.dist.iter().take_while(|&&d| d as usize <= r).count()
    }

    /// Breadth-first graph distance inside the ball.
    pub fn distance(&self, x: usize, y: usize) -> Result<usize> {
        let n = self.len();
        if x >= n || y >= n {
            return Err(Error::domain(format!(
                "vertex {} not in a ball of {n} vertices",
                x.max(y)
            )));
        }
        if x == y {
            return Ok(0);
        }
        let d = self.bfs_from(x);
        d[y].ok_or_else(|| Error::domain("vertices are disconnected inside the ball"))
    }

    /// Distances from `x` to every vertex of the ball.
    pub fn bfs_from(&self, x: usize) -> Vec<Option<usize>> {
        let mut d = vec![None; self.len()];
        let mut queue = VecDeque::from([x]);
        d[x] = Some(0);
        while let Some(u) = queue.pop_front() {
            let du = d[u].unwrap();
            for a in self.neighbors(u) {
                if d[a.vertex].is_none() {
                    d[a.vertex] = Some(du + 1);
                    queue.push_back(a.vertex);
                }
            }
        }
        d
    }

    /// JSON export: `{spec, radius, vertices:[{id,label,dist}], edges, interior, boundary}`.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct V<'a> {
            id: usize,
            label: &'a [i32],
            dist: u32,
        }
        #[derive(Serialize)]
        struct Export<'a> {
            spec: GroupSpec,
            radius: usize,
            vertices: Vec<V<'a>>,
            edges: Vec<[usize; 2]>,
            interior: Vec<usize>,
            boundary: Vec<usize>,
        }
        let export = Export {
            spec: self.spec,
            radius: self.radius,
            vertices: (0..self.len())
                .map(|id| V {
                    id,
                    label: &self.labels[id],
                    dist: self.dist[id],
                })
                .collect(),
            edges: self.edges.iter().map(|&(a, b)| [a, b]).collect(),
            interior: self.interior().collect(),
            boundary: self.boundary().collect(),
        };
        serde_json::to_value(export).expect("ball export is serialisable")
    }
}

impl Truncation for BallGraph {
    fn vertex_count(&self) -> usize {
        self.len()
    }

    fn radius(&self) -> usize {
        self.radius
    }

    fn valence_bound(&self) -> usize {
        self.spec.generator_count()
    }

    fn depth(&self, v: usize) -> usize {
        self.dist[v] as usize
    }

    fn multiplicity(&self, _v: usize) -> f64 {
        1.0
    }

    fn for_each_neighbor(&self, v: usize, f: &mut dyn FnMut(usize, f64)) {
        for a in self.neighbors(v) {
            f(a.vertex, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(d: usize) -> GroupSpec {
        GroupSpec::free_abelian(d).unwrap()
    }

    #[test]
    fn line_ball() {
        let g = build_ball(z(1), 3).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g.neighbors(0).len(), 2);
        let boundary: Vec<_> = g.boundary().map(|v| g.label(v)[0]).collect();
        assert_eq!(boundary.len(), 2);
        assert!(boundary.contains(&3) && boundary.contains(&-3));
    }

    #[test]
    fn free_group_ball_counts() {
        let g = build_ball(GroupSpec::free_group(2).unwrap(), 2).unwrap();
        assert_eq!(g.len(), 1 + 4 + 12);
        for v in g.interior() {
            assert_eq!(g.neighbors(v).len(), 4);
        }
    }

    #[test]
    fn distances_on_line() {
        let g = build_ball(z(1), 4).unwrap();
        let a = g.vertex_of(&[-2]).unwrap();
        let b = g.vertex_of(&[3]).unwrap();
        assert_eq!(g.distance(a, b).unwrap(), 5);
        assert_eq!(g.distance(a, a).unwrap(), 0);
        assert!(g.distance(0, 99).is_err());
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let err = BallGraph::build(GroupSpec::free_group(2).unwrap(), 8, 1000).unwrap_err();
        match err {
            Error::Resource { cap, .. } => assert_eq!(cap, 1000),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adjacency_symmetric_and_edges_consistent() {
        for spec in [z(2), GroupSpec::heisenberg(), GroupSpec::free_group(2).unwrap()] {
            let g = build_ball(spec, 4).unwrap();
            for u in 0..g.len() {
                for a in g.neighbors(u) {
                    let back = g
                        .neighbors(a.vertex)
                        .iter()
                        .find(|b| b.vertex == u)
                        .expect("symmetric");
                    assert_eq!(back.edge, a.edge);
                    let (p, q) = g.edges()[a.edge];
                    assert_eq!((p.min(q), p.max(q)), (u.min(a.vertex), u.max(a.vertex)));
                }
            }
        }
    }

    #[test]
    fn json_export_has_expected_fields() {
        let g = build_ball(z(1), 1).unwrap();
        let j = g.to_json();
        assert_eq!(j["radius"], 1);
        assert_eq!(j["vertices"].as_array().unwrap().len(), 3);
        assert_eq!(j["edges"].as_array().unwrap().len(), 2);
        assert_eq!(j["interior"], serde_json::json!([0]));
        assert_eq!(j["spec"]["kind"], "free_abelian");
    }
}
