//! Combinatorial and magnetic Laplacians on ball truncations.
//!
//! Functions on a truncation are extended by zero outside it, so
//! `(Δ_σ f)(v) = m(v) f(v) - Σ_{w ~ v, w in ball} σ([w,v]) f(w)` with `m(v)`
//! the valence in the ambient Cayley graph. On interior vertices this is the
//! ambient operator; on the boundary it is the Dirichlet-outside truncation.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VertexFunction;
use crate::graph::{BallGraph, GroupKind, Truncation};
use crate::linalg::{conjugate_gradient, CgReport};
use crate::sparse::{OperatorKind, SparseHermitian, TruncationInfo};

const UNIT_TOL: f64 = 1e-12;

/// Harper flux per unit plaquette.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Flux {
    Rational { num: i64, den: i64 },
    Real(f64),
}

impl Flux {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::domain("flux denominator must be positive"));
        }
        Ok(Flux::Rational { num, den })
    }

    pub fn value(&self) -> f64 {
        match *self {
            Flux::Rational { num, den } => num as f64 / den as f64,
            Flux::Real(a) => a,
        }
    }

    /// Reduced `(p, q)` with `0 <= p < q`, when rational.
    pub fn reduced(&self) -> Option<(i64, i64)> {
        match *self {
            Flux::Rational { num, den } => {
                let g = gcd(num.rem_euclid(den), den);
                Some((num.rem_euclid(den) / g, den / g))
            }
            Flux::Real(_) => None,
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs().max(1)
    } else {
        gcd(b, a % b)
    }
}

/// U(1) phases on the oriented edges of a ball.
///
/// Only the orientation from the smaller to the larger vertex id is stored;
/// the reverse orientation is the complex conjugate, so
/// `σ([u,v]) = conj(σ([v,u]))` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Multiplier {
    phases: Vec<C64>,
    flux: Option<Flux>,
}

impl Multiplier {
    /// `σ ≡ 1`.
    pub fn trivial(g: &BallGraph) -> Self {
        Multiplier {
            phases: vec![C64::new(1.0, 0.0); g.edges().len()],
            flux: None,
        }
    }

    /// Phases for the low-to-high orientation of each edge of `g`.
    pub fn from_edge_phases(g: &BallGraph, phases: Vec<C64>) -> Result<Self> {
        if phases.len() != g.edges().len() {
            return Err(Error::domain(format!(
                "multiplier has {} phases for {} edges",
                phases.len(),
                g.edges().len()
            )));
        }
        if let Some(e) = phases.iter().position(|z| (z.norm() - 1.0).abs() > UNIT_TOL) {
            return Err(Error::domain(format!("phase on edge {e} is not unimodular")));
        }
        Ok(Multiplier {
            phases,
            flux: None,
        })
    }

    /// Independent uniformly distributed phases.
    pub fn random(g: &BallGraph, rng: &mut impl Rng) -> Self {
        Multiplier {
            phases: (0..g.edges().len())
                .map(|_| C64::from_polar(1.0, rng.gen_range(0.0..TAU)))
                .collect(),
            flux: None,
        }
    }

    pub fn flux(&self) -> Option<Flux> {
        self.flux
    }

    pub fn edge_count(&self) -> usize {
        self.phases.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.phases.iter().all(|z| (z - 1.0).norm() < UNIT_TOL)
    }

    /// `σ([from, to])` for the edge with the given id.
    pub fn phase(&self, from: usize, to: usize, edge: usize) -> C64 {
        if from < to {
            self.phases[edge]
        } else {
            self.phases[edge].conj()
        }
    }

    fn check(&self, g: &BallGraph) -> Result<()> {
        if self.phases.len() != g.edges().len() {
            return Err(Error::domain(format!(
                "multiplier defined on {} edges but the ball has {}",
                self.phases.len(),
                g.edges().len()
            )));
        }
        Ok(())
    }
}

/// Landau-gauge Harper multiplier on a `Z^2` ball: horizontal edges carry 1,
/// the edge from `(m, n)` to `(m, n + 1)` carries `exp(2πi α m)`.
pub fn harper_multiplier(g: &BallGraph, flux: Flux) -> Result<Multiplier> {
    if g.spec().kind() != (GroupKind::FreeAbelian { rank: 2 }) {
        return Err(Error::domain(format!(
            "Harper multiplier needs a Z^2 ball, got {}",
            g.spec().describe()
        )));
    }
    let alpha = flux.value();
    let phases = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (la, lb) = (g.label(a), g.label(b));
            if la[0] != lb[0] {
                C64::new(1.0, 0.0)
            } else {
                let up = C64::from_polar(1.0, TAU * alpha * la[0] as f64);
                if lb[1] == la[1] + 1 {
                    up
                } else {
                    up.conj()
                }
            }
        })
        .collect();
    Ok(Multiplier {
        phases,
        flux: Some(flux),
    })
}

/// `σ'([w,v]) = χ(v) σ([w,v]) conj(χ(w))`.
pub fn gauge_transform(g: &BallGraph, sigma: &Multiplier, chi: &[C64]) -> Result<Multiplier> {
    sigma.check(g)?;
    if chi.len() != g.len() {
        return Err(Error::domain("gauge function must be defined on every vertex"));
    }
    if let Some(v) = chi.iter().position(|z| (z.norm() - 1.0).abs() > UNIT_TOL) {
        return Err(Error::domain(format!("gauge value at vertex {v} is not unimodular")));
    }
    let phases = g
        .edges()
        .iter()
        .zip(&sigma.phases)
        .map(|(&(a, b), &p)| chi[b] * p * chi[a].conj())
        .collect();
    Ok(Multiplier {
        phases,
        flux: sigma.flux,
    })
}

/// Phase of the oriented edge `from -> to`, if the two vertices are adjacent.
pub fn oriented_phase(g: &BallGraph, sigma: &Multiplier, from: usize, to: usize) -> Option<C64> {
    g.neighbors(from)
        .iter()
        .find(|a| a.vertex == to)
        .map(|a| sigma.phase(from, to, a.edge))
}

/// Product of phases around the unit square with lower-left corner `(m, n)`.
pub fn plaquette_holonomy(g: &BallGraph, sigma: &Multiplier, m: i32, n: i32) -> Option<C64> {
    let corners = [[m, n], [m + 1, n], [m + 1, n + 1], [m, n + 1]];
    let ids: Option<Vec<usize>> = corners.iter().map(|c| g.vertex_of(c)).collect();
    let ids = ids?;
    let mut h = C64::new(1.0, 0.0);
    for k in 0..4 {
        h *= oriented_phase(g, sigma, ids[k], ids[(k + 1) % 4])?;
    }
    Some(h)
}

/// `Δ f` for `f` extended by zero outside the ball.
pub fn apply_laplacian(g: &BallGraph, f: &VertexFunction) -> VertexFunction {
    let mut out = VertexFunction::zeros(g.len());
    for v in 0..g.len() {
        let mut acc = f[v] * g.valence(v) as f64;
        for a in g.neighbors(v) {
            acc -= f[a.vertex];
        }
        out[v] = acc;
    }
    out
}

/// `Δ_σ f(v) = Σ_{w ~ v} (f(v) - σ([w,v]) f(w))`, with `f` extended by zero.
pub fn apply_magnetic(g: &BallGraph, sigma: &Multiplier, f: &VertexFunction) -> Result<VertexFunction> {
    sigma.check(g)?;
    let mut out = VertexFunction::zeros(g.len());
    for v in 0..g.len() {
        let mut acc = f[v] * g.valence(v) as f64;
        for a in g.neighbors(v) {
            acc -= sigma.phase(a.vertex, v, a.edge) * f[a.vertex];
        }
        out[v] = acc;
    }
    Ok(out)
}

fn ball_triplets(
    g: &BallGraph,
    sigma: Option<&Multiplier>,
    keep: usize,
) -> Vec<(usize, usize, C64)> {
    let mut trip = Vec::new();
    for v in 0..keep {
        trip.push((v, v, C64::new(g.valence(v) as f64, 0.0)));
        for a in g.neighbors(v) {
            if a.vertex >= keep {
                continue;
            }
            let s = sigma.map_or(C64::new(1.0, 0.0), |s| s.phase(a.vertex, v, a.edge));
            trip.push((v, a.vertex, -s));
        }
    }
    trip
}

fn kind_for(sigma: Option<&Multiplier>) -> OperatorKind {
    match sigma {
        Some(s) if !s.is_trivial() => OperatorKind::Magnetic,
        _ => OperatorKind::Laplacian,
    }
}

/// `Δ_σ` on all vertices of the ball (Dirichlet condition outside the ball).
pub fn ball_operator(g: &BallGraph, sigma: Option<&Multiplier>) -> Result<SparseHermitian> {
    if let Some(s) = sigma {
        s.check(g)?;
    }
    let op = SparseHermitian::from_triplets(g.len(), kind_for(sigma), ball_triplets(g, sigma, g.len()))?;
    Ok(op.with_truncation(TruncationInfo {
        valence_bound: g.valence_bound(),
        radius: g.radius(),
        depth: (0..g.len()).map(|v| g.dist_from_root(v) as u32).collect(),
    }))
}

/// Dirichlet Laplacian on the interior vertices: boundary values pinned to
/// zero, diagonal equal to the full ambient valence.
pub fn dirichlet_matrix(g: &BallGraph, sigma: Option<&Multiplier>) -> Result<SparseHermitian> {
    if let Some(s) = sigma {
        s.check(g)?;
    }
    let n = g.interior_len();
    if n == 0 {
        return Err(Error::domain("ball has an empty interior"));
    }
    let op = SparseHermitian::from_triplets(n, OperatorKind::Dirichlet, ball_triplets(g, sigma, n))?;
    Ok(op.with_truncation(TruncationInfo {
        valence_bound: g.valence_bound(),
        radius: g.radius().saturating_sub(1),
        depth: (0..n).map(|v| g.dist_from_root(v) as u32).collect(),
    }))
}

fn truncation_triplets(t: &dyn Truncation, keep: usize) -> Vec<(usize, usize, C64)> {
    let mut trip = Vec::new();
    for v in 0..keep {
        trip.push((v, v, C64::new(t.valence_bound() as f64, 0.0)));
        t.for_each_neighbor(v, &mut |w, m| {
            if w < keep {
                trip.push((v, w, C64::new(-m, 0.0)));
            }
        });
    }
    trip
}

fn weights_of(t: &dyn Truncation, n: usize) -> Option<Vec<f64>> {
    let w: Vec<f64> = (0..n).map(|v| t.multiplicity(v)).collect();
    if w.iter().all(|&x| x == 1.0) {
        None
    } else {
        Some(w)
    }
}

/// Non-magnetic `Δ` on any truncation, Dirichlet condition outside.
pub fn truncation_operator(t: &dyn Truncation) -> Result<SparseHermitian> {
    let n = t.vertex_count();
    let mut op = SparseHermitian::from_triplets(n, OperatorKind::Laplacian, truncation_triplets(t, n))?;
    if let Some(w) = weights_of(t, n) {
        op = op.with_weights(w);
    }
    Ok(op.with_truncation(TruncationInfo {
        valence_bound: t.valence_bound(),
        radius: t.radius(),
        depth: (0..n).map(|v| t.depth(v) as u32).collect(),
    }))
}

/// Dirichlet Laplacian on the interior of any truncation.
pub fn truncation_dirichlet(t: &dyn Truncation) -> Result<SparseHermitian> {
    let n = (0..t.vertex_count()).take_while(|&v| t.is_interior(v)).count();
    if n == 0 {
        return Err(Error::domain("truncation has an empty interior"));
    }
    let mut op = SparseHermitian::from_triplets(n, OperatorKind::Dirichlet, truncation_triplets(t, n))?;
    if let Some(w) = weights_of(t, n) {
        op = op.with_weights(w);
    }
    Ok(op.with_truncation(TruncationInfo {
        valence_bound: t.valence_bound(),
        radius: t.radius().saturating_sub(1),
        depth: (0..n).map(|v| t.depth(v) as u32).collect(),
    }))
}

/// Diagonal potential `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub values: Vec<f64>,
    pub lower_bound: f64,
}

impl Potential {
    /// Constant potential, which is what commutes with the group action on a Cayley graph.
    pub fn constant(n: usize, c: f64) -> Self {
        Potential {
            values: vec![c; n],
            lower_bound: c,
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_orbit_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.min() < self.lower_bound {
            return Err(Error::domain(format!(
                "potential minimum {} below its declared lower bound {}",
                self.min(),
                self.lower_bound
            )));
        }
        Ok(())
    }
}

/// `Δ_σ + T`.
pub fn schrodinger_operator(base: &SparseHermitian, t: &Potential) -> Result<SparseHermitian> {
    t.validate()?;
    base.plus_diagonal(&t.values)
}

/// Pointwise defect `Re(Δ_σ f · conj f) - |f| Δ|f|`.
///
/// Equals `Σ_{w ~ v} (|f(v)||f(w)| - Re(σ([w,v]) f(w) conj f(v)))`, which is
/// nonnegative at every vertex.
pub fn kato_defect(g: &BallGraph, sigma: &Multiplier, f: &VertexFunction) -> Result<Vec<f64>> {
    let mag = apply_magnetic(g, sigma, f)?;
    let abs = f.abs();
    let lap = apply_laplacian(g, &abs);
    Ok((0..g.len())
        .map(|v| (mag[v] * f[v].conj()).re - abs[v].re * lap[v].re)
        .collect())
}

/// Solves `(A + λ) u = f` by conjugate gradients.
pub fn resolvent_solve(
    a: &SparseHermitian,
    lambda: f64,
    f: &VertexFunction,
    rel_tol: f64,
) -> Result<(VertexFunction, CgReport)> {
    let (lo, _) = a.gershgorin();
    if lo + lambda <= 0.0 && lambda <= 0.0 {
        return Err(Error::precondition("resolvent shift must make the operator positive"));
    }
    let n = a.dim();
    let mut u = VertexFunction::zeros(n);
    let report = conjugate_gradient(
        |x, y| {
            a.apply(x, y);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += xi * lambda;
            }
        },
        f.values(),
        u.values_mut(),
        a.weights(),
        rel_tol,
        20 * n + 100,
    );
    if report.residual > rel_tol * 10.0 {
        return Err(Error::Numeric {
            method: "resolvent CG",
            residual: report.residual,
            iterations: report.iterations,
        });
    }
    Ok((u, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_ball, GroupSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn z(d: usize, r: usize) -> BallGraph {
        build_ball(GroupSpec::free_abelian(d).unwrap(), r).unwrap()
    }

    #[test]
    fn delta_on_line() {
        let g = z(1, 3);
        let out = apply_laplacian(&g, &VertexFunction::delta(g.len(), 0));
        assert_eq!(out[0].re, 2.0);
        for a in g.neighbors(0) {
            assert_eq!(out[a.vertex].re, -1.0);
        }
        let rest: f64 = (0..g.len()).filter(|&v| v != 0 && g.dist_from_root(v) > 1).map(|v| out[v].norm()).sum();
        assert_eq!(rest, 0.0);
    }

    #[test]
    fn constants_are_harmonic_inside() {
        let g = z(2, 5);
        let out = apply_laplacian(&g, &VertexFunction::constant(g.len(), 1.0));
        for v in g.interior() {
            assert_eq!(out[v].norm(), 0.0);
        }
        assert!(g.boundary().any(|v| out[v].norm() > 0.0));
    }

    #[test]
    fn trivial_multiplier_reduces_to_laplacian() {
        let g = z(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = VertexFunction::random_complex(g.len(), g.len(), &mut rng);
        let a = apply_laplacian(&g, &f);
        let b = apply_magnetic(&g, &Multiplier::trivial(&g), &f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn harper_half_flux_delta() {
        let g = z(2, 3);
        let s = harper_multiplier(&g, Flux::rational(1, 2).unwrap()).unwrap();
        let out = apply_magnetic(&g, &s, &VertexFunction::delta(g.len(), 0)).unwrap();
        assert_eq!(out[0], C64::new(4.0, 0.0));
        // origin is column m = 0, so vertical phases there are +1
        for a in g.neighbors(0) {
            assert!((out[a.vertex] + 1.0).norm() < 1e-15);
        }
        let g = z(2, 4);
        let s = harper_multiplier(&g, Flux::rational(1, 2).unwrap()).unwrap();
        let start = g.vertex_of(&[1, 0]).unwrap();
        let out = apply_magnetic(&g, &s, &VertexFunction::delta(g.len(), start)).unwrap();
        // at column m = 1 the upward neighbour sees σ([(1,0),(1,1)]) = -1
        let up = g.vertex_of(&[1, 1]).unwrap();
        let down = g.vertex_of(&[1, -1]).unwrap();
        assert!((out[up] - 1.0).norm() < 1e-12);
        assert!((out[down] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn harper_phase_patterns() {
        let g = z(2, 4);
        let s0 = harper_multiplier(&g, Flux::Real(0.0)).unwrap();
        assert!(s0.is_trivial());
        let s = harper_multiplier(&g, Flux::rational(1, 2).unwrap()).unwrap();
        for &(a, b) in g.edges() {
            let (la, lb) = (g.label(a), g.label(b));
            if la[0] == lb[0] {
                let p = oriented_phase(&g, &s, a, b).unwrap();
                let expect = if la[0].rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                assert!((p - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plaquette_holonomy_is_flux() {
        let g = z(2, 5);
        for (p, q) in [(1, 3), (1, 2), (2, 7)] {
            let flux = Flux::rational(p, q).unwrap();
            let s = harper_multiplier(&g, flux).unwrap();
            let expect = C64::from_polar(1.0, TAU * flux.value());
            for (m, n) in [(0, 0), (-2, 1), (1, -3)] {
                let h = plaquette_holonomy(&g, &s, m, n).unwrap();
                assert!((h - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn harper_needs_z2() {
        let g = z(1, 3);
        assert!(harper_multiplier(&g, Flux::Real(0.3)).is_err());
    }

    #[test]
    fn gauge_checks() {
        let g = z(2, 3);
        let s = harper_multiplier(&g, Flux::rational(1, 3).unwrap()).unwrap();
        let ones = vec![C64::new(1.0, 0.0); g.len()];
        assert_eq!(gauge_transform(&g, &s, &ones).unwrap(), s);
        let mut bad = ones.clone();
        bad[2] = C64::new(2.0, 0.0);
        assert!(gauge_transform(&g, &s, &bad).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chi: Vec<C64> = (0..g.len()).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..TAU))).collect();
        let s2 = gauge_transform(&g, &s, &chi).unwrap();
        let h1 = plaquette_holonomy(&g, &s, 0, 0).unwrap();
        let h2 = plaquette_holonomy(&g, &s2, 0, 0).unwrap();
        assert!((h1 - h2).norm() < 1e-12);
    }

    #[test]
    fn missing_phases_rejected() {
        let g = z(2, 3);
        let small = Multiplier::trivial(&z(2, 2));
        assert!(apply_magnetic(&g, &small, &VertexFunction::zeros(g.len())).is_err());
    }

    #[test]
    fn dirichlet_on_line() {
        let g = z(1, 2);
        let a = dirichlet_matrix(&g, None).unwrap();
        assert_eq!(a.dim(), 3);
        let root = 0;
        let left = g.vertex_of(&[-1]).unwrap();
        let right = g.vertex_of(&[1]).unwrap();
        assert_eq!(a.diag(root), 2.0);
        assert_eq!(a.entry(root, left).re, -1.0);
        assert_eq!(a.entry(root, right).re, -1.0);
        assert_eq!(a.entry(left, right).re, 0.0);
        assert_eq!(a.max_row_nnz(), 3);
    }

    #[test]
    fn dirichlet_free_group_diagonal() {
        let g = build_ball(GroupSpec::free_group(2).unwrap(), 3).unwrap();
        let a = dirichlet_matrix(&g, None).unwrap();
        assert!((0..a.dim()).all(|i| a.diag(i) == 4.0));
        assert!(a.has_nonpositive_offdiagonal());
    }

    #[test]
    fn empty_interior_rejected() {
        let g = z(1, 0);
        assert!(dirichlet_matrix(&g, None).is_err());
    }

    #[test]
    fn magnetic_operator_is_hermitian() {
        let g = z(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Multiplier::random(&g, &mut rng);
        let a = ball_operator(&g, Some(&s)).unwrap();
        assert_eq!(a.kind(), OperatorKind::Magnetic);
        assert!(a.self_adjoint_defect() < 1e-15);
    }

    #[test]
    fn kato_defect_edge_cases() {
        let g = z(2, 3);
        let s = Multiplier::trivial(&g);
        let f = VertexFunction::from_real(&(0..g.len()).map(|v| v as f64).collect::<Vec<_>>());
        assert!(kato_defect(&g, &s, &f).unwrap().iter().all(|d| d.abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Multiplier::random(&g, &mut rng);
        let v = 0;
        let d = kato_defect(&g, &s, &VertexFunction::delta(g.len(), v)).unwrap();
        assert_eq!(d[v], 0.0);
        for a in g.neighbors(v) {
            assert_eq!(d[a.vertex], 0.0);
        }
    }

    #[test]
    fn radial_operator_is_self_adjoint() {
        let q = crate::graph::RadialTree::new(4, 6).unwrap();
        let a = truncation_operator(&q).unwrap();
        assert!(a.self_adjoint_defect() < 1e-12);
        assert_eq!(a.dim(), 7);
        let d = truncation_dirichlet(&q).unwrap();
        assert_eq!(d.dim(), 6);
    }

    #[test]
    fn potential_bounds() {
        let mut t = Potential::constant(4, 1.0);
        assert!(t.validate().is_ok());
        assert!(t.is_orbit_constant());
        t.values[0] = 0.5;
        assert!(t.validate().is_err());
    }
}
