//! Positive ground states by Dirichlet exhaustion, their envelopes, the
//! Doob-transformed generator and the bounded initial value problem.

use std::io::Write;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::eigen::{lowest_eigenpair_with, EigenOptions};
use crate::error::{Error, Result};
use crate::field::VertexFunction;
use crate::graph::{build_ball, BallGraph, GroupKind, GroupSpec, RadialTree, Truncation};
use crate::heat::{evolve, HeatOptions, HeatRequest};
use crate::magnetic::{apply_laplacian, dirichlet_matrix, truncation_dirichlet, truncation_operator};
use crate::sparse::SparseHermitian;

/// How vertices of the exhaustion are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// Explicit ball vertices in BFS order.
    Ball,
    /// Distance classes of a regular tree; entry `d` is the value on the sphere of radius `d`.
    Radial { valence: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExhaustionStep {
    pub radius: usize,
    pub lambda: f64,
    pub gap: Option<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct GroundStateResult {
    pub spec: GroupSpec,
    pub representation: Representation,
    pub lambda0_estimate: f64,
    pub history: Vec<ExhaustionStep>,
    pub radii_used: Vec<usize>,
    /// `λ_last - λ_previous` (nonpositive when the sequence decreases).
    pub convergence_gap: f64,
    pub converged: bool,
    /// Ground state on the trusted inner ball, `φ(root) = 1`.
    pub phi: VertexFunction,
    pub depth: Vec<u32>,
    pub trusted_radius: usize,
    /// Dirichlet operator of the largest exhaustion domain and its eigenvector.
    pub operator: SparseHermitian,
    pub phi_full: VertexFunction,
}

impl GroundStateResult {
    /// `λ_r` strictly decreasing along the exhaustion.
    pub fn strictly_decreasing(&self) -> bool {
        self.history.windows(2).all(|w| w[1].lambda < w[0].lambda)
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.history.iter().map(|s| s.lambda).collect()
    }

    /// `|Δφ - λφ|_∞ / |φ|_∞` over the trusted region.
    pub fn eigen_residual(&self) -> f64 {
        let a = &self.operator;
        let r = a.apply_fn(&self.phi_full);
        let n = self.phi.len();
        let worst = (0..n)
            .map(|v| (r[v] - self.phi_full[v] * self.lambda0_estimate).norm())
            .fold(0.0, f64::max);
        worst / self.phi.sup_norm()
    }

    /// Trusted φ spread over an explicit ball: radial values are copied to every vertex of the sphere.
    pub fn on_ball(&self, g: &BallGraph) -> Result<VertexFunction> {
        match self.representation {
            Representation::Ball => {
                if g.len() > self.phi.len() {
                    return Err(Error::domain("ball is larger than the trusted region"));
                }
                Ok(VertexFunction::from_complex(self.phi.values()[..g.len()].to_vec()))
            }
            Representation::Radial { .. } => {
                if g.radius() > self.trusted_radius {
                    return Err(Error::domain("ball is larger than the trusted region"));
                }
                Ok(VertexFunction::from_complex(
                    (0..g.len()).map(|v| self.phi[g.dist_from_root(v)]).collect(),
                ))
            }
        }
    }
}

/// Dirichlet exhaustion by metric balls of radius `r_min..=r_max`.
///
/// Free groups are handled exactly on the distance quotient, since the
/// Perron vector of a ball is radial. `converged` is false when the last
/// step moved λ by more than `tol`.
pub fn ground_state_exhaustion(spec: GroupSpec, r_min: usize, r_max: usize, tol: f64) -> Result<GroundStateResult> {
    if r_min < 2 {
        return Err(Error::domain("exhaustion needs r_min >= 2"));
    }
    if r_max < r_min {
        return Err(Error::domain("r_max must be at least r_min"));
    }
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let opts = EigenOptions {
        dense_limit: 400,
        max_iter: 5000,
        ..EigenOptions::default()
    };
    let radial = matches!(spec.kind(), GroupKind::FreeGroup { .. });
    let mut history: Vec<ExhaustionStep> = Vec::new();
    let mut warm: Option<Vec<C64>> = None;
    let mut last: Option<(SparseHermitian, VertexFunction)> = None;
    for r in r_min..=r_max {
        let a = if radial {
            truncation_dirichlet(&RadialTree::for_spec(spec, r)?)?
        } else {
            dirichlet_matrix(&build_ball(spec, r)?, None)?
        };
        let pair = lowest_eigenpair_with(&a, opts, warm.as_deref())?;
        let gap = history.last().map(|p| pair.value - p.lambda);
        history.push(ExhaustionStep {
            radius: r,
            lambda: pair.value,
            gap,
            residual: pair.residual,
        });
        warm = Some(pair.vector.values().to_vec());
        last = Some((a, pair.vector));
    }
    let (operator, phi_full) = last.expect("at least one radius");
    let trusted_radius = r_max / 2;
    let info = operator.truncation().expect("exhaustion operators carry truncation data");
    let keep = (0..operator.dim())
        .take_while(|&v| info.depth[v] as usize <= trusted_radius)
        .count();
    let lambda0_estimate = history.last().unwrap().lambda;
    let convergence_gap = history.last().unwrap().gap.unwrap_or(0.0);
    Ok(GroundStateResult {
        spec,
        representation: if radial {
            Representation::Radial {
                valence: spec.generator_count(),
            }
        } else {
            Representation::Ball
        },
        lambda0_estimate,
        radii_used: history.iter().map(|s| s.radius).collect(),
        converged: convergence_gap.abs() <= tol,
        convergence_gap,
        history,
        phi: VertexFunction::from_complex(phi_full.values()[..keep].to_vec()),
        depth: info.depth[..keep].to_vec(),
        trusted_radius,
        operator,
        phi_full,
    })
}

/// Largest violation of `1/m(y) <= u(y)/u(x) <= m(x)` over adjacent interior vertices.
///
/// `u` lives on the whole ball, extended by zero outside; it must be positive
/// with `Δu > 0` at every interior vertex, otherwise a precondition error is returned.
pub fn harnack_check(g: &BallGraph, u: &VertexFunction) -> Result<f64> {
    if u.len() != g.len() {
        return Err(Error::domain("function must be defined on the whole ball"));
    }
    let lap = apply_laplacian(g, u);
    for x in g.interior() {
        if !(u[x].re > 0.0) || u[x].im != 0.0 {
            return Err(Error::precondition(format!("u is not positive at vertex {x}")));
        }
        if !(lap[x].re > 0.0) {
            return Err(Error::precondition(format!("Δu is not positive at vertex {x}")));
        }
    }
    let mut worst: f64 = 0.0;
    for x in g.interior() {
        let mx = g.valence(x) as f64;
        for a in g.neighbors(x) {
            let y = a.vertex;
            if !g.is_interior(y) {
                continue;
            }
            let ratio = u[y].re / u[x].re;
            let my = g.valence(y) as f64;
            worst = worst.max(ratio - mx).max(1.0 / my - ratio);
        }
    }
    Ok(worst)
}

/// `M^{-d} <= φ <= M^{d}` on the trusted region.
pub fn growth_envelope_check(result: &GroundStateResult, valence_bound: usize) -> bool {
    let m = valence_bound as f64;
    result.phi.values().iter().zip(&result.depth).all(|(p, &d)| {
        let e = m.powi(d as i32);
        let slack = 1e-12 * e;
        p.re >= 1.0 / e - slack && p.re <= e + slack
    })
}

/// `Lu(x) = Σ_{y ~ x} (φ(y)/φ(x)) (u(x) - u(y))` over neighbours inside the ball.
///
/// Matches the generator on the infinite graph at interior vertices.
pub fn doob_apply(g: &BallGraph, phi: &VertexFunction, u: &VertexFunction) -> Result<VertexFunction> {
    if phi.len() != g.len() || u.len() != g.len() {
        return Err(Error::domain("φ and u must be defined on the whole ball"));
    }
    if let Some(v) = (0..g.len()).find(|&v| !(phi[v].re > 0.0)) {
        return Err(Error::domain(format!("φ is not positive at vertex {v}")));
    }
    let mut out = VertexFunction::zeros(g.len());
    for x in 0..g.len() {
        let mut acc = C64::new(0.0, 0.0);
        for a in g.neighbors(x) {
            acc += (u[x] - u[a.vertex]) * (phi[a.vertex].re / phi[x].re);
        }
        out[x] = acc;
    }
    Ok(out)
}

/// Solution of `Lu + ∂u/∂t = 0`, `u(·, 0) = u₀` on a time grid.
#[derive(Clone, Debug, Serialize)]
pub struct IvpSolution {
    pub times: Vec<f64>,
    /// `u[j][x]` at time `times[j]`.
    pub u: Vec<Vec<f64>>,
    /// Pointwise error bound per time.
    pub error: Vec<Vec<f64>>,
    /// `sup |u₀|`.
    pub sup_bound: f64,
}

impl IvpSolution {
    /// `max_{j,x} (|u(x, t_j)| - sup_bound - error(x, t_j))`; nonpositive when the bound holds.
    pub fn bound_excess(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for (uj, ej) in self.u.iter().zip(&self.error) {
            for (x, e) in uj.iter().zip(ej) {
                worst = worst.max(x.abs() - self.sup_bound - e);
            }
        }
        worst
    }
}

/// `u(·, t) = e^{λ₀ t} φ^{-1} e^{-tA}(φ u₀)` on the domain of `a`.
///
/// With `(λ₀, φ)` the lowest eigenpair of `a` the evolution is Markov, so
/// `|u| <= sup|u₀|` up to the series error.
pub fn solve_ivp(
    a: &SparseHermitian,
    phi: &VertexFunction,
    lambda0: f64,
    u0: &[f64],
    times: &[f64],
    err_budget: f64,
) -> Result<IvpSolution> {
    let n = a.dim();
    if phi.len() != n || u0.len() != n {
        return Err(Error::domain("φ, u₀ and the operator must share a domain"));
    }
    if let Some(v) = (0..n).find(|&v| !(phi[v].re > 0.0)) {
        return Err(Error::domain(format!("φ is not positive at vertex {v}")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::domain("time grid must be nonnegative and strictly increasing"));
    }
    let sup_bound = u0.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let seed: Vec<f64> = (0..n).map(|v| phi[v].re * u0[v]).collect();
    let seed = VertexFunction::from_real(&seed);
    let opts = HeatOptions::default();
    let mut u = Vec::with_capacity(times.len());
    let mut error = Vec::with_capacity(times.len());
    for &t in times {
        let out = evolve(a, &HeatRequest::series(t, err_budget)?, &seed, &opts)?;
        let grow = (lambda0 * t).exp();
        u.push((0..n).map(|v| grow * out.values[v].re / phi[v].re).collect());
        error.push((0..n).map(|v| grow * out.method_error / phi[v].re + 1e-12 * sup_bound).collect());
    }
    Ok(IvpSolution {
        times: times.to_vec(),
        u,
        error,
        sup_bound,
    })
}

/// `|e^{λ₀ t} (e^{-tA} φ)(x) - φ(x)|` and its error allowance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub t: f64,
    pub residual: f64,
    /// `e^{λ₀ t}` times the certified heat error at `x`.
    pub heat_error: f64,
    /// Bias from using `λ₀` in place of the reference value `λ_ref`, `(e^{(λ₀-λ_ref)t} - 1) φ(x)`.
    pub lambda_bias: f64,
}

impl CompletenessReport {
    pub fn combined_error(&self) -> f64 {
        self.heat_error + self.lambda_bias
    }
}

/// Completeness residual of `(λ₀, φ)` evaluated with the operator `a`,
/// typically a larger truncation than the one `φ` came from.
pub fn completeness_residual(
    a: &SparseHermitian,
    phi: &VertexFunction,
    lambda0: f64,
    lambda_ref: f64,
    t: f64,
    x: usize,
    err_budget: f64,
) -> Result<CompletenessReport> {
    if phi.len() > a.dim() {
        return Err(Error::domain("φ lives on a larger domain than the operator"));
    }
    if x >= phi.len() {
        return Err(Error::domain(format!("vertex {x} outside the domain of φ")));
    }
    let mut ext = VertexFunction::zeros(a.dim());
    ext.values_mut()[..phi.len()].copy_from_slice(phi.values());
    let out = evolve(a, &HeatRequest::series(t, err_budget)?, &ext, &HeatOptions::default())?;
    let grow = (lambda0 * t).exp();
    Ok(CompletenessReport {
        t,
        residual: (grow * out.values[x].re - phi[x].re).abs(),
        heat_error: grow * out.certified_error(x),
        lambda_bias: (((lambda0 - lambda_ref) * t).exp() - 1.0).abs() * phi[x].re,
    })
}

/// Radial ground state of a free group evaluated on a larger quotient.
pub fn radial_evaluation_operator(result: &GroundStateResult, radius: usize) -> Result<SparseHermitian> {
    match result.representation {
        Representation::Radial { valence } => truncation_operator(&RadialTree::new(valence, radius)?),
        Representation::Ball => Err(Error::domain("ground state is not radial")),
    }
}

/// Outcome of [`parabolic_max_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParabolicReport {
    /// `max (Lu + ∂u/∂t)` over interior vertices and times after the first.
    pub max_supersolution_defect: f64,
    pub interior_max: f64,
    pub parabolic_boundary_max: f64,
}

impl ParabolicReport {
    pub fn precondition_holds(&self) -> bool {
        self.max_supersolution_defect < 0.0
    }

    /// Maximum attained on the parabolic boundary.
    pub fn holds(&self) -> bool {
        self.interior_max <= self.parabolic_boundary_max
    }
}

/// Parabolic maximum principle on `ball × {t_0, ..., t_J}` with step `h`.
///
/// `∂u/∂t` is the backward difference `(u_j - u_{j-1}) / h`. The parabolic
/// boundary is the initial slice together with the boundary vertices at all times.
pub fn parabolic_max_check(g: &BallGraph, phi: &VertexFunction, h: f64, u: &[Vec<f64>]) -> Result<ParabolicReport> {
    if !(h > 0.0) {
        return Err(Error::domain("time step must be positive"));
    }
    if u.is_empty() || u.iter().any(|s| s.len() != g.len()) {
        return Err(Error::domain("grid function must cover every vertex at every time"));
    }
    let mut defect = f64::NEG_INFINITY;
    let mut interior_max = f64::NEG_INFINITY;
    let mut boundary_max = u[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for (j, slice) in u.iter().enumerate() {
        let uj = VertexFunction::from_real(slice);
        let lu = doob_apply(g, phi, &uj)?;
        for x in 0..g.len() {
            if g.is_interior(x) {
                if j > 0 {
                    interior_max = interior_max.max(slice[x]);
                    defect = defect.max(lu[x].re + (slice[x] - u[j - 1][x]) / h);
                }
            } else {
                boundary_max = boundary_max.max(slice[x]);
            }
        }
    }
    Ok(ParabolicReport {
        max_supersolution_defect: defect,
        interior_max,
        parabolic_boundary_max: boundary_max,
    })
}

/// Random grid function with `Lu + ∂u/∂t <= -margin` on the interior.
///
/// Random values are shifted by a time-only constant, which `L` annihilates
/// and which can always be lowered enough to make the backward difference negative.
pub fn random_supersolution(
    g: &BallGraph,
    phi: &VertexFunction,
    h: f64,
    steps: usize,
    margin: f64,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    let mut u: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    u.push((0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect());
    for j in 1..=steps {
        let w: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lw = doob_apply(g, phi, &VertexFunction::from_real(&w))?;
        let worst = g
            .interior()
            .map(|x| lw[x].re + (w[x] - u[j - 1][x]) / h)
            .fold(f64::NEG_INFINITY, f64::max);
        let c = -h * (worst + margin);
        u.push(w.iter().map(|x| x + c.min(0.0)).collect());
    }
    Ok(u)
}

/// CSV `vertex,distance,phi` over the trusted region.
pub fn write_ground_state_csv(result: &GroundStateResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["vertex", "distance", "phi"])?;
    for (v, (p, d)) in result.phi.values().iter().zip(&result.depth).enumerate() {
        w.write_record(&[v.to_string(), d.to_string(), format!("{:e}", p.re)])?;
    }
    w.flush()?;
    Ok(())
}

/// Convergence history as JSON `[{radius, lambda, gap}]`.
pub fn history_json(result: &GroundStateResult) -> serde_json::Value {
    serde_json::Value::Array(
        result
            .history
            .iter()
            .map(|s| serde_json::json!({"radius": s.radius, "lambda": s.lambda, "gap": s.gap}))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::lowest_eigenpair;
    use crate::oracle::{kesten_tree, path_dirichlet_lowest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_exhaustion() {
        let res = ground_state_exhaustion(GroupSpec::free_abelian(1).unwrap(), 2, 50, 1e-3).unwrap();
        assert!((res.lambda0_estimate - path_dirichlet_lowest(50)).abs() < 1e-12);
        assert!(res.lambda0_estimate <= 0.002);
        assert!(res.strictly_decreasing());
        assert_eq!(res.phi[0].re, 1.0);
        // Dirichlet profile cos(πx / 2R); flat to 2% only near the root
        for (p, &d) in res.phi.values().iter().zip(&res.depth) {
            let expect = (std::f64::consts::PI * d as f64 / 100.0).cos();
            assert!((p.re - expect).abs() < 1e-8);
            if d <= 6 {
                assert!((p.re - 1.0).abs() < 0.02);
            }
        }
        assert!(growth_envelope_check(&res, 2));
        assert!(res.eigen_residual() < 1e-9);
    }

    #[test]
    fn tree_exhaustion_brackets_kesten() {
        let res = ground_state_exhaustion(GroupSpec::free_group(2).unwrap(), 2, 12, 0.1).unwrap();
        assert!(res.lambda0_estimate > kesten_tree(4));
        assert!(res.lambda0_estimate < kesten_tree(4) + 0.1);
        assert!(res.strictly_decreasing());
        assert!(growth_envelope_check(&res, 4));
        for w in res.phi.values().windows(2) {
            assert!(w[1].re / w[0].re >= 0.25 && w[1].re / w[0].re <= 4.0);
        }
    }

    #[test]
    fn small_radius_rejected() {
        assert!(ground_state_exhaustion(GroupSpec::free_abelian(1).unwrap(), 1, 5, 1e-3).is_err());
    }

    #[test]
    fn harnack_on_dirichlet_eigenfunctions() {
        for (spec, r) in [(GroupSpec::free_group(2).unwrap(), 5), (GroupSpec::free_abelian(1).unwrap(), 20)] {
            let g = build_ball(spec, r).unwrap();
            let pair = lowest_eigenpair(&dirichlet_matrix(&g, None).unwrap(), 1e-10).unwrap();
            let mut u = VertexFunction::zeros(g.len());
            u.values_mut()[..g.interior_len()].copy_from_slice(pair.vector.values());
            assert!(harnack_check(&g, &u).unwrap() <= 1e-12);
        }
        let g = build_ball(GroupSpec::free_abelian(1).unwrap(), 5).unwrap();
        let constant = VertexFunction::constant(g.len(), 1.0);
        assert!(matches!(harnack_check(&g, &constant), Err(Error::Precondition(_))));
    }

    #[test]
    fn doob_generator_basics() {
        let g = build_ball(GroupSpec::free_abelian(2).unwrap(), 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let phi = VertexFunction::from_real(&(0..g.len()).map(|_| rng.gen_range(0.5..2.0)).collect::<Vec<_>>());
        let one = doob_apply(&g, &phi, &VertexFunction::constant(g.len(), 3.0)).unwrap();
        assert!(one.sup_norm() < 1e-14);
        let u = VertexFunction::random_complex(g.len(), g.len(), &mut rng);
        let plain = doob_apply(&g, &VertexFunction::constant(g.len(), 1.0), &u).unwrap();
        let lap = apply_laplacian(&g, &u);
        for x in g.interior() {
            assert!((plain[x] - lap[x]).norm() < 1e-14);
        }
        let mut bad = phi.clone();
        bad[3] = C64::new(0.0, 0.0);
        assert!(doob_apply(&g, &bad, &u).is_err());
    }

    #[test]
    fn ivp_markov_bound_and_completeness() {
        let res = ground_state_exhaustion(GroupSpec::free_abelian(1).unwrap(), 2, 20, 1e-2).unwrap();
        let ones = vec![1.0; res.operator.dim()];
        let sol = solve_ivp(&res.operator, &res.phi_full, res.lambda0_estimate, &ones, &[0.0, 0.5, 1.0, 2.0], 1e-12).unwrap();
        for uj in &sol.u {
            assert!(uj.iter().all(|x| (x - 1.0).abs() < 1e-9));
        }
        assert!(sol.bound_excess() <= 0.0);
    }

    #[test]
    fn completeness_on_line_is_row_sum() {
        let g = build_ball(GroupSpec::free_abelian(1).unwrap(), 40).unwrap();
        let a = crate::magnetic::ball_operator(&g, None).unwrap();
        let phi = VertexFunction::constant(g.len(), 1.0);
        for t in [0.0, 1.0, 5.0] {
            let rep = completeness_residual(&a, &phi, 0.0, 0.0, t, 0, 1e-12).unwrap();
            assert!(rep.residual < 1e-10, "t={t}: {}", rep.residual);
            if t == 0.0 {
                assert_eq!(rep.residual, 0.0);
            }
        }
    }

    #[test]
    fn parabolic_principle_on_monotone_grid() {
        let g = build_ball(GroupSpec::free_abelian(1).unwrap(), 6).unwrap();
        let phi = VertexFunction::constant(g.len(), 1.0);
        let u: Vec<Vec<f64>> = (0..5).map(|j| vec![1.0 - 0.1 * j as f64; g.len()]).collect();
        let rep = parabolic_max_check(&g, &phi, 0.1, &u).unwrap();
        assert!(rep.precondition_holds());
        assert!(rep.holds());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let u = random_supersolution(&g, &phi, 0.05, 6, 1e-3, &mut rng).unwrap();
            let rep = parabolic_max_check(&g, &phi, 0.05, &u).unwrap();
            assert!(rep.precondition_holds() && rep.holds());
        }
    }

    #[test]
    fn exports() {
        let res = ground_state_exhaustion(GroupSpec::free_abelian(1).unwrap(), 2, 6, 1.0).unwrap();
        let mut buf = Vec::new();
        write_ground_state_csv(&res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "vertex,distance,phi");
        assert_eq!(history_json(&res).as_array().unwrap().len(), 5);
    }
}
