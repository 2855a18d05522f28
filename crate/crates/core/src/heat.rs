//! Heat semigroups `e^{-tA}` on truncations, with certified error bounds.
//!
//! Every result carries two error terms. The method error bounds the
//! distance to `e^{-tA_B} f` for the truncated operator `A_B`. The leakage
//! bounds the distance from `e^{-tA_B} f` to the semigroup of the infinite
//! graph. Leakage uses two estimates and keeps the smaller one per vertex:
//! the mass lost through the boundary by the unsigned semigroup, and the
//! Poisson probability that a uniformized walk makes enough jumps to leave
//! the ball. Both dominate the magnetic case as well, since the path
//! expansion of the magnetic difference is bounded term by term by the
//! unsigned one.

use std::io::Write;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::eigen::{eigen_decomposition, DenseEigen};
use crate::error::{Error, Result};
use crate::field::VertexFunction;
use crate::graph::BallGraph;
use crate::linalg::{conjugate_gradient, dot, norm, poisson_tail};
use crate::magnetic::{ball_operator, dirichlet_matrix, resolvent_solve, schrodinger_operator, Multiplier, Potential};
use crate::sparse::SparseHermitian;

/// Default threshold on `t * c` above which the series is refused.
pub const DEFAULT_SERIES_LIMIT: f64 = 700.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HeatMethod {
    Series,
    /// `(I + (t/n) A)^{-n}` with `n` a power of two.
    ResolventPower { steps: usize },
    /// Expansion in the `k` lowest eigenpairs.
    SpectralWindow { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRequest {
    pub t: f64,
    pub err_budget: f64,
    pub method: HeatMethod,
}

impl HeatRequest {
    pub fn new(t: f64, err_budget: f64, method: HeatMethod) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::domain("time must be finite and nonnegative"));
        }
        if !(err_budget > 0.0) {
            return Err(Error::domain("error budget must be positive"));
        }
        match method {
            HeatMethod::ResolventPower { steps } if !steps.is_power_of_two() => {
                return Err(Error::domain(format!("resolvent steps {steps} is not a power of two")))
            }
            HeatMethod::SpectralWindow { k: 0 } => {
                return Err(Error::domain("spectral window needs at least one eigenpair"))
            }
            _ => {}
        }
        Ok(HeatRequest { t, err_budget, method })
    }

    pub fn series(t: f64, err_budget: f64) -> Result<Self> {
        Self::new(t, err_budget, HeatMethod::Series)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeatOptions {
    /// Largest `t * c` for which the series is used.
    pub series_limit: f64,
    /// Relative residual for each resolvent solve.
    pub cg_tol: f64,
}

impl Default for HeatOptions {
    fn default() -> Self {
        HeatOptions {
            series_limit: DEFAULT_SERIES_LIMIT,
            cg_tol: 1e-14,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HeatOutput {
    pub values: VertexFunction,
    /// Sup-norm bound on the distance to the truncated semigroup.
    pub method_error: f64,
    /// Per-vertex bound on the distance from the truncated to the infinite semigroup.
    pub leakage: Vec<f64>,
}

impl HeatOutput {
    pub fn certified_error(&self, v: usize) -> f64 {
        self.method_error + self.leakage[v]
    }

    pub fn max_certified_error(&self) -> f64 {
        self.method_error + self.leakage.iter().copied().fold(0.0, f64::max)
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|i| (i as f64).ln()).sum()
}

/// `e^{tc} (tc)^{n+1} / (n+1)!`, the tail bound used to size truncations.
pub fn factorial_tail_bound(t: f64, c: f64, n: usize) -> f64 {
    let x = t * c;
    if x == 0.0 {
        return 0.0;
    }
    (x + (n + 1) as f64 * x.ln() - ln_factorial(n + 1)).exp()
}

/// Smallest `N` with `e^{tc} (tc)^{N+1} / (N+1)! < err`.
pub fn truncation_radius(t: f64, c: f64, err: f64) -> Result<usize> {
    if !(t >= 0.0) || !(c >= 0.0) {
        return Err(Error::domain("time and norm bound must be nonnegative"));
    }
    if !(err > 0.0) {
        return Err(Error::domain("error must be positive"));
    }
    const MAX_RADIUS: usize = 100_000;
    (0..=MAX_RADIUS)
        .find(|&n| factorial_tail_bound(t, c, n) < err)
        .ok_or_else(|| Error::Resource {
            what: "series truncation radius".into(),
            cap: MAX_RADIUS,
            hint: "use the spectral_window method for long times".into(),
        })
}

/// Smallest radius `R` with `P(Poisson(t m) > R) < err`, the leakage of a
/// point mass at the root of a ball in a graph of valence `m`.
pub fn leakage_radius(valence: usize, t: f64, err: f64) -> usize {
    let mut r = 0;
    while poisson_tail(t * valence as f64, r) >= err {
        r += 1;
    }
    r
}

/// [`truncation_radius`] for a concrete group, checked against the vertex cap.
pub fn truncation_radius_for(spec: crate::graph::GroupSpec, t: f64, err: f64, vertex_cap: usize) -> Result<usize> {
    let m = spec.generator_count() as f64;
    let n = truncation_radius(t, 2.0 * m, err)?;
    let vols = crate::graph::ball_volumes(spec, n, vertex_cap);
    if vols.len() <= n {
        return Err(Error::Resource {
            what: format!("ball of radius {n} in {}", spec.describe()),
            cap: vertex_cap,
            hint: "use the spectral_window method".into(),
        });
    }
    Ok(n)
}

/// Shift `s` (largest diagonal) and row-sum bound `b` of `|sI - A|`.
///
/// With truncation data the bound also covers the rows of the ambient
/// operator, whose off-diagonal entries have unit modulus.
fn uniformization(a: &SparseHermitian) -> (f64, f64) {
    let n = a.dim();
    let s = (0..n).map(|i| a.diag(i)).fold(f64::NEG_INFINITY, f64::max);
    let mut b: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for i in 0..n {
        let off: f64 = a.row(i).filter(|e| e.0 != i).map(|e| e.1.norm()).sum();
        let d = (s - a.diag(i)).abs();
        spread = spread.max(d);
        b = b.max(d + off);
    }
    if let Some(info) = a.truncation() {
        b = b.max(spread + info.valence_bound as f64);
    }
    (s, b)
}

fn sup(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Sums `e^{-ts} Σ t^n B^n f / n!` with `B = sI - A` until the remainder
/// bound drops below `target`. Returns the value and its error bound.
fn series_apply(a: &SparseHermitian, s: f64, b: f64, t: f64, f: &[C64], target: f64) -> (Vec<C64>, f64) {
    let fnorm = sup(f);
    if t == 0.0 || fnorm == 0.0 {
        return (f.to_vec(), 0.0);
    }
    let n = a.dim();
    let pref = (t * (b - s)).exp();
    let max_terms = (t * b + 60.0 * (t * b).sqrt() + 200.0) as usize;
    let mut term = f.to_vec();
    let mut sum = f.to_vec();
    let mut next = vec![C64::new(0.0, 0.0); n];
    let mut k = 0;
    let mut tail = pref * poisson_tail(t * b, 0) * fnorm;
    while tail > target && k < max_terms {
        a.apply(&term, &mut next);
        let c = t / (k + 1) as f64;
        for i in 0..n {
            next[i] = (term[i] * s - next[i]) * c;
        }
        std::mem::swap(&mut term, &mut next);
        for i in 0..n {
            sum[i] += term[i];
        }
        k += 1;
        tail = pref * poisson_tail(t * b, k) * fnorm;
    }
    let scale = (-t * s).exp();
    sum.iter_mut().for_each(|z| *z *= scale);
    // each partial sum is bounded by e^{tb}|f|, so rounding stays at this level
    let rounding = 4.0 * (k + 1) as f64 * f64::EPSILON * pref * fnorm;
    (sum, tail + rounding)
}

/// Per-vertex leakage `min(D(x), J(x))` of the truncated semigroup.
fn leakage_profile(a: &SparseHermitian, t: f64, with_mass_deficit: bool) -> Vec<f64> {
    let Some(info) = a.truncation() else {
        return vec![0.0; a.dim()];
    };
    let n = a.dim();
    let (s, b) = uniformization(a);
    let pref = (t * (b - s)).exp();
    let mut leak: Vec<f64> = (0..n)
        .map(|v| {
            let jumps = info.radius.saturating_sub(info.depth[v] as usize);
            pref * poisson_tail(t * b, jumps)
        })
        .collect();
    if with_mass_deficit && t > 0.0 {
        let m = info.valence_bound as f64;
        let potential: Vec<f64> = (0..n).map(|v| a.diag(v) - m).collect();
        let min_pot = potential.iter().copied().fold(f64::INFINITY, f64::min);
        let mut unsigned = a.comparison_operator();
        if potential.iter().any(|&p| p != 0.0) {
            let neg: Vec<f64> = potential.iter().map(|p| -p).collect();
            unsigned = unsigned.plus_diagonal(&neg).expect("same dimension");
        }
        let (us, ub) = uniformization(&unsigned);
        let ones = vec![C64::new(1.0, 0.0); n];
        let (kept, err) = series_apply(&unsigned, us, ub, t, &ones, 1e-17);
        let damp = (-t * min_pot).exp();
        for v in 0..n {
            let deficit = damp * ((1.0 - kept[v].re).max(0.0) + err);
            leak[v] = leak[v].min(deficit);
        }
    }
    leak
}

/// Leakage at each vertex for inputs of unit sup norm, from the jump count to the boundary.
pub fn leakage_bound(a: &SparseHermitian, t: f64) -> Vec<f64> {
    leakage_profile(a, t, false)
}

fn pointwise_leak(a: &SparseHermitian, leak: &[f64], f: &[C64]) -> Vec<f64> {
    let fnorm = sup(f);
    let spread: f64 = f
        .iter()
        .enumerate()
        .map(|(x, z)| a.weight(x) * z.norm() * leak[x])
        .sum();
    leak.iter().map(|&l| (fnorm * l).min(spread)).collect()
}

/// Sup over `x in [lo, hi]` of `|(1 + x/n)^{-n} - e^{-x}|`.
pub fn resolvent_power_error(steps: usize, lo: f64, hi: f64) -> f64 {
    let n = steps as f64;
    let g = |x: f64| ((1.0 + x / n).powf(-n) - (-x).exp()).abs();
    let samples = 4096;
    let mut best = g(lo).max(g(hi));
    let mut arg = lo;
    // the difference peaks near x = 2, so sample uniformly there and geometrically beyond
    let cut = hi.min(50.0);
    for i in 0..=samples {
        let x = lo + (cut - lo).max(0.0) * i as f64 / samples as f64;
        if g(x) > best {
            best = g(x);
            arg = x;
        }
    }
    if hi > cut {
        let ratio = (hi / cut).ln();
        for i in 0..=samples {
            let x = cut * (ratio * i as f64 / samples as f64).exp();
            if g(x) > best {
                best = g(x);
                arg = x;
            }
        }
    }
    let h = (hi - lo).max(1e-12) / samples as f64;
    let (mut a, mut b) = ((arg - h).max(lo), (arg + h).min(hi));
    for _ in 0..60 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if g(m1) < g(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    best.max(g(0.5 * (a + b))) * 1.01
}

/// Lowest eigenpairs of a fixed operator, reused across times.
#[derive(Clone, Debug)]
pub struct SpectralWindow {
    op: SparseHermitian,
    eig: DenseEigen,
}

/// Diagonal kernel entry from a spectral window, times `e^{shift * t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowDiagonal {
    pub value: f64,
    pub remainder: f64,
    pub shift: f64,
    pub t: f64,
}

impl SpectralWindow {
    pub fn new(op: &SparseHermitian) -> Result<Self> {
        Ok(SpectralWindow {
            op: op.clone(),
            eig: eigen_decomposition(op)?,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn operator(&self) -> &SparseHermitian {
        &self.op
    }

    /// `e^{-tA} f` from the `k` lowest eigenpairs and a per-vertex remainder bound.
    pub fn apply(&self, t: f64, k: usize, f: &[C64]) -> (Vec<C64>, Vec<f64>) {
        let n = self.op.dim();
        let k = k.min(n);
        let w = self.op.weights();
        let mut out = vec![C64::new(0.0, 0.0); n];
        let mut proj = f.to_vec();
        for i in 0..k {
            let col: Vec<C64> = self.eig.vectors.column(i).iter().copied().collect();
            let c = dot(w, &col, f);
            let e = (-t * self.eig.values[i]).exp();
            for v in 0..n {
                out[v] += col[v] * c * e;
                proj[v] -= col[v] * c;
            }
        }
        let rest = if k == n {
            0.0
        } else {
            (-t * self.eig.values[k]).exp() * norm(w, &proj)
        };
        let rem = (0..n).map(|v| rest / self.op.weight(v).sqrt()).collect();
        (out, rem)
    }

    /// `Σ_{i<k} e^{-(λ_i - shift) t} |ψ_i(x)|^2 w(x)` and the bound on the omitted terms.
    pub fn diagonal(&self, x: usize, t: f64, k: usize, shift: f64) -> WindowDiagonal {
        let n = self.op.dim();
        let k = k.min(n);
        let wx = self.op.weight(x);
        let mut value = 0.0;
        let mut mass = 0.0;
        for i in 0..k {
            let a = self.eig.vectors[(x, i)].norm_sqr() * wx;
            value += (-(self.eig.values[i] - shift) * t).exp() * a;
            mass += a;
        }
        let remainder = if k == n {
            0.0
        } else {
            (-(self.eig.values[k] - shift) * t).exp() * (1.0 - mass).max(0.0)
        };
        WindowDiagonal {
            value,
            remainder,
            shift,
            t,
        }
    }
}

/// `e^{-tA} f` without a budget check.
pub fn evolve(a: &SparseHermitian, req: &HeatRequest, f: &VertexFunction, opts: &HeatOptions) -> Result<HeatOutput> {
    if f.len() != a.dim() {
        return Err(Error::domain("function and operator dimensions differ"));
    }
    let t = req.t;
    let target = 0.01 * req.err_budget;
    match req.method {
        HeatMethod::Series => {
            let (s, b) = uniformization(a);
            let c = a.truncation().map_or(b, |i| 2.0 * i.valence_bound as f64);
            if t * c > opts.series_limit {
                return Err(Error::precondition(format!(
                    "t * c = {:.1} exceeds the series limit {}; use the spectral_window method",
                    t * c,
                    opts.series_limit
                )));
            }
            let (vals, err) = series_apply(a, s, b, t, f.values(), target);
            let leak = leakage_profile(a, t, true);
            Ok(HeatOutput {
                leakage: pointwise_leak(a, &leak, f.values()),
                values: vals.into(),
                method_error: err,
            })
        }
        HeatMethod::ResolventPower { steps } => {
            let (lo, hi) = a.gershgorin();
            let h = t / steps as f64;
            if 1.0 + h * lo <= 0.0 {
                return Err(Error::precondition("I + (t/n)A is not positive definite"));
            }
            let mut x = f.values().to_vec();
            let mut next = x.clone();
            let mut cg_err = 0.0;
            for _ in 0..steps {
                let rep = conjugate_gradient(
                    |p, q| {
                        a.apply(p, q);
                        for (qi, pi) in q.iter_mut().zip(p) {
                            *qi = *qi * h + pi;
                        }
                    },
                    &x,
                    &mut next,
                    a.weights(),
                    opts.cg_tol,
                    10 * a.dim() + 1000,
                );
                // |error| <= |A_h^{-1}| |residual| and |A_h^{-1}| <= 1 / (1 + h lo)
                cg_err = cg_err / (1.0 + h * lo.max(0.0)) + rep.residual * norm(a.weights(), &x) / (1.0 + h * lo);
                std::mem::swap(&mut x, &mut next);
                next.clone_from(&x);
            }
            let fnorm2 = norm(a.weights(), f.values());
            let method = resolvent_power_error(steps, t * lo, t * hi) * fnorm2;
            let leak = leakage_profile(a, t, false);
            Ok(HeatOutput {
                leakage: pointwise_leak(a, &leak, f.values()),
                values: x.into(),
                method_error: method + cg_err,
            })
        }
        HeatMethod::SpectralWindow { k } => {
            let w = SpectralWindow::new(a)?;
            let (vals, rem) = w.apply(t, k, f.values());
            let leak = leakage_profile(a, t, false);
            let rounding = 1e-13 * sup(f.values()).max(norm(a.weights(), f.values()));
            Ok(HeatOutput {
                leakage: pointwise_leak(a, &leak, f.values()),
                values: vals.into(),
                method_error: rem.iter().copied().fold(0.0, f64::max) + rounding,
            })
        }
    }
}

/// Radius that would bring the leakage at depth `<= R/2` under `budget`.
fn required_radius(a: &SparseHermitian, t: f64, fnorm: f64, budget: f64) -> usize {
    let (s, b) = uniformization(a);
    let pref = (t * (b - s)).exp();
    let mut n = 0;
    while pref * poisson_tail(t * b, n) * fnorm > 0.5 * budget && n < 1_000_000 {
        n += 1;
    }
    2 * n
}

/// `e^{-tA} f`, failing when the certified error on the inner half of the
/// truncation exceeds the budget.
pub fn heat_apply_on(a: &SparseHermitian, req: &HeatRequest, f: &VertexFunction, opts: &HeatOptions) -> Result<HeatOutput> {
    let out = evolve(a, req, f, opts)?;
    let inner = |v: usize| {
        a.truncation()
            .is_none_or(|i| 2 * i.depth[v] as usize <= i.radius)
    };
    let worst = (0..a.dim())
        .filter(|&v| inner(v))
        .map(|v| out.certified_error(v))
        .fold(0.0, f64::max);
    if worst > req.err_budget {
        let current = a.truncation().map_or(0, |i| i.radius);
        return Err(Error::Budget {
            budget: req.err_budget,
            certified: worst,
            required_radius: required_radius(a, req.t, f.sup_norm(), req.err_budget).max(current + 1),
        });
    }
    Ok(out)
}

/// `e^{-tΔ_σ} f` on a ball, with the infinite-graph error certified on its inner half.
pub fn heat_apply(g: &BallGraph, sigma: Option<&Multiplier>, req: &HeatRequest, f: &VertexFunction) -> Result<HeatOutput> {
    let a = ball_operator(g, sigma)?;
    heat_apply_on(&a, req, f, &HeatOptions::default())
}

/// Row `y -> p_t(x, y)` of the heat kernel.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelSlice {
    pub center: usize,
    pub t: f64,
    pub values: Vec<C64>,
    pub certified_error: Vec<f64>,
    /// True when the multiplier is trivial, so the kernel is real and nonnegative.
    pub real_kernel: bool,
}

impl KernelSlice {
    pub fn from_output(center: usize, t: f64, out: &HeatOutput, real_kernel: bool) -> Self {
        KernelSlice {
            center,
            t,
            certified_error: (0..out.values.len()).map(|v| out.certified_error(v)).collect(),
            values: out.values.values().to_vec(),
            real_kernel,
        }
    }

    pub fn get(&self, y: usize) -> C64 {
        self.values[y]
    }

    pub fn max_certified_error(&self) -> f64 {
        self.certified_error.iter().copied().fold(0.0, f64::max)
    }

    /// Enclosure of a real kernel entry; entries below their error become `[0, err]`.
    pub fn interval(&self, y: usize) -> Option<(f64, f64)> {
        if !self.real_kernel {
            return None;
        }
        let (p, e) = (self.values[y].re, self.certified_error[y]);
        if p.abs() < e {
            Some((0.0, e))
        } else {
            Some(((p - e).max(0.0), p + e))
        }
    }
}

pub fn kernel_slice(g: &BallGraph, sigma: Option<&Multiplier>, x: usize, t: f64, err: f64) -> Result<KernelSlice> {
    if x >= g.len() {
        return Err(Error::domain(format!("vertex {x} not in the ball")));
    }
    let req = HeatRequest::series(t, err)?;
    let out = heat_apply(g, sigma, &req, &VertexFunction::delta(g.len(), x))?;
    let real = sigma.is_none_or(Multiplier::is_trivial);
    Ok(KernelSlice::from_output(x, t, &out, real))
}

/// CSV with header `t,x,y,re,im,certified_error`.
pub fn write_kernel_csv(slices: &[KernelSlice], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "re", "im", "certified_error"])?;
    for s in slices {
        for (y, z) in s.values.iter().enumerate() {
            w.write_record(&[
                format!("{:e}", s.t),
                s.center.to_string(),
                y.to_string(),
                format!("{:e}", z.re),
                format!("{:e}", z.im),
                format!("{:e}", s.certified_error[y]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pointwise `|e^{-tΔ_σ} f|` against `e^{-tΔ}|f|` on the same ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationReport {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Combined method error of both evaluations.
    pub error: f64,
}

impl DominationReport {
    /// `max(lhs - rhs)`; the domination contract is `max_excess <= 2 * budget`.
    pub fn max_excess(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .map(|(l, r)| l - r)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn domination_check(
    g: &BallGraph,
    sigma: &Multiplier,
    t: f64,
    f: &VertexFunction,
    err_budget: f64,
) -> Result<DominationReport> {
    let req = HeatRequest::series(t, err_budget)?;
    let opts = HeatOptions::default();
    let mag = evolve(&ball_operator(g, Some(sigma))?, &req, f, &opts)?;
    let plain = evolve(&ball_operator(g, None)?, &req, &f.abs(), &opts)?;
    Ok(DominationReport {
        lhs: mag.values.values().iter().map(|z| z.norm()).collect(),
        rhs: plain.values.re(),
        error: mag.method_error + plain.method_error,
    })
}

/// Pointwise `|(Δ_σ + λ)^{-1} f|` against `(Δ + λ)^{-1}|f|` on a ball.
pub fn resolvent_domination(
    g: &BallGraph,
    sigma: &Multiplier,
    lambda: f64,
    f: &VertexFunction,
    tol: f64,
) -> Result<DominationReport> {
    if !(lambda > 0.0) {
        return Err(Error::domain("resolvent parameter must be positive"));
    }
    let (m, _) = resolvent_solve(&ball_operator(g, Some(sigma))?, lambda, f, tol)?;
    let (p, _) = resolvent_solve(&ball_operator(g, None)?, lambda, &f.abs(), tol)?;
    Ok(DominationReport {
        lhs: m.values().iter().map(|z| z.norm()).collect(),
        rhs: p.re(),
        error: 2.0 * tol * f.sup_norm() * (g.len() as f64).sqrt() / lambda,
    })
}

/// `|(e^{-tΔ_σ} f, h)|` and `(e^{-tΔ}|f|, |h|)`.
pub fn bilinear_domination(
    g: &BallGraph,
    sigma: &Multiplier,
    t: f64,
    f: &VertexFunction,
    h: &VertexFunction,
    err_budget: f64,
) -> Result<(f64, f64, f64)> {
    let req = HeatRequest::series(t, err_budget)?;
    let opts = HeatOptions::default();
    let mag = evolve(&ball_operator(g, Some(sigma))?, &req, f, &opts)?;
    let plain = evolve(&ball_operator(g, None)?, &req, &f.abs(), &opts)?;
    let lhs = dot(None, h.values(), mag.values.values()).norm();
    let rhs: f64 = plain.values.values().iter().zip(h.values()).map(|(r, z)| r.re * z.norm()).sum();
    let h1: f64 = h.values().iter().map(|z| z.norm()).sum();
    Ok((lhs, rhs, (mag.method_error + plain.method_error) * h1))
}

/// Diagonal heat-kernel entry at the root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatTrace {
    pub t: f64,
    pub value: f64,
    pub certified_error: f64,
}

/// `(e^{-t(Δ_σ + T)} δ_root)(root)`.
///
/// Requires `T >= -λ0`; `allow_below` skips that check for exploratory runs.
pub fn schrodinger_heat_trace(
    base: &SparseHermitian,
    potential: &Potential,
    lambda0: f64,
    t: f64,
    err: f64,
    allow_below: bool,
) -> Result<HeatTrace> {
    if potential.lower_bound < -lambda0 && !allow_below {
        return Err(Error::precondition(format!(
            "potential lower bound {} is below -λ0 = {}",
            potential.lower_bound, -lambda0
        )));
    }
    let op = schrodinger_operator(base, potential)?;
    let root = op.root();
    let req = HeatRequest::series(t, err)?;
    let out = heat_apply_on(&op, &req, &VertexFunction::delta(op.dim(), root), &HeatOptions::default())?;
    Ok(HeatTrace {
        t,
        value: out.values[root].re,
        certified_error: out.certified_error(root),
    })
}

/// `e^{λ_1 t} p_t(x, x)` on the Dirichlet problem of a ball, from its `k` lowest eigenpairs.
pub fn spectral_window_diagonal(
    g: &BallGraph,
    sigma: Option<&Multiplier>,
    x: usize,
    t: f64,
    k: usize,
) -> Result<WindowDiagonal> {
    let a = dirichlet_matrix(g, sigma)?;
    if x >= a.dim() {
        return Err(Error::domain(format!("vertex {x} is not interior")));
    }
    let w = SpectralWindow::new(&a)?;
    let shift = w.eigenvalues()[0];
    Ok(w.diagonal(x, t, k, shift))
}
