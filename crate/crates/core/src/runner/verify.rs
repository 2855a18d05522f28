//! The invariant suite behind the `verify` experiment kind.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eigen::{lowest_eigenpair, spectrum};
use crate::error::Result;
use crate::field::VertexFunction;
use crate::graph::{build_ball, BallGraph, GroupKind, GroupSpec};
use crate::ground_state::{ground_state_exhaustion, growth_envelope_check, harnack_check};
use crate::heat::{domination_check, kernel_slice, leakage_radius};
use crate::magnetic::{
    ball_operator, dirichlet_matrix, gauge_transform, harper_multiplier, kato_defect, resolvent_solve, Flux, Multiplier,
};
use crate::oracle::bessel_zd;
use crate::spectral::{ball_theta, theta};

use super::config::ExperimentConfig;

/// One line of the verification table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    /// Name of the result being tested.
    pub cites: &'static str,
    pub check: String,
    pub tolerance: f64,
    /// Worst observed value of the checked quantity.
    pub value: f64,
    pub pass: bool,
}

struct Setup {
    spec: GroupSpec,
    radius: usize,
    times: Vec<f64>,
    trials: usize,
    seed: u64,
    budget: f64,
    slack: f64,
    fluxes: Vec<Flux>,
}

impl Setup {
    fn ball(&self) -> Result<BallGraph> {
        build_ball(self.spec, self.radius)
    }

    /// Ball large enough to certify a root kernel at time `t`.
    fn kernel_ball(&self, t: f64) -> Result<BallGraph> {
        let r = leakage_radius(self.spec.generator_count(), t, 0.25 * self.budget).max(self.radius);
        build_ball(self.spec, r)
    }

    /// Harper multipliers of the configured fluxes, or random ones off `Z^2`.
    fn multipliers(&self, g: &BallGraph) -> Result<Vec<(String, Multiplier)>> {
        if self.spec.kind() == (GroupKind::FreeAbelian { rank: 2 }) && !self.fluxes.is_empty() {
            self.fluxes
                .iter()
                .map(|&f| Ok((format!("flux {}", f.value()), harper_multiplier(g, f)?)))
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5157);
            Ok((0..2).map(|i| (format!("random σ #{i}"), Multiplier::random(g, &mut rng))).collect())
        }
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9).wrapping_add(salt))
    }
}

fn row(cites: &'static str, check: impl Into<String>, tolerance: f64, value: f64, pass: bool) -> VerifyRow {
    VerifyRow {
        cites,
        check: check.into(),
        tolerance,
        value,
        pass,
    }
}

fn kato(s: &Setup) -> Result<VerifyRow> {
    let g = s.ball()?;
    let mut rng = s.rng(1);
    let mut worst = f64::INFINITY;
    for (_, sigma) in s.multipliers(&g)? {
        for _ in 0..s.trials {
            let f = VertexFunction::random_complex(g.len(), g.len(), &mut rng);
            let d = kato_defect(&g, &sigma, &f)?;
            worst = worst.min(g.interior().map(|v| d[v]).fold(f64::INFINITY, f64::min));
        }
    }
    Ok(row("Kato inequality", "min interior Re(Δ_σ f · conj f) - |f| Δ|f|", 1e-12, worst, worst >= -1e-12))
}

fn positivity(s: &Setup) -> Result<VerifyRow> {
    let g = s.ball()?;
    let a = ball_operator(&g, None)?;
    let mut rng = s.rng(2);
    let mut worst = f64::INFINITY;
    for _ in 0..s.trials {
        let lambda = rng.gen_range(0.01..10.0);
        let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (u, _) = resolvent_solve(&a, lambda, &VertexFunction::from_real(&f), 1e-14)?;
        worst = worst.min(u.re().into_iter().fold(f64::INFINITY, f64::min));
    }
    Ok(row("Positivity of the resolvent", "min entry of (Δ + λ)^{-1} f for f >= 0", 1e-12, worst, worst >= -1e-12))
}

fn domination(s: &Setup) -> Result<VerifyRow> {
    let g = s.ball()?;
    let mut rng = s.rng(3);
    let mut worst = f64::NEG_INFINITY;
    let inner = g.inner_ball(s.radius / 2);
    for (_, sigma) in s.multipliers(&g)? {
        for &t in &s.times {
            for _ in 0..s.trials {
                let f = VertexFunction::random_complex(g.len(), inner.end, &mut rng);
                let rep = domination_check(&g, &sigma, t, &f, s.budget)?;
                worst = worst.max(rep.max_excess());
            }
        }
    }
    let tol = 2.0 * s.budget;
    Ok(row("Semigroup domination", "max |e^{-tΔ_σ} f| - e^{-tΔ}|f|", tol, worst, worst <= tol))
}

fn diagonal_domination(s: &Setup) -> Result<VerifyRow> {
    let mut worst = f64::NEG_INFINITY;
    for &t in &s.times {
        let g = s.kernel_ball(t)?;
        for (_, sigma) in s.multipliers(&g)? {
            let m = kernel_slice(&g, Some(&sigma), 0, t, s.budget)?;
            let p = kernel_slice(&g, None, 0, t, s.budget)?;
            worst = worst.max(m.get(0).norm() - p.get(0).re);
        }
    }
    let tol = 2.0 * s.budget;
    Ok(row("Semigroup domination", "max p^σ_t(v,v) - p_t(v,v)", tol, worst, worst <= tol))
}

fn bottom_comparison(s: &Setup) -> Result<VerifyRow> {
    let g = s.ball()?;
    let plain = lowest_eigenpair(&dirichlet_matrix(&g, None)?, 1e-12)?.value;
    let mut worst = f64::INFINITY;
    for (_, sigma) in s.multipliers(&g)? {
        let mag = lowest_eigenpair(&dirichlet_matrix(&g, Some(&sigma))?, 1e-12)?.value;
        worst = worst.min(mag - plain);
    }
    Ok(row("Comparison of spectral bottoms", "min λ0(Δ_σ) - λ0(Δ) on a Dirichlet ball", s.slack, worst, worst >= -s.slack))
}

fn theta_domination(s: &Setup) -> Result<VerifyRow> {
    if s.spec.kind() != (GroupKind::FreeAbelian { rank: 2 }) || s.fluxes.is_empty() {
        let g = s.ball()?;
        let mut worst = f64::NEG_INFINITY;
        for (_, sigma) in s.multipliers(&g)? {
            for &t in &s.times {
                let m = ball_theta(&g, Some(&sigma), t, s.budget)?;
                let p = ball_theta(&g, None, t, s.budget)?;
                worst = worst.max(m.value - p.value - m.certified_error - p.certified_error);
            }
        }
        return Ok(row("Theta domination", "max θ_σ(t) - θ_0(t) minus errors, on a ball", 0.0, worst, worst <= 0.0));
    }
    let plain = theta(s.spec, None, &s.times, s.budget)?;
    let mut worst = f64::NEG_INFINITY;
    for &f in &s.fluxes {
        let mag = theta(s.spec, Some(f), &s.times, s.budget)?;
        for (m, p) in mag.samples.iter().zip(&plain.samples) {
            worst = worst.max(m.value - p.value - 2.0 * (m.certified_error + p.certified_error));
        }
    }
    Ok(row("Theta domination", "max θ_σ(t) - θ_0(t) - 2 (errors)", 0.0, worst, worst <= 0.0))
}

fn gauge_invariance(s: &Setup) -> Result<VerifyRow> {
    let g = s.ball()?;
    let mut rng = s.rng(4);
    let mut worst: f64 = 0.0;
    for (_, sigma) in s.multipliers(&g)? {
        let base = spectrum(&dirichlet_matrix(&g, Some(&sigma))?)?;
        let t = s.times[0];
        let th = ball_theta(&g, Some(&sigma), t, s.budget)?.value;
        for _ in 0..s.trials.min(10) {
            let chi: Vec<C64> = (0..g.len()).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).collect();
            let moved = gauge_transform(&g, &sigma, &chi)?;
            let sp = spectrum(&dirichlet_matrix(&g, Some(&moved))?)?;
            let d = base.iter().zip(&sp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dt = (ball_theta(&g, Some(&moved), t, s.budget)?.value - th).abs();
            worst = worst.max(d).max(dt);
        }
    }
    Ok(row("Gauge invariance of the trace", "max change of Dirichlet spectrum and θ", 1e-10, worst, worst <= 1e-10))
}

fn heat_oracle(s: &Setup) -> Result<Option<VerifyRow>> {
    let GroupKind::FreeAbelian { rank } = s.spec.kind() else {
        return Ok(None);
    };
    let times: Vec<f64> = s.times.iter().copied().filter(|&t| t <= 5.0).collect();
    let series = theta(s.spec, None, &times, s.budget)?;
    let mut worst: f64 = 0.0;
    for smp in &series.samples {
        let o = bessel_zd(smp.t, &vec![0; rank], &vec![0; rank])?;
        worst = worst.max((smp.value - o).abs());
    }
    for &t in &times {
        let g = s.kernel_ball(t)?;
        let k = kernel_slice(&g, None, 0, t, s.budget)?;
        let o = bessel_zd(t, &vec![0; rank], &vec![0; rank])?;
        worst = worst.max((k.get(0).re - o).abs() - k.certified_error[0]);
    }
    Ok(Some(row("Heat kernel uniqueness", "max |p_t(0,0) - Bessel product|", 1e-8, worst, worst <= 1e-8)))
}

fn exhaustion(s: &Setup) -> Result<Vec<VerifyRow>> {
    let r_max = s.radius.max(4);
    let gs = ground_state_exhaustion(s.spec, 2, r_max, 1e-6)?;
    let mut rows = vec![row(
        "Ground state by exhaustion",
        "Dirichlet λ strictly decreasing in the radius",
        0.0,
        gs.lambdas().windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max),
        gs.strictly_decreasing(),
    )];
    let m = s.spec.generator_count();
    rows.push(row(
        "Ground state growth envelope",
        "M^{-d} <= φ <= M^d on the trusted region",
        0.0,
        0.0,
        growth_envelope_check(&gs, m),
    ));
    let g = build_ball(s.spec, gs.trusted_radius.max(1))?;
    let phi = gs.on_ball(&g)?;
    let h = harnack_check(&g, &phi)?;
    rows.push(row("Harnack inequality", "max violation of 1/m <= φ(y)/φ(x) <= m", 1e-12, h, h <= 1e-12));
    Ok(rows)
}

/// Runs every row in parallel; rows come back in a fixed order.
pub fn verify_suite(cfg: &ExperimentConfig) -> Result<Vec<VerifyRow>> {
    let times = if cfg.t_grid.is_empty() {
        vec![0.5, 1.0, 2.0, 5.0]
    } else {
        cfg.t_grid.clone()
    };
    let radius = cfg.radii.first().copied().unwrap_or(match cfg.group.kind() {
        GroupKind::FreeAbelian { rank: 1 } => 40,
        GroupKind::FreeAbelian { rank: 2 } => 12,
        _ => 5,
    });
    let setup = Setup {
        spec: cfg.group,
        radius,
        times,
        trials: cfg.params.trials.unwrap_or(20),
        seed: cfg.seed,
        budget: cfg.tolerances.err_budget,
        slack: cfg.tolerances.invariant,
        fluxes: cfg.fluxes.clone(),
    };
    type Job = fn(&Setup) -> Result<Vec<VerifyRow>>;
    let jobs: [Job; 9] = [
        |s| kato(s).map(|r| vec![r]),
        |s| positivity(s).map(|r| vec![r]),
        |s| domination(s).map(|r| vec![r]),
        |s| diagonal_domination(s).map(|r| vec![r]),
        |s| bottom_comparison(s).map(|r| vec![r]),
        |s| theta_domination(s).map(|r| vec![r]),
        |s| gauge_invariance(s).map(|r| vec![r]),
        |s| heat_oracle(s).map(|r| r.into_iter().collect()),
        exhaustion,
    ];
    let parts: Vec<Result<Vec<VerifyRow>>> = jobs.par_iter().map(|job| job(&setup)).collect();
    let mut rows = Vec::new();
    for p in parts {
        rows.extend(p?);
    }
    Ok(rows)
}

/// Plain-text table, one row per check.
pub fn format_table(rows: &[VerifyRow]) -> String {
    let mut out = format!("{:<32} {:<56} {:>10} {:>12}  {}\n", "result", "check", "tolerance", "value", "status");
    for r in rows {
        out.push_str(&format!(
            "{:<32} {:<56} {:>10.1e} {:>12.3e}  {}\n",
            r.cites,
            r.check,
            r.tolerance,
            r.value,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}
