//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process exits nonzero on any failure.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dml::eigen::{lowest_eigenpair, spectrum};
use dml::ground_state::{
    completeness_residual, doob_apply, ground_state_exhaustion, growth_envelope_check, harnack_check,
    parabolic_max_check, radial_evaluation_operator, random_supersolution, solve_ivp,
};
use dml::heat::{domination_check, evolve, kernel_slice, leakage_radius, HeatMethod, HeatOptions, HeatRequest};
use dml::magnetic::{
    ball_operator, dirichlet_matrix, gauge_transform, harper_multiplier, kato_defect, resolvent_solve,
};
use dml::oracle::{bessel_zd, green_logdet};
use dml::spectral::{
    ball_theta, geometric_grid, logdet_from_density, long_time_decay_check, ns_estimate, resolvent_riemann_sum,
    theta, DecayOutcome, DensityEstimate, TraceSites,
};
use dml::{build_ball, BallGraph, Flux, GroupSpec, Multiplier, Result, VertexFunction};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BUDGET: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn z(d: usize) -> GroupSpec {
    GroupSpec::free_abelian(d).unwrap()
}

fn f2() -> GroupSpec {
    GroupSpec::free_group(2).unwrap()
}

fn harper_fluxes() -> [Flux; 2] {
    [Flux::rational(1, 3).unwrap(), Flux::rational(1, 2).unwrap()]
}

fn test_balls() -> Result<Vec<BallGraph>> {
    Ok(vec![build_ball(z(1), 20)?, build_ball(z(2), 8)?, build_ball(f2(), 4)?])
}

fn kato() -> Result<Verdict> {
    let balls = test_balls()?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::INFINITY;
    for trial in 0..1000 {
        let g = &balls[trial % balls.len()];
        let sigma = Multiplier::random(g, &mut rng);
        let f = VertexFunction::random_complex(g.len(), g.len(), &mut rng);
        let d = kato_defect(g, &sigma, &f)?;
        worst = worst.min(g.interior().map(|v| d[v]).fold(f64::INFINITY, f64::min));
    }
    verdict(worst >= -1e-12, format!("1000 trials, min interior defect {worst:.3e}"))
}

fn positivity() -> Result<Verdict> {
    let ops = test_balls()?
        .iter()
        .map(|g| ball_operator(g, None))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::INFINITY;
    for trial in 0..500 {
        let a = &ops[trial % ops.len()];
        let lambda = rng.gen_range(0.01..10.0);
        let f: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (u, _) = resolvent_solve(a, lambda, &VertexFunction::from_real(&f), 1e-14)?;
        worst = worst.min(u.re().into_iter().fold(f64::INFINITY, f64::min));
    }
    verdict(worst >= -1e-12, format!("500 solves, min entry {worst:.3e}"))
}

fn domination() -> Result<Verdict> {
    let times = [0.5, 1.0, 2.0, 5.0];
    let g = build_ball(z(2), 12)?;
    let inner = g.inner_ball(6);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pointwise = f64::NEG_INFINITY;
    let mut diagonal = f64::NEG_INFINITY;
    for flux in harper_fluxes() {
        let sigma = harper_multiplier(&g, flux)?;
        for t in times {
            for _ in 0..20 {
                let f = VertexFunction::random_complex(g.len(), inner.end, &mut rng);
                pointwise = pointwise.max(domination_check(&g, &sigma, t, &f, BUDGET)?.max_excess());
            }
        }
    }
    for t in times {
        let big = build_ball(z(2), leakage_radius(4, t, 0.25 * BUDGET))?;
        let p = kernel_slice(&big, None, 0, t, BUDGET)?.get(0).re;
        for flux in harper_fluxes() {
            let sigma = harper_multiplier(&big, flux)?;
            let m = kernel_slice(&big, Some(&sigma), 0, t, BUDGET)?.get(0).norm();
            diagonal = diagonal.max(m - p);
        }
    }
    let tol = 2.0 * BUDGET;
    verdict(
        pointwise <= tol && diagonal <= tol,
        format!("max pointwise excess {pointwise:.3e}, max diagonal excess {diagonal:.3e}, tolerance {tol:.0e}"),
    )
}

fn bottoms() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::INFINITY;
    for g in test_balls()? {
        let plain = lowest_eigenpair(&dirichlet_matrix(&g, None)?, 1e-12)?.value;
        let mut sigmas: Vec<Multiplier> = (0..3).map(|_| Multiplier::random(&g, &mut rng)).collect();
        if g.spec() == z(2) {
            for flux in harper_fluxes() {
                sigmas.push(harper_multiplier(&g, flux)?);
            }
        }
        for s in &sigmas {
            worst = worst.min(lowest_eigenpair(&dirichlet_matrix(&g, Some(s))?, 1e-12)?.value - plain);
        }
    }
    let tree = ground_state_exhaustion(f2(), 2, 12, 1e-6)?.lambda0_estimate;
    let line = ground_state_exhaustion(z(1), 2, 50, 1e-6)?.lambda0_estimate;
    verdict(
        worst >= -1e-10 && (0.5359..=0.64).contains(&tree) && line <= 0.002,
        format!("min λ0(Δσ) - λ0(Δ) {worst:.3e}; F2 radius 12 λ0 {tree:.5}; Z radius 50 λ0 {line:.5}"),
    )
}

fn heat_exactness() -> Result<Verdict> {
    let mut oracle_gap: f64 = 0.0;
    for d in [1, 2] {
        for t in [0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0] {
            let g = build_ball(z(d), leakage_radius(2 * d, t, 0.25 * BUDGET))?;
            let k = kernel_slice(&g, None, 0, t, BUDGET)?;
            oracle_gap = oracle_gap.max((k.get(0).re - bessel_zd(t, &vec![0; d], &vec![0; d])?).abs());
        }
    }
    let g = build_ball(z(2), 12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = VertexFunction::random_complex(g.len(), g.inner_ball(4).end, &mut rng);
    let mut mismatch = f64::NEG_INFINITY;
    let opts = HeatOptions::default();
    for sigma in [None, Some(harper_multiplier(&g, harper_fluxes()[0])?)] {
        let a = ball_operator(&g, sigma.as_ref())?;
        for t in [0.5, 1.0, 2.0, 5.0] {
            let outs = [
                HeatMethod::Series,
                HeatMethod::ResolventPower { steps: 1024 },
                HeatMethod::SpectralWindow { k: a.dim() },
            ]
            .into_iter()
            .map(|m| evolve(&a, &HeatRequest::new(t, BUDGET, m)?, &f, &opts))
            .collect::<Result<Vec<_>>>()?;
            for i in 0..3 {
                for j in i + 1..3 {
                    let diff = (0..a.dim())
                        .map(|v| (outs[i].values[v] - outs[j].values[v]).norm())
                        .fold(0.0, f64::max);
                    mismatch = mismatch.max(diff - outs[i].method_error - outs[j].method_error);
                }
            }
        }
    }
    verdict(
        oracle_gap <= 1e-8 && mismatch <= 0.0,
        format!("max |p_t - Bessel| {oracle_gap:.2e}; max method disagreement beyond budgets {mismatch:.2e}"),
    )
}

fn novikov_shubin() -> Result<Verdict> {
    let grid = geometric_grid(50.0, 500.0, 12);
    let mut parts = Vec::new();
    let mut pass = true;
    for (d, expect) in [(1, 0.5), (2, 1.0)] {
        let est = ns_estimate(&theta(z(d), None, &grid, 1e-12)?, (50.0, 500.0))?;
        pass &= est.ok && (est.beta - expect).abs() <= 0.1 * expect;
        parts.push(format!("Z^{d} β {:.4}", est.beta));
    }
    for flux in harper_fluxes() {
        let est = ns_estimate(&theta(z(2), Some(flux), &grid, 1e-12)?, (50.0, 500.0))?;
        let growth = 2.0;
        pass &= est.beta >= growth / 2.0 - 0.1;
        parts.push(format!("Harper {} slope {:.1}", flux.value(), est.beta));
    }
    verdict(pass, parts.join("; "))
}

fn determinant() -> Result<Verdict> {
    let line = logdet_from_density(&DensityEstimate::bloch(z(1), None, 200_000)?, 1e-3)?.value;
    let plane = logdet_from_density(&DensityEstimate::bloch(z(2), None, 1024)?, 1e-3)?.value;
    let reference = green_logdet(2)?;
    let mut pass = line.abs() <= 0.02 && (plane - reference).abs() <= 0.02;

    let g = build_ball(z(2), 10)?;
    let plain = ball_operator(&g, None)?.scaled(0.125);
    let mut worst_order = f64::INFINITY;
    let mut worst_dom = f64::INFINITY;
    for flux in harper_fluxes() {
        let mag = ball_operator(&g, Some(&harper_multiplier(&g, flux)?))?.scaled(0.125);
        let mut prev = f64::NEG_INFINITY;
        for ell in 6..=12 {
            let p = resolvent_riemann_sum(&plain, ell, TraceSites::Root)?;
            let m = resolvent_riemann_sum(&mag, ell, TraceSites::Root)?;
            pass &= !p.flagged && !m.flagged;
            worst_order = worst_order.min(p.value - prev);
            worst_dom = worst_dom.min(p.value - m.value);
            prev = p.value;
        }
    }
    pass &= worst_order >= 0.0 && worst_dom >= 0.0;
    verdict(
        pass,
        format!(
            "ln det Z {line:.4}, Z^2 {plane:.5} (reference {reference:.5}); min S_ℓ step {worst_order:.2e}; min S(Δ) - S(Δσ) {worst_dom:.2e}"
        ),
    )
}

fn ground_state() -> Result<Verdict> {
    let mut pass = true;
    let mut notes = Vec::new();
    for (spec, r_max) in [(z(1), 50), (z(2), 12), (f2(), 12)] {
        let gs = ground_state_exhaustion(spec, 2, r_max, 1e-6)?;
        let m = spec.generator_count();
        let g = build_ball(spec, gs.trusted_radius)?;
        let phi = gs.on_ball(&g)?;
        let harnack = harnack_check(&g, &phi)?;
        let r = VertexFunction::from_real(&(0..g.len()).map(|v| g.dist_from_root(v) as f64).collect::<Vec<_>>());
        let lr = doob_apply(&g, &phi, &r)?;
        let lr_max = g.interior().map(|v| lr[v].norm()).fold(0.0, f64::max);
        let ok = gs.strictly_decreasing() && harnack <= 1e-12 && growth_envelope_check(&gs, m) && lr_max < (m * m) as f64;
        pass &= ok;
        notes.push(format!("{} harnack {harnack:.0e} |Lr| {lr_max:.2}", spec.describe()));
    }

    let line = ground_state_exhaustion(z(1), 2, 50, 1e-6)?;
    let big = ball_operator(&build_ball(z(1), 120)?, None)?;
    let mut line_res: f64 = 0.0;
    for t in [0.5, 1.0, 2.0, 5.0] {
        let rep = completeness_residual(&big, &line.phi_full, line.lambda0_estimate, line.lambda0_estimate, t, 0, 1e-13)?;
        line_res = line_res.max(rep.residual);
    }
    pass &= line_res < 1e-10;
    notes.push(format!("Z completeness {line_res:.1e}"));

    let kesten = dml::oracle::kesten_tree(4);
    let mut prev = f64::INFINITY;
    let mut tree_ok = true;
    let mut tree_notes = Vec::new();
    for r_max in [8, 12, 16] {
        let gs = ground_state_exhaustion(f2(), 2, r_max, 1e-6)?;
        let a = radial_evaluation_operator(&gs, 2 * r_max + 40)?;
        let mut worst: f64 = 0.0;
        for t in [0.5, 1.0, 2.0] {
            let rep = completeness_residual(&a, &gs.phi_full, gs.lambda0_estimate, kesten, t, 0, 1e-12)?;
            tree_ok &= rep.residual < 10.0 * rep.combined_error();
            worst = worst.max(rep.residual);
        }
        tree_ok &= worst < prev;
        prev = worst;
        tree_notes.push(format!("{worst:.3e}"));
    }
    pass &= tree_ok;
    notes.push(format!("F2 completeness by radius 8/12/16: {}", tree_notes.join(", ")));
    verdict(pass, notes.join("; "))
}

fn ivp() -> Result<Verdict> {
    let gs = ground_state_exhaustion(z(2), 2, 10, 1e-6)?;
    let a = &gs.operator;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..100 {
        let n0 = rng.gen_range(0.1..5.0);
        let u0: Vec<f64> = (0..a.dim()).map(|_| rng.gen_range(-n0..n0)).collect();
        let sol = solve_ivp(a, &gs.phi_full, gs.lambda0_estimate, &u0, &[0.0, 0.5, 1.0, 2.0, 5.0], 1e-12)?;
        excess = excess.max(sol.bound_excess());
    }
    let g = build_ball(z(2), gs.trusted_radius)?;
    let phi = gs.on_ball(&g)?;
    let mut held = 0;
    for _ in 0..1000 {
        let h = rng.gen_range(0.01..0.5);
        let steps = rng.gen_range(2..8);
        let u = random_supersolution(&g, &phi, h, steps, 1e-6, &mut rng)?;
        let rep = parabolic_max_check(&g, &phi, h, &u)?;
        if rep.precondition_holds() && rep.holds() {
            held += 1;
        }
    }
    verdict(
        excess <= 0.0 && held == 1000,
        format!("max sup|u| - N0 - error {excess:.3e}; parabolic principle on {held}/1000 grids"),
    )
}

fn decay() -> Result<Verdict> {
    match long_time_decay_check(f2(), (5.0, 40.0), 14, 36)? {
        DecayOutcome::Checked(r) => verdict(
            r.pass() && r.initial.pass(),
            format!(
                "λ0 {:.6}; radius {}: non-increasing {}, t-weighted bounded {}; certified radius {}: slope {:.3}, pass {}; Schrödinger t·trace bounded {}",
                r.lambda0,
                r.initial_radius,
                r.initial.non_increasing,
                r.initial.t_weighted_bounded,
                r.radius,
                r.checks.slope,
                r.checks.pass(),
                r.schrodinger.t_weighted_bounded
            ),
        ),
        DecayOutcome::Amenable { .. } => verdict(false, "free group reported as amenable"),
    }
}

fn gauge() -> Result<Verdict> {
    let g = build_ball(z(2), 6)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sigmas = [harper_multiplier(&g, harper_fluxes()[0])?, Multiplier::random(&g, &mut rng)];
    let mut worst: f64 = 0.0;
    for sigma in &sigmas {
        let base = spectrum(&dirichlet_matrix(&g, Some(sigma))?)?;
        let th = ball_theta(&g, Some(sigma), 1.0, BUDGET)?.value;
        for _ in 0..50 {
            let chi: Vec<C64> = (0..g.len()).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..TAU))).collect();
            let moved = gauge_transform(&g, sigma, &chi)?;
            let sp = spectrum(&dirichlet_matrix(&g, Some(&moved))?)?;
            let d = base.iter().zip(&sp).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let dt = (ball_theta(&g, Some(&moved), 1.0, BUDGET)?.value - th).abs();
            worst = worst.max(d).max(dt);
        }
    }
    verdict(worst <= 1e-10, format!("100 transforms, max change {worst:.2e}"))
}

type Criterion = (u8, &'static str, fn() -> Result<Verdict>, Option<Duration>);

fn main() -> ExitCode {
    // libtest flags such as --nocapture are accepted and ignored
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let minute = |m: u64| Some(Duration::from_secs(60 * m));
    let criteria: [Criterion; 11] = [
        (1, "Kato inequality", kato, minute(1)),
        (2, "Positivity of the resolvent", positivity, None),
        (3, "Semigroup domination", domination, None),
        (4, "Spectral bottoms and nonamenability", bottoms, None),
        (5, "Heat kernel exactness", heat_exactness, minute(2)),
        (6, "Novikov-Shubin exponents", novikov_shubin, minute(5)),
        (7, "Determinant and Riemann sums", determinant, None),
        (8, "Ground state", ground_state, None),
        (9, "Bounded initial value problem", ivp, None),
        (10, "Long-time decay", decay, None),
        (11, "Gauge invariance", gauge, None),
    ];
    let mut failed = 0;
    for (id, name, check, limit) in criteria {
        if filter.as_deref().is_some_and(|f| !name.to_lowercase().contains(&f.to_lowercase())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let slow = limit.is_some_and(|l| elapsed > l);
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && !slow, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let time = match limit {
            Some(l) if slow => format!("{:.1}s, over the {}s limit", elapsed.as_secs_f64(), l.as_secs()),
            _ => format!("{:.1}s", elapsed.as_secs_f64()),
        };
        println!("criterion {id:>2} {} {name}: {detail} [{time}]", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
