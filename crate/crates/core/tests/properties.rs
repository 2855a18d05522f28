//! Property tests for graph construction, operators and semigroups.

use dml::graph::ball_volumes;
use dml::heat::{evolve, HeatOptions, HeatRequest};
use dml::magnetic::{ball_operator, dirichlet_matrix, gauge_transform, kato_defect, plaquette_holonomy, resolvent_solve};
use dml::spectral::{decay_checks, DensityEstimate, DensityMethod};
use dml::{build_ball, Flux, GroupSpec, Multiplier, VertexFunction};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec_strategy() -> impl Strategy<Value = GroupSpec> {
    prop_oneof![
        (1usize..=3).prop_map(|d| GroupSpec::free_abelian(d).unwrap()),
        (1usize..=3).prop_map(|r| GroupSpec::free_group(r).unwrap()),
        Just(GroupSpec::heisenberg()),
    ]
}

fn small_radius(spec: GroupSpec) -> usize {
    match spec.generator_count() {
        2 => 12,
        4 => 5,
        _ => 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn balls_are_symmetric_and_layered(spec in spec_strategy()) {
        let g = build_ball(spec, small_radius(spec)).unwrap();
        for v in 0..g.len() {
            for a in g.neighbors(v) {
                prop_assert!(g.neighbors(a.vertex).iter().any(|b| b.vertex == v));
                prop_assert!(g.dist_from_root(v).abs_diff(g.dist_from_root(a.vertex)) <= 1);
            }
            if g.is_interior(v) {
                prop_assert_eq!(g.neighbors(v).len(), spec.generator_count());
            }
        }
    }

    #[test]
    fn free_group_volumes(rank in 1usize..=3, r in 0usize..=4) {
        let vols = ball_volumes(GroupSpec::free_group(rank).unwrap(), r, 1 << 20);
        let m = 2 * rank as u64;
        // |B_r| = 1 + m ((m-1)^r - 1) / (m - 2), or 2r + 1 on the line
        let expect = if m == 2 { 2 * r as u64 + 1 } else { 1 + m * ((m - 1).pow(r as u32) - 1) / (m - 2) };
        prop_assert_eq!(vols[r] as u64, expect);
    }

    #[test]
    fn operators_are_hermitian_with_nonnegative_quadratic_form(spec in spec_strategy(), seed in any::<u64>()) {
        let g = build_ball(spec, small_radius(spec)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = Multiplier::random(&g, &mut rng);
        for a in [ball_operator(&g, Some(&sigma)).unwrap(), dirichlet_matrix(&g, Some(&sigma)).unwrap()] {
            prop_assert!(a.self_adjoint_defect() < 1e-14);
            let f = VertexFunction::random_complex(a.dim(), a.dim(), &mut rng);
            let af = a.apply_fn(&f);
            let form: C64 = f.values().iter().zip(af.values()).map(|(x, y)| x.conj() * y).sum();
            prop_assert!(form.re >= -1e-10 && form.im.abs() < 1e-10);
        }
    }

    #[test]
    fn kato_defect_nonnegative(spec in spec_strategy(), seed in any::<u64>()) {
        let g = build_ball(spec, small_radius(spec)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = Multiplier::random(&g, &mut rng);
        let f = VertexFunction::random_complex(g.len(), g.len(), &mut rng);
        let d = kato_defect(&g, &sigma, &f).unwrap();
        prop_assert!(g.interior().all(|v| d[v] >= -1e-12));
    }

    #[test]
    fn harper_holonomy_is_gauge_invariant(p in 1i64..6, q in 2i64..8, seed in any::<u64>()) {
        let g = build_ball(GroupSpec::free_abelian(2).unwrap(), 5).unwrap();
        let sigma = dml::magnetic::harper_multiplier(&g, Flux::rational(p, q).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chi: Vec<C64> = (0..g.len()).map(|_| C64::from_polar(1.0, rand::Rng::gen_range(&mut rng, 0.0..6.3))).collect();
        let moved = gauge_transform(&g, &sigma, &chi).unwrap();
        let want = C64::from_polar(1.0, std::f64::consts::TAU * p as f64 / q as f64);
        for (m, n) in [(0, 0), (1, -2), (-3, 1)] {
            let h = plaquette_holonomy(&g, &moved, m, n).unwrap();
            prop_assert!((h - want).norm() < 1e-12);
        }
    }

    #[test]
    fn heat_semigroup_is_sub_markov_and_positive(t in 0.0f64..6.0, seed in any::<u64>()) {
        let g = build_ball(GroupSpec::free_abelian(2).unwrap(), 8).unwrap();
        let a = ball_operator(&g, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..a.dim()).map(|_| rand::Rng::gen_range(&mut rng, 0.0..1.0)).collect();
        let out = evolve(&a, &HeatRequest::series(t, 1e-12).unwrap(), &VertexFunction::from_real(&f), &HeatOptions::default()).unwrap();
        let mass_in: f64 = f.iter().sum();
        let mass_out: f64 = out.values.re().iter().sum();
        prop_assert!(out.values.re().iter().all(|&x| x >= -1e-12));
        prop_assert!(mass_out <= mass_in + 1e-9);
        prop_assert!(out.values.sup_norm() <= 1.0 + 1e-9);
    }

    #[test]
    fn resolvent_of_nonnegative_data_is_nonnegative(spec in spec_strategy(), lambda in 0.01f64..10.0, seed in any::<u64>()) {
        let g = build_ball(spec, small_radius(spec)).unwrap();
        let a = ball_operator(&g, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..a.dim()).map(|_| rand::Rng::gen_range(&mut rng, 0.0..1.0)).collect();
        let (u, _) = resolvent_solve(&a, lambda, &VertexFunction::from_real(&f), 1e-14).unwrap();
        prop_assert!(u.re().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn density_is_a_distribution_function(atoms in prop::collection::vec(0.0f64..8.0, 1..200), a in 0.0f64..8.0, b in 0.0f64..8.0) {
        let n = atoms.len();
        let d = DensityEstimate::from_atoms(atoms, DensityMethod::DirichletCount, n, None).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.evaluate(lo) <= d.evaluate(hi));
        prop_assert!(d.evaluate(-1.0) == 0.0 && d.evaluate(9.0) == 1.0);
    }

    #[test]
    fn decreasing_power_laws_pass_decay_checks(alpha in 1.0f64..3.0, c in 0.1f64..10.0) {
        let pts: Vec<(f64, f64)> = (0..30).map(|i| { let t = 5.0 + i as f64; (t, c * t.powf(-alpha)) }).collect();
        let checks = decay_checks(&pts, 1e-12).unwrap();
        prop_assert!(checks.pass());
        prop_assert!((checks.slope + alpha).abs() < 1e-9);
    }
}
