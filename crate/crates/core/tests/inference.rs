mod common;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::digamma;

use common::oracles::{
    assert_close_nested, enumerable_spaces, oracle_counts, oracle_log_evidence, oracle_marginals,
    random_problem,
};
use common::{hyper, shape, synth_space};
use relexsum::inference::{
    build_default_constraints, clamp_to_achievable, compile, project, run, ConstraintContext,
    ConstraintFamilies, DualConfig, InferenceConfig, LinearConstraint, VariationalState,
};
use relexsum::model::synth::PlantedModel;
use relexsum::model::{Choice, HyperParams};

// Projection against a brute-force oracle over joint configurations.

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_matches_brute_force(seed in any::<u64>()) {
        let (sizes, log_w, cons) = random_problem(seed);
        let p = project(&log_w, &cons, &DualConfig::default(), None).unwrap();
        prop_assert!(p.dual.converged);
        prop_assert!(p.dual.mu.iter().all(|&m| m >= 0.0));
        let oracle = oracle_marginals(&sizes, &log_w, &cons);
        let l1: f64 = p.q.iter().flatten().zip(oracle.iter().flatten()).map(|(a, b)| (a - b).abs()).sum();
        prop_assert!(l1 <= 1e-4, "L1 {l1}");
        for (c, k) in cons.iter().enumerate() {
            prop_assert!(p.expectations[c] <= k.bound + 1e-3);
            prop_assert!((p.dual.mu[c] * (p.expectations[c] - k.bound)).abs() <= 1e-3);
        }
    }

    #[test]
    fn projection_rows_are_normalized_and_shift_invariant(seed in any::<u64>(), shift in -5.0f64..5.0) {
        let (_, log_w, cons) = random_problem(seed);
        let p = project(&log_w, &cons, &DualConfig::default(), None).unwrap();
        for row in &p.q {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let mut shifted = log_w.clone();
        for x in &mut shifted[0] {
            *x += shift;
        }
        let p2 = project(&shifted, &cons, &DualConfig::default(), None).unwrap();
        for (a, b) in p.q.iter().flatten().zip(p2.q.iter().flatten()) {
            prop_assert!((a - b).abs() <= 1e-7);
        }
    }
}

#[test]
fn analytic_projection() {
    let c = LinearConstraint {
        id: "c".into(),
        entries: vec![(0, 0, 1.0)],
        bound: 0.5,
    };
    let p = project(
        &[vec![0.8f64.ln(), 0.2f64.ln()]],
        &[c],
        &DualConfig::default(),
        None,
    )
    .unwrap();
    assert_relative_eq!(p.q[0][0], 0.5, epsilon = 1e-4);
    assert_relative_eq!(p.q[0][1], 0.5, epsilon = 1e-4);
    assert_relative_eq!(p.dual.mu[0], 4f64.ln(), epsilon = 1e-4);
}

#[test]
fn warm_start_reaches_same_solution() {
    let (_, log_w, cons) = random_problem(11);
    let cold = project(&log_w, &cons, &DualConfig::default(), None).unwrap();
    let warm = project(&log_w, &cons, &DualConfig::default(), Some(&cold.dual.mu)).unwrap();
    assert!(warm.dual.iterations <= 1);
    for (a, b) in cold.q.iter().flatten().zip(warm.q.iter().flatten()) {
        assert_relative_eq!(a, b, epsilon = 1e-8);
    }
}

// Conjugate updates and free energy against independent enumerations.

#[test]
fn conjugate_update_equals_prior_plus_expected_counts() {
    let planted = PlantedModel::well_separated(2, 2);
    let (_, space) = synth_space(&planted, shape(2, 2, 2, 2), 5, hyper(2, 2));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = VariationalState::random(&space, &mut rng);
    state.update_q_theta(&space);
    for k in 0..2 {
        let oracle = oracle_counts(&space, &state, k);
        let (r, o) = (&state.relations[k], &oracle.relations[k]);
        assert_close_nested(&r.theta_i, &o.theta_i, 1e-9);
        assert_close_nested(&r.theta_bi, &o.theta_bi, 1e-9);
        assert_close_nested(&r.theta_a, &o.theta_a, 1e-9);
        assert_close_nested(&r.theta_ba, &o.theta_ba, 1e-9);
        for (x, y) in r.lambda.iter().zip(&o.lambda) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn conjugate_update_point_mass_count() {
    // Point mass on one triple per factor: every observed stem of a chosen
    // indicator gains exactly one count per document choosing it.
    let planted = PlantedModel::well_separated(2, 2);
    let (_, space) = synth_space(&planted, shape(2, 2, 2, 2), 9, hyper(2, 2));
    let mut state = VariationalState::uniform(&space);
    for (d, ds) in space.docs.iter().enumerate() {
        for k in 0..2 {
            state.c_hat[d][k] = vec![0.0; ds.n_options()];
            state.c_hat[d][k][0] = 1.0;
        }
    }
    state.update_q_theta(&space);
    let stem_slot = 0;
    let mut expected = vec![0.1; space.ind_cards()[stem_slot]];
    for ds in &space.docs {
        let t = ds.triples[ds.options[0].triple().unwrap()];
        let v = ds.ind_features[t.indicator]
            .entries
            .iter()
            .find(|(s, _)| *s == stem_slot)
            .unwrap()
            .1;
        expected[v as usize] += 1.0;
    }
    for (x, y) in state.relations[0].theta_i[stem_slot].iter().zip(&expected) {
        assert_relative_eq!(*x, *y, epsilon = 1e-12);
    }
}

#[test]
fn all_null_leaves_foreground_and_location_at_prior() {
    let planted = PlantedModel::well_separated(1, 1);
    let h = HyperParams {
        allow_null: true,
        ..hyper(1, 1)
    };
    let (_, space) = synth_space(&planted, shape(2, 1, 1, 2), 3, h);
    let mut state = VariationalState::uniform(&space);
    for (d, ds) in space.docs.iter().enumerate() {
        let null = ds.options.iter().position(|c| *c == Choice::Null).unwrap();
        state.c_hat[d][0] = vec![0.0; ds.n_options()];
        state.c_hat[d][0][null] = 1.0;
    }
    state.update_q_theta(&space);
    let r = &state.relations[0];
    assert!(r
        .theta_i
        .iter()
        .flatten()
        .chain(r.theta_a.iter().flatten())
        .all(|&x| x == 0.1));
    assert!(r.lambda.iter().all(|&x| x == 0.1));
}

#[test]
fn free_energy_bounds_negative_log_evidence() {
    for (i, space) in enumerable_spaces().iter().enumerate() {
        let bound = -oracle_log_evidence(space);
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        for _ in 0..10 {
            let mut s = VariationalState::random(space, &mut rng);
            s.update_q_theta(space);
            let f = s.free_energy(space);
            assert!(f >= bound - 1e-9, "space {i}: {f} < {bound}");
        }
        let cfg = InferenceConfig {
            restarts: 2,
            ..InferenceConfig::default()
        };
        let r = run(space, &[], &cfg).unwrap();
        assert!(r.free_energy >= bound - 1e-9);
    }
}

#[test]
fn free_energy_is_tight_on_a_single_configuration() {
    let p = PlantedModel::well_separated(2, 1);
    let (_, space) = synth_space(&p, shape(2, 1, 1, 1), 8, hyper(2, 1));
    assert!(space.docs.iter().all(|d| d.n_options() == 1));
    let mut s = VariationalState::uniform(&space);
    s.update_q_theta(&space);
    let f = s.free_energy(&space);
    assert_relative_eq!(f, -oracle_log_evidence(&space), epsilon = 1e-6);
}

#[test]
fn unconstrained_qz_matches_enumerated_expected_log_joint() {
    let p = PlantedModel::well_separated(1, 2);
    let (_, space) = synth_space(&p, shape(2, 2, 1, 1), 6, hyper(1, 2));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut s = VariationalState::random(&space, &mut rng);
    s.update_q_theta(&space);
    let got = s.unconstrained_qz(&space);
    let r = &s.relations[0];
    let el = |v: &Vec<f64>, i: u32| digamma(v[i as usize]) - digamma(v.iter().sum());
    for (d, ds) in space.docs.iter().enumerate() {
        let raw: Vec<f64> = ds
            .options
            .iter()
            .enumerate()
            .map(|(o, c)| {
                let t = ds.triples[c.triple().unwrap()];
                let seg = c.segment().unwrap();
                let mut x = ds.option_base[o] + el(&r.lambda, seg as u32);
                for (w, fv) in ds.ind_features.iter().enumerate() {
                    let fam = if w == t.indicator {
                        &r.theta_i
                    } else {
                        &r.theta_bi
                    };
                    x += fv
                        .entries
                        .iter()
                        .map(|&(sl, v)| el(&fam[sl], v))
                        .sum::<f64>();
                }
                for (a, fv) in ds.arg_features.iter().enumerate() {
                    let fam = if a == t.argument {
                        &r.theta_a
                    } else {
                        &r.theta_ba
                    };
                    x += fv
                        .entries
                        .iter()
                        .map(|&(sl, v)| el(&fam[sl], v))
                        .sum::<f64>();
                }
                x
            })
            .collect();
        let m = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = raw.iter().map(|x| (x - m).exp()).sum();
        for (o, x) in raw.iter().enumerate() {
            assert_relative_eq!(got[d][0][o].exp(), (x - m).exp() / z, epsilon = 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// Runs.

#[test]
fn unconstrained_free_energy_never_increases() {
    for seed in 0..20u64 {
        let planted = PlantedModel::well_separated(2, 4);
        let (_, space) = synth_space(&planted, shape(8, 8, 2, 3), seed, hyper(2, 4));
        let cfg = InferenceConfig {
            restarts: 1,
            tol: 1e-12,
            max_sweeps: 40,
            seed,
            ..InferenceConfig::default()
        };
        let r = run(&space, &[], &cfg).unwrap();
        for w in r.trace.windows(2) {
            assert!(
                w[1].free_energy <= w[0].free_energy + 1e-8,
                "seed {seed}: {:?}",
                w
            );
        }
        assert!(r.state.normalization_error() <= 1e-9);
    }
}

#[test]
fn constrained_runs_stay_bounded_and_feasible() {
    for seed in 0..20u64 {
        let planted = PlantedModel::well_separated(2, 4);
        let (_, space) = synth_space(&planted, shape(8, 8, 2, 3), 100 + seed, hyper(2, 4));
        let ctx = ConstraintContext::new(&space);
        let specs = build_default_constraints(&space, ConstraintFamilies::default());
        let (specs, _) = clamp_to_achievable(&space, &ctx, &specs);
        let cons = compile(&space, &ctx, &specs);
        let cfg = InferenceConfig {
            restarts: 2,
            max_sweeps: 40,
            seed,
            ..InferenceConfig::default()
        };
        let r = run(&space, &cons, &cfg).unwrap();
        assert!(r.trace.iter().all(|t| t.free_energy.is_finite()));
        for s in &r.restarts {
            assert!(s.violated.is_empty(), "seed {seed}: {:?}", s.violated);
        }
        for restart in 0..2 {
            let last = r
                .trace
                .iter()
                .filter(|t| t.restart == restart)
                .next_back()
                .unwrap();
            assert!(last.max_violation <= 1e-3);
        }
        assert!(r.state.normalization_error() <= 1e-9);
    }
}

#[test]
fn fixed_seed_reproduces_traces_and_best_is_argmin() {
    let planted = PlantedModel::well_separated(2, 4);
    let (_, space) = synth_space(&planted, shape(6, 8, 2, 3), 42, hyper(2, 4));
    let one = InferenceConfig {
        restarts: 1,
        seed: 3,
        ..InferenceConfig::default()
    };
    let a = run(&space, &[], &one).unwrap();
    let b = run(&space, &[], &one).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.state, b.state);

    let many = InferenceConfig {
        restarts: 5,
        seed: 3,
        ..InferenceConfig::default()
    };
    let r = run(&space, &[], &many).unwrap();
    let min = r
        .restarts
        .iter()
        .map(|s| s.free_energy)
        .fold(f64::INFINITY, f64::min);
    assert_eq!(r.free_energy, min);
    assert_eq!(r.restarts[r.best_restart].free_energy, min);
}

#[test]
fn default_constraint_counts() {
    let planted = PlantedModel::well_separated(2, 4);
    let (_, space) = synth_space(&planted, shape(40, 4, 2, 3), 1, hyper(10, 4));
    let specs = build_default_constraints(
        &space,
        ConstraintFamilies {
            syntactic: true,
            ..ConstraintFamilies::none()
        },
    );
    assert_eq!(specs.len(), 10);
    assert!(specs.iter().all(|s| s.bound == 32.0));
}
