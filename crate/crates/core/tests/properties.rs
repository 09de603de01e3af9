use proptest::prelude::*;
use rand::Rng as _;

use oee_core::bounds::{
    estimation_bound, k_constant, ratio_error_bound, renyi_inf_divergence_tabular, return_error_bound,
    zeta_error_bound, BoundInputs, BoundMode,
};
use oee_core::envs::gridworld::value_iteration_expert;
use oee_core::envs::{true_zeta_gridworld, Archery, ArcherySpec, Cartpole, CartpoleSpec, Gridworld, GridworldSpec};
use oee_core::io::{parse_dataset, parse_model, write_dataset, write_model};
use oee_core::nn::MlpParams;
use oee_core::ratio::{train_ratio, ModelClass, TrainConfig};
use oee_core::report::monte_carlo_return;
use oee_core::rng;
use oee_core::zeta::{is_ope_baseline, weighted_return, ZetaEstimator};
use oee_core::{collect_dataset, rollout, Action, DiscountSpec, Environment, Policy, Source, StateVec};

fn bound_inputs() -> impl Strategy<Value = BoundInputs> {
    (
        0.01f64..0.99,
        1.01f64..50.0,
        1.0f64..1e9,
        0.001f64..0.999,
        1.0f64..1e4,
        0.0f64..5.0,
        1usize..300,
        0.0f64..1.0,
        0.0f64..10.0,
    )
        .prop_map(
            |(nu, mu, n, delta, k, d_inf, horizon, gamma, reward_bound)| BoundInputs {
                nu,
                mu,
                n,
                delta,
                k,
                d_inf,
                horizon,
                gamma,
                reward_bound,
            },
        )
}

proptest! {
    #[test]
    fn ratio_bound_halves_when_samples_quadruple(b in bound_inputs()) {
        let a = ratio_error_bound(&b).unwrap();
        let c = ratio_error_bound(&BoundInputs { n: 4.0 * b.n, ..b }).unwrap();
        prop_assert!((c - a / 2.0).abs() <= 1e-12 * a);
    }

    #[test]
    fn bounds_are_nonnegative_and_shrink_with_n(b in bound_inputs(), factor in 1.0f64..100.0) {
        let bigger = BoundInputs { n: b.n * factor, ..b };
        for mode in [BoundMode::Main, BoundMode::Supplementary] {
            let (x, y) = (estimation_bound(&b, mode).unwrap(), estimation_bound(&bigger, mode).unwrap());
            prop_assert!(x >= 0.0 && y <= x * (1.0 + 1e-12));
        }
        let (m, m2) = (ratio_error_bound(&b).unwrap(), ratio_error_bound(&bigger).unwrap());
        let (z, z2) = (zeta_error_bound(&b, m).unwrap(), zeta_error_bound(&bigger, m2).unwrap());
        prop_assert!(z >= 0.0 && z2 <= z * (1.0 + 1e-12));
        let (r, r2) = (return_error_bound(&b, m).unwrap(), return_error_bound(&bigger, m2).unwrap());
        prop_assert!(r >= 0.0 && r2 <= r * (1.0 + 1e-12));
    }

    #[test]
    fn mixture_probabilities_sum_to_one(delta in 0.0f64..=1.0, x in 0usize..6, y in 0usize..6) {
        let spec = GridworldSpec::new(6, 0.2).unwrap();
        let (expert, _) = value_iteration_expert(&spec, 0.99, 1e-10).unwrap();
        let s = spec.state_of((x, y));
        let p = Policy::grid_mixture(delta, expert.clone()).unwrap().action_probs(&s).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let q = Policy::cartpole_mixture(delta, expert).unwrap().action_probs(&s).unwrap();
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mlp_output_stays_in_range(
        seed in any::<u64>(),
        scale in 0.1f64..50.0,
        x in prop::collection::vec(-100.0f64..100.0, 3),
        nu in 0.01f64..0.99,
        mu in 1.01f64..100.0,
    ) {
        let mut r = rng::from_seed(seed);
        let mut p = MlpParams::init(3, [4, 5, 3], nu, mu, &mut r).unwrap();
        for l in &mut p.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = scale * r.random_range(-1.0..1.0);
            }
        }
        let g = p.forward(&x).unwrap();
        // tanh rounds to +-1 once |z| exceeds about 19, so the endpoints are reachable.
        prop_assert!(g >= nu && g <= mu, "g = {g} outside [{nu}, {mu}]");
    }

    #[test]
    fn gridworld_kernels_are_distributions(side in 2usize..7, slip in 0.0f64..0.95, slip_te in 0.0f64..0.95) {
        let tr = GridworldSpec::new(side, slip).unwrap();
        let te = GridworldSpec::new(side, slip_te).unwrap();
        for c in tr.cells().collect::<Vec<_>>() {
            for a in 0..4 {
                let dist = tr.distribution(c, a).unwrap();
                let total: f64 = dist.iter().map(|d| d.1).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
                let s = tr.state_of(c);
                let reweighted: f64 = dist
                    .iter()
                    .filter(|d| d.1 > 0.0)
                    .map(|(n, p)| p * true_zeta_gridworld(&tr, &te, &s, a, &tr.state_of(*n)).unwrap())
                    .sum();
                prop_assert!((reweighted - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn learned_weights_stay_within_their_range(seed in any::<u64>(), delta in 0.0f64..=1.0) {
        let spec = GridworldSpec::new(4, 0.3).unwrap();
        let env = Gridworld::new(spec).unwrap();
        let policy = Policy::grid_mixture(delta, Policy::Uniform { n_actions: 4 }).unwrap();
        let ds = DiscountSpec::new(0.95, 30, 1).unwrap();
        let traj = rollout(&env, &policy, &ds, &mut rng::from_seed(seed)).unwrap();
        let zeta = ZetaEstimator::gridworld_oracle(spec, GridworldSpec::new(4, 0.1).unwrap());
        for t in 0..=traj.len() {
            let prefix = oee_core::Trajectory { transitions: traj.transitions[..t].to_vec() };
            let (_, w) = weighted_return(&prefix, &zeta, 0.95, env.reward_timing()).unwrap();
            let (lo, hi) = (0.1f64 / 0.3, 0.9f64 / 0.7);
            prop_assert!(w >= lo.powi(t as i32) * (1.0 - 1e-12) && w <= hi.powi(t as i32) * (1.0 + 1e-12));
        }
    }
}

#[test]
fn trajectories_chain_and_respect_the_horizon() {
    let spec = GridworldSpec::new(5, 0.3).unwrap();
    let env = Gridworld::new(spec).unwrap();
    let ds = DiscountSpec::new(0.99, 40, 1).unwrap();
    for seed in 0..50 {
        let traj = rollout(&env, &Policy::Uniform { n_actions: 4 }, &ds, &mut rng::from_seed(seed)).unwrap();
        assert!(traj.len() <= 40);
        traj.validate().unwrap();
        for w in traj.transitions.windows(2) {
            assert_eq!(w[0].s_next, w[1].s);
        }
    }
}

#[test]
fn datasets_and_reports_are_seed_deterministic() {
    let spec = GridworldSpec::new(5, 0.3).unwrap();
    let env = Gridworld::new(spec).unwrap();
    let policy = Policy::Uniform { n_actions: 4 };
    let a = collect_dataset(&env, &policy, 50, 500, Source::Train, 9).unwrap();
    let b = collect_dataset(&env, &policy, 50, 500, Source::Train, 9).unwrap();
    assert_eq!(a, b);
    let c = collect_dataset(&env, &policy, 50, 500, Source::Train, 10).unwrap();
    assert_ne!(a, c);
    let ds = DiscountSpec::new(0.99, 50, 64).unwrap();
    let r1 = monte_carlo_return(&env, &policy, &ds, 3).unwrap();
    let r2 = monte_carlo_return(&env, &policy, &ds, 3).unwrap();
    assert_eq!(r1, r2);
}

#[test]
fn environment_rewards_have_the_documented_sign() {
    let archery = Archery::new(ArcherySpec::new(4.0, 2.0).unwrap()).unwrap();
    let cart = Cartpole::new(CartpoleSpec::default()).unwrap();
    let mut r = rng::from_seed(1);
    for _ in 0..200 {
        let theta: f64 = r.random_range(0.0..std::f64::consts::FRAC_PI_2);
        let s = archery.reset(&mut r);
        let step = archery.step(&s, &Action::Continuous(vec![theta]), &mut r).unwrap();
        assert!(step.reward <= 0.0);
    }
    let ds = DiscountSpec::new(1.0, 200, 1).unwrap();
    for seed in 0..20 {
        let traj = rollout(&cart, &Policy::Uniform { n_actions: 2 }, &ds, &mut rng::from_seed(seed)).unwrap();
        assert!(traj.transitions.iter().all(|t| t.r == 1.0));
    }
}

#[test]
fn empirical_frequencies_match_the_gridworld_kernel() {
    let spec = GridworldSpec::new(5, 0.4).unwrap();
    let env = Gridworld::new(spec).unwrap();
    let c = (2, 2);
    let s = spec.state_of(c);
    let dist = spec.distribution(c, 1).unwrap();
    let n = 100_000;
    let mut counts = vec![0usize; dist.len()];
    let mut r = rng::from_seed(77);
    for _ in 0..n {
        let next = env.step(&s, &Action::Discrete(1), &mut r).unwrap().next;
        let cell = spec.cell_of(&next).unwrap();
        let k = dist.iter().position(|d| d.0 == cell).expect("outcome in support");
        counts[k] += 1;
    }
    let chi2: f64 = dist
        .iter()
        .zip(&counts)
        .map(|((_, p), o)| {
            let e = p * n as f64;
            (*o as f64 - e).powi(2) / e
        })
        .sum();
    // Critical value of chi-squared at p = 0.001 for up to 4 degrees of freedom.
    assert!(dist.len() <= 5 && chi2 < 18.47, "chi2 = {chi2}");
}

#[test]
fn importance_sampling_with_target_equal_behavior_is_the_data_mean() {
    let spec = GridworldSpec::new(5, 0.1).unwrap();
    let env = Gridworld::new(spec).unwrap();
    let (expert, _) = value_iteration_expert(&spec, 0.99, 1e-10).unwrap();
    let behavior = Policy::grid_mixture(0.5, expert).unwrap();
    let data = collect_dataset(&env, &behavior, 200, 5000, Source::Test, 4).unwrap();
    let ds = DiscountSpec::new(0.99, 200, 1).unwrap();
    let report = is_ope_baseline(&data, &behavior, &behavior, &ds).unwrap();
    let returns: Vec<f64> = data.trajectories().iter().map(|t| t.discounted_return(0.99)).collect();
    assert_eq!(report.values, returns);
    assert_eq!(report.mean, returns.iter().sum::<f64>() / returns.len() as f64);
}

#[test]
fn tabular_training_is_stationary_and_loss_decreases() {
    let mut r = rng::from_seed(21);
    let draw = |r: &mut rng::Rng, w: &[f64], n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let u: f64 = r.random::<f64>() * w.iter().sum::<f64>();
                let mut acc = 0.0;
                let k = w.iter().position(|x| {
                    acc += x;
                    u < acc
                });
                vec![k.unwrap_or(w.len() - 1) as f64]
            })
            .collect()
    };
    let p = draw(&mut r, &[1.0, 2.0, 3.0, 4.0, 0.5], 3000);
    let q = draw(&mut r, &[4.0, 3.0, 2.0, 1.0, 0.5], 3000);
    let model = train_ratio(&p, &q, &TrainConfig::tabular()).unwrap();
    let curve = &model.meta.curve;
    assert!(curve.last().unwrap().1 <= curve[0].1);
    for a in 0..5 {
        let x = a as f64;
        let ph = p.iter().filter(|v| v[0] == x).count() as f64 / p.len() as f64;
        let qh = q.iter().filter(|v| v[0] == x).count() as f64 / q.len() as f64;
        let g = model.eval(&[x]).unwrap();
        if g > 0.1 && g < 10.0 {
            assert!((qh - ph / g).abs() < 1e-9, "atom {a}: {qh} vs {}", ph / g);
        }
    }
}

#[test]
fn mlp_training_curve_ends_below_its_start() {
    let mut r = rng::from_seed(5);
    let p: Vec<Vec<f64>> = (0..1000).map(|_| vec![r.random_range(0.0..1.0)]).collect();
    let q: Vec<Vec<f64>> = (0..1000).map(|_| vec![r.random_range(0.0..2.0)]).collect();
    let cfg = TrainConfig {
        class: ModelClass::Mlp { hidden: [8, 8, 8] },
        iterations: 500,
        lr: 0.01,
        eval_every: 50,
        ..TrainConfig::mlp()
    };
    let model = train_ratio(&p, &q, &cfg).unwrap();
    let curve = &model.meta.curve;
    assert!(curve.last().unwrap().1 <= curve[0].1);
    assert!(model.eval(&[0.5]).unwrap() > model.eval(&[1.5]).unwrap());
}

#[test]
fn identical_seeds_give_identical_parameters() {
    let mut r = rng::from_seed(8);
    let p: Vec<Vec<f64>> = (0..300).map(|_| vec![r.random_range(-1.0..1.0), r.random()]).collect();
    let q: Vec<Vec<f64>> = (0..300).map(|_| vec![r.random_range(-2.0..2.0), r.random()]).collect();
    let cfg = TrainConfig {
        class: ModelClass::Mlp { hidden: [6, 6, 6] },
        iterations: 200,
        lr: 0.01,
        seed: 42,
        ..TrainConfig::mlp()
    };
    assert_eq!(train_ratio(&p, &q, &cfg).unwrap(), train_ratio(&p, &q, &cfg).unwrap());
}

#[test]
fn dataset_and_model_files_round_trip() {
    let env = Cartpole::new(CartpoleSpec::default()).unwrap();
    let data = collect_dataset(&env, &Policy::Uniform { n_actions: 2 }, 100, 300, Source::Train, 2).unwrap();
    let back = parse_dataset(&write_dataset(&data)).unwrap();
    assert_eq!(back.records.len(), data.records.len());
    for (a, b) in data.records.iter().zip(&back.records) {
        let pairs =
            a.s.as_slice()
                .iter()
                .chain(a.s_next.as_slice())
                .zip(b.s.as_slice().iter().chain(b.s_next.as_slice()));
        for (x, y) in pairs {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
        assert_eq!(a.a, b.a);
    }
    let mut r = rng::from_seed(3);
    let p: Vec<Vec<f64>> = (0..200).map(|_| vec![r.random()]).collect();
    let q: Vec<Vec<f64>> = (0..200).map(|_| vec![r.random::<f64>() * 2.0]).collect();
    let cfg = TrainConfig {
        class: ModelClass::Mlp { hidden: [4, 4, 4] },
        iterations: 50,
        lr: 0.01,
        ..TrainConfig::mlp()
    };
    let model = train_ratio(&p, &q, &cfg).unwrap();
    let back = parse_model(&write_model(&model)).unwrap();
    for x in [0.0, 0.3, 1.7] {
        assert_eq!(model.eval(&[x]).unwrap(), back.eval(&[x]).unwrap());
    }
}

/// Observed worst squared ratio error against the finite-sample bound on a
/// state-action-next-state task whose distributions are known exactly.
#[test]
fn observed_ratio_error_respects_the_bound() {
    let (tr, te) = (GridworldSpec::new(3, 0.3).unwrap(), GridworldSpec::new(3, 0.1).unwrap());
    let mut atoms = Vec::new();
    for c in tr.cells().collect::<Vec<_>>() {
        for a in 0..4 {
            for (n, p_tr) in tr.distribution(c, a).unwrap() {
                let p_te = te.transition_prob(c, a, n).unwrap();
                atoms.push((
                    vec![c.0 as f64, c.1 as f64, a as f64, n.0 as f64, n.1 as f64],
                    p_te,
                    p_tr,
                ));
            }
        }
    }
    let z = (tr.n_cells() * 4) as f64;
    let p: Vec<f64> = atoms.iter().map(|a| a.1 / z).collect();
    let q: Vec<f64> = atoms.iter().map(|a| a.2 / z).collect();
    let inputs = BoundInputs {
        nu: 0.1,
        mu: 10.0,
        n: 1e4,
        delta: 0.1,
        k: k_constant(&q).unwrap(),
        d_inf: renyi_inf_divergence_tabular(&p, &q).unwrap(),
        horizon: 1,
        gamma: 0.0,
        reward_bound: 1.0,
    };
    let bound = ratio_error_bound(&inputs).unwrap();
    let sample = |w: &[f64], r: &mut rng::Rng| -> Vec<Vec<f64>> {
        (0..10_000)
            .map(|_| {
                let u: f64 = r.random();
                let mut acc = 0.0;
                let k = w.iter().position(|x| {
                    acc += x;
                    u < acc
                });
                atoms[k.unwrap_or(w.len() - 1)].0.clone()
            })
            .collect()
    };
    let mut held = 0;
    for seed in 0..20 {
        let mut r = rng::from_seed(1000 + seed);
        let (sp, sq) = (sample(&p, &mut r), sample(&q, &mut r));
        let model = train_ratio(
            &sp,
            &sq,
            &TrainConfig {
                seed,
                ..TrainConfig::tabular()
            },
        )
        .unwrap();
        let worst = atoms
            .iter()
            .zip(p.iter().zip(&q))
            .map(|(a, (pp, qq))| (model.eval(&a.0).unwrap() - pp / qq).powi(2))
            .fold(0.0, f64::max);
        held += (worst <= bound) as usize;
    }
    assert!(held >= 18, "bound held in {held} of 20 runs");
}

#[test]
fn state_vectors_reject_non_finite_values() {
    assert!(StateVec::new(vec![0.0, f64::NAN]).is_err());
    assert!(StateVec::new(vec![f64::INFINITY]).is_err());
}
