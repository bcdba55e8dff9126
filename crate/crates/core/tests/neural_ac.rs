mod common;

use sstac_core::deep_net::average_weights;
use sstac_core::mdp::builtin;
use sstac_core::neural_ac::{
    actor_inner_loop, actor_target, critic_inner_loop, network_table, regression_loop, ActorSampling, SamplerKind,
};
use sstac_core::sampling::{stream_for, ExactPairs, FixedPairs, FixedTransitions, Purpose, Transition, TupleSampler};
use sstac_core::{
    run_neural_ac, DnnParams, NeuralAcState, NeuralRunConfig, PolicyMatrix, SaEncoder, SaTable, TRACE_HEADER,
};

/// Net whose last layer is zero, so every output and every gradient vanishes.
fn silent_net(d: usize, m: usize, seed: u64) -> DnnParams<f64> {
    let init = DnnParams::<f64>::init(d, m, 2, seed).unwrap();
    let weights = vec![init.weights()[0].clone(), vec![0.0; m * m]];
    DnnParams::from_parts(d, m, weights, init.signs().to_vec()).unwrap()
}

#[test]
fn regression_loop_averages_projected_iterates() {
    let enc = SaEncoder::new(2, 2);
    let net = DnnParams::<f64>::init(enc.dim(), 8, 2, 4).unwrap();
    let target = SaTable::from_rows(&[vec![0.3, -0.2], vec![1.0, 0.5]]).unwrap();
    let pairs = vec![(0, 1), (1, 0), (1, 1)];
    let (step, radius) = (0.3, 0.05);

    let out = regression_loop(&net, &target, &enc, step, radius, 3, &mut FixedPairs::new(pairs.clone())).unwrap();

    let mut p = net.clone();
    let mut iterates = Vec::new();
    for &(s, a) in &pairs {
        let x: Vec<f64> = enc.encode(s, a);
        let (f, g) = p.value_and_gradient(&x).unwrap();
        let resid = f - target.get(s, a);
        let w: Vec<Vec<f64>> = p
            .weights()
            .iter()
            .zip(&g)
            .map(|(w, g)| w.iter().zip(g).map(|(a, b)| a - step * resid * b).collect())
            .collect();
        p.set_weights(w).unwrap();
        p.project_ball(radius);
        iterates.push(p.weights().to_vec());
    }
    let want = average_weights(&iterates);
    for (got, want) in out.params.weights().iter().zip(&want) {
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }
    assert_eq!(out.losses.len(), 3);
    assert!(out.max_anchor_distance <= radius + 1e-15);
}

#[test]
fn actor_target_uses_temperature_schedule() {
    let enc = SaEncoder::new(2, 2);
    let init = DnnParams::<f64>::init(enc.dim(), 4, 1, 0).unwrap();
    let mut state = NeuralAcState::new(init, 2.0, 1.0, 10, 10).unwrap();
    state.k = 3;
    state.inv_tau = 1.5;
    let q = SaTable::constant(2, 2, 1.0);
    let f = SaTable::constant(2, 2, 2.0);
    // τ̃ = 1/2, so the target is (0.5 + 1.5 * 2) / 2
    let t = actor_target(&state, &q, &f).unwrap();
    assert!((t.get(1, 0) - 1.75).abs() < 1e-15);

    state.inv_tau = 0.7;
    assert_eq!(actor_target(&state, &q, &f).unwrap_err().class(), "internal");
}

#[test]
fn dead_network_does_not_move() {
    let enc = SaEncoder::new(2, 2);
    let zero = DnnParams::<f64>::from_parts(enc.dim(), 4, vec![vec![0.0; 16], vec![0.0; 16]], vec![1.0; 4]).unwrap();
    let state = NeuralAcState::new(zero.clone(), 1.0, 1.0, 1, 1).unwrap();
    let q = SaTable::constant(2, 2, 0.8);
    let out = actor_inner_loop(&state, &q, &enc, &mut FixedPairs::new(vec![(1, 1)])).unwrap();
    assert_eq!(out.params, zero);
}

#[test]
fn zero_residual_leaves_parameters() {
    let enc = SaEncoder::new(2, 2);
    let net = silent_net(enc.dim(), 8, 3);
    let mut state = NeuralAcState::new(net.clone(), 2.0, 1.0, 5, 5).unwrap();
    state.k = 1;
    state.inv_tau = 0.5;
    let out = actor_inner_loop(&state, &SaTable::zeros(2, 2), &enc, &mut FixedPairs::new(vec![(0, 0); 5])).unwrap();
    assert_eq!(out.params, net);
    assert!(out.losses.iter().all(|&l| l == 0.0));

    let zero_r = sstac_core::TabularMdp::<f64>::new(
        2,
        2,
        0.9,
        1.0,
        vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        SaTable::zeros(2, 2),
        vec![1.0, 0.0],
    )
    .unwrap();
    let items: Vec<Transition<f64>> = (0..5)
        .map(|i| Transition { s: i % 2, a: 0, r: zero_r.reward().get(i % 2, 0), next_s: 1 - i % 2, next_a: 1 })
        .collect();
    let out = critic_inner_loop(&state, 0.9, &enc, &mut FixedTransitions::new(items)).unwrap();
    assert_eq!(out.params, net);
    assert!(out.losses.iter().all(|&l| l == 0.0));
}

#[test]
fn critic_bootstraps_from_frozen_snapshot() {
    // With a single step from the anchor, the update depends only on the
    // snapshot table, not on the iterate being trained.
    let mdp = builtin::chain2::<f64>();
    let enc = SaEncoder::new(2, 2);
    let init = DnnParams::<f64>::init(enc.dim(), 8, 2, 6).unwrap();
    let mut state = NeuralAcState::new(init.clone(), 1.0, 5.0, 1, 1).unwrap();
    let mut trained = init.clone();
    trained.weights_mut()[1].iter_mut().for_each(|w| *w *= 1.5);
    state.critic = trained.clone();

    let t = Transition { s: 0, a: 0, r: 0.0, next_s: 1, next_a: 0 };
    let out = critic_inner_loop(&state, mdp.gamma(), &enc, &mut FixedTransitions::new(vec![t])).unwrap();

    let snap = network_table(&trained, &enc).unwrap();
    let x: Vec<f64> = enc.encode(0, 0);
    let (q, g) = init.value_and_gradient(&x).unwrap();
    let delta = q - 0.9 * snap.get(1, 0);
    let mut want = init.clone();
    let w: Vec<Vec<f64>> = init
        .weights()
        .iter()
        .zip(&g)
        .map(|(w, g)| w.iter().zip(g).map(|(a, b)| a - state.eta * delta * b).collect())
        .collect();
    want.set_weights(w).unwrap();
    want.project_ball(5.0);
    assert_eq!(out.params.weights(), want.weights());
}

fn actor_population_mse(n: usize, seed: u64) -> f64 {
    let mdp = builtin::chain2::<f64>();
    let enc = SaEncoder::new(2, 2);
    let init = DnnParams::<f64>::init(enc.dim(), 16, 2, seed).unwrap();
    let mut state = NeuralAcState::new(init, 4.0, 10.0, n, n).unwrap();
    state.actor.weights_mut()[0].iter_mut().for_each(|w| *w *= 1.1);
    state.k = 2;
    state.inv_tau = 0.5;
    let f = network_table(&state.actor, &enc).unwrap();
    let pi = sstac_core::EnergyPolicy::new(state.inv_tau, f.clone()).unwrap().to_matrix().unwrap();
    let (_, rho) = mdp.stationary_dists(&pi).unwrap();
    let q = SaTable::from_rows(&[vec![0.6, 0.2], vec![0.1, 0.9]]).unwrap();
    let target = actor_target(&state, &q, &f).unwrap();
    let mut rng = stream_for(seed, Purpose::ActorLoop);
    let out = actor_inner_loop(&state, &q, &enc, &mut ExactPairs::new(&rho, &mut rng).unwrap()).unwrap();
    let fit = network_table(&out.params, &enc).unwrap();
    rho.expect(&fit.zip_map(&target, |a, b| (a - b) * (a - b)))
}

fn critic_population_mse(n: usize, seed: u64) -> f64 {
    let mdp = builtin::chain2::<f64>();
    let enc = SaEncoder::new(2, 2);
    let init = DnnParams::<f64>::init(enc.dim(), 16, 2, seed).unwrap();
    let state = NeuralAcState::new(init, 4.0, 10.0, n, n).unwrap();
    let pi = PolicyMatrix::from_rows(&[vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
    let (_, rho) = mdp.stationary_dists(&pi).unwrap();
    let q_k = network_table(&state.critic, &enc).unwrap();
    let target = mdp.bellman_eval(&pi, &q_k).unwrap();
    let mut pair_rng = stream_for(seed, Purpose::CriticLoop);
    let mut tuple_rng = stream_for(seed, Purpose::Rollout);
    let pairs = ExactPairs::new(&rho, &mut pair_rng).unwrap();
    let mut tuples = TupleSampler::new(&mdp, &pi, pairs, &mut tuple_rng).unwrap();
    let out = critic_inner_loop(&state, mdp.gamma(), &enc, &mut tuples).unwrap();
    let fit = network_table(&out.params, &enc).unwrap();
    rho.expect(&fit.zip_map(&target, |a, b| (a - b) * (a - b)))
}

#[test]
fn inner_loop_error_shrinks_with_iterations() {
    let mean = |f: fn(usize, u64) -> f64, n: usize| (0..20).map(|s| f(n, s)).sum::<f64>() / 20.0;
    let (a_small, a_big) = (mean(actor_population_mse, 200), mean(actor_population_mse, 3200));
    let (c_small, c_big) = (mean(critic_population_mse, 200), mean(critic_population_mse, 3200));
    assert!(a_big < a_small, "actor {a_small} -> {a_big}");
    assert!(c_big < c_small, "critic {c_small} -> {c_big}");
}

fn small_config(seed: u64) -> NeuralRunConfig<f64> {
    NeuralRunConfig { k: 3, n_actor: 50, n_critic: 50, width: 16, depth: 2, seed, ..Default::default() }
}

#[test]
fn one_iteration_smoke_run() {
    let cfg = NeuralRunConfig { k: 1, ..small_config(0) };
    let run = run_neural_ac(&builtin::chain2::<f64>(), &cfg).unwrap();
    assert_eq!(run.trace.rows.len(), 2);
    assert_eq!(run.losses.len(), 2);
    assert_eq!(run.losses[0].actor.len(), 50);
    let csv = run.trace.to_csv();
    assert_eq!(csv.lines().next().unwrap(), TRACE_HEADER.join(","));
    for row in &run.trace.rows {
        assert!(row.gap.is_finite() && row.lin_gap_actor.is_finite() && row.lin_gap_critic.is_finite());
        assert!(row.policy_identity_residual.is_finite());
    }
    assert_eq!(run.final_state.k, 2);
    assert!(run.final_state.actor.in_ball(10.0) && run.final_state.critic.in_ball(10.0));
    assert_eq!(run.final_state.actor.anchor(), run.final_state.critic.anchor());
}

#[test]
fn neural_run_is_deterministic() {
    let mdp = builtin::chain2::<f64>();
    let a = run_neural_ac(&mdp, &small_config(3)).unwrap().trace.to_csv();
    let b = run_neural_ac(&mdp, &small_config(3)).unwrap().trace.to_csv();
    assert_eq!(a, b);
    assert_ne!(a, run_neural_ac(&mdp, &small_config(4)).unwrap().trace.to_csv());
}

#[test]
fn alternative_samplers_run() {
    let mdp = builtin::random::<f64>(3, 2, 1).unwrap();
    for (sampling, sampler) in [
        (ActorSampling::Uniform, SamplerKind::Exact),
        (ActorSampling::Current, SamplerKind::Rollout { burn_in: None }),
    ] {
        let cfg = NeuralRunConfig { actor_sampling: sampling, sampler, radius: 0.5, ..small_config(1) };
        let run = run_neural_ac(&mdp, &cfg).unwrap();
        assert!(run.final_state.critic.in_ball(0.5));
    }
}

#[test]
fn invalid_neural_configs() {
    let mdp = builtin::chain2::<f64>();
    assert!(run_neural_ac(&mdp, &NeuralRunConfig { k: 0, ..small_config(0) }).is_err());
    assert!(run_neural_ac(&mdp, &NeuralRunConfig { n_actor: 0, ..small_config(0) }).is_err());
    assert!(run_neural_ac(&mdp, &NeuralRunConfig { step_scale: 0.0, ..small_config(0) }).is_err());
    assert!(run_neural_ac(&mdp, &NeuralRunConfig { width: 0, ..small_config(0) }).is_err());
}
