//! Single-timescale actor-critic with deep ReLU energies and critics.
//!
//! Each outer iteration fits the actor energy by projected SGD on the
//! KL-regularized regression target, then fits the critic by projected SGD
//! on one application of the Bellman evaluation operator to a frozen
//! snapshot of the previous critic. Both loops restart from the shared
//! initialization and return the average of their iterates.

use log::{debug, warn};

use crate::deep_net::{DnnParams, SaEncoder};
use crate::diagnostics::{concentrability_surrogate, error_decomposition, OptimalOracle, StepInputs};
use crate::error::{Error, Result};
use crate::linear_ac::{default_beta, RhoEval};
use crate::mdp::TabularMdp;
use crate::policy::{kl_regularized_argmax, EnergyPolicy};
use crate::sampling::{ExactPairs, PairSource, Purpose, RolloutSampler, RunRng, TransitionSource, TupleSampler};
use crate::scalar::Real;
use crate::table::{PolicyMatrix, QTable, SaTable, StateActionDist, StateDist};
use crate::trace::{IterationSnapshot, RunTrace, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralAcState<T> {
    /// Energy network `f_θ`.
    pub actor: DnnParams<T>,
    /// Critic network `Q_ω`.
    pub critic: DnnParams<T>,
    pub inv_tau: T,
    pub k: usize,
    pub beta: T,
    /// Shared radius `R_a = R_c`.
    pub radius: T,
    pub alpha: T,
    pub eta: T,
    pub n_actor: usize,
    pub n_critic: usize,
}

impl<T: Real> NeuralAcState<T> {
    /// Actor and critic both start from `init`, so `θ₀ = ω₀`.
    pub fn new(init: DnnParams<T>, beta: T, radius: T, n_actor: usize, n_critic: usize) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::Parameter(format!("β = {beta} must be positive")));
        }
        if !(radius >= T::zero()) {
            return Err(Error::Parameter(format!("radius {radius} must be nonnegative")));
        }
        if n_actor == 0 || n_critic == 0 {
            return Err(Error::Parameter("inner iteration counts must be at least 1".into()));
        }
        Ok(Self {
            actor: init.clone(),
            critic: init,
            inv_tau: T::zero(),
            k: 0,
            beta,
            radius,
            alpha: T::one() / T::from_usize_lossy(n_actor).sqrt(),
            eta: T::one() / T::from_usize_lossy(n_critic).sqrt(),
            n_actor,
            n_critic,
        })
    }
}

/// Evaluates a network on every state-action pair.
pub fn network_table<T: Real>(net: &DnnParams<T>, enc: &SaEncoder) -> Result<SaTable<T>> {
    let mut t = SaTable::zeros(enc.n_states, enc.n_actions);
    for s in 0..enc.n_states {
        for a in 0..enc.n_actions {
            t.set(s, a, net.forward(&enc.encode(s, a))?);
        }
    }
    Ok(t)
}

/// Averaged parameters plus per-step diagnostics of one inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerLoopOutput<T> {
    pub params: DnnParams<T>,
    /// Squared residual at each step.
    pub losses: Vec<T>,
    /// Largest per-layer anchor distance seen over all iterates.
    pub max_anchor_distance: T,
}

struct Averager<T> {
    mean: Vec<Vec<T>>,
    n: usize,
    max_dist: T,
}

impl<T: Real> Averager<T> {
    fn new(like: &DnnParams<T>) -> Self {
        Self {
            mean: like.weights().iter().map(|w| vec![T::zero(); w.len()]).collect(),
            n: 0,
            max_dist: T::zero(),
        }
    }

    /// Running mean, so a constant sequence averages to itself exactly.
    fn push(&mut self, p: &DnnParams<T>) {
        self.n += 1;
        let inv_n = T::one() / T::from_usize_lossy(self.n);
        for (acc, w) in self.mean.iter_mut().zip(p.weights()) {
            for (a, &b) in acc.iter_mut().zip(w) {
                *a += (b - *a) * inv_n;
            }
        }
        for d in p.distances_from_anchor() {
            self.max_dist = self.max_dist.max(d);
        }
    }

    fn finish(self, mut template: DnnParams<T>) -> (DnnParams<T>, T) {
        template.set_weights(self.mean).expect("averaged weights keep their shape");
        (template, self.max_dist)
    }
}

fn sgd_step<T: Real>(p: &mut DnnParams<T>, grad: &[Vec<T>], coef: T, radius: T) {
    for (w, g) in p.weights_mut().iter_mut().zip(grad) {
        for (a, &b) in w.iter_mut().zip(g) {
            *a -= coef * b;
        }
    }
    p.project_ball(radius);
}

/// Projected SGD on `E[(f_θ(s,a) - target(s,a))²]/2` from the anchor of
/// `start`, returning the average of iterates `1..=n`.
pub fn regression_loop<T: Real>(
    start: &DnnParams<T>,
    target: &SaTable<T>,
    enc: &SaEncoder,
    step: T,
    radius: T,
    n: usize,
    pairs: &mut dyn PairSource,
) -> Result<InnerLoopOutput<T>> {
    let mut p = start.clone();
    p.set_weights(start.anchor().to_vec())?;
    let mut avg = Averager::new(&p);
    let mut losses = Vec::with_capacity(n);
    for _ in 0..n {
        let (s, a) = pairs.next_pair()?;
        let (f, g) = p.value_and_gradient(&enc.encode(s, a))?;
        let resid = f - target.get(s, a);
        losses.push(resid * resid);
        sgd_step(&mut p, &g, step * resid, radius);
        avg.push(&p);
    }
    let (params, max_anchor_distance) = avg.finish(p);
    Ok(InnerLoopOutput {
        params,
        losses,
        max_anchor_distance,
    })
}

/// Regression target `τ̃(β⁻¹Q_{ω_k} + τ_k⁻¹ f_{θ_k})` with `τ̃⁻¹ = (k+1)β⁻¹`.
pub fn actor_target<T: Real>(state: &NeuralAcState<T>, q_omega: &QTable<T>, f_theta: &SaTable<T>) -> Result<SaTable<T>> {
    let inv_beta = T::one() / state.beta;
    let inv_tau_next = T::from_usize_lossy(state.k + 1) / state.beta;
    let drift = (inv_tau_next - (state.inv_tau + inv_beta)).abs();
    if drift > T::tol(1e-9) * inv_tau_next.max(T::one()) {
        return Err(Error::Internal(format!(
            "temperature schedule drifted: τ_{{k+1}}⁻¹ = {inv_tau_next}, τ_k⁻¹ + β⁻¹ = {}",
            state.inv_tau + inv_beta
        )));
    }
    let tau_tilde = T::one() / inv_tau_next;
    Ok(q_omega.zip_map(f_theta, |q, f| tau_tilde * (inv_beta * q + state.inv_tau * f)))
}

/// One actor update: projected SGD from `θ₀` toward [`actor_target`].
pub fn actor_inner_loop<T: Real>(
    state: &NeuralAcState<T>,
    q_omega: &QTable<T>,
    enc: &SaEncoder,
    pairs: &mut dyn PairSource,
) -> Result<InnerLoopOutput<T>> {
    let f_theta = network_table(&state.actor, enc)?;
    let target = actor_target(state, q_omega, &f_theta)?;
    regression_loop(&state.actor, &target, enc, state.alpha, state.radius, state.n_actor, pairs)
}

/// One critic update: TD(0)-style projected SGD from `ω₀` with bootstrap
/// values read from the snapshot `Q_{ω_k}` taken at entry.
pub fn critic_inner_loop<T: Real>(
    state: &NeuralAcState<T>,
    gamma: T,
    enc: &SaEncoder,
    tuples: &mut dyn TransitionSource<T>,
) -> Result<InnerLoopOutput<T>> {
    let snapshot = network_table(&state.critic, enc)?;
    let mut p = state.critic.clone();
    p.set_weights(state.critic.anchor().to_vec())?;
    let mut avg = Averager::new(&p);
    let mut losses = Vec::with_capacity(state.n_critic);
    for _ in 0..state.n_critic {
        let t = tuples.next_transition()?;
        let (q, g) = p.value_and_gradient(&enc.encode(t.s, t.a))?;
        let delta = td_residual(q, t.r, snapshot.get(t.next_s, t.next_a), gamma);
        losses.push(delta * delta);
        sgd_step(&mut p, &g, state.eta * delta, state.radius);
        avg.push(&p);
    }
    let (params, max_anchor_distance) = avg.finish(p);
    Ok(InnerLoopOutput {
        params,
        losses,
        max_anchor_distance,
    })
}

/// `δ = Q(s,a) - (1-γ) r - γ Q_{ω_k}(s',a')`.
pub fn td_residual<T: Real>(q: T, r: T, q_next: T, gamma: T) -> T {
    q - (T::one() - gamma) * r - gamma * q_next
}

/// Distribution the actor loop samples `(s,a)` from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ActorSampling {
    /// `ρ_k`, the stationary distribution of the current policy.
    #[default]
    Current,
    /// Uniform over state-action pairs.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerKind {
    /// I.i.d. draws from the exact stationary distribution.
    #[default]
    Exact,
    /// Markov-chain rollouts with `burn_in` steps (default `⌈10/(1-γ)⌉`).
    Rollout { burn_in: Option<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuralRunConfig<T> {
    pub k: usize,
    pub n_actor: usize,
    pub n_critic: usize,
    pub width: usize,
    pub depth: usize,
    pub radius: T,
    pub beta: Option<T>,
    pub seed: u64,
    pub rho_eval: RhoEval,
    pub actor_sampling: ActorSampling,
    pub sampler: SamplerKind,
    pub concentrability_horizon: usize,
    /// Multiplies both `α = N_a^{-1/2}` and `η = N_c^{-1/2}`.
    pub step_scale: T,
}

impl<T: Real> Default for NeuralRunConfig<T> {
    fn default() -> Self {
        Self {
            k: 64,
            n_actor: 400,
            n_critic: 400,
            width: 64,
            depth: 2,
            radius: T::lit(10.0),
            beta: None,
            seed: 0,
            rho_eval: RhoEval::RhoStar,
            actor_sampling: ActorSampling::Current,
            sampler: SamplerKind::Exact,
            concentrability_horizon: 20,
            step_scale: T::one(),
        }
    }
}

/// Inner-loop loss curves of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerLosses {
    pub actor: Vec<f64>,
    pub critic: Vec<f64>,
}

/// Neural run output: the trace plus per-iteration inner-loop losses.
#[derive(Debug, Clone)]
pub struct NeuralRun<T> {
    pub trace: RunTrace<T>,
    pub losses: Vec<InnerLosses>,
    pub final_state: NeuralAcState<T>,
}

fn mean_lin_gap<T: Real>(net: &DnnParams<T>, xs: &[Vec<T>]) -> Result<T> {
    let mut acc = T::zero();
    for x in xs {
        acc += net.linearization_gap(x)?;
    }
    Ok(acc / T::from_usize_lossy(xs.len().max(1)))
}

fn pair_source<'a, T: Real>(
    mdp: &'a TabularMdp<T>,
    kind: SamplerKind,
    rho: &StateActionDist<T>,
    policy: &PolicyMatrix<T>,
    rng: &'a mut rand_chacha::ChaCha8Rng,
) -> Result<Box<dyn PairSource + 'a>> {
    Ok(match kind {
        SamplerKind::Exact => Box::new(ExactPairs::new(rho, rng)?),
        SamplerKind::Rollout { burn_in } => {
            let burn_in = burn_in.unwrap_or_else(|| default_burn_in(mdp.gamma()));
            let start = StateDist::new(mdp.initial_dist().to_vec())?;
            Box::new(RolloutSampler::new(mdp, policy, &start, burn_in, rng)?)
        }
    })
}

pub fn default_burn_in<T: Real>(gamma: T) -> usize {
    (T::lit(10.0) / (T::one() - gamma)).ceil().as_f64() as usize
}

/// Runs iterations `k = 0..=K` of the neural actor-critic.
pub fn run_neural_ac<T: Real>(mdp: &TabularMdp<T>, cfg: &NeuralRunConfig<T>) -> Result<NeuralRun<T>> {
    if cfg.k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let enc = SaEncoder::new(ns, na);
    let xs: Vec<Vec<T>> = enc.encode_all();
    let beta = cfg.beta.unwrap_or_else(|| default_beta(cfg.k));
    let init = DnnParams::init(enc.dim(), cfg.width, cfg.depth, cfg.seed)?;
    let mut state = NeuralAcState::new(init, beta, cfg.radius, cfg.n_actor, cfg.n_critic)?;
    if !(cfg.step_scale > T::zero()) {
        return Err(Error::Parameter(format!("step scale {} must be positive", cfg.step_scale)));
    }
    state.alpha *= cfg.step_scale;
    state.eta *= cfg.step_scale;
    let mut rng = RunRng::new(cfg.seed);

    let oracle = OptimalOracle::compute(mdp)?;
    let rho_eval = cfg.rho_eval.resolve(mdp, &oracle);
    let uniform_sa = StateActionDist::uniform(ns, na);

    let mut f_k = network_table(&state.actor, &enc)?;
    let mut pi_k_energy = EnergyPolicy::new(state.inv_tau, f_k.clone())?;
    let mut pi_k = pi_k_energy.to_matrix()?;
    let (_, mut rho_k) = mdp.stationary_dists(&pi_k)?;
    let mut q_omega_k = network_table(&state.critic, &enc)?;
    let q_pi_0 = mdp.exact_q_pi(&pi_k)?;
    let initial_gap = rho_eval.expect(&oracle.q_star.zip_map(&q_pi_0, |x, y| x - y));

    if log::log_enabled!(log::Level::Debug) {
        for x in &xs {
            debug!("initial layer norms: {:?}", state.critic.layer_norms(x)?);
        }
    }

    let mut snapshots = vec![IterationSnapshot {
        k: 0,
        theta: None,
        omega: None,
        policy: pi_k.clone(),
        q_pi: q_pi_0,
        q_omega: q_omega_k.clone(),
    }];
    let mut rows = Vec::with_capacity(cfg.k + 1);
    let mut losses = Vec::with_capacity(cfg.k + 1);
    let mut cum = 0.0f64;

    for k in 0..=cfg.k {
        let target = actor_target(&state, &q_omega_k, &f_k)?;
        let actor_out = {
            let actor_rho = match cfg.actor_sampling {
                ActorSampling::Current => &rho_k,
                ActorSampling::Uniform => &uniform_sa,
            };
            let mut pairs = pair_source(mdp, cfg.sampler, actor_rho, &pi_k, rng.stream(Purpose::ActorLoop))?;
            regression_loop(&state.actor, &target, &enc, state.alpha, state.radius, state.n_actor, pairs.as_mut())?
        };
        let inv_tau_next = T::from_usize_lossy(k + 1) / beta;
        let f_next = network_table(&actor_out.params, &enc)?;
        let pi_next_energy = EnergyPolicy::new(inv_tau_next, f_next.clone())?;
        let pi_next = pi_next_energy.to_matrix()?;
        let (_, rho_next) = mdp.stationary_dists(&pi_next)?;

        let critic_out = {
            let (pair_rng, tuple_rng) = rng.pair(Purpose::CriticLoop, Purpose::Rollout);
            let pairs = pair_source(mdp, cfg.sampler, &rho_next, &pi_next, pair_rng)?;
            let mut tuples = TupleSampler::new(mdp, &pi_next, pairs, tuple_rng)?;
            critic_inner_loop(&state, mdp.gamma(), &enc, &mut tuples)?
        };
        let q_omega_next = network_table(&critic_out.params, &enc)?;
        let q_pi_next = mdp.exact_q_pi(&pi_next)?;

        let inputs = StepInputs {
            mdp,
            oracle: &oracle,
            rho_eval: &rho_eval,
            beta,
            pi_k: &pi_k,
            pi_next: &pi_next,
            rho_k: &rho_k,
            rho_next: &rho_next,
            q_omega_k: &q_omega_k,
            q_omega_next: &q_omega_next,
            q_pi_next: &q_pi_next,
            features: None,
        };
        let (diag, _) = error_decomposition(&inputs)?;
        cum += diag.gap.as_f64();

        let actor_rho = match cfg.actor_sampling {
            ActorSampling::Current => &rho_k,
            ActorSampling::Uniform => &uniform_sa,
        };
        let actor_mse = actor_rho.expect(&f_next.zip_map(&target, |x, y| (x - y) * (x - y)));
        let argmax = kl_regularized_argmax(&pi_k_energy, &q_omega_k, beta)?;

        let mut row = TraceRow::from_diag(k, &diag, cum);
        row.policy_identity_residual = argmax.table().sup_dist(pi_next.table()).as_f64();
        row.inv_tau = inv_tau_next.as_f64();
        row.actor_mse = actor_mse.as_f64();
        row.critic_mse = (diag.eps_c_l2 * diag.eps_c_l2).as_f64();
        row.lin_gap_actor = mean_lin_gap(&actor_out.params, &xs)?.as_f64();
        row.lin_gap_critic = mean_lin_gap(&critic_out.params, &xs)?.as_f64();
        row.critic_updates = state.n_critic;
        rows.push(row);

        for out in [&actor_out, &critic_out] {
            if out.max_anchor_distance > state.radius * (T::one() + T::tol(1e-12)) {
                return Err(Error::Internal(format!(
                    "iterate left the projection ball: distance {} > {}",
                    out.max_anchor_distance, state.radius
                )));
            }
        }
        losses.push(InnerLosses {
            actor: actor_out.losses.iter().map(|v| v.as_f64()).collect(),
            critic: critic_out.losses.iter().map(|v| v.as_f64()).collect(),
        });
        snapshots.push(IterationSnapshot {
            k: k + 1,
            theta: None,
            omega: None,
            policy: pi_next.clone(),
            q_pi: q_pi_next,
            q_omega: q_omega_next.clone(),
        });

        state.actor = actor_out.params;
        state.critic = critic_out.params;
        state.inv_tau = inv_tau_next;
        state.k = k + 1;
        f_k = f_next;
        pi_k_energy = pi_next_energy;
        pi_k = pi_next;
        rho_k = rho_next;
        q_omega_k = q_omega_next;
    }

    let visited: Vec<PolicyMatrix<T>> = snapshots.iter().skip(1).map(|s| s.policy.clone()).collect();
    let concentrability = match concentrability_surrogate(
        mdp,
        &rho_eval,
        &oracle.rho_star,
        &visited,
        cfg.concentrability_horizon,
        16,
    ) {
        Ok(c) => Some(c),
        Err(e) => {
            warn!("concentrability surrogate unavailable: {e}");
            None
        }
    };

    Ok(NeuralRun {
        trace: RunTrace {
            rows,
            snapshots,
            initial_gap: initial_gap.as_f64(),
            beta: beta.as_f64(),
            concentrability,
        },
        losses,
        final_state: state,
    })
}
