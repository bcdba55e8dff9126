//! Single-timescale actor-critic with linear energies `f_θ = θᵀφ` and linear
//! critics `Q_ω = ωᵀφ`.
//!
//! Each outer iteration applies one natural-gradient actor step and one
//! (exact, sampled or off-policy) projected least-squares application of the
//! Bellman evaluation operator.

use log::{info, warn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::diagnostics::{concentrability_surrogate, error_decomposition, OptimalOracle, StepInputs};
use crate::error::{Error, Result};
use crate::features::{min_singular_symmetric, FeatureMap};
use crate::linalg::{max_abs_diff, norm2, project_l2_ball, DenseMatrix};
use crate::mdp::TabularMdp;
use crate::policy::{kl_regularized_argmax, EnergyPolicy};
use crate::sampling::{sample_sa, sample_tuples, Purpose, RunRng, Transition};
use crate::scalar::Real;
use crate::table::{PolicyMatrix, QTable, StateActionDist};
use crate::trace::{IterationSnapshot, RunTrace, TraceRow};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearAcState<T> {
    pub theta: Vec<T>,
    pub omega: Vec<T>,
    /// `τ_k⁻¹ = k β⁻¹`.
    pub inv_tau: T,
    pub k: usize,
    pub beta: T,
    pub radius: T,
}

impl<T: Real> LinearAcState<T> {
    /// State at `k = 0`; `omega` is projected onto the radius-`R` ball.
    pub fn new(theta: Vec<T>, mut omega: Vec<T>, beta: T, radius: T) -> Result<Self> {
        if !(beta > T::zero()) || !beta.is_finite() {
            return Err(Error::Parameter(format!("β = {beta} must be positive and finite")));
        }
        if !(radius >= T::zero()) {
            return Err(Error::Parameter(format!("radius {radius} must be nonnegative")));
        }
        if theta.len() != omega.len() {
            return Err(Error::Contract(format!(
                "θ has length {}, ω has length {}",
                theta.len(),
                omega.len()
            )));
        }
        project_l2_ball(&mut omega, radius);
        Ok(Self {
            theta,
            omega,
            inv_tau: T::zero(),
            k: 0,
            beta,
            radius,
        })
    }

    /// Energy policy `π_{θ_k} ∝ exp(τ_k⁻¹ θ_kᵀφ)`.
    pub fn policy(&self, features: &FeatureMap<T>) -> Result<EnergyPolicy<T>> {
        EnergyPolicy::new(self.inv_tau, features.evaluate(&self.theta)?)
    }

    pub fn q_omega(&self, features: &FeatureMap<T>) -> Result<QTable<T>> {
        features.evaluate(&self.omega)
    }

    /// `θ_{k+1} = τ_{k+1}(β⁻¹ω_k + τ_k⁻¹θ_k)` with `τ_{k+1}⁻¹ = (k+1)β⁻¹`.
    pub fn actor_step(&self) -> Self {
        let k = self.k + 1;
        let inv_tau = T::from_usize_lossy(k) / self.beta;
        let inv_beta = T::one() / self.beta;
        let theta = self
            .theta
            .iter()
            .zip(&self.omega)
            .map(|(&th, &om)| (inv_beta * om + self.inv_tau * th) / inv_tau)
            .collect();
        Self {
            theta,
            omega: self.omega.clone(),
            inv_tau,
            k,
            beta: self.beta,
            radius: self.radius,
        }
    }
}

/// Least-squares solve options shared by all critic variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticSolveOptions<T> {
    /// Ridge `λ` added to the Gram matrix; 0 disables it.
    pub ridge: T,
    /// Smallest admissible Gram singular value when the ridge is disabled.
    pub min_singular: T,
}

impl<T: Real> Default for CriticSolveOptions<T> {
    fn default() -> Self {
        Self {
            ridge: T::zero(),
            min_singular: T::lit(1e-10),
        }
    }
}

fn solve_projected<T: Real>(
    mut gram: DenseMatrix<T>,
    moment: &[T],
    radius: T,
    opts: &CriticSolveOptions<T>,
    hint: &str,
) -> Result<Vec<T>> {
    if opts.ridge > T::zero() {
        info!("critic ridge active: λ = {}", opts.ridge);
        for i in 0..gram.rows() {
            gram[(i, i)] += opts.ridge;
        }
    } else {
        let sigma = min_singular_symmetric(&gram)?;
        if !(sigma >= opts.min_singular) {
            return Err(Error::Conditioning {
                sigma_min: sigma.as_f64(),
                threshold: opts.min_singular.as_f64(),
                hint: hint.to_string(),
            });
        }
    }
    let mut w = gram.solve(moment)?;
    project_l2_ball(&mut w, radius);
    Ok(w)
}

/// Population critic: `Γ_R{(E_ρ[φφᵀ])⁻¹ E_ρ[(𝕋^{π_{k+1}} Q_{ω_k}) φ]}` with `ρ = ρ_{k+1}`.
pub fn critic_step_exact<T: Real>(
    state: &LinearAcState<T>,
    mdp: &TabularMdp<T>,
    pi_next: &PolicyMatrix<T>,
    features: &FeatureMap<T>,
    rho_next: &StateActionDist<T>,
    opts: &CriticSolveOptions<T>,
) -> Result<Vec<T>> {
    let target = mdp.bellman_eval(pi_next, &state.q_omega(features)?)?;
    let gram = features.gram(rho_next)?;
    let moment = features.moment(rho_next, &target)?;
    solve_projected(gram, &moment, state.radius, opts, "feature Gram matrix is singular under ρ; enable a ridge")
}

/// Gram pairs and target tuples for the sampled critic.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionBatch<T> {
    pub gram_pairs: Vec<(usize, usize)>,
    pub targets: Vec<Transition<T>>,
}

impl<T: Real> TransitionBatch<T> {
    /// Draws `n` Gram pairs and `n` target tuples from `ρ`, independently
    /// unless `shared` is set, in which case the Gram pairs are the `(s,a)`
    /// of the target tuples.
    pub fn sample<R: Rng + ?Sized>(
        mdp: &TabularMdp<T>,
        rho: &StateActionDist<T>,
        pi_next: &PolicyMatrix<T>,
        gram_rng: &mut R,
        target_rng: &mut R,
        n: usize,
        shared: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("batch size must be at least 1".into()));
        }
        let targets = sample_tuples(mdp, rho, pi_next, target_rng, n)?;
        let gram_pairs = if shared {
            targets.iter().map(|t| (t.s, t.a)).collect()
        } else {
            sample_sa(rho, gram_rng, n)?
        };
        Ok(Self { gram_pairs, targets })
    }
}

fn empirical_gram<T: Real>(features: &FeatureMap<T>, pairs: &[(usize, usize)]) -> DenseMatrix<T> {
    let d = features.dim();
    let mut g = DenseMatrix::zeros(d, d);
    for &(s, a) in pairs {
        let phi = features.phi(s, a);
        for i in 0..d {
            if phi[i] == T::zero() {
                continue;
            }
            for j in 0..d {
                g[(i, j)] += phi[i] * phi[j];
            }
        }
    }
    let n = T::from_usize_lossy(pairs.len().max(1));
    for i in 0..d {
        for j in 0..d {
            g[(i, j)] /= n;
        }
    }
    g
}

fn empirical_moment<T: Real>(
    features: &FeatureMap<T>,
    items: impl Iterator<Item = ((usize, usize), T)>,
) -> Vec<T> {
    let d = features.dim();
    let mut b = vec![T::zero(); d];
    let mut n = 0usize;
    for ((s, a), y) in items {
        for (bi, &p) in b.iter_mut().zip(features.phi(s, a)) {
            *bi += y * p;
        }
        n += 1;
    }
    let n = T::from_usize_lossy(n.max(1));
    b.iter_mut().for_each(|x| *x /= n);
    b
}

/// Sampled critic with bootstrap targets `(1-γ) r + γ Q_{ω_k}(s', a')`.
pub fn critic_step_sampled<T: Real>(
    state: &LinearAcState<T>,
    gamma: T,
    batch: &TransitionBatch<T>,
    features: &FeatureMap<T>,
    opts: &CriticSolveOptions<T>,
) -> Result<Vec<T>> {
    let q = state.q_omega(features)?;
    let gram = empirical_gram(features, &batch.gram_pairs);
    let moment = empirical_moment(
        features,
        batch.targets.iter().map(|t| {
            (
                (t.s, t.a),
                (T::one() - gamma) * t.r + gamma * q.get(t.next_s, t.next_a),
            )
        }),
    );
    solve_projected(
        gram,
        &moment,
        state.radius,
        opts,
        "empirical Gram matrix is singular; increase N or enable a ridge",
    )
}

/// One behavioral transition `(s, a, r, s')`, reusable across iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BehaviorTransition<T> {
    pub s: usize,
    pub a: usize,
    pub r: T,
    pub next_s: usize,
}

/// Behavioral data for the off-policy critic.
#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorData<T> {
    Distribution(StateActionDist<T>),
    /// A fixed batch; the next action is integrated out exactly under `π_{k+1}`.
    Batch(Vec<BehaviorTransition<T>>),
}

impl<T: Real> BehaviorData<T> {
    /// `n` transitions with `(s,a) ∼ ρ_bhv`, `s' ∼ P(·|s,a)`.
    pub fn sample_batch<R: Rng + ?Sized>(
        mdp: &TabularMdp<T>,
        rho_bhv: &StateActionDist<T>,
        rng: &mut R,
        n: usize,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("behavioral batch size must be at least 1".into()));
        }
        // a' is irrelevant here; any full-support row works for the draw.
        let uniform = PolicyMatrix::uniform(mdp.n_states(), mdp.n_actions());
        let tuples = sample_tuples(mdp, rho_bhv, &uniform, rng, n)?;
        Ok(Self::Batch(
            tuples
                .into_iter()
                .map(|t| BehaviorTransition {
                    s: t.s,
                    a: t.a,
                    r: t.r,
                    next_s: t.next_s,
                })
                .collect(),
        ))
    }
}

/// Off-policy critic: the Gram matrix and regression weights come from `ρ_bhv`
/// while the bootstrap target follows `π_{k+1}`.
pub fn critic_step_offpolicy<T: Real>(
    state: &LinearAcState<T>,
    mdp: &TabularMdp<T>,
    behavior: &BehaviorData<T>,
    pi_next: &PolicyMatrix<T>,
    features: &FeatureMap<T>,
    opts: &CriticSolveOptions<T>,
) -> Result<Vec<T>> {
    match behavior {
        BehaviorData::Distribution(rho) => critic_step_exact(state, mdp, pi_next, features, rho, opts),
        BehaviorData::Batch(items) => {
            if items.is_empty() {
                return Err(Error::Sampling("behavioral batch is empty".into()));
            }
            let q = state.q_omega(features)?;
            let v_next = mdp.policy_average(pi_next, &q)?;
            let gamma = mdp.gamma();
            let pairs: Vec<_> = items.iter().map(|t| (t.s, t.a)).collect();
            let gram = empirical_gram(features, &pairs);
            let moment = empirical_moment(
                features,
                items
                    .iter()
                    .map(|t| ((t.s, t.a), (T::one() - gamma) * t.r + gamma * v_next[t.next_s])),
            );
            solve_projected(
                gram,
                &moment,
                state.radius,
                opts,
                "behavioral Gram matrix is singular; enlarge the batch or enable a ridge",
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CriticMode {
    #[default]
    Exact,
    Sampled,
    OffPolicy,
}

/// Distribution `ρ` used to score the per-iterate gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoEval {
    #[default]
    RhoStar,
    Uniform,
}

impl RhoEval {
    pub fn resolve<T: Real>(self, mdp: &TabularMdp<T>, oracle: &OptimalOracle<T>) -> StateActionDist<T> {
        match self {
            RhoEval::RhoStar => oracle.rho_star.clone(),
            RhoEval::Uniform => StateActionDist::uniform(mdp.n_states(), mdp.n_actions()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRunConfig<T> {
    /// Iterations run for `k = 0..=K`.
    pub k: usize,
    /// Batch size in sampled and off-policy modes.
    pub batch_size: usize,
    pub mode: CriticMode,
    pub seed: u64,
    /// Critic radius; `2 r_max / (1-γ)` when unset.
    pub radius: Option<T>,
    /// Temperature; `√K` when unset.
    pub beta: Option<T>,
    pub rho_eval: RhoEval,
    pub solve: CriticSolveOptions<T>,
    pub shared_batch: bool,
    /// Standard deviation of the Gaussian draws for `θ_0`, `ω_0`.
    pub init_scale: T,
    pub concentrability_horizon: usize,
}

impl<T: Real> Default for LinearRunConfig<T> {
    fn default() -> Self {
        Self {
            k: 64,
            batch_size: 256,
            mode: CriticMode::Exact,
            seed: 0,
            radius: None,
            beta: None,
            rho_eval: RhoEval::RhoStar,
            solve: CriticSolveOptions::default(),
            shared_batch: false,
            init_scale: T::lit(0.1),
            concentrability_horizon: 20,
        }
    }
}

pub fn default_radius<T: Real>(mdp: &TabularMdp<T>) -> T {
    T::lit(2.0) * mdp.r_max() / (T::one() - mdp.gamma())
}

pub fn default_beta<T: Real>(k: usize) -> T {
    T::from_usize_lossy(k).sqrt()
}

pub(crate) fn gaussian_vec<T: Real, R: Rng + ?Sized>(rng: &mut R, n: usize, scale: T) -> Vec<T> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z) * scale
        })
        .collect()
}

/// Runs iterations `k = 0..=K` and records one trace row per iteration.
pub fn run_linear_ac<T: Real>(
    mdp: &TabularMdp<T>,
    features: &FeatureMap<T>,
    cfg: &LinearRunConfig<T>,
) -> Result<RunTrace<T>> {
    if cfg.k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    if cfg.mode != CriticMode::Exact && cfg.batch_size == 0 {
        return Err(Error::Parameter("N must be at least 1 in sampled modes".into()));
    }
    if features.n_states() != mdp.n_states() || features.n_actions() != mdp.n_actions() {
        return Err(Error::Contract("feature map shape does not match the MDP".into()));
    }
    let beta = cfg.beta.unwrap_or_else(|| default_beta(cfg.k));
    let radius = cfg.radius.unwrap_or_else(|| default_radius(mdp));
    let mut rng = RunRng::new(cfg.seed);
    let d = features.dim();

    let oracle = OptimalOracle::compute(mdp)?;
    let rho_eval = cfg.rho_eval.resolve(mdp, &oracle);

    let init = rng.stream(Purpose::Init);
    let omega0 = gaussian_vec(init, d, cfg.init_scale);
    let theta0 = gaussian_vec(init, d, cfg.init_scale);
    let mut state = LinearAcState::new(theta0, omega0, beta, radius)?;

    let behavior = match cfg.mode {
        CriticMode::OffPolicy => {
            let uniform = PolicyMatrix::uniform(mdp.n_states(), mdp.n_actions());
            let (_, rho_bhv) = mdp.stationary_dists(&uniform)?;
            Some(BehaviorData::sample_batch(
                mdp,
                &rho_bhv,
                rng.stream(Purpose::TargetBatch),
                cfg.batch_size,
            )?)
        }
        _ => None,
    };

    let mut pi_k_energy = state.policy(features)?;
    let mut pi_k = pi_k_energy.to_matrix()?;
    let (_, mut rho_k) = mdp.stationary_dists(&pi_k)?;
    let mut q_omega_k = state.q_omega(features)?;
    let q_pi_0 = mdp.exact_q_pi(&pi_k)?;
    let initial_gap = rho_eval.expect(&oracle.q_star.zip_map(&q_pi_0, |x, y| x - y));

    let mut snapshots = vec![IterationSnapshot {
        k: 0,
        theta: Some(state.theta.clone()),
        omega: Some(state.omega.clone()),
        policy: pi_k.clone(),
        q_pi: q_pi_0,
        q_omega: q_omega_k.clone(),
    }];
    let mut rows = Vec::with_capacity(cfg.k + 1);
    let mut omega_sum = vec![T::zero(); d];
    let mut cum = 0.0f64;

    for k in 0..=cfg.k {
        for (acc, &w) in omega_sum.iter_mut().zip(&state.omega) {
            *acc += w;
        }
        let mut next = state.actor_step();
        let pi_next_energy = next.policy(features)?;
        let pi_next = pi_next_energy.to_matrix()?;
        let (_, rho_next) = mdp.stationary_dists(&pi_next)?;

        let omega_next = match cfg.mode {
            CriticMode::Exact => critic_step_exact(&next, mdp, &pi_next, features, &rho_next, &cfg.solve)?,
            CriticMode::Sampled => {
                let (gram_rng, target_rng) = rng.pair(Purpose::GramBatch, Purpose::TargetBatch);
                let batch = TransitionBatch::sample(
                    mdp,
                    &rho_next,
                    &pi_next,
                    gram_rng,
                    target_rng,
                    cfg.batch_size,
                    cfg.shared_batch,
                )?;
                critic_step_sampled(&next, mdp.gamma(), &batch, features, &cfg.solve)?
            }
            CriticMode::OffPolicy => critic_step_offpolicy(
                &next,
                mdp,
                behavior.as_ref().expect("behavior batch sampled above"),
                &pi_next,
                features,
                &cfg.solve,
            )?,
        };
        next.omega = omega_next;
        let q_omega_next = next.q_omega(features)?;
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
            features: Some(features),
        };
        let (diag, _) = error_decomposition(&inputs)?;
        cum += diag.gap.as_f64();

        let mean_omega: Vec<T> = omega_sum
            .iter()
            .map(|&x| x / T::from_usize_lossy(k + 1))
            .collect();
        let argmax = kl_regularized_argmax(&pi_k_energy, &q_omega_k, beta)?;
        // f_{θ_{k+1}} - τ_{k+1}(β⁻¹Q_{ω_k} + τ_k⁻¹ f_{θ_k})
        let f_next = pi_next_energy.energy();
        let regression_target = q_omega_k.zip_map(pi_k_energy.energy(), |q, f| {
            (q / beta + state.inv_tau * f) / next.inv_tau
        });
        let actor_mse = rho_k.expect(&f_next.zip_map(&regression_target, |x, y| (x - y) * (x - y)));

        let mut row = TraceRow::from_diag(k, &diag, cum);
        row.avg_identity_residual = max_abs_diff(&next.theta, &mean_omega).as_f64();
        row.policy_identity_residual = argmax.table().sup_dist(pi_next.table()).as_f64();
        row.omega_norm = norm2(&next.omega).as_f64();
        row.inv_tau = next.inv_tau.as_f64();
        row.actor_mse = actor_mse.as_f64();
        row.critic_mse = (diag.eps_c_l2 * diag.eps_c_l2).as_f64();
        rows.push(row);

        snapshots.push(IterationSnapshot {
            k: k + 1,
            theta: Some(next.theta.clone()),
            omega: Some(next.omega.clone()),
            policy: pi_next.clone(),
            q_pi: q_pi_next,
            q_omega: q_omega_next.clone(),
        });

        state = next;
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

    Ok(RunTrace {
        rows,
        snapshots,
        initial_gap: initial_gap.as_f64(),
        beta: beta.as_f64(),
        concentrability,
    })
}
