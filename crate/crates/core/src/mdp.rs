//! Finite discounted MDPs with exact operators and dynamic-programming oracles.
//!
//! Values are normalized by `(1 - γ)`, so `Q^π(s,a) = (1-γ) E[Σ_t γ^t r_t]`
//! and every action-value lies in `[-r_max, r_max]`.

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::scalar::Real;
use crate::table::{PolicyMatrix, QTable, SaTable, StateActionDist, StateDist};

/// Upper bound on `n_states * n_actions`; all solves are dense.
pub const MAX_STATE_ACTION_PAIRS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp<T> {
    n_states: usize,
    n_actions: usize,
    gamma: T,
    r_max: T,
    /// `P[s][a][s']` at `(s * n_actions + a) * n_states + s'`.
    transition: Vec<T>,
    reward: SaTable<T>,
    initial_dist: Vec<T>,
}

/// JSON document form of an MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpDocument {
    pub n_states: usize,
    pub n_actions: usize,
    pub gamma: f64,
    pub r_max: f64,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<Vec<f64>>,
    pub initial_dist: Vec<f64>,
}

/// Settings for [`TabularMdp::stationary_dists_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationaryOptions {
    pub damping: f64,
    pub warm_start_iters: usize,
    pub max_iter: usize,
    pub tol: f64,
    /// Dense null-space solve is attempted for chains up to this many states.
    pub dense_fallback_max_states: usize,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self {
            damping: 1e-6,
            warm_start_iters: 64,
            max_iter: 2000,
            tol: 1e-10,
            dense_fallback_max_states: 64,
        }
    }
}

impl<T: Real> TabularMdp<T> {
    /// Builds and validates an MDP. `transition` is indexed `[s][a][s']` flattened.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        gamma: T,
        r_max: T,
        transition: Vec<T>,
        reward: SaTable<T>,
        initial_dist: Vec<T>,
    ) -> Result<Self> {
        let mdp = Self {
            n_states,
            n_actions,
            gamma,
            r_max,
            transition,
            reward,
            initial_dist,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        let (ns, na) = (self.n_states, self.n_actions);
        if ns == 0 || na == 0 {
            return Err(Error::Invalid(format!(
                "n_states and n_actions must be positive (got {ns}, {na})"
            )));
        }
        if ns * na > MAX_STATE_ACTION_PAIRS {
            return Err(Error::Invalid(format!(
                "n_states*n_actions = {} exceeds the cap of {MAX_STATE_ACTION_PAIRS}",
                ns * na
            )));
        }
        if !(self.gamma >= T::zero() && self.gamma < T::one()) {
            return Err(Error::Invalid(format!("gamma = {} not in [0,1)", self.gamma)));
        }
        if !(self.r_max > T::zero()) || !self.r_max.is_finite() {
            return Err(Error::Invalid(format!("r_max = {} must be positive and finite", self.r_max)));
        }
        if self.transition.len() != ns * na * ns {
            return Err(Error::Invalid(format!(
                "transition has {} entries, expected {ns}x{na}x{ns}",
                self.transition.len()
            )));
        }
        let tol = T::tol(1e-12);
        for s in 0..ns {
            for a in 0..na {
                let row = self.next_state_probs(s, a);
                if let Some(sp) = row.iter().position(|&p| !(p >= T::zero()) || !p.is_finite()) {
                    return Err(Error::Invalid(format!(
                        "transition[{s}][{a}][{sp}] = {} is not a nonnegative probability",
                        row[sp]
                    )));
                }
                let sum: T = row.iter().copied().sum();
                if (sum - T::one()).abs() > tol {
                    return Err(Error::Invalid(format!(
                        "transition[{s}][{a}] sums to {sum}, must sum to 1"
                    )));
                }
            }
        }
        self.reward.check_shape(ns, na, "reward").map_err(|_| {
            Error::Invalid(format!(
                "reward is {}x{}, expected {ns}x{na}",
                self.reward.n_states(),
                self.reward.n_actions()
            ))
        })?;
        for s in 0..ns {
            for a in 0..na {
                let r = self.reward.get(s, a);
                if !r.is_finite() || r.abs() > self.r_max + tol {
                    return Err(Error::Invalid(format!(
                        "reward[{s}][{a}] = {r} violates |r| <= r_max = {}",
                        self.r_max
                    )));
                }
            }
        }
        if self.initial_dist.len() != ns {
            return Err(Error::Invalid(format!(
                "initial_dist has {} entries, expected {ns}",
                self.initial_dist.len()
            )));
        }
        if let Some(s) = self.initial_dist.iter().position(|&p| !(p >= T::zero())) {
            return Err(Error::Invalid(format!(
                "initial_dist[{s}] = {} is negative",
                self.initial_dist[s]
            )));
        }
        let z: T = self.initial_dist.iter().copied().sum();
        if (z - T::one()).abs() > tol {
            return Err(Error::Invalid(format!("initial_dist sums to {z}, must sum to 1")));
        }
        Ok(())
    }

    pub fn from_document(doc: &MdpDocument) -> Result<Self> {
        let (ns, na) = (doc.n_states, doc.n_actions);
        if doc.transition.len() != ns {
            return Err(Error::Invalid(format!(
                "transition has {} state blocks, expected {ns}",
                doc.transition.len()
            )));
        }
        let mut transition = Vec::with_capacity(ns * na * ns);
        for (s, block) in doc.transition.iter().enumerate() {
            if block.len() != na {
                return Err(Error::Invalid(format!(
                    "transition[{s}] has {} actions, expected {na}",
                    block.len()
                )));
            }
            for (a, row) in block.iter().enumerate() {
                if row.len() != ns {
                    return Err(Error::Invalid(format!(
                        "transition[{s}][{a}] has {} entries, expected {ns}",
                        row.len()
                    )));
                }
                transition.extend(row.iter().map(|&p| T::lit(p)));
            }
        }
        if doc.reward.len() != ns || doc.reward.iter().any(|r| r.len() != na) {
            return Err(Error::Invalid(format!("reward must be {ns}x{na}")));
        }
        let reward = SaTable::from_fn(ns, na, |s, a| T::lit(doc.reward[s][a]));
        Self::new(
            ns,
            na,
            T::lit(doc.gamma),
            T::lit(doc.r_max),
            transition,
            reward,
            doc.initial_dist.iter().map(|&p| T::lit(p)).collect(),
        )
    }

    pub fn to_document(&self) -> MdpDocument {
        let (ns, na) = (self.n_states, self.n_actions);
        MdpDocument {
            n_states: ns,
            n_actions: na,
            gamma: self.gamma.as_f64(),
            r_max: self.r_max.as_f64(),
            transition: (0..ns)
                .map(|s| {
                    (0..na)
                        .map(|a| self.next_state_probs(s, a).iter().map(|p| p.as_f64()).collect())
                        .collect()
                })
                .collect(),
            reward: (0..ns)
                .map(|s| self.reward.row(s).iter().map(|r| r.as_f64()).collect())
                .collect(),
            initial_dist: self.initial_dist.iter().map(|p| p.as_f64()).collect(),
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, MdpLoadError> {
        let doc: MdpDocument = serde_json::from_str(text).map_err(MdpLoadError::Parse)?;
        Self::from_document(&doc).map_err(MdpLoadError::Invalid)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("MDP document serializes")
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn gamma(&self) -> T {
        self.gamma
    }

    #[inline]
    pub fn r_max(&self) -> T {
        self.r_max
    }

    pub fn reward(&self) -> &SaTable<T> {
        &self.reward
    }

    pub fn initial_dist(&self) -> &[T] {
        &self.initial_dist
    }

    #[inline]
    pub fn next_state_probs(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }

    #[inline]
    pub fn transition_prob(&self, s: usize, a: usize, next: usize) -> T {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    /// Copy of this MDP with a different initial distribution.
    pub fn with_initial_dist(&self, initial_dist: Vec<T>) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.gamma,
            self.r_max,
            self.transition.clone(),
            self.reward.clone(),
            initial_dist,
        )
    }

    fn check_policy(&self, pi: &PolicyMatrix<T>) -> Result<()> {
        pi.table().check_shape(self.n_states, self.n_actions, "policy")
    }

    fn check_q(&self, q: &QTable<T>) -> Result<()> {
        q.check_shape(self.n_states, self.n_actions, "Q table")
    }

    /// `[ℙ g](s,a) = Σ_{s'} P(s'|s,a) g(s')`.
    pub fn apply_p(&self, g: &[T]) -> Result<QTable<T>> {
        if g.len() != self.n_states {
            return Err(Error::Contract(format!(
                "state function has {} entries, expected {}",
                g.len(),
                self.n_states
            )));
        }
        Ok(SaTable::from_fn(self.n_states, self.n_actions, |s, a| {
            crate::linalg::dot(self.next_state_probs(s, a), g)
        }))
    }

    /// `V(s) = Σ_a π(a|s) g(s,a)`.
    pub fn policy_average(&self, pi: &PolicyMatrix<T>, g: &QTable<T>) -> Result<Vec<T>> {
        self.check_policy(pi)?;
        self.check_q(g)?;
        Ok((0..self.n_states)
            .map(|s| crate::linalg::dot(pi.row(s), g.row(s)))
            .collect())
    }

    /// `[ℙ^π g](s,a) = Σ_{s'} P(s'|s,a) Σ_{a'} π(a'|s') g(s',a')`.
    pub fn apply_p_pi(&self, pi: &PolicyMatrix<T>, g: &QTable<T>) -> Result<QTable<T>> {
        let v = self.policy_average(pi, g)?;
        self.apply_p(&v)
    }

    /// Bellman evaluation operator `𝕋^π Q = (1-γ) r + γ ℙ^π Q`.
    pub fn bellman_eval(&self, pi: &PolicyMatrix<T>, q: &QTable<T>) -> Result<QTable<T>> {
        let pq = self.apply_p_pi(pi, q)?;
        let c = T::one() - self.gamma;
        Ok(self.reward.zip_map(&pq, |r, x| c * r + self.gamma * x))
    }

    /// State transition matrix `P_π[s][s'] = Σ_a π(a|s) P(s'|s,a)`.
    pub fn state_transition_matrix(&self, pi: &PolicyMatrix<T>) -> Result<DenseMatrix<T>> {
        self.check_policy(pi)?;
        let ns = self.n_states;
        let mut m = DenseMatrix::zeros(ns, ns);
        for s in 0..ns {
            for a in 0..self.n_actions {
                let p = pi.prob(s, a);
                if p == T::zero() {
                    continue;
                }
                for (sp, &q) in self.next_state_probs(s, a).iter().enumerate() {
                    m[(s, sp)] += p * q;
                }
            }
        }
        Ok(m)
    }

    /// Exact `V^π` from `(I - γ P_π) V = (1-γ) r_π`.
    pub fn exact_v_pi(&self, pi: &PolicyMatrix<T>) -> Result<Vec<T>> {
        let p_pi = self.state_transition_matrix(pi)?;
        let ns = self.n_states;
        let mut a = DenseMatrix::identity(ns);
        for i in 0..ns {
            for j in 0..ns {
                a[(i, j)] -= self.gamma * p_pi[(i, j)];
            }
        }
        let c = T::one() - self.gamma;
        let r_pi: Vec<T> = (0..ns)
            .map(|s| c * crate::linalg::dot(pi.row(s), self.reward.row(s)))
            .collect();
        a.solve(&r_pi)
            .map_err(|e| Error::Internal(format!("policy evaluation solve failed: {e}")))
    }

    /// Exact `Q^π`, the unique fixed point of `𝕋^π`.
    pub fn exact_q_pi(&self, pi: &PolicyMatrix<T>) -> Result<QTable<T>> {
        let v = self.exact_v_pi(pi)?;
        let pv = self.apply_p(&v)?;
        let c = T::one() - self.gamma;
        Ok(self.reward.zip_map(&pv, |r, x| c * r + self.gamma * x))
    }

    /// Deterministic greedy policy; ties go to the lowest action index.
    pub fn greedy(&self, q: &QTable<T>) -> Result<PolicyMatrix<T>> {
        self.check_q(q)?;
        let tie = T::tol(1e-12) * T::one().max(q.sup_norm());
        let actions: Vec<usize> = (0..self.n_states)
            .map(|s| {
                let row = q.row(s);
                let mut best = 0;
                for (a, &v) in row.iter().enumerate().skip(1) {
                    if v > row[best] + tie {
                        best = a;
                    }
                }
                best
            })
            .collect();
        Ok(PolicyMatrix::deterministic(self.n_actions, &actions))
    }

    /// Optimal action-values and a greedy optimal policy.
    ///
    /// Value iteration runs until the sup-norm change is at most
    /// `tol (1-γ) / (2γ)`; the greedy policy is then polished by exact policy
    /// iteration and the returned table is its exact action-value.
    pub fn optimal_q(&self, tol: T) -> Result<(QTable<T>, PolicyMatrix<T>)> {
        if !(tol > T::zero()) {
            return Err(Error::Parameter(format!("optimal_q tolerance {tol} must be positive")));
        }
        let c = T::one() - self.gamma;
        let stop = if self.gamma > T::zero() {
            tol * c / (T::lit(2.0) * self.gamma)
        } else {
            T::infinity()
        };
        let mut q = SaTable::zeros(self.n_states, self.n_actions);
        for _ in 0..1_000_000 {
            let v: Vec<T> = (0..self.n_states)
                .map(|s| q.row(s).iter().copied().fold(T::neg_infinity(), T::max))
                .collect();
            let pv = self.apply_p(&v)?;
            let next = self.reward.zip_map(&pv, |r, x| c * r + self.gamma * x);
            let delta = next.sup_dist(&q);
            q = next;
            if delta <= stop {
                break;
            }
        }
        let mut pi = self.greedy(&q)?;
        let mut q_pi = self.exact_q_pi(&pi)?;
        for _ in 0..100 {
            let improved = self.greedy(&q_pi)?;
            if improved == pi {
                break;
            }
            pi = improved;
            q_pi = self.exact_q_pi(&pi)?;
        }
        Ok((q_pi, pi))
    }

    pub fn stationary_dists(&self, pi: &PolicyMatrix<T>) -> Result<(StateDist<T>, StateActionDist<T>)> {
        self.stationary_dists_with(pi, &StationaryOptions::default())
    }

    /// Stationary state and state-action distributions of the chain induced by `pi`.
    ///
    /// Damped power iteration warms up, undamped iteration refines, and a
    /// Cesàro average absorbs periodic oscillation. Small chains that still
    /// miss the residual target fall back to a dense null-space solve.
    pub fn stationary_dists_with(
        &self,
        pi: &PolicyMatrix<T>,
        opts: &StationaryOptions,
    ) -> Result<(StateDist<T>, StateActionDist<T>)> {
        let p_pi = self.state_transition_matrix(pi)?;
        let ns = self.n_states;
        let tol = T::tol(opts.tol);
        let kappa = T::lit(opts.damping);
        let uniform = T::one() / T::from_usize_lossy(ns);
        let residual = |nu: &[T]| -> T {
            p_pi.vec_mul(nu)
                .iter()
                .zip(nu)
                .map(|(&x, &y)| (x - y).abs())
                .sum()
        };

        let mut nu = vec![uniform; ns];
        for _ in 0..opts.warm_start_iters {
            nu = p_pi
                .vec_mul(&nu)
                .into_iter()
                .map(|x| (T::one() - kappa) * x + kappa * uniform)
                .collect();
        }
        let mut avg = vec![T::zero(); ns];
        let mut found = None;
        for it in 0..opts.max_iter {
            let next = p_pi.vec_mul(&nu);
            for (acc, &x) in avg.iter_mut().zip(&next) {
                *acc += x;
            }
            nu = next;
            if it % 8 == 7 && residual(&nu) <= tol / T::lit(4.0) {
                found = Some(nu.clone());
                break;
            }
        }
        let candidate = match found {
            Some(nu) => Some(nu),
            None if opts.max_iter > 0 => {
                let n = T::from_usize_lossy(opts.max_iter);
                let cesaro: Vec<T> = avg.iter().map(|&x| x / n).collect();
                (residual(&cesaro) <= tol / T::lit(4.0)).then_some(cesaro)
            }
            None => None,
        };
        let nu = match candidate {
            Some(nu) => nu,
            None if ns <= opts.dense_fallback_max_states => {
                debug!("power iteration did not settle; using dense null-space solve");
                self.dense_stationary(&p_pi)?
            }
            None => {
                return Err(Error::Ergodicity(format!(
                    "power iteration did not converge within {} iterations for the given policy",
                    opts.max_iter
                )))
            }
        };
        let total: T = nu.iter().copied().sum();
        let nu: Vec<T> = nu.into_iter().map(|x| x.max(T::zero()) / total).collect();
        if residual(&nu) > tol {
            return Err(Error::Ergodicity(format!(
                "stationary residual {} exceeds {tol} for the given policy",
                residual(&nu)
            )));
        }
        let nu = StateDist::new(nu)?;
        let rho = StateActionDist::from_state_and_policy(&nu, pi);
        Ok((nu, rho))
    }

    fn dense_stationary(&self, p_pi: &DenseMatrix<T>) -> Result<Vec<T>> {
        let ns = self.n_states;
        let mut a = p_pi.transpose();
        for i in 0..ns {
            a[(i, i)] -= T::one();
        }
        for j in 0..ns {
            a[(ns - 1, j)] = T::one();
        }
        let mut b = vec![T::zero(); ns];
        b[ns - 1] = T::one();
        let nu = Lu::factor(&a)
            .and_then(|lu| lu.solve(&b))
            .map_err(|_| {
                Error::Ergodicity(
                    "induced chain has no unique stationary distribution (reducible) for the given policy"
                        .into(),
                )
            })?;
        let floor = -T::tol(1e-9);
        if nu.iter().any(|&x| x < floor) {
            return Err(Error::Ergodicity(
                "dense stationary solve produced negative mass for the given policy".into(),
            ));
        }
        Ok(nu)
    }

    /// Discounted visitation `ϱ_π(s,a) = (1-γ) Σ_t γ^t Pr[s_t=s, a_t=a]` from the initial distribution.
    pub fn visitation_dist(&self, pi: &PolicyMatrix<T>) -> Result<StateActionDist<T>> {
        let p_pi = self.state_transition_matrix(pi)?;
        let ns = self.n_states;
        let mut a = DenseMatrix::identity(ns);
        for i in 0..ns {
            for j in 0..ns {
                a[(i, j)] -= self.gamma * p_pi[(j, i)];
            }
        }
        let c = T::one() - self.gamma;
        let rhs: Vec<T> = self.initial_dist.iter().map(|&z| c * z).collect();
        let d = a
            .solve(&rhs)
            .map_err(|e| Error::Internal(format!("occupancy solve failed: {e}")))?;
        let d: Vec<T> = d.into_iter().map(|x| x.max(T::zero())).collect();
        let total: T = d.iter().copied().sum();
        let d = StateDist::new(d.into_iter().map(|x| x / total).collect())?;
        Ok(StateActionDist::from_state_and_policy(&d, pi))
    }

    /// `J(π) = E_{s∼ζ, a∼π}[Q^π(s,a)]`.
    pub fn objective_j(&self, pi: &PolicyMatrix<T>) -> Result<T> {
        let q = self.exact_q_pi(pi)?;
        self.objective_from_q(pi, &q)
    }

    pub fn objective_from_q(&self, pi: &PolicyMatrix<T>, q: &QTable<T>) -> Result<T> {
        let v = self.policy_average(pi, q)?;
        Ok(crate::linalg::dot(&self.initial_dist, &v))
    }
}

/// Failure loading an MDP document.
#[derive(Debug, thiserror::Error)]
pub enum MdpLoadError {
    #[error("malformed MDP JSON: {0}")]
    Parse(serde_json::Error),
    #[error("{0}")]
    Invalid(Error),
}

/// Built-in benchmark MDPs.
pub mod builtin {
    use super::*;

    /// chain2 action that jumps to the other state.
    pub const CHAIN2_GO: usize = 0;
    /// chain2 action that self-loops.
    pub const CHAIN2_STAY: usize = 1;

    /// Two states, `go` swaps state and `stay` self-loops; reward is `1{s = 1}`,
    /// γ = 0.9, start in state 0.
    pub fn chain2<T: Real>() -> TabularMdp<T> {
        let mut transition = vec![T::zero(); 8];
        for s in 0..2 {
            let other = 1 - s;
            transition[(s * 2 + CHAIN2_GO) * 2 + other] = T::one();
            transition[(s * 2 + CHAIN2_STAY) * 2 + s] = T::one();
        }
        let reward = SaTable::from_fn(2, 2, |s, _| if s == 1 { T::one() } else { T::zero() });
        TabularMdp::new(
            2,
            2,
            T::lit(0.9),
            T::one(),
            transition,
            reward,
            vec![T::one(), T::zero()],
        )
        .expect("chain2 is valid")
    }

    /// 5x5 grid, actions up/down/left/right. The intended move happens with
    /// probability 0.85, otherwise a uniformly random direction is taken;
    /// moves into a wall stay put. Reward 1 in the far corner, γ = 0.9,
    /// start in the opposite corner.
    pub fn gridworld5<T: Real>() -> TabularMdp<T> {
        const SIDE: usize = 5;
        let ns = SIDE * SIDE;
        let na = 4;
        let goal = ns - 1;
        let moves: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
        let target = |s: usize, dir: usize| -> usize {
            let (r, c) = ((s / SIDE) as isize, (s % SIDE) as isize);
            let (dr, dc) = moves[dir];
            let (nr, nc) = (r + dr, c + dc);
            if (0..SIDE as isize).contains(&nr) && (0..SIDE as isize).contains(&nc) {
                nr as usize * SIDE + nc as usize
            } else {
                s
            }
        };
        let mut transition = vec![T::zero(); ns * na * ns];
        let intended = T::lit(0.85);
        let slip = T::lit(0.15) / T::lit(4.0);
        for s in 0..ns {
            for a in 0..na {
                let base = (s * na + a) * ns;
                transition[base + target(s, a)] += intended;
                for dir in 0..4 {
                    transition[base + target(s, dir)] += slip;
                }
            }
        }
        let reward = SaTable::from_fn(ns, na, |s, _| if s == goal { T::one() } else { T::zero() });
        let mut initial = vec![T::zero(); ns];
        initial[0] = T::one();
        TabularMdp::new(ns, na, T::lit(0.9), T::one(), transition, reward, initial)
            .expect("gridworld5 is valid")
    }

    /// Dense random MDP: transition rows are normalized uniform draws (full
    /// support), rewards uniform on [0,1), uniform initial distribution, γ = 0.9.
    pub fn random<T: Real>(n_states: usize, n_actions: usize, seed: u64) -> Result<TabularMdp<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x006d_6470);
        let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
        for _ in 0..n_states * n_actions {
            let row: Vec<f64> = (0..n_states).map(|_| rng.random::<f64>() + 1e-3).collect();
            let z: f64 = row.iter().sum();
            transition.extend(row.into_iter().map(|x| T::lit(x / z)));
        }
        let reward = SaTable::from_fn(n_states, n_actions, |_, _| T::lit(rng.random::<f64>()));
        let initial = vec![T::one() / T::from_usize_lossy(n_states); n_states];
        TabularMdp::new(
            n_states,
            n_actions,
            T::lit(0.9),
            T::one(),
            transition,
            reward,
            initial,
        )
    }
}
