//! Exact-tabular analysis quantities for one actor-critic iteration: the
//! optimality gap, the three-term error decomposition of `Q* - Q^{π_{k+1}}`,
//! critic statistical error `ε^c`, tracking error `e_{k+1}`, the KL progress
//! term `ϑ_k`, actor errors `ε^a`/`ε^b`, and distribution-mismatch statistics.
//!
//! ψ*_k is intentionally absent: it is referenced by the actor error bounds
//! but never defined, so there is nothing to compute.

use log::warn;

use crate::error::{Error, Result};
use crate::features::FeatureMap;
use crate::linalg::DenseMatrix;
use crate::mdp::TabularMdp;
use crate::policy::kl;
use crate::scalar::Real;
use crate::table::{PolicyMatrix, QTable, SaTable, StateActionDist, StateDist};

/// Optimal-policy quantities computed once per run.
#[derive(Debug, Clone)]
pub struct OptimalOracle<T> {
    pub q_star: QTable<T>,
    pub pi_star: PolicyMatrix<T>,
    pub nu_star: StateDist<T>,
    pub rho_star: StateActionDist<T>,
}

impl<T: Real> OptimalOracle<T> {
    pub fn compute(mdp: &TabularMdp<T>) -> Result<Self> {
        let (q_star, pi_star) = mdp.optimal_q(T::tol(1e-12))?;
        let (nu_star, rho_star) = mdp.stationary_dists(&pi_star)?;
        Ok(Self {
            q_star,
            pi_star,
            nu_star,
            rho_star,
        })
    }

    /// `E_{ν*}[KL(π*(·|s) ‖ π(·|s))]`; infinite if π misses the support of π*.
    pub fn kl_from_optimal(&self, pi: &PolicyMatrix<T>) -> T {
        let mut acc = T::zero();
        for (s, &w) in self.nu_star.as_slice().iter().enumerate() {
            if w == T::zero() {
                continue;
            }
            match kl(self.pi_star.row(s), pi.row(s)) {
                Ok(d) => acc += w * d,
                Err(_) => return T::infinity(),
            }
        }
        acc
    }
}

/// Everything needed to diagnose the transition `(θ_k, ω_k) → (θ_{k+1}, ω_{k+1})`.
#[derive(Debug, Clone, Copy)]
pub struct StepInputs<'a, T> {
    pub mdp: &'a TabularMdp<T>,
    pub oracle: &'a OptimalOracle<T>,
    pub rho_eval: &'a StateActionDist<T>,
    pub beta: T,
    pub pi_k: &'a PolicyMatrix<T>,
    pub pi_next: &'a PolicyMatrix<T>,
    pub rho_k: &'a StateActionDist<T>,
    pub rho_next: &'a StateActionDist<T>,
    pub q_omega_k: &'a QTable<T>,
    pub q_omega_next: &'a QTable<T>,
    /// Exact `Q^{π_{k+1}}`.
    pub q_pi_next: &'a QTable<T>,
    pub features: Option<&'a FeatureMap<T>>,
}

/// Per-iteration diagnostic record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterDiag<T> {
    pub gap: T,
    pub eps_c_l2: T,
    pub eps_c_sup: T,
    pub e_sup: T,
    pub theta_kl: T,
    pub kl_star_k: T,
    pub kl_star_next: T,
    pub eps_a: T,
    pub eps_b: T,
    pub phi_star: T,
    pub sigma_star: T,
    pub j_pi: T,
    pub decomp_residual: T,
}

/// The tables `A_{1,k}, A_{2,k}, A_{3,k}` and the right-hand side they sum to.
#[derive(Debug, Clone)]
pub struct Decomposition<T> {
    pub a1: QTable<T>,
    pub a2: QTable<T>,
    pub a3: QTable<T>,
    /// `(1-γ) r + γ ℙ^{π*} Q^{π_{k+1}} - Q^{π_{k+1}}`.
    pub rhs: QTable<T>,
    /// `sup |A₁ + A₂ + A₃ - rhs|`.
    pub residual: T,
    /// `sup |(I - γℙ^{π*})⁻¹ rhs - (Q* - Q^{π_{k+1}})|`.
    pub gap_residual: T,
}

/// `A_{1,k}, A_{2,k}, A_{3,k}` by direct table arithmetic.
pub fn decomposition<T: Real>(inp: &StepInputs<'_, T>) -> Result<Decomposition<T>> {
    let mdp = inp.mdp;
    let gamma = mdp.gamma();
    let pi_star = &inp.oracle.pi_star;
    let p_star_q = mdp.apply_p_pi(pi_star, inp.q_omega_k)?;
    let p_next_q = mdp.apply_p_pi(inp.pi_next, inp.q_omega_k)?;
    let a1 = p_star_q.zip_map(&p_next_q, |x, y| gamma * (x - y));
    let diff = inp.q_pi_next.zip_map(inp.q_omega_k, |x, y| x - y);
    let a2 = mdp.apply_p_pi(pi_star, &diff)?.map(|x| gamma * x);
    let a3 = mdp
        .bellman_eval(inp.pi_next, inp.q_omega_k)?
        .zip_map(inp.q_pi_next, |x, y| x - y);
    let rhs = mdp
        .bellman_eval(pi_star, inp.q_pi_next)?
        .zip_map(inp.q_pi_next, |x, y| x - y);
    let sum = SaTable::from_fn(a1.n_states(), a1.n_actions(), |s, a| {
        a1.get(s, a) + a2.get(s, a) + a3.get(s, a)
    });
    let residual = sum.sup_dist(&rhs);

    let gap_residual = {
        let n = mdp.n_states() * mdp.n_actions();
        let na = mdp.n_actions();
        let mut m = DenseMatrix::identity(n);
        for s in 0..mdp.n_states() {
            for a in 0..na {
                for (sp, &p) in mdp.next_state_probs(s, a).iter().enumerate() {
                    if p == T::zero() {
                        continue;
                    }
                    for ap in 0..na {
                        m[(s * na + a, sp * na + ap)] -= gamma * p * pi_star.prob(sp, ap);
                    }
                }
            }
        }
        let sol = m.solve(rhs.as_slice())?;
        let gap = inp.oracle.q_star.zip_map(inp.q_pi_next, |x, y| x - y);
        crate::linalg::max_abs_diff(&sol, gap.as_slice())
    };

    Ok(Decomposition {
        a1,
        a2,
        a3,
        rhs,
        residual,
        gap_residual,
    })
}

fn log_ratio_row<T: Real>(num: &[T], den: &[T]) -> Vec<T> {
    num.iter().zip(den).map(|(&p, &q)| (p / q).ln()).collect()
}

/// `E_{ν*}|⟨log(π_{k+1}/π_k) - β⁻¹Q_{ω_k}, π_ref - π_{k+1}⟩|`.
fn actor_error<T: Real>(inp: &StepInputs<'_, T>, reference: &PolicyMatrix<T>) -> T {
    let nu = inp.oracle.nu_star.as_slice();
    let mut acc = T::zero();
    for (s, &w) in nu.iter().enumerate() {
        if w == T::zero() {
            continue;
        }
        let lr = log_ratio_row(inp.pi_next.row(s), inp.pi_k.row(s));
        let inner: T = (0..inp.mdp.n_actions())
            .map(|a| {
                let left = lr[a] - inp.q_omega_k.get(s, a) / inp.beta;
                let right = reference.prob(s, a) - inp.pi_next.prob(s, a);
                if right == T::zero() {
                    T::zero()
                } else {
                    left * right
                }
            })
            .sum();
        acc += w * inner.abs();
    }
    acc
}

/// `φ*_k = ‖dρ*/dρ_k‖_{ρ_k,2}`.
pub fn density_ratio_l2<T: Real>(rho_star: &StateActionDist<T>, rho_k: &StateActionDist<T>) -> T {
    let mut acc = T::zero();
    for (&p, &q) in rho_star.table().as_slice().iter().zip(rho_k.table().as_slice()) {
        if p == T::zero() {
            continue;
        }
        if q == T::zero() {
            return T::infinity();
        }
        acc += p * p / q;
    }
    acc.sqrt()
}

/// Computes every [`IterDiag`] field except the cumulative regret.
pub fn error_decomposition<T: Real>(inp: &StepInputs<'_, T>) -> Result<(IterDiag<T>, Decomposition<T>)> {
    let mdp = inp.mdp;
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    for (t, what) in [
        (inp.q_omega_k, "Q_{ω_k}"),
        (inp.q_omega_next, "Q_{ω_{k+1}}"),
        (inp.q_pi_next, "Q^{π_{k+1}}"),
    ] {
        t.check_shape(ns, na, what)?;
        if !t.all_finite() {
            return Err(Error::Contract(format!("{what} has non-finite entries")));
        }
    }
    let oracle = inp.oracle;
    let gap = inp
        .rho_eval
        .expect(&oracle.q_star.zip_map(inp.q_pi_next, |x, y| x - y));

    let target = mdp.bellman_eval(inp.pi_next, inp.q_omega_k)?;
    let eps_c = target.zip_map(inp.q_omega_next, |x, y| x - y);
    let eps_c_l2 = inp.rho_next.expect(&eps_c.map(|x| x * x)).sqrt();
    let eps_c_sup = eps_c.sup_norm();
    let e_sup = inp.q_omega_k.sup_dist(&target);

    let kl_star_k = oracle.kl_from_optimal(inp.pi_k);
    let kl_star_next = oracle.kl_from_optimal(inp.pi_next);
    let theta_kl = kl_star_k - kl_star_next;

    let eps_a = actor_error(inp, &oracle.pi_star);
    let eps_b = actor_error(inp, inp.pi_k);
    let phi_star = density_ratio_l2(&oracle.rho_star, inp.rho_k);
    let sigma_star = match inp.features {
        Some(f) => f.gram_min_singular(inp.rho_next)?,
        None => T::nan(),
    };
    let j_pi = mdp.objective_from_q(inp.pi_next, inp.q_pi_next)?;
    let decomp = decomposition(inp)?;

    Ok((
        IterDiag {
            gap,
            eps_c_l2,
            eps_c_sup,
            e_sup,
            theta_kl,
            kl_star_k,
            kl_star_next,
            eps_a,
            eps_b,
            phi_star,
            sigma_star,
            j_pi,
            decomp_residual: decomp.residual,
        },
        decomp,
    ))
}

/// Visited-sequence surrogate for the discounted-average concentrability
/// coefficient. The supremum over all policy sequences is not computable;
/// `c_hat[k-1]` is the largest `‖d(ρ ℙ^{π_{j+1}}⋯ℙ^{π_{j+k}})/dρ*‖_∞` over
/// windows of consecutive visited policies (the last policy repeats past the
/// end of the run).
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrabilitySurrogate<T> {
    pub horizon: usize,
    pub c_hat: Vec<T>,
    pub surrogate: T,
    /// Pairs with zero `ρ*` mass that receive positive mass.
    pub infinite_ratio_pairs: Vec<(usize, usize)>,
}

/// `Ĉ = (1-γ)² Σ_{k=1}^{T} k² γ^k ĉ(k)`.
pub fn concentrability_surrogate<T: Real>(
    mdp: &TabularMdp<T>,
    rho_eval: &StateActionDist<T>,
    rho_star: &StateActionDist<T>,
    visited: &[PolicyMatrix<T>],
    horizon: usize,
    max_windows: usize,
) -> Result<ConcentrabilitySurrogate<T>> {
    if horizon == 0 {
        return Err(Error::Parameter("concentrability horizon must be at least 1".into()));
    }
    if visited.is_empty() {
        return Err(Error::Parameter("no visited policies".into()));
    }
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let n_windows = visited.len().min(max_windows.max(1));
    let starts: Vec<usize> = (0..n_windows)
        .map(|i| i * visited.len() / n_windows)
        .collect();
    let mut c_hat = vec![T::zero(); horizon];
    let mut bad = std::collections::BTreeSet::new();
    for &j in &starts {
        let mut dist = rho_eval.table().clone();
        for (k, c) in c_hat.iter_mut().enumerate() {
            let pi = &visited[(j + k).min(visited.len() - 1)];
            // (μ ℙ^π)(s',a') = Σ_{s,a} μ(s,a) P(s'|s,a) π(a'|s')
            let mut state_mass = vec![T::zero(); ns];
            for s in 0..ns {
                for a in 0..na {
                    let w = dist.get(s, a);
                    if w == T::zero() {
                        continue;
                    }
                    for (sp, &p) in mdp.next_state_probs(s, a).iter().enumerate() {
                        state_mass[sp] += w * p;
                    }
                }
            }
            dist = SaTable::from_fn(ns, na, |s, a| state_mass[s] * pi.prob(s, a));
            let mut ratio = T::zero();
            for s in 0..ns {
                for a in 0..na {
                    let num = dist.get(s, a);
                    let den = rho_star.prob(s, a);
                    if den == T::zero() {
                        if num > T::tol(1e-15) {
                            bad.insert((s, a));
                            ratio = T::infinity();
                        }
                    } else {
                        ratio = ratio.max(num / den);
                    }
                }
            }
            *c = c.max(ratio);
        }
    }
    if !bad.is_empty() {
        warn!(
            "concentrability surrogate: ρ* has zero mass at {} state-action pairs the future distribution reaches; ratio is infinite",
            bad.len()
        );
    }
    let gamma = mdp.gamma();
    let one_minus = T::one() - gamma;
    let mut total = T::zero();
    let mut gk = T::one();
    for (i, &c) in c_hat.iter().enumerate() {
        let k = T::from_usize_lossy(i + 1);
        gk *= gamma;
        let weight = k * k * gk;
        if weight > T::zero() {
            total += weight * c;
        }
    }
    Ok(ConcentrabilitySurrogate {
        horizon,
        c_hat,
        surrogate: one_minus * one_minus * total,
        infinite_ratio_pairs: bad.into_iter().collect(),
    })
}
