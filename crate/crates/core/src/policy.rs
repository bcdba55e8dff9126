//! Energy-based softmax policies `π(a|s) ∝ exp(τ⁻¹ f(s,a))` and the
//! KL-regularized improvement step they admit in closed form.

use std::sync::atomic::{AtomicBool, Ordering};

use log::warn;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::table::{QTable, SaTable};

pub use crate::table::PolicyMatrix;

/// Logits beyond this magnitude are clamped before exponentiation.
pub const LOGIT_CLAMP: f64 = 700.0;

static CLAMP_WARNED: AtomicBool = AtomicBool::new(false);

/// Anything that assigns an energy to each state-action pair.
pub trait EnergyFunction<T: Real> {
    fn energy(&self, s: usize, a: usize) -> T;

    fn energy_table(&self, n_states: usize, n_actions: usize) -> SaTable<T> {
        SaTable::from_fn(n_states, n_actions, |s, a| self.energy(s, a))
    }
}

impl<T: Real> EnergyFunction<T> for SaTable<T> {
    fn energy(&self, s: usize, a: usize) -> T {
        self.get(s, a)
    }
}

/// Softmax policy over a materialized energy table. The inverse temperature is
/// stored directly so that `τ = ∞` is exactly `inv_temp = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyPolicy<T> {
    inv_temp: T,
    energy: SaTable<T>,
}

impl<T: Real> EnergyPolicy<T> {
    pub fn new(inv_temp: T, energy: SaTable<T>) -> Result<Self> {
        if !(inv_temp >= T::zero()) || !inv_temp.is_finite() {
            return Err(Error::Parameter(format!(
                "inverse temperature {inv_temp} must be finite and nonnegative"
            )));
        }
        Ok(Self { inv_temp, energy })
    }

    pub fn from_energy<F: EnergyFunction<T>>(
        inv_temp: T,
        f: &F,
        n_states: usize,
        n_actions: usize,
    ) -> Result<Self> {
        Self::new(inv_temp, f.energy_table(n_states, n_actions))
    }

    /// The `τ₀ = ∞` initial policy: uniform regardless of energy.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        Self {
            inv_temp: T::zero(),
            energy: SaTable::zeros(n_states, n_actions),
        }
    }

    pub fn inv_temp(&self) -> T {
        self.inv_temp
    }

    pub fn energy(&self) -> &SaTable<T> {
        &self.energy
    }

    /// `τ⁻¹ f(s,a)`.
    pub fn logits(&self) -> SaTable<T> {
        if self.inv_temp == T::zero() {
            return SaTable::zeros(self.energy.n_states(), self.energy.n_actions());
        }
        self.energy.map(|f| self.inv_temp * f)
    }

    /// Row-wise softmax of the logits.
    pub fn to_matrix(&self) -> Result<PolicyMatrix<T>> {
        if !self.energy.all_finite() {
            return Err(Error::Contract("energy table has non-finite entries".into()));
        }
        Ok(softmax_rows(&self.logits()))
    }
}

/// Row-wise softmax with max subtraction; logits are clamped to ±700.
pub fn softmax_rows<T: Real>(logits: &SaTable<T>) -> PolicyMatrix<T> {
    let clamp = T::lit(LOGIT_CLAMP);
    let mut out = logits.clone();
    for s in 0..logits.n_states() {
        let row = out.row_mut(s);
        if row.iter().any(|x| x.abs() > clamp) && !CLAMP_WARNED.swap(true, Ordering::Relaxed) {
            warn!("softmax logits exceed ±{LOGIT_CLAMP}; clamping");
        }
        for x in row.iter_mut() {
            *x = x.max(-clamp).min(clamp);
        }
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut z = T::zero();
        for x in row.iter_mut() {
            *x = (*x - m).exp();
            z += *x;
        }
        for x in row.iter_mut() {
            *x /= z;
        }
    }
    PolicyMatrix::new(out).expect("softmax rows are stochastic")
}

/// `KL(p‖q) = Σ_a p(a) log(p(a)/q(a))` with `0 log 0 = 0`.
pub fn kl<T: Real>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::Contract(format!(
            "KL rows have lengths {} and {}",
            p.len(),
            q.len()
        )));
    }
    let mut acc = T::zero();
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == T::zero() {
            continue;
        }
        if qi == T::zero() {
            return Err(Error::InfiniteDivergence { index: i });
        }
        acc += pi * (pi / qi).ln();
    }
    Ok(acc)
}

/// Closed-form maximizer of `⟨Q(s,·), π(·|s)⟩ - β KL(π(·|s) ‖ π_k(·|s))`:
/// `π(a|s) ∝ exp(β⁻¹ Q(s,a) + τ_k⁻¹ f_k(s,a))`.
pub fn kl_regularized_argmax<T: Real>(
    current: &EnergyPolicy<T>,
    q: &QTable<T>,
    beta: T,
) -> Result<PolicyMatrix<T>> {
    if !(beta > T::zero()) {
        return Err(Error::Parameter(format!("β = {beta} must be positive")));
    }
    let logits = current.logits();
    q.check_shape(logits.n_states(), logits.n_actions(), "Q table")?;
    if !q.all_finite() || !logits.all_finite() {
        return Err(Error::Contract("non-finite Q or energy".into()));
    }
    Ok(softmax_rows(&logits.zip_map(q, |l, qv| qv / beta + l)))
}

/// Per-state value of the KL-regularized objective.
pub fn regularized_objective<T: Real>(q_row: &[T], pi_row: &[T], prev_row: &[T], beta: T) -> Result<T> {
    let lin: T = q_row.iter().zip(pi_row).map(|(&q, &p)| q * p).sum();
    Ok(lin - beta * kl(pi_row, prev_row)?)
}
