//! State-action tables and the probability objects built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `[s][a]` table stored row-major by state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaTable<T> {
    n_states: usize,
    n_actions: usize,
    values: Vec<T>,
}

/// Action-value table `Q[s][a]`.
pub type QTable<T> = SaTable<T>;

impl<T: Real> SaTable<T> {
    pub fn zeros(n_states: usize, n_actions: usize) -> Self {
        Self::constant(n_states, n_actions, T::zero())
    }

    pub fn constant(n_states: usize, n_actions: usize, c: T) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![c; n_states * n_actions],
        }
    }

    pub fn from_fn(n_states: usize, n_actions: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                values.push(f(s, a));
            }
        }
        Self {
            n_states,
            n_actions,
            values,
        }
    }

    pub fn from_flat(n_states: usize, n_actions: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != n_states * n_actions {
            return Err(Error::Contract(format!(
                "table has {} entries, expected {n_states}x{n_actions}",
                values.len()
            )));
        }
        Ok(Self {
            n_states,
            n_actions,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_actions) {
            return Err(Error::Contract("ragged table rows".into()));
        }
        Self::from_flat(n_states, n_actions, rows.concat())
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
    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.n_actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: T) {
        self.values[s * self.n_actions + a] = v;
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    #[inline]
    pub fn row_mut(&mut self, s: usize) -> &mut [T] {
        let n = self.n_actions;
        &mut self.values[s * n..(s + 1) * n]
    }

    /// Flattened view, index `s * n_actions + a`.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<T> {
        self.values
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_states == other.n_states && self.n_actions == other.n_actions
    }

    pub fn check_shape(&self, n_states: usize, n_actions: usize, what: &str) -> Result<()> {
        if self.n_states != n_states || self.n_actions != n_actions {
            return Err(Error::Contract(format!(
                "{what} is {}x{}, expected {n_states}x{n_actions}",
                self.n_states, self.n_actions
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert!(self.same_shape(other), "zip_map shape mismatch");
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn sup_dist(&self, other: &Self) -> T {
        assert!(self.same_shape(other), "sup_dist shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.n_states).map(|s| self.row(s).to_vec()).collect()
    }
}

/// Row-stochastic `π[s][a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyMatrix<T>(SaTable<T>);

impl<T: Real> PolicyMatrix<T> {
    /// Validates nonnegativity and unit row sums (within 1e-12 for `f64`).
    pub fn new(table: SaTable<T>) -> Result<Self> {
        let tol = T::tol(1e-12);
        for s in 0..table.n_states() {
            let row = table.row(s);
            if let Some(a) = row.iter().position(|&p| !(p >= T::zero())) {
                return Err(Error::Contract(format!(
                    "policy row {s} has invalid probability at action {a}"
                )));
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::Contract(format!(
                    "policy row {s} sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self(table))
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = T::one() / T::from_usize_lossy(n_actions);
        Self(SaTable::constant(n_states, n_actions, p))
    }

    /// Deterministic policy choosing `actions[s]` in state `s`.
    pub fn deterministic(n_actions: usize, actions: &[usize]) -> Self {
        Self(SaTable::from_fn(actions.len(), n_actions, |s, a| {
            if actions[s] == a {
                T::one()
            } else {
                T::zero()
            }
        }))
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        Self::new(SaTable::from_rows(rows)?)
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> T {
        self.0.get(s, a)
    }

    #[inline]
    pub fn row(&self, s: usize) -> &[T] {
        self.0.row(s)
    }

    pub fn table(&self) -> &SaTable<T> {
        &self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.0.n_actions()
    }

    /// Largest row-wise total-variation distance.
    pub fn max_tv(&self, other: &Self) -> T {
        (0..self.n_states())
            .map(|s| {
                self.row(s)
                    .iter()
                    .zip(other.row(s))
                    .map(|(&p, &q)| (p - q).abs())
                    .sum::<T>()
                    / T::lit(2.0)
            })
            .fold(T::zero(), T::max)
    }
}

fn check_distribution<T: Real>(values: &[T], what: &str) -> Result<()> {
    let tol = T::tol(1e-10);
    if let Some(i) = values.iter().position(|&p| !(p >= T::zero())) {
        return Err(Error::Invalid(format!("{what} has invalid mass at index {i}")));
    }
    let sum: T = values.iter().copied().sum();
    if (sum - T::one()).abs() > tol {
        return Err(Error::Invalid(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Probability vector over states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDist<T>(Vec<T>);

impl<T: Real> StateDist<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        check_distribution(&values, "state distribution")?;
        Ok(Self(values))
    }

    pub fn uniform(n_states: usize) -> Self {
        Self(vec![T::one() / T::from_usize_lossy(n_states); n_states])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Probability table over state-action pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateActionDist<T>(SaTable<T>);

impl<T: Real> StateActionDist<T> {
    pub fn new(table: SaTable<T>) -> Result<Self> {
        check_distribution(table.as_slice(), "state-action distribution")?;
        Ok(Self(table))
    }

    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let p = T::one() / T::from_usize_lossy(n_states * n_actions);
        Self(SaTable::constant(n_states, n_actions, p))
    }

    /// `ρ(s,a) = ν(s) π(a|s)`.
    pub fn from_state_and_policy(nu: &StateDist<T>, pi: &PolicyMatrix<T>) -> Self {
        Self(SaTable::from_fn(pi.n_states(), pi.n_actions(), |s, a| {
            nu.as_slice()[s] * pi.prob(s, a)
        }))
    }

    #[inline]
    pub fn prob(&self, s: usize, a: usize) -> T {
        self.0.get(s, a)
    }

    pub fn table(&self) -> &SaTable<T> {
        &self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.n_states()
    }

    pub fn n_actions(&self) -> usize {
        self.0.n_actions()
    }

    /// State marginal.
    pub fn state_marginal(&self) -> Vec<T> {
        (0..self.n_states())
            .map(|s| self.0.row(s).iter().copied().sum())
            .collect()
    }

    /// `E_ρ[f(s,a)]`.
    pub fn expect(&self, f: &SaTable<T>) -> T {
        self.0
            .as_slice()
            .iter()
            .zip(f.as_slice())
            .map(|(&p, &x)| p * x)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_validation() {
        assert!(PolicyMatrix::from_rows(&[vec![0.5, 0.5]]).is_ok());
        assert!(PolicyMatrix::from_rows(&[vec![0.6, 0.5]]).is_err());
        assert!(PolicyMatrix::from_rows(&[vec![1.5, -0.5]]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(StateDist::new(vec![0.25, 0.75]).is_ok());
        assert!(StateDist::new(vec![0.25, 0.7]).is_err());
        assert!(StateDist::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn expectation_and_marginal() {
        let rho = StateActionDist::<f64>::uniform(2, 2);
        let f = SaTable::from_fn(2, 2, |s, a| (s * 2 + a) as f64);
        assert!((rho.expect(&f) - 1.5).abs() < 1e-15);
        assert_eq!(rho.state_marginal(), vec![0.5, 0.5]);
    }
}
