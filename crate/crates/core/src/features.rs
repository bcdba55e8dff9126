//! Feature maps `φ(s,a)` for linear function approximation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix};
use crate::scalar::Real;
use crate::table::{SaTable, StateActionDist};

/// Bounded features with `‖φ(s,a)‖₂ ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    dim: usize,
    n_states: usize,
    n_actions: usize,
    /// `φ(s,a)` at `(s * n_actions + a) * dim`.
    phi: Vec<T>,
}

impl<T: Real> FeatureMap<T> {
    /// Wraps explicit vectors after checking dimensions and the unit-norm bound.
    pub fn new(n_states: usize, n_actions: usize, dim: usize, phi: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("feature dimension must be at least 1".into()));
        }
        if phi.len() != n_states * n_actions * dim {
            return Err(Error::Contract(format!(
                "feature table has {} entries, expected {}",
                phi.len(),
                n_states * n_actions * dim
            )));
        }
        let map = Self {
            dim,
            n_states,
            n_actions,
            phi,
        };
        let bound = T::one() + T::tol(1e-12);
        for s in 0..n_states {
            for a in 0..n_actions {
                let n = norm2(map.phi(s, a));
                if !(n <= bound) {
                    return Err(Error::Invalid(format!("‖φ({s},{a})‖ = {n} exceeds 1")));
                }
            }
        }
        Ok(map)
    }

    /// One-hot features indexed `s * n_actions + a`.
    pub fn tabular(n_states: usize, n_actions: usize) -> Self {
        let dim = n_states * n_actions;
        let mut phi = vec![T::zero(); dim * dim];
        for i in 0..dim {
            phi[i * dim + i] = T::one();
        }
        Self {
            dim,
            n_states,
            n_actions,
            phi,
        }
    }

    /// Gaussian vectors normalized to unit length.
    pub fn random(n_states: usize, n_actions: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("feature dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0x6665_6174);
        let mut phi = Vec::with_capacity(n_states * n_actions * dim);
        for _ in 0..n_states * n_actions {
            let v: Vec<f64> = loop {
                let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                if v.iter().any(|x| *x != 0.0) {
                    break v;
                }
            };
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            phi.extend(v.into_iter().map(|x| T::lit(x / n)));
        }
        Ok(Self {
            dim,
            n_states,
            n_actions,
            phi,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    #[inline]
    pub fn phi(&self, s: usize, a: usize) -> &[T] {
        let start = (s * self.n_actions + a) * self.dim;
        &self.phi[start..start + self.dim]
    }

    /// `wᵀφ(s,a)` for every pair.
    pub fn evaluate(&self, weights: &[T]) -> Result<SaTable<T>> {
        if weights.len() != self.dim {
            return Err(Error::Contract(format!(
                "weight vector has {} entries, feature dimension is {}",
                weights.len(),
                self.dim
            )));
        }
        Ok(SaTable::from_fn(self.n_states, self.n_actions, |s, a| {
            dot(self.phi(s, a), weights)
        }))
    }

    /// `E_ρ[φ φᵀ]`.
    pub fn gram(&self, rho: &StateActionDist<T>) -> Result<DenseMatrix<T>> {
        rho.table()
            .check_shape(self.n_states, self.n_actions, "distribution")?;
        let d = self.dim;
        let mut g = DenseMatrix::zeros(d, d);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let w = rho.prob(s, a);
                if w == T::zero() {
                    continue;
                }
                let f = self.phi(s, a);
                for i in 0..d {
                    if f[i] == T::zero() {
                        continue;
                    }
                    for j in 0..d {
                        g[(i, j)] += w * f[i] * f[j];
                    }
                }
            }
        }
        Ok(g)
    }

    /// `E_ρ[y(s,a) φ(s,a)]`.
    pub fn moment(&self, rho: &StateActionDist<T>, y: &SaTable<T>) -> Result<Vec<T>> {
        rho.table()
            .check_shape(self.n_states, self.n_actions, "distribution")?;
        y.check_shape(self.n_states, self.n_actions, "target")?;
        let mut b = vec![T::zero(); self.dim];
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let w = rho.prob(s, a) * y.get(s, a);
                if w == T::zero() {
                    continue;
                }
                for (bi, &fi) in b.iter_mut().zip(self.phi(s, a)) {
                    *bi += w * fi;
                }
            }
        }
        Ok(b)
    }

    /// Smallest singular value of `E_ρ[φ φᵀ]`, the σ* statistic.
    pub fn gram_min_singular(&self, rho: &StateActionDist<T>) -> Result<T> {
        let g = self.gram(rho)?;
        let eig = g.symmetric_eigenvalues()?;
        Ok(eig
            .into_iter()
            .map(T::abs)
            .fold(T::infinity(), T::min)
            .max(T::zero()))
    }
}

/// Smallest singular value of a symmetric PSD matrix.
pub fn min_singular_symmetric<T: Real>(m: &DenseMatrix<T>) -> Result<T> {
    Ok(m.symmetric_eigenvalues()?
        .into_iter()
        .map(T::abs)
        .fold(T::infinity(), T::min))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabular_one_hot_layout() {
        let f = FeatureMap::<f64>::tabular(2, 2);
        assert_eq!(f.phi(1, 0), &[0.0, 0.0, 1.0, 0.0]);
        for s in 0..2 {
            for a in 0..2 {
                assert_eq!(norm2(f.phi(s, a)), 1.0);
            }
        }
    }

    #[test]
    fn tabular_gram_is_scaled_identity() {
        let f = FeatureMap::<f64>::tabular(2, 2);
        let rho = StateActionDist::uniform(2, 2);
        let g = f.gram(&rho).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 0.25 } else { 0.0 };
                assert_eq!(g[(i, j)], want);
            }
        }
        assert!((f.gram_min_singular(&rho).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_gram() {
        let f = FeatureMap::<f64>::tabular(2, 2);
        let rho = StateActionDist::new(
            SaTable::from_rows(&[vec![0.5, 0.0], vec![0.25, 0.25]]).unwrap(),
        )
        .unwrap();
        assert_eq!(f.gram_min_singular(&rho).unwrap(), 0.0);
    }

    #[test]
    fn random_features_unit_norm_and_seeded() {
        let a = FeatureMap::<f64>::random(3, 2, 5, 7).unwrap();
        let b = FeatureMap::<f64>::random(3, 2, 5, 7).unwrap();
        let c = FeatureMap::<f64>::random(3, 2, 5, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for s in 0..3 {
            for act in 0..2 {
                assert!((norm2(a.phi(s, act)) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_long_vectors() {
        assert!(FeatureMap::<f64>::new(1, 1, 2, vec![1.0, 1.0]).is_err());
        assert!(FeatureMap::<f64>::new(1, 1, 0, vec![]).is_err());
    }
}
