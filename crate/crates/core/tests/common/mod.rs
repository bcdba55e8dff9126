#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sstac_core::{PolicyMatrix, SaTable, TabularMdp};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random MDP with strictly positive transitions and rewards in [-1, 1].
pub fn random_mdp(rng: &mut impl Rng, ns: usize, na: usize, gamma: f64) -> TabularMdp<f64> {
    let mut p = Vec::with_capacity(ns * na * ns);
    for _ in 0..ns * na {
        let row: Vec<f64> = (0..ns).map(|_| rng.random::<f64>() + 0.01).collect();
        let z: f64 = row.iter().sum();
        p.extend(row.iter().map(|x| x / z));
    }
    let r = SaTable::from_fn(ns, na, |_, _| rng.random::<f64>() * 2.0 - 1.0);
    let mut zeta: Vec<f64> = (0..ns).map(|_| rng.random::<f64>() + 0.01).collect();
    let z: f64 = zeta.iter().sum();
    zeta.iter_mut().for_each(|x| *x /= z);
    TabularMdp::new(ns, na, gamma, 1.0, p, r, zeta).unwrap()
}

pub fn random_policy(rng: &mut impl Rng, ns: usize, na: usize) -> PolicyMatrix<f64> {
    let rows: Vec<Vec<f64>> = (0..ns)
        .map(|_| {
            let w: Vec<f64> = (0..na).map(|_| rng.random::<f64>() + 1e-3).collect();
            let z: f64 = w.iter().sum();
            w.iter().map(|x| x / z).collect()
        })
        .collect();
    PolicyMatrix::from_rows(&rows).unwrap()
}

pub fn random_table(rng: &mut impl Rng, ns: usize, na: usize, scale: f64) -> SaTable<f64> {
    SaTable::from_fn(ns, na, |_, _| (rng.random::<f64>() * 2.0 - 1.0) * scale)
}

/// `[ℙ^π]` as an explicit (SA)×(SA) matrix built by direct summation.
pub fn p_pi_matrix(mdp: &TabularMdp<f64>, pi: &PolicyMatrix<f64>) -> DMatrix<f64> {
    let (ns, na) = (mdp.n_states(), mdp.n_actions());
    let mut m = DMatrix::zeros(ns * na, ns * na);
    for s in 0..ns {
        for a in 0..na {
            for sp in 0..ns {
                for ap in 0..na {
                    m[(s * na + a, sp * na + ap)] = mdp.transition_prob(s, a, sp) * pi.prob(sp, ap);
                }
            }
        }
    }
    m
}

/// Solves `(I - γℙ^π) Q = (1-γ) r` with nalgebra's LU.
pub fn q_pi_oracle(mdp: &TabularMdp<f64>, pi: &PolicyMatrix<f64>) -> Vec<f64> {
    let n = mdp.n_states() * mdp.n_actions();
    let g = mdp.gamma();
    let a = DMatrix::identity(n, n) - p_pi_matrix(mdp, pi) * g;
    let b = DVector::from_iterator(n, mdp.reward().as_slice().iter().map(|r| (1.0 - g) * r));
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

/// Stationary distribution from the null space of `P_πᵀ - I` with a normalization row.
pub fn stationary_oracle(mdp: &TabularMdp<f64>, pi: &PolicyMatrix<f64>) -> Vec<f64> {
    let ns = mdp.n_states();
    let mut a = DMatrix::zeros(ns + 1, ns);
    for s in 0..ns {
        for sp in 0..ns {
            let p: f64 = (0..mdp.n_actions())
                .map(|a| pi.prob(s, a) * mdp.transition_prob(s, a, sp))
                .sum();
            a[(sp, s)] += p;
        }
        a[(s, s)] -= 1.0;
        a[(ns, s)] = 1.0;
    }
    let mut b = DVector::zeros(ns + 1);
    b[ns] = 1.0;
    let ata = a.transpose() * &a;
    let atb = a.transpose() * b;
    ata.lu().solve(&atb).unwrap().iter().copied().collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
