mod common;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use sstac_core::policy::{kl, kl_regularized_argmax, regularized_objective, softmax_rows};
use sstac_core::{EnergyPolicy, FeatureMap, PolicyMatrix, SaTable, StateActionDist};

fn simplex_point(r: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| r.random::<f64>() + floor).collect();
    let z: f64 = w.iter().sum();
    w.iter().map(|x| x / z).collect()
}

/// Euclidean projection onto the probability simplex (sort-based).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn pga_argmax(q: &[f64], prev: &[f64], beta: f64) -> Vec<f64> {
    let mut p = prev.to_vec();
    for _ in 0..2000 {
        let step: Vec<f64> = p
            .iter()
            .zip(q)
            .zip(prev)
            .map(|((&pi, &qi), &pk)| pi + 1e-2 * (qi - beta * ((pi.max(1e-12) / pk).ln() + 1.0)))
            .collect();
        p = project_simplex(&step);
    }
    p
}

#[test]
fn tabular_features_evaluate_weights() {
    let f = FeatureMap::<f64>::tabular(2, 3);
    let w: Vec<f64> = (0..6).map(|i| i as f64).collect();
    let q = f.evaluate(&w).unwrap();
    assert_eq!(q.row(1), &[3.0, 4.0, 5.0]);
    assert!(f.evaluate(&[1.0]).is_err());
}

#[test]
fn tabular_gram_under_uniform() {
    let f = FeatureMap::<f64>::tabular(2, 2);
    let g = f.gram(&StateActionDist::uniform(2, 2)).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(g[(i, j)], if i == j { 0.25 } else { 0.0 });
        }
    }
    assert!((f.gram_min_singular(&StateActionDist::uniform(2, 2)).unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn zero_probability_pair_is_singular() {
    let f = FeatureMap::<f64>::tabular(2, 2);
    let rho = StateActionDist::new(SaTable::from_rows(&[vec![0.5, 0.0], vec![0.25, 0.25]]).unwrap()).unwrap();
    assert!(f.gram_min_singular(&rho).unwrap() <= 1e-14);
}

#[test]
fn random_features_are_unit_norm() {
    let f = FeatureMap::<f64>::random(5, 3, 4, 8).unwrap();
    for s in 0..5 {
        for a in 0..3 {
            let n: f64 = f.phi(s, a).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
    let again = FeatureMap::<f64>::random(5, 3, 4, 8).unwrap();
    assert_eq!(f.phi(2, 1), again.phi(2, 1));
}

#[test]
fn oversized_features_are_rejected() {
    assert!(FeatureMap::<f64>::new(1, 1, 2, vec![1.0, 1.0]).is_err());
    assert!(FeatureMap::<f64>::new(1, 1, 2, vec![0.6, 0.8]).is_ok());
    assert!(FeatureMap::<f64>::new(1, 1, 0, vec![]).is_err());
}

#[test]
fn min_singular_matches_dense_eigen() {
    let mut r = rng(41);
    for seed in 0..5 {
        let f = FeatureMap::<f64>::random(6, 3, 5, seed).unwrap();
        let rho = StateActionDist::new(SaTable::from_flat(6, 3, simplex_point(&mut r, 18, 0.05)).unwrap()).unwrap();
        let g = f.gram(&rho).unwrap();
        let m = DMatrix::from_row_slice(5, 5, g.as_slice());
        let want = m.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        let got = f.gram_min_singular(&rho).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn softmax_examples() {
    let p = softmax_rows(&SaTable::from_rows(&[vec![0.0, 3f64.ln()]]).unwrap());
    assert!((p.prob(0, 0) - 0.25).abs() < 1e-15);
    assert!((p.prob(0, 1) - 0.75).abs() < 1e-15);

    let z = softmax_rows(&SaTable::<f64>::zeros(1, 4));
    assert_eq!(z.row(0), &[0.25; 4]);

    let base = SaTable::from_rows(&[vec![0.3, -1.2, 2.0]]).unwrap();
    let shifted = base.map(|x| x + 50.0);
    assert!(softmax_rows(&base).max_tv(&softmax_rows(&shifted)) < 1e-14);
}

#[test]
fn energy_policy_uniform_at_zero_inverse_temperature() {
    let e = EnergyPolicy::new(0.0, SaTable::from_rows(&[vec![5.0, -3.0]]).unwrap()).unwrap();
    assert_eq!(e.to_matrix().unwrap().row(0), &[0.5, 0.5]);
    assert!(EnergyPolicy::new(-1.0, SaTable::<f64>::zeros(1, 2)).is_err());
}

#[test]
fn kl_examples() {
    assert_eq!(kl(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
    let v = kl(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
    assert!((v - 2f64.ln()).abs() < 1e-15);
    assert!(kl(&[0.5, 0.5], &[1.0, 0.0]).is_err());
    assert!(kl(&[1.0], &[0.5, 0.5]).is_err());

    let mut r = rng(43);
    for _ in 0..1000 {
        let p = simplex_point(&mut r, 5, 0.0);
        let q = simplex_point(&mut r, 5, 1e-3);
        assert!(kl(&p, &q).unwrap() >= -1e-15);
    }
}

#[test]
fn argmax_matches_projected_gradient_ascent() {
    let mut r = rng(47);
    for _ in 0..50 {
        let beta = 1.0 + 2.0 * r.random::<f64>();
        let q: Vec<f64> = (0..4).map(|_| r.random::<f64>()).collect();
        let prev = simplex_point(&mut r, 4, 0.3);
        let pm = PolicyMatrix::from_rows(&[prev.clone()]).unwrap();
        let current = EnergyPolicy::new(1.0, SaTable::from_rows(&[prev.iter().map(|p| p.ln()).collect()]).unwrap()).unwrap();
        assert!(current.to_matrix().unwrap().max_tv(&pm) < 1e-14);

        let got = kl_regularized_argmax(&current, &SaTable::from_rows(&[q.clone()]).unwrap(), beta).unwrap();
        let oracle = pga_argmax(&q, &prev, beta);
        let tv: f64 = 0.5 * got.row(0).iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum::<f64>();
        assert!(tv <= 1e-6, "tv {tv}");
    }
}

#[test]
fn argmax_satisfies_three_point_identity_and_optimality() {
    let mut r = rng(53);
    for _ in 0..20 {
        let beta = 0.5 + r.random::<f64>();
        let q: Vec<f64> = (0..4).map(|_| r.random::<f64>()).collect();
        let prev = simplex_point(&mut r, 4, 0.05);
        let current = EnergyPolicy::new(1.0, SaTable::from_rows(&[prev.iter().map(|p| p.ln()).collect()]).unwrap()).unwrap();
        let next = kl_regularized_argmax(&current, &SaTable::from_rows(&[q.clone()]).unwrap(), beta).unwrap();
        let nx = next.row(0);
        let best = regularized_objective(&q, nx, &prev, beta).unwrap();

        for _ in 0..50 {
            let p = simplex_point(&mut r, 4, 0.0);
            let lhs: f64 = q.iter().zip(&p).zip(nx).map(|((qa, pa), na)| qa * (pa - na)).sum();
            let rhs = beta * (kl(&p, &prev).unwrap() - kl(&p, nx).unwrap() - kl(nx, &prev).unwrap());
            assert!(lhs <= rhs + 1e-12);
            assert!(regularized_objective(&q, &p, &prev, beta).unwrap() <= best + 1e-12);
        }
    }
}

#[test]
fn argmax_edge_cases() {
    let prev = vec![0.1, 0.2, 0.7];
    let current = EnergyPolicy::new(1.0, SaTable::from_rows(&[prev.iter().map(|p: &f64| p.ln()).collect()]).unwrap()).unwrap();

    let same = kl_regularized_argmax(&current, &SaTable::zeros(1, 3), 1.0).unwrap();
    assert!(max_abs_diff(same.row(0), &prev) < 1e-15);

    let frozen = kl_regularized_argmax(&current, &SaTable::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap(), 1e12).unwrap();
    assert!(max_abs_diff(frozen.row(0), &prev) < 1e-12);

    assert!(kl_regularized_argmax(&current, &SaTable::zeros(1, 3), 0.0).is_err());
    assert!(kl_regularized_argmax(&current, &SaTable::zeros(2, 3), 1.0).is_err());
}
