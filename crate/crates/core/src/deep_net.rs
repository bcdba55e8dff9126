//! Deep ReLU network `u_θ(x) = bᵀx⁽ᴴ⁾` with `x⁽ʰ⁾ = σ(W_hᵀx⁽ʰ⁻¹⁾)/√m`,
//! fixed output signs `b`, and per-layer Frobenius projection toward the
//! initialization.
//!
//! Layer `h` stores `W_h` row-major with shape `(fan_in, m)`, so entry
//! `(i, j)` sits at `i * m + j`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ball_slack;
use crate::sampling::{stream_for, Purpose};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DnnParams<T> {
    input_dim: usize,
    width: usize,
    depth: usize,
    seed: u64,
    weights: Vec<Vec<T>>,
    signs: Vec<T>,
    anchor: Vec<Vec<T>>,
}

/// Activations recorded by [`DnnParams::forward_cached`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache<T> {
    /// `x⁽⁰⁾, …, x⁽ᴴ⁾`.
    pub activations: Vec<Vec<T>>,
    /// `W_hᵀx⁽ʰ⁻¹⁾` for each layer.
    pub preactivations: Vec<Vec<T>>,
    pub output: T,
}

fn relu<T: Real>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

fn check_arch(d: usize, m: usize, h: usize) -> Result<()> {
    if d == 0 || m == 0 || h == 0 {
        return Err(Error::Parameter(format!(
            "architecture (d={d}, m={m}, H={h}) needs every dimension ≥ 1"
        )));
    }
    Ok(())
}

impl<T: Real> DnnParams<T> {
    /// Standard-normal weights, Rademacher signs, anchor equal to the weights.
    pub fn init(d: usize, m: usize, h: usize, seed: u64) -> Result<Self> {
        check_arch(d, m, h)?;
        let mut rng = stream_for(seed, Purpose::Init);
        let weights: Vec<Vec<T>> = (0..h)
            .map(|layer| {
                let fan_in = if layer == 0 { d } else { m };
                (0..fan_in * m)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        T::lit(z)
                    })
                    .collect()
            })
            .collect();
        let signs = (0..m)
            .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
            .collect();
        Ok(Self {
            input_dim: d,
            width: m,
            depth: h,
            seed,
            anchor: weights.clone(),
            weights,
            signs,
        })
    }

    /// Explicit construction; the anchor is set to `weights`.
    pub fn from_parts(d: usize, m: usize, weights: Vec<Vec<T>>, signs: Vec<T>) -> Result<Self> {
        let h = weights.len();
        check_arch(d, m, h)?;
        Self::check_layers(d, m, &weights)?;
        if signs.len() != m || signs.iter().any(|&b| b != T::one() && b != -T::one()) {
            return Err(Error::Contract(format!("sign vector must have {m} entries in {{-1, +1}}")));
        }
        Ok(Self {
            input_dim: d,
            width: m,
            depth: h,
            seed: 0,
            anchor: weights.clone(),
            weights,
            signs,
        })
    }

    fn check_layers(d: usize, m: usize, layers: &[Vec<T>]) -> Result<()> {
        for (i, w) in layers.iter().enumerate() {
            let expect = if i == 0 { d * m } else { m * m };
            if w.len() != expect {
                return Err(Error::Contract(format!(
                    "layer {} has {} weights, expected {expect}",
                    i + 1,
                    w.len()
                )));
            }
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Total parameter count `md + (H-1)m²`.
    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum()
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.weights
    }

    pub fn signs(&self) -> &[T] {
        &self.signs
    }

    pub fn anchor(&self) -> &[Vec<T>] {
        &self.anchor
    }

    /// Replaces all weights, keeping signs and anchor.
    pub fn set_weights(&mut self, weights: Vec<Vec<T>>) -> Result<()> {
        if weights.len() != self.depth {
            return Err(Error::Contract(format!(
                "expected {} layers, got {}",
                self.depth,
                weights.len()
            )));
        }
        Self::check_layers(self.input_dim, self.width, &weights)?;
        self.weights = weights;
        Ok(())
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Contract(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn run(&self, weights: &[Vec<T>], x: &[T]) -> ForwardCache<T> {
        let m = self.width;
        let scale = T::one() / T::from_usize_lossy(m).sqrt();
        let mut activations = Vec::with_capacity(self.depth + 1);
        let mut preactivations = Vec::with_capacity(self.depth);
        activations.push(x.to_vec());
        for w in weights {
            let input = activations.last().unwrap();
            let mut z = vec![T::zero(); m];
            for (i, &xi) in input.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                let row = &w[i * m..(i + 1) * m];
                for (zj, &wij) in z.iter_mut().zip(row) {
                    *zj += wij * xi;
                }
            }
            let out = z.iter().map(|&v| relu(v) * scale).collect();
            preactivations.push(z);
            activations.push(out);
        }
        let output = crate::linalg::dot(&self.signs, activations.last().unwrap());
        ForwardCache {
            activations,
            preactivations,
            output,
        }
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        Ok(self.run(&self.weights, x).output)
    }

    pub fn forward_cached(&self, x: &[T]) -> Result<ForwardCache<T>> {
        self.check_input(x)?;
        Ok(self.run(&self.weights, x))
    }

    /// Output of the network at its anchor weights.
    pub fn forward_anchor(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        Ok(self.run(&self.anchor, x).output)
    }

    fn backprop(&self, weights: &[Vec<T>], cache: &ForwardCache<T>) -> Vec<Vec<T>> {
        let m = self.width;
        let scale = T::one() / T::from_usize_lossy(m).sqrt();
        let mut grads: Vec<Vec<T>> = weights.iter().map(|w| vec![T::zero(); w.len()]).collect();
        // upstream = ∂u/∂x⁽ʰ⁾
        let mut upstream = self.signs.clone();
        for h in (0..self.depth).rev() {
            let delta: Vec<T> = cache.preactivations[h]
                .iter()
                .zip(&upstream)
                .map(|(&z, &g)| if z > T::zero() { g * scale } else { T::zero() })
                .collect();
            let input = &cache.activations[h];
            let g = &mut grads[h];
            for (i, &xi) in input.iter().enumerate() {
                if xi == T::zero() {
                    continue;
                }
                for (gij, &dj) in g[i * m..(i + 1) * m].iter_mut().zip(&delta) {
                    *gij = xi * dj;
                }
            }
            if h > 0 {
                let w = &weights[h];
                upstream = (0..input.len())
                    .map(|i| crate::linalg::dot(&w[i * m..(i + 1) * m], &delta))
                    .collect();
            }
        }
        grads
    }

    /// `∂u/∂W_h` for every layer, with `σ'(0) = 0`.
    pub fn gradient(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        let cache = self.forward_cached(x)?;
        Ok(self.backprop(&self.weights, &cache))
    }

    /// Output and gradient from one forward pass.
    pub fn value_and_gradient(&self, x: &[T]) -> Result<(T, Vec<Vec<T>>)> {
        let cache = self.forward_cached(x)?;
        let g = self.backprop(&self.weights, &cache);
        Ok((cache.output, g))
    }

    /// `‖W_h - W_h⁰‖_F` per layer.
    pub fn distances_from_anchor(&self) -> Vec<T> {
        self.weights
            .iter()
            .zip(&self.anchor)
            .map(|(w, w0)| {
                w.iter()
                    .zip(w0)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>()
                    .sqrt()
            })
            .collect()
    }

    /// Radial per-layer shrink onto `‖W_h - W_h⁰‖_F ≤ R`.
    pub fn project_ball(&mut self, radius: T) {
        let dists = self.distances_from_anchor();
        for ((w, w0), dist) in self.weights.iter_mut().zip(&self.anchor).zip(dists) {
            if dist <= ball_slack(radius) {
                continue;
            }
            if radius == T::zero() {
                w.copy_from_slice(w0);
                continue;
            }
            let c = radius / dist;
            for (a, &b) in w.iter_mut().zip(w0) {
                *a = b + (*a - b) * c;
            }
        }
    }

    pub fn projected(mut self, radius: T) -> Self {
        self.project_ball(radius);
        self
    }

    pub fn in_ball(&self, radius: T) -> bool {
        self.distances_from_anchor().into_iter().all(|d| d <= ball_slack(radius))
    }

    /// `|u_θ(x) - u_{θ₀}(x) - ⟨θ - θ₀, ∇u_{θ₀}(x)⟩|`.
    pub fn linearization_gap(&self, x: &[T]) -> Result<T> {
        self.check_input(x)?;
        let at_anchor = self.run(&self.anchor, x);
        let g0 = self.backprop(&self.anchor, &at_anchor);
        let u = self.run(&self.weights, x).output;
        let mut lin = at_anchor.output;
        for ((w, w0), g) in self.weights.iter().zip(&self.anchor).zip(&g0) {
            for ((&a, &b), &gi) in w.iter().zip(w0).zip(g) {
                lin += (a - b) * gi;
            }
        }
        Ok((u - lin).abs())
    }

    /// `‖x⁽ʰ⁾‖₂` for `h = 1..=H`.
    pub fn layer_norms(&self, x: &[T]) -> Result<Vec<T>> {
        let cache = self.forward_cached(x)?;
        Ok(cache.activations[1..]
            .iter()
            .map(|a| crate::linalg::norm2(a))
            .collect())
    }

    pub fn to_checkpoint(&self, radius: T) -> Checkpoint {
        let widen = |layers: &[Vec<T>]| -> Vec<Vec<f64>> {
            layers
                .iter()
                .map(|w| w.iter().map(|v| v.as_f64()).collect())
                .collect()
        };
        Checkpoint {
            header: CheckpointHeader {
                d: self.input_dim,
                m: self.width,
                h: self.depth,
                seed: self.seed,
                radius: radius.as_f64(),
            },
            signs: self.signs.iter().map(|v| v.as_f64()).collect(),
            anchor: widen(&self.anchor),
            weights: widen(&self.weights),
        }
    }

    /// Rebuilds parameters and the projection radius from a checkpoint.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<(Self, T)> {
        let hd = &ck.header;
        check_arch(hd.d, hd.m, hd.h)?;
        let narrow = |layers: &[Vec<f64>], what: &str| -> Result<Vec<Vec<T>>> {
            if layers.len() != hd.h {
                return Err(Error::Invalid(format!(
                    "{what} has {} layers, header says {}",
                    layers.len(),
                    hd.h
                )));
            }
            Ok(layers
                .iter()
                .map(|w| w.iter().map(|&v| T::lit(v)).collect())
                .collect())
        };
        let weights = narrow(&ck.weights, "weights")?;
        let anchor = narrow(&ck.anchor, "anchor")?;
        Self::check_layers(hd.d, hd.m, &weights).map_err(|e| Error::Invalid(e.to_string()))?;
        Self::check_layers(hd.d, hd.m, &anchor).map_err(|e| Error::Invalid(e.to_string()))?;
        if ck.signs.len() != hd.m || ck.signs.iter().any(|&b| b != 1.0 && b != -1.0) {
            return Err(Error::Invalid("checkpoint signs must be ±1 with length m".into()));
        }
        Ok((
            Self {
                input_dim: hd.d,
                width: hd.m,
                depth: hd.h,
                seed: hd.seed,
                weights,
                signs: ck.signs.iter().map(|&v| T::lit(v)).collect(),
                anchor,
            },
            T::lit(hd.radius),
        ))
    }
}

/// Elementwise mean of parameter sets with identical shapes.
pub fn average_weights<T: Real>(sets: &[Vec<Vec<T>>]) -> Vec<Vec<T>> {
    let n = T::from_usize_lossy(sets.len().max(1));
    let mut out: Vec<Vec<T>> = sets[0].iter().map(|w| vec![T::zero(); w.len()]).collect();
    for set in sets {
        for (o, w) in out.iter_mut().zip(set) {
            for (a, &b) in o.iter_mut().zip(w) {
                *a += b;
            }
        }
    }
    for o in &mut out {
        o.iter_mut().for_each(|a| *a /= n);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub d: usize,
    pub m: usize,
    #[serde(rename = "H")]
    pub h: usize,
    pub seed: u64,
    #[serde(rename = "R")]
    pub radius: f64,
}

/// JSON checkpoint: one array per layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub signs: Vec<f64>,
    pub anchor: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("checkpoint: {e}")))
    }
}

/// Unit-norm encoding `(e_s ⊕ e_a)/√2` of state-action pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SaEncoder {
    pub n_states: usize,
    pub n_actions: usize,
}

impl SaEncoder {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self { n_states, n_actions }
    }

    pub fn dim(&self) -> usize {
        self.n_states + self.n_actions
    }

    pub fn encode<T: Real>(&self, s: usize, a: usize) -> Vec<T> {
        assert!(s < self.n_states && a < self.n_actions, "pair ({s}, {a}) out of range");
        let mut x = vec![T::zero(); self.dim()];
        let v = T::FRAC_1_SQRT_2();
        x[s] = v;
        x[self.n_states + a] = v;
        x
    }

    /// Encodings of every pair in `s * n_actions + a` order.
    pub fn encode_all<T: Real>(&self) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(self.n_states * self.n_actions);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                out.push(self.encode(s, a));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_neuron_closed_form() {
        for w in [-1.5, 0.0, 0.7] {
            let net = DnnParams::<f64>::from_parts(1, 1, vec![vec![w]], vec![1.0]).unwrap();
            assert_eq!(net.forward(&[1.0]).unwrap(), w.max(0.0));
            let g = net.gradient(&[1.0]).unwrap();
            assert_eq!(g[0][0], if w > 0.0 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn zero_weights_give_zero_output_and_gradient() {
        let net = DnnParams::<f64>::from_parts(3, 4, vec![vec![0.0; 12], vec![0.0; 16]], vec![1.0, -1.0, 1.0, 1.0])
            .unwrap();
        let x = [0.6, 0.0, 0.8];
        assert_eq!(net.forward(&x).unwrap(), 0.0);
        assert!(net.gradient(&x).unwrap().iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn encoding_is_unit_norm() {
        let enc = SaEncoder::new(3, 2);
        for x in enc.encode_all::<f64>() {
            assert!((crate::linalg::norm2(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_radius_zero_resets_to_anchor() {
        let mut net = DnnParams::<f64>::init(4, 8, 2, 1).unwrap();
        for w in net.weights_mut() {
            w.iter_mut().for_each(|v| *v += 0.3);
        }
        net.project_ball(0.0);
        assert_eq!(net.weights(), net.anchor());
    }

    #[test]
    fn wrong_input_dimension_is_rejected() {
        let net = DnnParams::<f64>::init(4, 8, 1, 0).unwrap();
        assert!(matches!(net.forward(&[1.0, 0.0]), Err(Error::Contract(_))));
    }
}
