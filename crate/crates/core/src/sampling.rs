//! Seeded randomness and the samplers the actor-critic loops draw from.
//!
//! Every run owns a [`RunRng`]; each [`Purpose`] maps to its own ChaCha8
//! stream keyed by the run seed, so consuming one stream never perturbs
//! another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::scalar::Real;
use crate::table::{PolicyMatrix, StateActionDist, StateDist};

/// Identifier of the generator and stream layout, recorded in run manifests.
pub const RNG_ID: &str = "chacha8-streams-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Init,
    GramBatch,
    TargetBatch,
    ActorLoop,
    CriticLoop,
    Rollout,
}

impl Purpose {
    const ALL: [Purpose; 6] = [
        Purpose::Init,
        Purpose::GramBatch,
        Purpose::TargetBatch,
        Purpose::ActorLoop,
        Purpose::CriticLoop,
        Purpose::Rollout,
    ];

    fn stream_id(self) -> u64 {
        match self {
            Purpose::Init => 1,
            Purpose::GramBatch => 2,
            Purpose::TargetBatch => 3,
            Purpose::ActorLoop => 4,
            Purpose::CriticLoop => 5,
            Purpose::Rollout => 6,
        }
    }
}

/// Per-run bundle of independent named streams.
#[derive(Debug, Clone)]
pub struct RunRng {
    seed: u64,
    streams: Vec<ChaCha8Rng>,
}

impl RunRng {
    pub fn new(seed: u64) -> Self {
        let streams = Purpose::ALL
            .iter()
            .map(|p| stream_for(seed, *p))
            .collect();
        Self { seed, streams }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&mut self, purpose: Purpose) -> &mut ChaCha8Rng {
        let idx = Purpose::ALL.iter().position(|p| *p == purpose).unwrap();
        &mut self.streams[idx]
    }

    /// Two distinct streams borrowed at once.
    pub fn pair(&mut self, first: Purpose, second: Purpose) -> (&mut ChaCha8Rng, &mut ChaCha8Rng) {
        assert_ne!(first, second, "stream pair must use distinct purposes");
        let i = Purpose::ALL.iter().position(|p| *p == first).unwrap();
        let j = Purpose::ALL.iter().position(|p| *p == second).unwrap();
        if i < j {
            let (lo, hi) = self.streams.split_at_mut(j);
            (&mut lo[i], &mut hi[0])
        } else {
            let (lo, hi) = self.streams.split_at_mut(i);
            (&mut hi[0], &mut lo[j])
        }
    }
}

/// Fresh generator for one purpose, independent of any [`RunRng`] state.
pub fn stream_for(seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.stream_id());
    rng
}

/// Inverse-CDF sampler over a finite support.
#[derive(Debug, Clone)]
pub struct Categorical {
    cdf: Vec<f64>,
}

impl Categorical {
    pub fn new<T: Real>(weights: &[T]) -> Result<Self> {
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in weights {
            let w = w.as_f64();
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::Invalid("categorical weight must be finite and nonnegative".into()));
            }
            acc += w;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Invalid("categorical weights have zero total".into()));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { cdf })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        // skip trailing zero-weight entries when u lands on the final plateau
        idx.min(self.last_positive())
    }

    fn last_positive(&self) -> usize {
        let mut i = self.cdf.len() - 1;
        while i > 0 && self.cdf[i] == self.cdf[i - 1] {
            i -= 1;
        }
        i
    }
}

/// One sampled transition `(s, a, r(s,a), s', a')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T> {
    pub s: usize,
    pub a: usize,
    pub r: T,
    pub next_s: usize,
    pub next_a: usize,
}

/// `n` i.i.d. draws `(s,a) ∼ ρ`.
pub fn sample_sa<T: Real, R: Rng + ?Sized>(
    rho: &StateActionDist<T>,
    rng: &mut R,
    n: usize,
) -> Result<Vec<(usize, usize)>> {
    let na = rho.n_actions();
    let cat = Categorical::new(rho.table().as_slice())?;
    Ok((0..n)
        .map(|_| {
            let i = cat.sample(rng);
            (i / na, i % na)
        })
        .collect())
}

fn complete_transition<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    next_policy: &[Categorical],
    s: usize,
    a: usize,
    rng: &mut R,
) -> Result<Transition<T>> {
    let next_s = Categorical::new(mdp.next_state_probs(s, a))?.sample(rng);
    let next_a = next_policy[next_s].sample(rng);
    Ok(Transition {
        s,
        a,
        r: mdp.reward().get(s, a),
        next_s,
        next_a,
    })
}

fn policy_samplers<T: Real>(pi: &PolicyMatrix<T>) -> Result<Vec<Categorical>> {
    (0..pi.n_states()).map(|s| Categorical::new(pi.row(s))).collect()
}

/// `n` tuples with `(s,a) ∼ ρ`, `s' ∼ P(·|s,a)`, `a' ∼ π_next(·|s')`.
pub fn sample_tuples<T: Real, R: Rng + ?Sized>(
    mdp: &TabularMdp<T>,
    rho: &StateActionDist<T>,
    next_policy: &PolicyMatrix<T>,
    rng: &mut R,
    n: usize,
) -> Result<Vec<Transition<T>>> {
    let pairs = sample_sa(rho, rng, n)?;
    let pol = policy_samplers(next_policy)?;
    pairs
        .into_iter()
        .map(|(s, a)| complete_transition(mdp, &pol, s, a, rng))
        .collect()
}

/// Source of state-action draws for the neural inner loops.
pub trait PairSource {
    fn next_pair(&mut self) -> Result<(usize, usize)>;
}

impl<P: PairSource + ?Sized> PairSource for Box<P> {
    fn next_pair(&mut self) -> Result<(usize, usize)> {
        (**self).next_pair()
    }
}

/// Source of transition tuples for the neural critic loop.
pub trait TransitionSource<T> {
    fn next_transition(&mut self) -> Result<Transition<T>>;
}

/// Exact i.i.d. categorical draws from a state-action distribution.
#[derive(Debug)]
pub struct ExactPairs<'r, R: ?Sized> {
    cat: Categorical,
    n_actions: usize,
    rng: &'r mut R,
}

impl<'r, R: Rng + ?Sized> ExactPairs<'r, R> {
    pub fn new<T: Real>(rho: &StateActionDist<T>, rng: &'r mut R) -> Result<Self> {
        Ok(Self {
            cat: Categorical::new(rho.table().as_slice())?,
            n_actions: rho.n_actions(),
            rng,
        })
    }
}

impl<R: Rng + ?Sized> PairSource for ExactPairs<'_, R> {
    fn next_pair(&mut self) -> Result<(usize, usize)> {
        let i = self.cat.sample(self.rng);
        Ok((i / self.n_actions, i % self.n_actions))
    }
}

/// Replays a fixed list; errors once exhausted.
#[derive(Debug, Clone)]
pub struct FixedPairs {
    pairs: Vec<(usize, usize)>,
    pos: usize,
}

impl FixedPairs {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs, pos: 0 }
    }
}

impl PairSource for FixedPairs {
    fn next_pair(&mut self) -> Result<(usize, usize)> {
        let p = self
            .pairs
            .get(self.pos)
            .copied()
            .ok_or_else(|| Error::Sampling(format!("fixed pair list exhausted after {} draws", self.pos)))?;
        self.pos += 1;
        Ok(p)
    }
}

/// Replays fixed transitions; errors once exhausted.
#[derive(Debug, Clone)]
pub struct FixedTransitions<T> {
    items: Vec<Transition<T>>,
    pos: usize,
}

impl<T> FixedTransitions<T> {
    pub fn new(items: Vec<Transition<T>>) -> Self {
        Self { items, pos: 0 }
    }
}

impl<T: Copy> TransitionSource<T> for FixedTransitions<T> {
    fn next_transition(&mut self) -> Result<Transition<T>> {
        let t = self.items.get(self.pos).copied().ok_or_else(|| {
            Error::Sampling(format!("fixed transition list exhausted after {} draws", self.pos))
        })?;
        self.pos += 1;
        Ok(t)
    }
}

/// Completes `(s,a)` draws from any [`PairSource`] into full transitions.
pub struct TupleSampler<'m, T, P, R: ?Sized> {
    mdp: &'m TabularMdp<T>,
    next_policy: Vec<Categorical>,
    next_state: Vec<Categorical>,
    pairs: P,
    rng: &'m mut R,
}

impl<'m, T: Real, P: PairSource, R: Rng + ?Sized> TupleSampler<'m, T, P, R> {
    /// `rng` draws `s'` and `a'`; `pairs` supplies `(s,a)`.
    pub fn new(
        mdp: &'m TabularMdp<T>,
        next_policy: &PolicyMatrix<T>,
        pairs: P,
        rng: &'m mut R,
    ) -> Result<Self> {
        let mut next_state = Vec::with_capacity(mdp.n_states() * mdp.n_actions());
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                next_state.push(Categorical::new(mdp.next_state_probs(s, a))?);
            }
        }
        Ok(Self {
            mdp,
            next_policy: policy_samplers(next_policy)?,
            next_state,
            pairs,
            rng,
        })
    }
}

impl<T: Real, P: PairSource, R: Rng + ?Sized> TransitionSource<T> for TupleSampler<'_, T, P, R> {
    fn next_transition(&mut self) -> Result<Transition<T>> {
        let (s, a) = self.pairs.next_pair()?;
        let next_s = self.next_state[s * self.mdp.n_actions() + a].sample(self.rng);
        let next_a = self.next_policy[next_s].sample(self.rng);
        Ok(Transition {
            s,
            a,
            r: self.mdp.reward().get(s, a),
            next_s,
            next_a,
        })
    }
}

/// Markov-chain sampler: follows `π` from a start distribution and yields
/// `(s,a)` after `burn_in` steps. Samples are correlated and only
/// approximately stationary.
pub struct RolloutSampler<'m, T, R> {
    mdp: &'m TabularMdp<T>,
    policy: Vec<Categorical>,
    next_state: Vec<Categorical>,
    state: usize,
    rng: R,
}

impl<'m, T: Real, R: Rng> RolloutSampler<'m, T, R> {
    pub fn new(
        mdp: &'m TabularMdp<T>,
        policy: &PolicyMatrix<T>,
        start: &StateDist<T>,
        burn_in: usize,
        mut rng: R,
    ) -> Result<Self> {
        let mut next_state = Vec::with_capacity(mdp.n_states() * mdp.n_actions());
        for s in 0..mdp.n_states() {
            for a in 0..mdp.n_actions() {
                next_state.push(Categorical::new(mdp.next_state_probs(s, a))?);
            }
        }
        let state = Categorical::new(start.as_slice())?.sample(&mut rng);
        let mut sampler = Self {
            mdp,
            policy: policy_samplers(policy)?,
            next_state,
            state,
            rng,
        };
        for _ in 0..burn_in {
            sampler.step();
        }
        Ok(sampler)
    }

    fn step(&mut self) -> (usize, usize) {
        let s = self.state;
        let a = self.policy[s].sample(&mut self.rng);
        self.state = self.next_state[s * self.mdp.n_actions() + a].sample(&mut self.rng);
        (s, a)
    }
}

impl<T: Real, R: Rng> Iterator for RolloutSampler<'_, T, R> {
    type Item = (usize, usize);

    fn next(&mut self) -> Option<(usize, usize)> {
        Some(self.step())
    }
}

impl<T: Real, R: Rng> PairSource for RolloutSampler<'_, T, R> {
    fn next_pair(&mut self) -> Result<(usize, usize)> {
        Ok(self.step())
    }
}

/// `rollout_sampler(mdp, π, burn_in, rng)` started from the MDP's initial distribution.
pub fn rollout_sampler<'m, T: Real, R: Rng>(
    mdp: &'m TabularMdp<T>,
    policy: &PolicyMatrix<T>,
    burn_in: usize,
    rng: R,
) -> Result<RolloutSampler<'m, T, R>> {
    let start = StateDist::new(mdp.initial_dist().to_vec())?;
    RolloutSampler::new(mdp, policy, &start, burn_in, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::SaTable;

    #[test]
    fn categorical_point_mass() {
        let cat = Categorical::new(&[0.0, 0.0, 1.0, 0.0]).unwrap();
        let mut rng = stream_for(3, Purpose::Init);
        for _ in 0..1000 {
            assert_eq!(cat.sample(&mut rng), 2);
        }
    }

    #[test]
    fn point_mass_pairs() {
        let rho = StateActionDist::new(SaTable::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap()).unwrap();
        let mut rng = stream_for(1, Purpose::GramBatch);
        assert!(sample_sa(&rho, &mut rng, 100).unwrap().iter().all(|&p| p == (1, 0)));
    }

    #[test]
    fn streams_are_independent() {
        let mut a = RunRng::new(9);
        let mut b = RunRng::new(9);
        let _: Vec<u64> = (0..50).map(|_| a.stream(Purpose::ActorLoop).random()).collect();
        let x: Vec<u64> = (0..10).map(|_| a.stream(Purpose::CriticLoop).random()).collect();
        let y: Vec<u64> = (0..10).map(|_| b.stream(Purpose::CriticLoop).random()).collect();
        assert_eq!(x, y);
    }

    #[test]
    fn fixed_sources_exhaust() {
        let mut p = FixedPairs::new(vec![(0, 1)]);
        assert_eq!(p.next_pair().unwrap(), (0, 1));
        assert!(matches!(p.next_pair(), Err(Error::Sampling(_))));
        let mut t = FixedTransitions::<f64>::new(vec![]);
        assert!(matches!(t.next_transition(), Err(Error::Sampling(_))));
    }
}
