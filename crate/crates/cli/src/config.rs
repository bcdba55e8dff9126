//! Experiment configuration: JSON schema, parsing and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sstac_core::linear_ac::{CriticMode, RhoEval};
use sstac_core::mdp::builtin;
use sstac_core::neural_ac::{ActorSampling, SamplerKind};
use sstac_core::{Real, TabularMdp};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MdpSource {
    Chain2,
    Gridworld5,
    Random { n_states: usize, n_actions: usize, seed: u64 },
    /// Path to an MDP JSON document, relative to the config file.
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    LinearExact,
    LinearSampled,
    LinearOffpolicy,
    Neural,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LinearExact => "linear_exact",
            Algorithm::LinearSampled => "linear_sampled",
            Algorithm::LinearOffpolicy => "linear_offpolicy",
            Algorithm::Neural => "neural",
        }
    }

    pub fn critic_mode(self) -> Option<CriticMode> {
        match self {
            Algorithm::LinearExact => Some(CriticMode::Exact),
            Algorithm::LinearSampled => Some(CriticMode::Sampled),
            Algorithm::LinearOffpolicy => Some(CriticMode::OffPolicy),
            Algorithm::Neural => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoEvalName {
    #[default]
    RhoStar,
    Uniform,
}

impl From<RhoEvalName> for RhoEval {
    fn from(r: RhoEvalName) -> Self {
        match r {
            RhoEvalName::RhoStar => RhoEval::RhoStar,
            RhoEvalName::Uniform => RhoEval::Uniform,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FeatureSpec {
    #[default]
    Tabular,
    Random { dim: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arch {
    /// Input dimension; derived from the state-action encoding when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    pub m: usize,
    #[serde(rename = "H")]
    pub h: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorSamplingName {
    #[default]
    Current,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerName {
    #[default]
    Exact,
    Rollout,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

fn default_horizon() -> usize {
    20
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mdp: MdpSource,
    pub algorithm: Algorithm,
    #[serde(rename = "K")]
    pub k: usize,
    /// Batch size for sampled and off-policy linear critics.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_a", default, skip_serializing_if = "Option::is_none")]
    pub n_actor: Option<usize>,
    #[serde(rename = "N_c", default, skip_serializing_if = "Option::is_none")]
    pub n_critic: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arch: Option<Arch>,
    #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub rho_eval: RhoEvalName,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "is_default")]
    pub features: FeatureSpec,
    #[serde(default, skip_serializing_if = "is_default")]
    pub ridge: f64,
    #[serde(default, skip_serializing_if = "is_default")]
    pub shared_batch: bool,
    #[serde(default, skip_serializing_if = "is_default")]
    pub precision: Precision,
    #[serde(default, skip_serializing_if = "is_default")]
    pub actor_sampling: ActorSamplingName,
    #[serde(default, skip_serializing_if = "is_default")]
    pub sampler: SamplerName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_scale: Option<f64>,
    #[serde(default = "default_horizon")]
    pub concentrability_horizon: usize,
}

/// Byte offset of a 1-based (line, column) position.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

impl ExperimentConfig {
    /// Parses and validates. `base` resolves relative MDP paths.
    pub fn from_json(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text).map_err(|e| {
            let at = byte_offset(text, e.line(), e.column());
            HarnessError::Config(format!(
                "invalid config at byte {at} (line {}, column {}): {e}",
                e.line(),
                e.column()
            ))
        })?;
        if let (MdpSource::Path(p), Some(base)) = (&mut cfg.mdp, base) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, path.parent())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.k == 0 {
            return bad("K must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must list at least one seed".into());
        }
        match self.algorithm {
            Algorithm::LinearSampled | Algorithm::LinearOffpolicy => {
                if self.n.unwrap_or(0) == 0 {
                    return bad(format!("{} requires N >= 1", self.algorithm.name()));
                }
            }
            Algorithm::Neural => {
                let arch = match self.arch {
                    Some(a) => a,
                    None => return bad("neural runs require arch {m, H}".into()),
                };
                if arch.m == 0 || arch.h == 0 {
                    return bad("arch.m and arch.H must be at least 1".into());
                }
                if self.actor_iters() == 0 || self.critic_iters() == 0 {
                    return bad("neural runs require N_a, N_c (or N) >= 1".into());
                }
            }
            Algorithm::LinearExact => {}
        }
        if let Some(r) = self.radius {
            if !(r.is_finite() && r >= 0.0) {
                return bad(format!("R = {r} must be finite and nonnegative"));
            }
        }
        if let Some(b) = self.beta {
            if !(b.is_finite() && b > 0.0) {
                return bad(format!("beta = {b} must be finite and positive"));
            }
        }
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return bad(format!("ridge = {} must be nonnegative", self.ridge));
        }
        if let Some(s) = self.step_scale {
            if !(s.is_finite() && s > 0.0) {
                return bad(format!("step_scale = {s} must be positive"));
            }
        }
        if self.concentrability_horizon == 0 {
            return bad("concentrability_horizon must be at least 1".into());
        }
        if let FeatureSpec::Random { dim: 0, .. } = self.features {
            return bad("random feature dimension must be at least 1".into());
        }
        match &self.mdp {
            MdpSource::Random { n_states, n_actions, .. } if *n_states == 0 || *n_actions == 0 => {
                return bad("random MDP needs n_states, n_actions >= 1".into());
            }
            MdpSource::Path(p) if !p.is_file() => {
                return bad(format!("MDP file {} does not exist", p.display()));
            }
            _ => {}
        }
        if let (Algorithm::Neural, Some(Arch { d: Some(d), .. })) = (self.algorithm, self.arch) {
            let (ns, na) = self.mdp_shape()?;
            if d != ns + na {
                return bad(format!("arch.d = {d} but the state-action encoding has dimension {}", ns + na));
            }
        }
        Ok(())
    }

    pub fn actor_iters(&self) -> usize {
        self.n_actor.or(self.n).unwrap_or(0)
    }

    pub fn critic_iters(&self) -> usize {
        self.n_critic.or(self.n).unwrap_or(0)
    }

    fn mdp_shape(&self) -> Result<(usize, usize)> {
        let m = self.load_mdp::<f64>()?;
        Ok((m.n_states(), m.n_actions()))
    }

    pub fn load_mdp<T: Real>(&self) -> Result<TabularMdp<T>> {
        Ok(match &self.mdp {
            MdpSource::Chain2 => builtin::chain2(),
            MdpSource::Gridworld5 => builtin::gridworld5(),
            MdpSource::Random { n_states, n_actions, seed } => builtin::random(*n_states, *n_actions, *seed)?,
            MdpSource::Path(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Config(format!("cannot read MDP {}: {e}", p.display())))?;
                TabularMdp::from_json(&text)
                    .map_err(|e| HarnessError::Config(format!("MDP {}: {e}", p.display())))?
            }
        })
    }

    /// Short MDP label used in run IDs.
    pub fn mdp_label(&self) -> String {
        match &self.mdp {
            MdpSource::Chain2 => "chain2".into(),
            MdpSource::Gridworld5 => "gridworld5".into(),
            MdpSource::Random { n_states, n_actions, seed } => format!("random{n_states}x{n_actions}s{seed}"),
            MdpSource::Path(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "file".into()),
        }
    }

    /// `<algo>-<mdp>-K<k>-seed<S>`.
    pub fn run_id(&self, seed: u64) -> String {
        format!("{}-{}-K{}-seed{seed}", self.algorithm.name(), self.mdp_label(), self.k)
    }

    pub fn actor_sampling(&self) -> ActorSampling {
        match self.actor_sampling {
            ActorSamplingName::Current => ActorSampling::Current,
            ActorSamplingName::Uniform => ActorSampling::Uniform,
        }
    }

    pub fn sampler(&self) -> SamplerKind {
        match self.sampler {
            SamplerName::Exact => SamplerKind::Exact,
            SamplerName::Rollout => SamplerKind::Rollout { burn_in: self.burn_in },
        }
    }
}
