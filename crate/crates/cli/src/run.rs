//! Single runs: dispatch to the core algorithms and persist the artifacts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sstac_core::linear_ac::CriticSolveOptions;
use sstac_core::sampling::RNG_ID;
use sstac_core::{run_linear_ac, run_neural_ac, FeatureMap, LinearRunConfig, NeuralRunConfig, Real, RunTrace};

use crate::config::{ExperimentConfig, FeatureSpec, Precision};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surrogate {
    /// Visited-sequence concentrability surrogate; `null` when infinite.
    pub value: Option<f64>,
    pub horizon: usize,
    pub infinite_ratio_pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rows: usize,
    pub beta: f64,
    pub initial_gap: f64,
    pub final_gap: f64,
    pub cum_regret: f64,
    pub concentrability_surrogate: Option<Surrogate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rng_id: String,
    pub version: String,
    pub started_at: String,
    pub duration_s: f64,
    pub summary: RunSummary,
}

/// Everything a run produces, before anything touches the disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub run_id: String,
    pub trace_csv: String,
    pub manifest: Manifest,
    /// Long-format inner-loop losses (`iter,loop,step,loss`), neural runs only.
    pub losses_csv: Option<String>,
}

struct Produced {
    trace_csv: String,
    summary: RunSummary,
    losses_csv: Option<String>,
}

fn summarize<T: Real>(trace: &RunTrace<T>) -> RunSummary {
    RunSummary {
        rows: trace.rows.len(),
        beta: trace.beta,
        initial_gap: trace.initial_gap,
        final_gap: trace.final_gap(),
        cum_regret: trace.cum_regret(),
        concentrability_surrogate: trace.concentrability.as_ref().map(|c| {
            let v = c.surrogate.as_f64();
            Surrogate {
                value: v.is_finite().then_some(v),
                horizon: c.horizon,
                infinite_ratio_pairs: c.infinite_ratio_pairs.clone(),
            }
        }),
    }
}

fn execute<T: Real>(cfg: &ExperimentConfig, seed: u64) -> Result<Produced> {
    let mdp = cfg.load_mdp::<T>()?;
    match cfg.algorithm.critic_mode() {
        Some(mode) => {
            let features = match cfg.features {
                FeatureSpec::Tabular => FeatureMap::tabular(mdp.n_states(), mdp.n_actions()),
                FeatureSpec::Random { dim, seed } => FeatureMap::random(mdp.n_states(), mdp.n_actions(), dim, seed)?,
            };
            let run_cfg = LinearRunConfig {
                k: cfg.k,
                batch_size: cfg.n.unwrap_or(1),
                mode,
                seed,
                radius: cfg.radius.map(T::lit),
                beta: cfg.beta.map(T::lit),
                rho_eval: cfg.rho_eval.into(),
                solve: CriticSolveOptions {
                    ridge: T::lit(cfg.ridge),
                    ..Default::default()
                },
                shared_batch: cfg.shared_batch,
                concentrability_horizon: cfg.concentrability_horizon,
                ..Default::default()
            };
            let trace = run_linear_ac(&mdp, &features, &run_cfg)?;
            Ok(Produced {
                trace_csv: trace.to_csv(),
                summary: summarize(&trace),
                losses_csv: None,
            })
        }
        None => {
            let arch = cfg.arch.expect("validated");
            let defaults = NeuralRunConfig::<T>::default();
            let run_cfg = NeuralRunConfig {
                k: cfg.k,
                n_actor: cfg.actor_iters(),
                n_critic: cfg.critic_iters(),
                width: arch.m,
                depth: arch.h,
                radius: cfg.radius.map(T::lit).unwrap_or(defaults.radius),
                beta: cfg.beta.map(T::lit),
                seed,
                rho_eval: cfg.rho_eval.into(),
                actor_sampling: cfg.actor_sampling(),
                sampler: cfg.sampler(),
                concentrability_horizon: cfg.concentrability_horizon,
                step_scale: cfg.step_scale.map(T::lit).unwrap_or(defaults.step_scale),
            };
            let run = run_neural_ac(&mdp, &run_cfg)?;
            let mut losses = String::from("iter,loop,step,loss\n");
            for (k, l) in run.losses.iter().enumerate() {
                for (name, curve) in [("actor", &l.actor), ("critic", &l.critic)] {
                    for (n, v) in curve.iter().enumerate() {
                        let _ = writeln!(losses, "{k},{name},{n},{v}");
                    }
                }
            }
            Ok(Produced {
                trace_csv: run.trace.to_csv(),
                summary: summarize(&run.trace),
                losses_csv: Some(losses),
            })
        }
    }
}

/// Runs one seed in memory.
pub fn run_one(cfg: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let clock = Instant::now();
    let produced = match cfg.precision {
        Precision::F64 => execute::<f64>(cfg, seed)?,
        Precision::F32 => execute::<f32>(cfg, seed)?,
    };
    let run_id = cfg.run_id(seed);
    Ok(RunOutput {
        manifest: Manifest {
            run_id: run_id.clone(),
            seed,
            config: cfg.clone(),
            rng_id: RNG_ID.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            duration_s: clock.elapsed().as_secs_f64(),
            summary: produced.summary,
        },
        run_id,
        trace_csv: produced.trace_csv,
        losses_csv: produced.losses_csv,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(format!("writing {}", path.display()), e))
}

impl RunOutput {
    /// Writes `trace.csv`, `manifest.json` and, for neural runs, `losses.csv`
    /// under `<out>/<run_id>/`.
    pub fn persist(&self, out: &Path) -> Result<PathBuf> {
        let dir = out.join(&self.run_id);
        std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(format!("creating {}", dir.display()), e))?;
        write(&dir.join("trace.csv"), &self.trace_csv)?;
        let manifest = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        write(&dir.join("manifest.json"), &(manifest + "\n"))?;
        if let Some(l) = &self.losses_csv {
            write(&dir.join("losses.csv"), l)?;
        }
        Ok(dir)
    }
}

/// `run` verb: every configured seed (or just `seed_override`), persisted
/// under `out_override` or the configured directory.
pub fn cli_run(cfg: &ExperimentConfig, seed_override: Option<u64>, out_override: Option<&Path>) -> Result<Vec<PathBuf>> {
    let seeds = seed_override.map_or_else(|| cfg.seeds.clone(), |s| vec![s]);
    let out = out_override.unwrap_or(&cfg.out_dir);
    let mut dirs = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let output = run_one(cfg, seed)?;
        let dir = output.persist(out)?;
        log::info!(
            "{}: final gap {} (initial {}), {:.2}s",
            output.run_id,
            output.manifest.summary.final_gap,
            output.manifest.summary.initial_gap,
            output.manifest.duration_s
        );
        dirs.push(dir);
    }
    Ok(dirs)
}
