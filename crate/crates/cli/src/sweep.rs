//! Sweeps over one numeric parameter and a list of seeds.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::run::run_one;

pub const SUMMARY_HEADER: &str = "param_value,seed,final_gap,cum_regret,regret_over_sqrtK";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K,
    N,
    NActor,
    NCritic,
    Beta,
    Radius,
    Width,
}

impl SweepParam {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "K" => SweepParam::K,
            "N" => SweepParam::N,
            "N_a" => SweepParam::NActor,
            "N_c" => SweepParam::NCritic,
            "beta" => SweepParam::Beta,
            "R" => SweepParam::Radius,
            "m" => SweepParam::Width,
            other => {
                return Err(HarnessError::Config(format!(
                    "cannot sweep {other:?}; expected one of K, N, N_a, N_c, beta, R, m"
                )))
            }
        })
    }

    fn name(self) -> &'static str {
        match self {
            SweepParam::K => "K",
            SweepParam::N => "N",
            SweepParam::NActor => "N_a",
            SweepParam::NCritic => "N_c",
            SweepParam::Beta => "beta",
            SweepParam::Radius => "R",
            SweepParam::Width => "m",
        }
    }

    fn is_integer(self) -> bool {
        !matches!(self, SweepParam::Beta | SweepParam::Radius)
    }

    fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        let int = value as usize;
        match self {
            SweepParam::K => cfg.k = int,
            SweepParam::N => cfg.n = Some(int),
            SweepParam::NActor => cfg.n_actor = Some(int),
            SweepParam::NCritic => cfg.n_critic = Some(int),
            SweepParam::Beta => cfg.beta = Some(value),
            SweepParam::Radius => cfg.radius = Some(value),
            SweepParam::Width => match cfg.arch.as_mut() {
                Some(a) => a.m = int,
                None => return Err(HarnessError::Config("sweeping m requires an arch block".into())),
            },
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_values(param: SweepParam, text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| {
            let v = v.trim();
            let parsed: Option<f64> = if param.is_integer() {
                v.parse::<usize>().ok().map(|x| x as f64)
            } else {
                v.parse::<f64>().ok()
            };
            parsed.ok_or_else(|| HarnessError::Config(format!("bad value {v:?} for {}", param.name())))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(HarnessError::Config("no sweep values".into()));
    }
    Ok(values)
}

/// Worker count from `SSTAC_THREADS`, or rayon's default.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SSTAC_THREADS").ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n > 0)
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub summary_path: PathBuf,
    pub run_dirs: Vec<PathBuf>,
    /// Failed children as (run id, error).
    pub failures: Vec<(String, HarnessError)>,
}

impl SweepOutcome {
    /// Largest child exit code.
    pub fn exit_code(&self) -> i32 {
        self.failures.iter().map(|(_, e)| e.exit_code()).max().unwrap_or(0)
    }
}

pub fn cli_sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64], out_override: Option<&Path>) -> Result<SweepOutcome> {
    let out = out_override.unwrap_or(&base.out_dir).to_path_buf();
    let mut jobs = Vec::new();
    for &v in values {
        let cfg = param.apply(base, v)?;
        for &seed in &base.seeds {
            jobs.push((v, cfg.clone(), seed));
        }
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;

    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|(v, cfg, seed)| {
                let mut id = cfg.run_id(*seed);
                if param != SweepParam::K {
                    id = format!("{id}-{}{}", param.name(), v);
                }
                let res = run_one(cfg, *seed).and_then(|mut o| {
                    o.run_id = id.clone();
                    o.manifest.run_id = id.clone();
                    let dir = o.persist(&out)?;
                    Ok((o, dir))
                });
                (*v, *seed, id, res)
            })
            .collect()
    });

    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    let mut run_dirs = Vec::new();
    let mut failures = Vec::new();
    for (v, seed, id, res) in results {
        match res {
            Ok((o, dir)) => {
                let s = &o.manifest.summary;
                let k = o.manifest.config.k as f64;
                let _ = writeln!(
                    summary,
                    "{v},{seed},{},{},{}",
                    s.final_gap,
                    s.cum_regret,
                    s.cum_regret / k.sqrt()
                );
                run_dirs.push(dir);
            }
            Err(e) => {
                log::error!("{id}: {e}");
                failures.push((id, e));
            }
        }
    }
    std::fs::create_dir_all(&out).map_err(|e| HarnessError::io(format!("creating {}", out.display()), e))?;
    let summary_path = out.join("summary.csv");
    std::fs::write(&summary_path, summary).map_err(|e| HarnessError::io(format!("writing {}", summary_path.display()), e))?;
    Ok(SweepOutcome {
        summary_path,
        run_dirs,
        failures,
    })
}
