//! Re-checks the identities a stored trace must satisfy and emits a
//! plot-ready long-format CSV.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sstac_core::trace::parse_trace_csv;
use sstac_core::TraceRow;

use crate::config::{Algorithm, FeatureSpec};
use crate::error::{HarnessError, Result};
use crate::run::Manifest;

/// Series written to `diag.csv`.
pub const SERIES: [&str; 4] = ["gap", "e_norm", "eps_c", "theta_kl"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail(String),
    Skip(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.status {
            Status::Pass => write!(f, "PASS {}", self.name),
            Status::Fail(why) => write!(f, "FAIL {}: {why}", self.name),
            Status::Skip(why) => write!(f, "SKIP {}: {why}", self.name),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagReport {
    pub checks: Vec<Check>,
    pub csv_path: PathBuf,
}

impl DiagReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| !matches!(c.status, Status::Fail(_)))
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn first_bad(rows: &[TraceRow], mut what: impl FnMut(&TraceRow) -> Option<String>) -> Status {
    rows.iter()
        .find_map(|r| what(r).map(|why| format!("row k={}: {why}", r.k)))
        .map_or(Status::Pass, Status::Fail)
}

/// Runs every check on parsed rows. `manifest` enables mode-specific checks.
pub fn check_rows(rows: &[TraceRow], manifest: Option<&Manifest>) -> Vec<Check> {
    let mut out = Vec::new();
    let mut push = |name, status| out.push(Check { name, status });

    let seq = match rows.iter().enumerate().find(|(i, r)| r.k != *i) {
        Some((i, r)) => Status::Fail(format!("data row {i} has k={}", r.k)),
        None if rows.is_empty() => Status::Fail("trace has no rows".into()),
        None => Status::Pass,
    };
    push("row_sequence", seq);

    if let Some(m) = manifest {
        let want = m.config.k + 1;
        let status = if rows.len() == want {
            Status::Pass
        } else {
            Status::Fail(format!("{} rows, manifest K={} implies {want}", rows.len(), m.config.k))
        };
        push("row_count", status);
    }

    let mut running = 0.0;
    push(
        "regret_consistency",
        first_bad(rows, |r| {
            running += r.gap;
            (!rel_close(r.cum_regret, running, 1e-12))
                .then(|| format!("cum_regret {} but running sum of gap is {running}", r.cum_regret))
        }),
    );

    push(
        "decomposition_identity",
        first_bad(rows, |r| {
            (!(r.decomp_residual <= 1e-10)).then(|| format!("residual {} exceeds 1e-10", r.decomp_residual))
        }),
    );

    push(
        "theta_kl_definition",
        first_bad(rows, |r| {
            let d = r.kl_star_k - r.kl_star_next;
            (!rel_close(r.theta_kl, d, 1e-12)).then(|| format!("theta_kl {} but KL difference is {d}", r.theta_kl))
        }),
    );

    let chain = rows
        .windows(2)
        .find(|w| !rel_close(w[0].kl_star_next, w[1].kl_star_k, 1e-12))
        .map_or(Status::Pass, |w| {
            Status::Fail(format!(
                "row k={}: kl_star_next {} differs from next row's kl_star_k {}",
                w[0].k, w[0].kl_star_next, w[1].kl_star_k
            ))
        });
    push("kl_chaining", chain);

    let telescoping = match (rows.first(), rows.last()) {
        (Some(first), Some(last)) => {
            let sum: f64 = rows.iter().map(|r| r.theta_kl).sum();
            let want = first.kl_star_k - last.kl_star_next;
            if (sum - want).abs() <= 1e-9 {
                Status::Pass
            } else {
                Status::Fail(format!("sum of theta_kl {sum} vs KL drop {want}"))
            }
        }
        _ => Status::Fail("trace has no rows".into()),
    };
    push("theta_telescoping", telescoping);

    let linear = rows.iter().all(|r| !r.avg_identity_residual.is_nan());
    if linear && !rows.is_empty() {
        push(
            "running_average_identity",
            first_bad(rows, |r| {
                (!(r.avg_identity_residual <= 1e-12)).then(|| format!("residual {}", r.avg_identity_residual))
            }),
        );
        push(
            "policy_identity",
            first_bad(rows, |r| {
                (!(r.policy_identity_residual <= 1e-10)).then(|| format!("residual {}", r.policy_identity_residual))
            }),
        );
    } else {
        push("running_average_identity", Status::Skip("not a linear trace".into()));
        push("policy_identity", Status::Skip("not a linear trace".into()));
    }

    let exact_tabular = manifest
        .is_some_and(|m| m.config.algorithm == Algorithm::LinearExact && m.config.features == FeatureSpec::Tabular);
    if exact_tabular {
        push(
            "exact_critic",
            first_bad(rows, |r| (!(r.eps_c_l2 <= 1e-9)).then(|| format!("eps_c_l2 {}", r.eps_c_l2))),
        );
    } else {
        push("exact_critic", Status::Skip("needs a linear_exact tabular manifest".into()));
    }
    out
}

/// `series,iter,value` rows for the plotted series.
pub fn long_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("series,iter,value\n");
    for name in SERIES {
        for r in rows {
            let v = match name {
                "gap" => r.gap,
                "e_norm" => r.e_sup,
                "eps_c" => r.eps_c_l2,
                _ => r.theta_kl,
            };
            let _ = writeln!(out, "{name},{},{v}", r.k);
        }
    }
    out
}

pub fn load_rows(dir: &Path) -> Result<Vec<TraceRow>> {
    let path = dir.join("trace.csv");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| HarnessError::Trace(format!("cannot read {}: {e}", path.display())))?;
    parse_trace_csv(&text).map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))
}

pub fn load_manifest(dir: &Path) -> Result<Option<Manifest>> {
    let path = dir.join("manifest.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| HarnessError::Trace(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| HarnessError::Trace(format!("{}: {e}", path.display())))
}

/// `diag` verb: checks the trace in `dir` and writes `dir/diag.csv`.
pub fn cli_diag(dir: &Path) -> Result<DiagReport> {
    let rows = load_rows(dir)?;
    let manifest = load_manifest(dir)?;
    let checks = check_rows(&rows, manifest.as_ref());
    let csv_path = dir.join("diag.csv");
    std::fs::write(&csv_path, long_csv(&rows))
        .map_err(|e| HarnessError::io(format!("writing {}", csv_path.display()), e))?;
    Ok(DiagReport { checks, csv_path })
}
