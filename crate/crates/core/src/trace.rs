//! Run traces: one row of scalar statistics per actor-critic iteration plus
//! in-memory snapshots of parameters, policies and exact action-values.
//!
//! The CSV schema is fixed; [`TRACE_HEADER`] lists the columns in order.
//! Numbers are written in Rust's shortest round-trip decimal form, so a trace
//! reparses to bit-identical values.

use crate::diagnostics::{ConcentrabilitySurrogate, IterDiag};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::table::{PolicyMatrix, QTable};

pub const TRACE_HEADER: [&str; 24] = [
    "k",
    "gap",
    "cum_regret",
    "eps_c_l2",
    "eps_c_sup",
    "e_sup",
    "theta_kl",
    "eps_a",
    "eps_b",
    "phi_star",
    "sigma_star",
    "J_pi",
    "kl_star_k",
    "kl_star_next",
    "decomp_residual",
    "avg_identity_residual",
    "policy_identity_residual",
    "omega_norm",
    "inv_tau",
    "actor_mse",
    "critic_mse",
    "lin_gap_actor",
    "lin_gap_critic",
    "critic_updates",
];

/// One trace row. Row `k` describes the update producing `π_{k+1}` and `ω_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub gap: f64,
    pub cum_regret: f64,
    pub eps_c_l2: f64,
    pub eps_c_sup: f64,
    pub e_sup: f64,
    pub theta_kl: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub phi_star: f64,
    pub sigma_star: f64,
    pub j_pi: f64,
    pub kl_star_k: f64,
    pub kl_star_next: f64,
    pub decomp_residual: f64,
    /// `‖θ_{k+1} - mean(ω_0..ω_k)‖_∞` (linear runs only).
    pub avg_identity_residual: f64,
    /// `sup |π_{k+1} - argmax_π{⟨Q_{ω_k},π⟩ - β KL(π‖π_k)}|`.
    pub policy_identity_residual: f64,
    pub omega_norm: f64,
    pub inv_tau: f64,
    pub actor_mse: f64,
    pub critic_mse: f64,
    pub lin_gap_actor: f64,
    pub lin_gap_critic: f64,
    pub critic_updates: usize,
}

impl TraceRow {
    pub fn from_diag<T: Real>(k: usize, diag: &IterDiag<T>, cum_regret: f64) -> Self {
        Self {
            k,
            gap: diag.gap.as_f64(),
            cum_regret,
            eps_c_l2: diag.eps_c_l2.as_f64(),
            eps_c_sup: diag.eps_c_sup.as_f64(),
            e_sup: diag.e_sup.as_f64(),
            theta_kl: diag.theta_kl.as_f64(),
            eps_a: diag.eps_a.as_f64(),
            eps_b: diag.eps_b.as_f64(),
            phi_star: diag.phi_star.as_f64(),
            sigma_star: diag.sigma_star.as_f64(),
            j_pi: diag.j_pi.as_f64(),
            kl_star_k: diag.kl_star_k.as_f64(),
            kl_star_next: diag.kl_star_next.as_f64(),
            decomp_residual: diag.decomp_residual.as_f64(),
            avg_identity_residual: f64::NAN,
            policy_identity_residual: f64::NAN,
            omega_norm: f64::NAN,
            inv_tau: f64::NAN,
            actor_mse: f64::NAN,
            critic_mse: f64::NAN,
            lin_gap_actor: f64::NAN,
            lin_gap_critic: f64::NAN,
            critic_updates: 1,
        }
    }

    fn floats(&self) -> [f64; 22] {
        [
            self.gap,
            self.cum_regret,
            self.eps_c_l2,
            self.eps_c_sup,
            self.e_sup,
            self.theta_kl,
            self.eps_a,
            self.eps_b,
            self.phi_star,
            self.sigma_star,
            self.j_pi,
            self.kl_star_k,
            self.kl_star_next,
            self.decomp_residual,
            self.avg_identity_residual,
            self.policy_identity_residual,
            self.omega_norm,
            self.inv_tau,
            self.actor_mse,
            self.critic_mse,
            self.lin_gap_actor,
            self.lin_gap_critic,
        ]
    }

    pub fn to_csv_line(&self) -> String {
        let mut line = self.k.to_string();
        for x in self.floats() {
            line.push(',');
            line.push_str(&x.to_string());
        }
        line.push(',');
        line.push_str(&self.critic_updates.to_string());
        line
    }

    pub fn parse_csv_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
        if fields.len() != TRACE_HEADER.len() {
            return Err(Error::Invalid(format!(
                "trace row has {} fields, expected {}",
                fields.len(),
                TRACE_HEADER.len()
            )));
        }
        let int = |i: usize| -> Result<usize> {
            fields[i]
                .parse()
                .map_err(|_| Error::Invalid(format!("column {} is not an integer: {:?}", TRACE_HEADER[i], fields[i])))
        };
        let mut f = [0.0f64; 22];
        for (j, slot) in f.iter_mut().enumerate() {
            let i = j + 1;
            *slot = fields[i]
                .parse()
                .map_err(|_| Error::Invalid(format!("column {} is not a number: {:?}", TRACE_HEADER[i], fields[i])))?;
        }
        Ok(Self {
            k: int(0)?,
            gap: f[0],
            cum_regret: f[1],
            eps_c_l2: f[2],
            eps_c_sup: f[3],
            e_sup: f[4],
            theta_kl: f[5],
            eps_a: f[6],
            eps_b: f[7],
            phi_star: f[8],
            sigma_star: f[9],
            j_pi: f[10],
            kl_star_k: f[11],
            kl_star_next: f[12],
            decomp_residual: f[13],
            avg_identity_residual: f[14],
            policy_identity_residual: f[15],
            omega_norm: f[16],
            inv_tau: f[17],
            actor_mse: f[18],
            critic_mse: f[19],
            lin_gap_actor: f[20],
            lin_gap_critic: f[21],
            critic_updates: int(23)?,
        })
    }
}

pub fn header_line() -> String {
    TRACE_HEADER.join(",")
}

/// In-memory state at iterate `k`.
#[derive(Debug, Clone)]
pub struct IterationSnapshot<T> {
    pub k: usize,
    /// Actor weights (linear runs).
    pub theta: Option<Vec<T>>,
    /// Critic weights (linear runs).
    pub omega: Option<Vec<T>>,
    pub policy: PolicyMatrix<T>,
    /// Exact `Q^{π_k}`.
    pub q_pi: QTable<T>,
    /// Critic estimate `Q_{ω_k}`.
    pub q_omega: QTable<T>,
}

#[derive(Debug, Clone)]
pub struct RunTrace<T> {
    pub rows: Vec<TraceRow>,
    /// Snapshots for `k = 0..=K+1`.
    pub snapshots: Vec<IterationSnapshot<T>>,
    /// Gap of the initial uniform policy under the evaluation distribution.
    pub initial_gap: f64,
    pub beta: f64,
    pub concentrability: Option<ConcentrabilitySurrogate<T>>,
}

impl<T: Real> RunTrace<T> {
    pub fn to_csv(&self) -> String {
        let mut out = header_line();
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv_line());
            out.push('\n');
        }
        out
    }

    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.gap)
    }

    pub fn cum_regret(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.cum_regret)
    }
}

/// Parses a trace CSV produced by [`RunTrace::to_csv`].
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Invalid("trace is empty".into()))?;
    if header.trim_end() != header_line() {
        return Err(Error::Invalid("trace header does not match the schema".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            TraceRow::parse_csv_line(l)
                .map_err(|e| Error::Invalid(format!("data row {i}: {e}")))
        })
        .collect()
}
