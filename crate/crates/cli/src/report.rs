//! Run reports. Every command fills the same [`RunReport`]; fields that do
//! not apply are `null` in JSON so the key set is fixed.

use serde::Serialize;
use sep2m_core::feasibility::{FeasibilityStatus, StopReason};
use sep2m_core::hierarchy::{CertificateReport, LevelSummary};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "sep2m";

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub status: &'static str,
    pub stop: &'static str,
    /// PSD defect of the final affine iterate.
    pub gap: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

impl LevelReport {
    pub fn new(
        level: usize,
        status: FeasibilityStatus,
        stop: StopReason,
        gap: f64,
        residual: f64,
        min_eigenvalue: f64,
        iterations: usize,
    ) -> Self {
        Self {
            level,
            status: match status {
                FeasibilityStatus::Feasible => "feasible",
                FeasibilityStatus::Undetermined => "undetermined",
            },
            stop: match stop {
                StopReason::Converged => "converged",
                StopReason::Stalled => "stalled",
                StopReason::IterationCap => "iteration-cap",
            },
            gap: gap + 0.0,
            residual,
            min_eigenvalue,
            iterations,
        }
    }
}

impl From<&LevelSummary> for LevelReport {
    fn from(s: &LevelSummary) -> Self {
        Self::new(s.level, s.status, s.stop, s.gap, s.residual, s.min_eigenvalue, s.iterations)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateInfo {
    /// SHA-256 of the certificate's matrix file text.
    pub sha256: String,
    pub min_eigenvalue: f64,
    /// Frobenius norms of the five linear conditions.
    pub residuals: [f64; 5],
    /// Max-norm errors of the blocks read back from the certificate.
    pub block_errors: [f64; 3],
    pub path: Option<String>,
}

impl CertificateInfo {
    pub fn new(text: &str, rep: &CertificateReport, path: Option<String>) -> Self {
        Self {
            sha256: sha256_hex(text),
            min_eigenvalue: rep.min_eigenvalue,
            residuals: rep.residuals,
            block_errors: [rep.a_error, rep.b_error, rep.d_error],
            path,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GridInfo {
    pub n_u: usize,
    pub n_theta: usize,
    pub min_value: f64,
    pub argmin: [f64; 2],
    pub min_eig_p: f64,
    pub min_eig_r: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub input: Vec<String>,
    pub verdict: String,
    pub level: Option<usize>,
    /// Scalar result of `ppt` and `pair`.
    pub value: Option<f64>,
    pub levels: Vec<LevelReport>,
    pub grid: Option<GridInfo>,
    pub certificate: Option<CertificateInfo>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &'static str, input: Vec<String>, config: serde_json::Value) -> Self {
        Self {
            tool: TOOL,
            version: env!("CARGO_PKG_VERSION"),
            command,
            input,
            verdict: String::new(),
            level: None,
            value: None,
            levels: Vec::new(),
            grid: None,
            certificate: None,
            config,
            seed: None,
            wall_time_s: 0.0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{}: {}\n", self.command, self.verdict);
        if let Some(v) = self.value {
            out += &format!("value: {v:.12e}\n");
        }
        if let Some(g) = &self.grid {
            out += &format!(
                "grid {}x{}: min eigenvalue {:.6e} at z = {:.6e}{:+.6e}i (P: {:.6e}, R: {:.6e})\n",
                g.n_u, g.n_theta, g.min_value, g.argmin[0], g.argmin[1], g.min_eig_p, g.min_eig_r
            );
        }
        for l in &self.levels {
            out += &format!(
                "  n={}: {} ({}), gap {:.3e}, residual {:.3e}, min eig {:.3e}, {} iterations\n",
                l.level, l.status, l.stop, l.gap, l.residual, l.min_eigenvalue, l.iterations
            );
        }
        if let Some(c) = &self.certificate {
            let worst = c.residuals.iter().cloned().fold(0.0, f64::max);
            out += &format!(
                "certificate sha256 {}: min eig {:.3e}, max residual {:.3e}\n",
                c.sha256, c.min_eigenvalue, worst
            );
            if let Some(p) = &c.path {
                out += &format!("certificate written to {p}\n");
            }
        }
        if let Some(s) = self.seed {
            out += &format!("seed: {s}\n");
        }
        out += &format!("wall time: {:.3} s\n", self.wall_time_s);
        out
    }

    pub fn print(&self, json: bool) {
        if json {
            println!("{}", self.to_json());
        } else {
            print!("{}", self.to_text());
        }
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
