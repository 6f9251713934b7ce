//! JSON run records for the CLI.
//!
//! Every command emits a single JSON object capturing its full parameter
//! set, seed, timings and outputs. Numerical fields round trip exactly
//! (serde_json prints shortest round-tripping decimals), so re-running a
//! recorded command reproduces its residuals bit for bit within a fixed
//! build; only timings differ.

use crate::solver::{DiagonalizationResult, SolveProvenance};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: &str = "defpencil-record v1";

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Timings {
    pub total_ms: f64,
    pub perturb_ms: f64,
    pub solve_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ProvenanceRecord {
    pub seed: u64,
    pub mu: f64,
    pub norm_v1: f64,
    pub norm_v2: f64,
    pub grid_z0: f64,
    pub grid_omega: f64,
    pub grid_count: u64,
    pub grid_epsilon: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub c: f64,
    pub r: f64,
    pub theta_fail: f64,
    pub mode: String,
    pub residual_vs_perturbed_a: f64,
    pub residual_vs_perturbed_b: f64,
}

impl From<&SolveProvenance> for ProvenanceRecord {
    fn from(p: &SolveProvenance) -> Self {
        ProvenanceRecord {
            seed: p.seed,
            mu: p.mu,
            norm_v1: p.norm_v1,
            norm_v2: p.norm_v2,
            grid_z0: p.grid_z0,
            grid_omega: p.grid_omega,
            grid_count: p.grid_count,
            grid_epsilon: p.grid_epsilon,
            epsilon: p.epsilon,
            eta: p.eta,
            c: p.c,
            r: p.r,
            theta_fail: p.theta_fail,
            mode: p.mode.to_string(),
            residual_vs_perturbed_a: p.residual_vs_perturbed.0,
            residual_vs_perturbed_b: p.residual_vs_perturbed.1,
        }
    }
}

/// The diagonalization payload: X stored as row-major [re, im] pairs.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DiagonalizationRecord {
    pub n: usize,
    pub x: Vec<Vec<[f64; 2]>>,
    pub lambda_a: Vec<f64>,
    pub lambda_b: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub residual_a: f64,
    pub residual_b: f64,
    pub recursion_depth: usize,
    pub total_halley_iters: usize,
}

impl From<&DiagonalizationResult> for DiagonalizationRecord {
    fn from(r: &DiagonalizationResult) -> Self {
        let n = r.x.nrows();
        DiagonalizationRecord {
            n,
            x: (0..n)
                .map(|i| (0..n).map(|j| [r.x[(i, j)].re, r.x[(i, j)].im]).collect())
                .collect(),
            lambda_a: r.lambda_a.iter().copied().collect(),
            lambda_b: r.lambda_b.iter().copied().collect(),
            eigenvalues: r.eigenvalues(),
            residual_a: r.residual_a,
            residual_b: r.residual_b,
            recursion_depth: r.recursion_depth,
            total_halley_iters: r.total_halley_iters,
        }
    }
}

impl DiagonalizationRecord {
    pub fn to_matrix(&self) -> crate::CMat {
        crate::CMat::from_fn(self.n, self.n, |i, j| {
            crate::C64::new(self.x[i][j][0], self.x[i][j][1])
        })
    }
}

/// One CLI invocation, serialized as a single JSON object.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunRecord {
    pub format: String,
    pub command: String,
    /// Full parameter set as the CLI resolved it.
    pub params: serde_json::Value,
    pub seed: u64,
    pub timings: Timings,
    pub success: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<DiagonalizationRecord>,
}

impl RunRecord {
    pub fn new(command: &str, params: serde_json::Value, seed: u64) -> Self {
        RunRecord {
            format: FORMAT_VERSION.to_string(),
            command: command.to_string(),
            params,
            seed,
            timings: Timings::default(),
            success: false,
            error: None,
            provenance: None,
            output: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run record serializes")
    }

    pub fn from_json(text: &str) -> crate::Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| crate::PencilError::Parse(format!("bad run record: {e}")))
    }

    /// Copy with timings zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        let mut c = self.clone();
        c.timings = Timings::default();
        c
    }
}
