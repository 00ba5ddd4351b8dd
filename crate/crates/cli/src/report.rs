//! JSON report schema.
//!
//! Non-finite floats serialize as `null`. Field names are stable.

use serde::Serialize;
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub feature: usize,
    pub a: f64,
    pub epsilon: f64,
    pub objective: f64,
}

/// Output of `scale`.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleReport {
    pub method: String,
    pub epsilon: f64,
    pub range: Option<[f64; 2]>,
    pub scaling: Option<Vec<f64>>,
    pub local_sigmas: Option<Vec<f64>>,
    pub grid: Vec<f64>,
    pub scores: Vec<Option<f64>>,
    pub argmax_eps: Option<f64>,
    pub accuracy: Vec<f64>,
    pub seed: u64,
    pub config: Value,
    pub flags: Vec<String>,
    pub trace: Vec<TraceRow>,
    pub d_hat: Option<usize>,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionScores {
    pub rho_psi: Vec<Option<f64>>,
    pub ge: Vec<Option<f64>>,
    pub rho_p: Vec<Option<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionArgmax {
    pub rho_psi: Option<f64>,
    pub ge: Option<f64>,
    pub rho_p: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Optional JSON companion of `sweep`.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub method: &'static str,
    pub grid: Vec<f64>,
    pub scores: CriterionScores,
    pub argmax_eps: CriterionArgmax,
    pub accuracy: Vec<Option<f64>>,
    pub seed: u64,
    pub config: Value,
    pub flags: Vec<String>,
    pub version: &'static str,
}

/// Sidecar written next to generated data.
#[derive(Debug, Clone, Serialize)]
pub struct GenParams {
    pub kind: String,
    pub seed: u64,
    pub rows: usize,
    pub columns: usize,
    pub labeled: bool,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
    pub version: &'static str,
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}
