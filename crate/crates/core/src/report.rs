//! Serializable curvature reports.

use serde::{Deserialize, Serialize};

use crate::scalar::Value;
use crate::transport::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub x: usize,
    pub y: usize,
    pub p: usize,
    pub q: usize,
    pub w1: Value,
    pub dxy: Value,
    pub curvature: Value,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1_classical: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1_qsim: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_diff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_diff: Option<f64>,
}

/// An edge left out of an all-edges run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEdge {
    pub x: usize,
    pub y: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub classical: Method,
    pub simulated: Method,
    pub max_abs_diff: f64,
    pub max_rel_diff: f64,
    /// Absolute tolerance; in shot mode, the allowed number of standard errors.
    pub tol: f64,
    pub shot_mode: bool,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub records: Vec<EdgeRecord>,
    #[serde(default)]
    pub skipped: Vec<SkippedEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<CompareSummary>,
    pub meta: RunMeta,
}

impl CurvatureReport {
    /// Structural checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<(), String> {
        for r in &self.records {
            let w1 = r.w1.to_f64().ok_or_else(|| format!("edge ({},{}): unreadable w1", r.x, r.y))?;
            let dxy = r.dxy.to_f64().ok_or_else(|| format!("edge ({},{}): unreadable dxy", r.x, r.y))?;
            let k = r.curvature.to_f64().ok_or_else(|| format!("edge ({},{}): unreadable curvature", r.x, r.y))?;
            if dxy <= 0.0 {
                return Err(format!("edge ({},{}): dxy must be positive", r.x, r.y));
            }
            if r.p == 0 || r.q == 0 {
                return Err(format!("edge ({},{}): empty neighborhood", r.x, r.y));
            }
            let consistent = (k - (1.0 - w1 / dxy)).abs() <= 1e-9 * (1.0 + (w1 / dxy).abs());
            if !consistent {
                return Err(format!("edge ({},{}): curvature inconsistent with w1 and dxy", r.x, r.y));
            }
            let compare_fields =
                [r.w1_classical.is_some(), r.w1_qsim.is_some(), r.abs_diff.is_some(), r.rel_diff.is_some()];
            let in_compare = self.summary.is_some();
            if compare_fields.iter().any(|&f| f != in_compare) {
                return Err(format!("edge ({},{}): compare fields must all be present in compare mode", r.x, r.y));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
