//! Structured check reports.
//!
//! Reports serialize deterministically: map fields are ordered, and the
//! wall time is kept out of the JSON form so that runs with the same seed
//! and parameters emit byte-identical lines (it still shows in the text
//! rendering).

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn label(&self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Error => "ERROR",
        }
    }
}

/// Outcome of one named verification scenario.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub status: Status,
    /// The identity this scenario certifies, stated as a claim.
    pub claim: String,
    pub tolerance: f64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub residuals: BTreeMap<String, f64>,
    pub witnesses: BTreeMap<String, String>,
    #[serde(skip)]
    pub wall: Duration,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// One line of line-delimited JSON.
    pub fn json_line(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }

    /// Human-readable single line.
    pub fn text_line(&self) -> String {
        let mut line = format!("[{}] {}", self.status.label(), self.scenario);
        if let Some((key, value)) = self
            .residuals
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            line.push_str(&format!("  {key}={value:.3e}"));
        }
        line.push_str(&format!(" (tol {:.1e})", self.tolerance));
        if self.status != Status::Pass {
            for (key, value) in &self.witnesses {
                line.push_str(&format!("  {key}: {value}"));
            }
        }
        line.push_str(&format!(" [{:.1?}]", self.wall));
        line
    }
}
