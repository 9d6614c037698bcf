//! The verification report emitted by every check pipeline.
//!
//! Reports are plain data with a stable serialized form: field order is
//! fixed by declaration order, the config echo is an ordered map, and
//! nothing time- or host-dependent is recorded, so a rerun with the same
//! inputs serializes to identical bytes.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypotheses of the statement under test exclude these inputs;
    /// nothing was asserted.
    DomainExcluded,
    /// Not enough data to decide either way.
    Inconclusive,
}

/// One item that failed its check, with the signed margin by which it
/// failed and a human-readable locator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub item: String,
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub pipeline: String,
    pub config_echo: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub items_tested: u64,
    pub violations: Vec<Violation>,
    /// Smallest slack observed across all items: positive means the
    /// worst item still passed by that much, negative means the worst
    /// item failed by that much. Absent when nothing was tested.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl VerificationReport {
    pub fn new(pipeline: impl Into<String>, tolerance: f64) -> Self {
        VerificationReport {
            pipeline: pipeline.into(),
            config_echo: BTreeMap::new(),
            seed: None,
            items_tested: 0,
            violations: Vec::new(),
            worst_margin: None,
            tolerance,
            verdict: Verdict::Pass,
        }
    }

    pub fn echo(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.config_echo.insert(key.into(), value.to_string());
        self
    }

    /// Fold one item's signed margin into `worst_margin`.
    pub fn observe_margin(&mut self, margin: f64) {
        self.worst_margin = Some(match self.worst_margin {
            Some(m) => m.min(margin),
            None => margin,
        });
    }

    pub fn push_violation(&mut self, item: impl Into<String>, margin: f64, detail: impl Into<String>) {
        self.violations.push(Violation {
            item: item.into(),
            margin,
            detail: detail.into(),
        });
    }

    /// Set the verdict from the recorded violations: `fail` if any,
    /// otherwise `pass`. Callers needing `domain-excluded` or
    /// `inconclusive` set those directly.
    pub fn finish(&mut self) -> &mut Self {
        self.verdict = if self.violations.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        self
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::DomainExcluded)
    }

    /// Canonical serialized form (pretty JSON plus trailing newline).
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
