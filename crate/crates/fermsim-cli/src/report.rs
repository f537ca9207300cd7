//! Check records and the JSON report every subcommand emits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    /// value ≤ bound
    #[serde(rename = "<=")]
    AtMost,
    /// value > bound
    #[serde(rename = ">")]
    Above,
    /// value == bound, used for integer identities
    #[serde(rename = "==")]
    Equal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Residual check, passes when `residual <= tol`. NaN fails.
    pub fn residual(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value: residual,
            relation: Relation::AtMost,
            bound: tol,
            passed: residual <= tol,
            detail: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: Relation::Above,
            bound: threshold,
            passed: value > threshold,
            detail: None,
        }
    }

    /// Exact integer identity `lhs == rhs`.
    pub fn exact(name: impl Into<String>, lhs: i128, rhs: i128) -> Self {
        Self {
            name: name.into(),
            value: lhs as f64,
            relation: Relation::Equal,
            bound: rhs as f64,
            passed: lhs == rhs,
            detail: Some(format!("{lhs} == {rhs}")),
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: f64::from(u8::from(ok)),
            relation: Relation::Equal,
            bound: 1.0,
            passed: ok,
            detail: Some(detail.into()),
        }
    }

    /// Fails the check when a side condition does not hold.
    pub fn require(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<serde_json::Value>,
}

impl SuiteReport {
    pub fn new(suite: &str, params: serde_json::Value, checks: Vec<Check>) -> Self {
        let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
        Self { suite: suite.into(), params, checks, passed, data: None }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Top-level `verify` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance_override: Option<f64>,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn new(seed: u64, tolerance_override: Option<f64>, suites: Vec<SuiteReport>) -> Self {
        let passed = suites.iter().all(|s| s.passed);
        Self {
            tool: "fermsim".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: "verify".into(),
            seed,
            tolerance_override,
            suites,
            passed,
        }
    }
}
