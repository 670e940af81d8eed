//! Verification reports shared by the checks and the scenario runner.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "NUMERICAL_FAILURE")]
    NumericalFailure,
}

impl Status {
    /// Combine two outcomes: FAIL dominates NUMERICAL_FAILURE dominates PASS.
    pub fn worst(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (NumericalFailure, _) | (_, NumericalFailure) => NumericalFailure,
            _ => Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario_id: String,
    pub command: String,
    pub inputs: serde_json::Value,
    pub computed: BTreeMap<String, f64>,
    pub status: Status,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub messages: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl VerificationReport {
    pub fn new(command: &str) -> Self {
        Self {
            scenario_id: String::new(),
            command: command.to_string(),
            inputs: serde_json::Value::Null,
            computed: BTreeMap::new(),
            status: Status::Pass,
            tolerances: BTreeMap::new(),
            messages: Vec::new(),
            wall_time_ms: None,
        }
    }

    /// Record a quantity. Non-finite values turn the report into a
    /// numerical failure.
    pub fn record(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        let key = key.into();
        if !value.is_finite() {
            self.status = self.status.worst(Status::NumericalFailure);
            self.messages.push(format!("{key} is not finite"));
        }
        self.computed.insert(key, value);
        self
    }

    /// Record a margin or slack that must be `≥ −tolerance`.
    pub fn require_nonnegative(&mut self, key: impl Into<String>, value: f64, tolerance: f64) -> &mut Self {
        let key = key.into();
        self.record(key.clone(), value);
        if value.is_finite() && value < -tolerance {
            self.status = Status::Fail;
            self.messages.push(format!("{key} = {value:e} below −{tolerance:e}"));
        }
        self
    }

    /// Record a quantity that must match `expected` within `tolerance`.
    pub fn require_close(&mut self, key: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> &mut Self {
        let key = key.into();
        self.record(key.clone(), value);
        if value.is_finite() && (value - expected).abs() > tolerance {
            self.status = Status::Fail;
            self.messages.push(format!("{key} = {value:e}, expected {expected:e} ± {tolerance:e}"));
        }
        self
    }

    pub fn tolerance(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.tolerances.insert(key.into(), value);
        self
    }

    pub fn fail(&mut self, message: impl Into<String>) -> &mut Self {
        self.status = Status::Fail;
        self.messages.push(message.into());
        self
    }

    pub fn numerical_failure(&mut self, message: impl Into<String>) -> &mut Self {
        self.status = self.status.worst(Status::NumericalFailure);
        self.messages.push(message.into());
        self
    }

    /// Fold another report in, prefixing its keys with `prefix/`.
    pub fn absorb(&mut self, prefix: &str, other: VerificationReport) {
        for (k, v) in other.computed {
            self.computed.insert(format!("{prefix}/{k}"), v);
        }
        for (k, v) in other.tolerances {
            self.tolerances.entry(k).or_insert(v);
        }
        self.messages.extend(other.messages.into_iter().map(|m| format!("{prefix}: {m}")));
        self.status = self.status.worst(other.status);
    }

    /// Look up a computed value.
    pub fn get(&self, key: &str) -> Option<f64> {
        self.computed.get(key).copied()
    }
}
