//! Check records and suite reports.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::time::Instant;

/// One verified identity, bound or count.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Check {
    pub name: String,
    /// Stable identifier of the identity being checked.
    pub paper_anchor: String,
    pub passed: bool,
    /// Non-finite values are written as JSON `null` and read back as NaN.
    #[serde(deserialize_with = "nullable_f64")]
    pub max_residual: f64,
    #[serde(deserialize_with = "nullable_f64")]
    pub tol: f64,
    pub samples: u64,
    pub seed: u64,
    pub runtime_ms: f64,
    /// Extra findings (argmax points, fitted constants, verdicts).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, serde_json::Value>,
}

impl Check {
    /// Pass iff `max_residual <= tol`; NaN never passes.
    pub fn residual(name: &str, anchor: &str, max_residual: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            paper_anchor: anchor.to_string(),
            passed: max_residual <= tol,
            max_residual,
            tol,
            samples: 0,
            seed: 0,
            runtime_ms: 0.0,
            details: BTreeMap::new(),
        }
    }

    /// Inequality-type or verdict-type check with an explicit pass rule.
    pub fn verdict(name: &str, anchor: &str, passed: bool, max_residual: f64, tol: f64) -> Self {
        let mut c = Check::residual(name, anchor, max_residual, tol);
        c.passed = passed && !max_residual.is_nan();
        c
    }

    pub fn samples(mut self, n: u64) -> Self {
        self.samples = n;
        self
    }

    pub fn seed(mut self, s: u64) -> Self {
        self.seed = s;
        self
    }

    pub fn detail(mut self, key: &str, v: impl Serialize) -> Self {
        self.details.insert(
            key.to_string(),
            serde_json::to_value(v).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn timed(mut self, start: Instant) -> Self {
        self.runtime_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }
}

/// Output of one suite run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
pub struct CheckReport {
    pub suite: String,
    pub checks: Vec<Check>,
    pub environment: BTreeMap<String, String>,
}

impl CheckReport {
    pub fn new(suite: &str) -> Self {
        CheckReport { suite: suite.to_string(), ..Default::default() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Residual values in order, runtime excluded. Used for determinism checks.
    pub fn fingerprint(&self) -> Vec<(String, u64, bool)> {
        self.checks
            .iter()
            .map(|c| (c.name.clone(), c.max_residual.to_bits(), c.passed))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn nullable_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Running maximum that treats NaN as infinitely bad.
pub fn worse(acc: f64, x: f64) -> f64 {
    if x.is_nan() || acc.is_nan() {
        f64::NAN
    } else {
        acc.max(x)
    }
}
