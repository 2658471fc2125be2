//! Check reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Version tag written into every serialized report record.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Whether a check compares against an explicit constant or tracks an unspecified one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckMode {
    /// Pass iff `lhs <= rhs·(1 + tolerance)`.
    Explicit,
    /// Pass iff the empirical constant is finite and drifts at most 10% from `N` to `2N`.
    Dimensional,
}

/// One resolution of a refinement trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub resolution: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs/rhs` for explicit checks, the empirical constant for dimensional ones.
    pub value: f64,
}

/// Result of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub id: String,
    pub mode: CheckMode,
    pub params: BTreeMap<String, Value>,
    pub lhs: f64,
    /// `structural_factor × empirical_constant` (the latter is 1 for explicit checks).
    pub rhs: f64,
    pub structural_factor: f64,
    pub empirical_constant: Option<f64>,
    pub ratio: f64,
    pub pass: bool,
    pub refinement: Vec<RefinementPoint>,
    pub seed: u64,
    /// Extra measured quantities and sub-verdicts.
    pub details: BTreeMap<String, Value>,
    /// Why the check failed, when it did.
    pub failure: Option<String>,
    /// Wall-clock time; omitted from serialized records unless timings are requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time_ms: Option<f64>,
}

impl CheckReport {
    /// A report for an explicit-constant inequality `lhs <= rhs`.
    pub fn explicit(id: &str, lhs: f64, rhs: f64, tolerance: f64, seed: u64) -> Self {
        let ratio = ratio(lhs, rhs);
        let pass = ratio.is_finite() && ratio <= 1.0 + tolerance;
        let mut report = Self::blank(id, CheckMode::Explicit, seed);
        report.lhs = lhs;
        report.rhs = rhs;
        report.structural_factor = rhs;
        report.ratio = ratio;
        report.pass = pass;
        if !pass {
            report.failure = Some(format!("lhs {lhs:e} exceeds rhs {rhs:e} (ratio {ratio:.6})"));
        }
        report
    }

    /// A report for a dimensional-constant check, given the argmax pair and the refinement trace.
    pub fn dimensional(
        id: &str,
        lhs: f64,
        structural_factor: f64,
        refinement: Vec<RefinementPoint>,
        max_drift: f64,
        seed: u64,
    ) -> Self {
        let constant = refinement.last().map(|p| p.value).unwrap_or(f64::NAN);
        let mut report = Self::blank(id, CheckMode::Dimensional, seed);
        report.lhs = lhs;
        report.structural_factor = structural_factor;
        report.empirical_constant = Some(constant);
        report.rhs = structural_factor * constant;
        report.ratio = ratio(lhs, report.rhs);
        let finite = refinement.iter().all(|p| p.value.is_finite());
        let drift = refinement_drift(&refinement);
        report.details.insert("refinement_drift".into(), json_f64(drift));
        report.pass = finite && drift <= max_drift;
        if !finite {
            report.failure = Some("empirical constant is not finite".into());
        } else if drift > max_drift {
            report.failure = Some(format!(
                "empirical constant drifts by {:.2}% between the last two resolutions (limit {:.0}%)",
                100.0 * drift,
                100.0 * max_drift
            ));
        }
        report.refinement = refinement;
        report
    }

    /// A failed report for a check that could not be executed.
    pub fn error(id: &str, message: String, seed: u64) -> Self {
        let mut report = Self::blank(id, CheckMode::Explicit, seed);
        report.lhs = f64::NAN;
        report.rhs = f64::NAN;
        report.structural_factor = f64::NAN;
        report.ratio = f64::NAN;
        report.failure = Some(message);
        report
    }

    fn blank(id: &str, mode: CheckMode, seed: u64) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            id: id.to_string(),
            mode,
            params: BTreeMap::new(),
            lhs: 0.0,
            rhs: 0.0,
            structural_factor: 0.0,
            empirical_constant: None,
            ratio: 0.0,
            pass: false,
            refinement: Vec::new(),
            seed,
            details: BTreeMap::new(),
            failure: None,
            wall_time_ms: None,
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn detail(&mut self, key: &str, value: impl Into<Value>) {
        self.details.insert(key.to_string(), value.into());
    }

    /// Marks the report failed with `reason` (keeps an earlier reason).
    pub fn fail(&mut self, reason: String) {
        self.pass = false;
        self.failure = Some(match self.failure.take() {
            Some(first) => format!("{first}; {reason}"),
            None => reason,
        });
    }
}

/// `lhs/rhs` with `0/0 = 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Relative change of the value between the last two refinement points.
pub fn refinement_drift(trace: &[RefinementPoint]) -> f64 {
    match trace {
        [.., a, b] => {
            if a.value == b.value {
                0.0
            } else {
                (b.value - a.value).abs() / a.value.abs().max(b.value.abs())
            }
        }
        _ => 0.0,
    }
}

/// JSON number for finite values, string otherwise (JSON has no infinities).
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}
