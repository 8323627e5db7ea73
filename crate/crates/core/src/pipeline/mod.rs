//! Cleaning plans: construction from profiles and recommendations,
//! deterministic execution, run reports, and export.

mod execute;
mod plan;
mod report;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cleaner::{CleanerError, Constraint, ConstraintSet, Violation};
use crate::eda::EdaError;
use crate::miner::MinerError;
use crate::tabular::TabularError;
use crate::transform::TransformError;

pub use execute::{detect_outliers, execute_plan, execute_plan_on, export_csv, export_report};
pub use plan::{
    build_plan, fingerprint, plan_for_bytes, CleaningPlan, Operation, Origin, OutlierDetector,
    PlanOptions, StepRecord, StepResult, PLAN_FORMAT, PLAN_VERSION,
};
pub use report::{
    eda_summary, EdaSummary, PlotEntry, ReportOptions, RunReport, Shape, StepOutliers,
    REPORT_FORMAT, REPORT_VERSION,
};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("input fingerprint {found} does not match the plan fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("{} constraint violation(s) remain after execution", violations.len())]
    ConstraintViolationAfterRepair {
        violations: Vec<Violation>,
        partial: Box<RunReport>,
    },
    #[error("step `{step}` failed: {message}")]
    StepFailed {
        step: String,
        message: String,
        partial: Box<RunReport>,
    },
    #[error("unsupported {kind} version {found}")]
    UnsupportedVersion { kind: &'static str, found: u32 },
    #[error("invalid {kind} document: {message}")]
    Format { kind: &'static str, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Eda(#[from] EdaError),
    #[error(transparent)]
    Cleaner(#[from] CleanerError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Miner(#[from] MinerError),
}

/// Parses a JSON document after checking its `format` tag and `version`.
pub(crate) fn read_document<T: DeserializeOwned>(
    text: &str,
    kind: &'static str,
    format: &str,
    version: u32,
) -> Result<T, PipelineError> {
    let format_err = |message: String| PipelineError::Format { kind, message };
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| format_err(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(format) {
        return Err(format_err(format!("missing `format: \"{format}\"`")));
    }
    let found = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if found != version {
        return Err(PipelineError::UnsupportedVersion { kind, found });
    }
    serde_json::from_value(value).map_err(|e| format_err(e.to_string()))
}

pub const CONSTRAINTS_FORMAT: &str = "dataprep-constraints";
pub const CONSTRAINTS_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ConstraintsDocument {
    format: String,
    version: u32,
    constraints: Vec<Constraint>,
}

pub fn constraints_to_json(set: &ConstraintSet) -> String {
    let doc = ConstraintsDocument {
        format: CONSTRAINTS_FORMAT.to_string(),
        version: CONSTRAINTS_VERSION,
        constraints: set.constraints.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("constraints serialize");
    s.push('\n');
    s
}

pub fn constraints_from_json(text: &str) -> Result<ConstraintSet, PipelineError> {
    let doc: ConstraintsDocument = read_document(text, "constraints", CONSTRAINTS_FORMAT, CONSTRAINTS_VERSION)?;
    Ok(ConstraintSet::new(doc.constraints))
}
