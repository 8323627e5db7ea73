//! Repair engine: missing-value handling, outlier detection, winsorization,
//! duplicate resolution, and integrity constraints.

mod constraints;
mod dedupe;
mod missing;
mod outlier;

use thiserror::Error;

use crate::tabular::TabularError;

pub use constraints::{
    repair_constraints, validate_constraints, Constraint, ConstraintSet, Violation,
};
pub use dedupe::{
    dedupe, edit_distance, learn_similarity, normalized_edit_distance, replay_merge_log,
    AttributeDistance, Blocking, DedupeConfig, LabeledPair, MergeEntry, SimilarityModel,
};
pub use missing::{
    drop_rows_by_missing, find_missing, impute_mice, impute_simple, ColumnMissing, ImputeStrategy,
    MiceConfig, MissingReport, RowMissing,
};
pub use outlier::{
    detect_dbscan, detect_iqr, detect_isolation_forest, detect_lof, knee_eps, winsorize,
    winsorize_with_bounds, DbscanConfig, DbscanLabel, DbscanResult, DetectorKind, FlaggedPoint,
    IsolationForestConfig, LofConfig, OutlierReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CleanerError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` has no observed values")]
    AllMissing(String),
    #[error("strategy {strategy} needs a numeric column, `{column}` is not")]
    StrategyTypeMismatch { column: String, strategy: String },
    #[error("column `{0}` is not numeric")]
    NonNumeric(String),
    #[error("column `{column}` has {found} observed values, need at least {needed}")]
    TooFewValues {
        column: String,
        found: usize,
        needed: usize,
    },
    #[error("no points given")]
    EmptyInput,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("k = {k} needs more than {k} points, got {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pair supervision needs both similar and dissimilar pairs")]
    SingleClassPairs,
    #[error("similarity attribute `{0}` is not a dataset column")]
    UnknownAttribute(String),
    #[error("need at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}

/// Validates that `points` is non-empty, rectangular and finite; returns the
/// dimension.
pub(crate) fn check_points(points: &[Vec<f64>]) -> Result<usize, CleanerError> {
    let first = points.first().ok_or(CleanerError::EmptyInput)?;
    let dim = first.len();
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(CleanerError::DimensionMismatch {
                index,
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(CleanerError::NonFinite(index));
        }
    }
    Ok(dim)
}
