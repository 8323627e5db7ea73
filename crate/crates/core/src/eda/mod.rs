//! Exploratory profiling: per-column statistics, pairwise association tests,
//! plot recommendation, correlation heatmap ordering, and k-means.

mod cluster;
mod pair;
mod plot;
mod profile;
mod svm;

use thiserror::Error;

pub use cluster::{
    correlation_matrix, hierarchical_order, kmeans, CorrelationMatrix, KMeansResult,
};
pub use pair::{profile_pair, PairKind, PairProfile, Relation};
pub use plot::{
    builtin_plot_rows, recommend_plot, rule_plot, table1_plot_rows, CorrBucket, CovarianceSign,
    MetaType, PlotMetaRow, PlotRecommendation, PlotSource, PlotType,
};
pub use profile::{profile_column, ColumnProfile, DistributionShape};
pub use svm::{train_plot_svm, LinearSvmModel, SvmConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdaError {
    #[error("column `{0}` has no observed values")]
    EmptyColumn(String),
    #[error("columns have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("training rows contain a single class")]
    SingleClass,
    #[error("no training rows")]
    EmptyTraining,
    #[error("need at least two numeric columns, found {0}")]
    TooFewNumericColumns(usize),
    #[error("k = {k} exceeds the number of points ({n})")]
    KTooLarge { k: usize, n: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("point {index} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed meta-training fixture: {0}")]
    Fixture(String),
}
