//! Preprocessing: encoders, scalers, power transforms, discretization, the
//! boosted preprocessing recommender, and step propagation between
//! similarly named attributes.

mod embed;
mod encode;
mod gbm;
mod power;
mod recommend;
mod scale;

use thiserror::Error;

use crate::tabular::TabularError;

pub use embed::{
    cosine_distance, embed_attribute, euclidean_distance, propagate_steps, AttributeEmbedding,
    AttributeInfo, DistanceMetric, EmbeddingProvider, PropagationConfig, Propagation,
    TrigramProvider,
};
pub use encode::{
    decode_frequency, decode_labels, frequency_encode, label_encode, one_hot_encode, EncodingKind,
    EncodingMap, DEFAULT_ONE_HOT_CAP,
};
pub use gbm::{
    builtin_preproc_rows, table2_preproc_rows, train_preproc_gbm, AnalysisType, Cardinality,
    GbmConfig, GbmModel, MissingHandling, OriginalDistribution, PreprocLabels, PreprocMetaRow,
    ScaleOfMeasurement, ScalingLabel, TransformationLabel, VariableNature,
};
pub use power::{
    apply_power, boxcox, boxcox_log_likelihood, inverse_power, PowerKind, PowerTransformParams,
    BOXCOX_INTERVAL,
};
pub use recommend::{
    meta_row_for, recommend_preprocessing, PreprocContext, PreprocStep, RecommendationSource,
};
pub use scale::{
    apply_scaler, discretize, inverse_scaler, minmax, quantile_edges, zscore, ScalerParams,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("column `{0}` is not categorical")]
    NonCategorical(String),
    #[error("column `{0}` is not numeric")]
    NonNumeric(String),
    #[error("order for `{column}` does not list `{value}`")]
    IncompleteOrder { column: String, value: String },
    #[error("column `{column}` has {distinct} categories, above the one-hot cap of {cap}")]
    CardinalityTooHigh {
        column: String,
        distinct: usize,
        cap: usize,
    },
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("column `{0}` has zero range")]
    ZeroRange(String),
    #[error("column `{0}` has values that are not strictly positive")]
    NonPositiveValues(String),
    #[error("column `{0}` has negative values")]
    NegativeValues(String),
    #[error("discretization edges must be at least two strictly ascending finite values")]
    UnsortedEdges,
    #[error("no label field varies across the training rows")]
    DegenerateLabels,
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("attribute name is empty")]
    EmptyName,
    #[error("embeddings come from different providers")]
    MixedProviders,
    #[error("column `{0}` has no observed values")]
    AllMissing(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed preprocessing fixture: {0}")]
    Fixture(String),
    #[error(transparent)]
    Tabular(#[from] TabularError),
}
