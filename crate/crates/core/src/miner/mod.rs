//! Feature-importance ranking with a random forest, and association-rule
//! mining with Apriori and FP-growth.

mod assoc;
mod forest;

use thiserror::Error;

pub use assoc::{
    frequent_itemsets_apriori, frequent_itemsets_fpgrowth, mine_apriori, mine_fpgrowth,
    transactionize, AssociationRule, FrequentItemset, MiningConfig,
};
pub use forest::{rank_features, FeatureImportance, ForestConfig, ImportanceRanking};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinerError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("no usable predictor columns besides the target")]
    NoPredictors,
    #[error("target `{0}` has fewer than two distinct observed values")]
    ConstantTarget(String),
    #[error("no transactions to mine")]
    EmptyTransactions,
    #[error("{name} must lie in (0, 1], got {value}")]
    InvalidThreshold { name: &'static str, value: f64 },
    #[error("dataset has no categorical columns")]
    NoCategoricalColumns,
}
