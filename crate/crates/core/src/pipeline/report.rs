use serde::{Deserialize, Serialize};

use super::plan::{CleaningPlan, StepRecord};
use super::{read_document, PipelineError, ENGINE_VERSION};
use crate::cleaner::{find_missing, MergeEntry, MissingReport, OutlierReport, Violation};
use crate::eda::{
    builtin_plot_rows, profile_column, profile_pair, recommend_plot, train_plot_svm, ColumnProfile,
    PairProfile, PlotRecommendation, SvmConfig,
};
use crate::miner::{mine_fpgrowth, rank_features, transactionize, AssociationRule, ForestConfig, ImportanceRanking, MinerError, MiningConfig};
use crate::tabular::{Dataset, TypeInferenceReport, VariableType};

pub const REPORT_FORMAT: &str = "dataprep-report";
pub const REPORT_VERSION: u32 = 1;

/// Bounds on the exploratory part of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportOptions {
    /// Without a target, pairs are profiled among this many leading
    /// non-text columns. With a target, every column is paired with it.
    pub pair_columns: usize,
    pub mining: MiningConfig,
    pub max_rules: usize,
    pub forest: ForestConfig,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            pair_columns: 12,
            mining: MiningConfig {
                min_support: 0.3,
                min_confidence: 0.9,
                max_len: Some(3),
            },
            max_rules: 50,
            forest: ForestConfig {
                n_trees: 50,
                max_depth: Some(12),
                min_samples_leaf: 2,
                max_features: None,
                seed: 0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotEntry {
    pub columns: Vec<String>,
    pub recommendation: PlotRecommendation,
}

/// Profiling output for one dataset.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EdaSummary {
    pub profiles: Vec<ColumnProfile>,
    pub pair_profiles: Vec<PairProfile>,
    pub plots: Vec<PlotEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub importance: Option<ImportanceRanking>,
    pub rules: Vec<AssociationRule>,
    pub missing: MissingReport,
}

pub fn eda_summary(
    d: &Dataset,
    target: Option<&str>,
    seed: u64,
    opts: &ReportOptions,
) -> Result<EdaSummary, PipelineError> {
    let profiles: Vec<ColumnProfile> = d.columns().iter().filter_map(|c| profile_column(c).ok()).collect();
    let profile_of = |name: &str| profiles.iter().find(|p| p.name == name);

    let pairs: Vec<(&str, &str)> = match target.filter(|t| profile_of(t).is_some()) {
        Some(t) => profiles
            .iter()
            .filter(|p| p.name != t && p.vtype != VariableType::Text)
            .map(|p| (p.name.as_str(), t))
            .collect(),
        None => {
            let lead: Vec<&str> = profiles
                .iter()
                .filter(|p| p.vtype != VariableType::Text)
                .take(opts.pair_columns)
                .map(|p| p.name.as_str())
                .collect();
            let mut v = Vec::new();
            for (i, a) in lead.iter().enumerate() {
                for b in &lead[i + 1..] {
                    v.push((*a, *b));
                }
            }
            v
        }
    };
    let mut pair_profiles = Vec::with_capacity(pairs.len());
    for (a, b) in &pairs {
        if let Ok(pp) = profile_pair(d.column(a)?, d.column(b)?) {
            pair_profiles.push(pp);
        }
    }

    let svm = train_plot_svm(&builtin_plot_rows(), &SvmConfig::default())?;
    let mut plots: Vec<PlotEntry> = profiles
        .iter()
        .map(|p| PlotEntry {
            columns: vec![p.name.clone()],
            recommendation: recommend_plot(p, None, None, Some(&svm)),
        })
        .collect();
    for pp in &pair_profiles {
        let (Some(pa), Some(pb)) = (profile_of(&pp.a), profile_of(&pp.b)) else {
            continue;
        };
        plots.push(PlotEntry {
            columns: vec![pp.a.clone(), pp.b.clone()],
            recommendation: recommend_plot(pa, Some(pb), Some(pp), Some(&svm)),
        });
    }

    let importance = match target {
        Some(t) if d.column_count() > 1 => {
            let cfg = ForestConfig { seed, ..opts.forest.clone() };
            match rank_features(d, t, &cfg) {
                Ok(r) => Some(r),
                Err(MinerError::NoPredictors | MinerError::ConstantTarget(_)) => None,
                Err(e) => return Err(e.into()),
            }
        }
        _ => None,
    };

    let rules = match transactionize(d) {
        Ok(tx) if !tx.is_empty() => {
            let mut rules = mine_fpgrowth(&tx, &opts.mining)?;
            rules.sort_by(|a, b| {
                b.lift
                    .total_cmp(&a.lift)
                    .then(b.confidence.total_cmp(&a.confidence))
                    .then(b.support.total_cmp(&a.support))
                    .then_with(|| a.antecedent.cmp(&b.antecedent))
                    .then_with(|| a.consequent.cmp(&b.consequent))
            });
            rules.truncate(opts.max_rules);
            rules
        }
        Ok(_) | Err(MinerError::NoCategoricalColumns | MinerError::EmptyTransactions) => Vec::new(),
        Err(e) => return Err(e.into()),
    };

    Ok(EdaSummary {
        profiles,
        pair_profiles,
        plots,
        importance,
        rules,
        missing: find_missing(d),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    pub rows: usize,
    pub columns: Vec<String>,
}

impl Shape {
    pub fn of(d: &Dataset) -> Self {
        Self {
            rows: d.row_count(),
            columns: d.column_names().iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutliers {
    pub step: String,
    pub columns: Vec<String>,
    pub flagged_row_ids: Vec<usize>,
    pub report: OutlierReport,
}

/// Everything one execution produced. Together with the input file it
/// determines the cleaned output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format: String,
    pub version: u32,
    pub engine_version: String,
    pub fingerprint: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub input: Shape,
    pub output: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_inference: Option<TypeInferenceReport>,
    pub eda: EdaSummary,
    pub outliers: Vec<StepOutliers>,
    pub merge_log: Vec<MergeEntry>,
    pub applied_plan: Vec<StepRecord>,
    pub constraints_before: Vec<Violation>,
    pub constraints_after: Vec<Violation>,
}

impl RunReport {
    pub(crate) fn start(plan: &CleaningPlan, d: &Dataset, inference: Option<TypeInferenceReport>, eda: EdaSummary) -> Self {
        Self {
            format: REPORT_FORMAT.to_string(),
            version: REPORT_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            fingerprint: plan.fingerprint.clone(),
            seed: plan.seed,
            target: plan.target.clone(),
            input: Shape::of(d),
            output: Shape::of(d),
            type_inference: inference,
            eda,
            outliers: Vec::new(),
            merge_log: Vec::new(),
            applied_plan: Vec::new(),
            constraints_before: Vec::new(),
            constraints_after: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        read_document(text, "report", REPORT_FORMAT, REPORT_VERSION)
    }
}
