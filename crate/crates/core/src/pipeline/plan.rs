use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_document, PipelineError, ENGINE_VERSION};
use super::execute::detect_outliers;
use crate::cleaner::{impute_simple, ConstraintSet, ImputeStrategy, IsolationForestConfig};
use crate::eda::{profile_column, ColumnProfile};
use crate::tabular::{parse_csv, Dataset, ParseOptions, TypeInferenceReport, VariableType};
use crate::transform::{
    builtin_preproc_rows, embed_attribute, propagate_steps, recommend_preprocessing,
    train_preproc_gbm, AnalysisType, AttributeInfo, GbmConfig, PowerKind, PreprocContext,
    PreprocStep, PropagationConfig, TrigramProvider, DEFAULT_ONE_HOT_CAP,
};

pub const PLAN_FORMAT: &str = "dataprep-plan";
pub const PLAN_VERSION: u32 = 1;

/// Hex SHA-256 of the raw input bytes.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutlierDetector {
    /// Union of per-column IQR fences.
    Iqr { k: f64 },
    /// Runs on z-scored columns; `eps: None` picks the k-distance knee.
    Dbscan { eps: Option<f64>, min_pts: usize },
    /// With `confirm_z` set, a flagged row stands only if one of its
    /// coordinates has a modified z-score (distance from the column median
    /// over 1.4826·MAD) above that value.
    IsolationForest {
        n_trees: usize,
        subsample: usize,
        threshold: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        confirm_z: Option<f64>,
    },
    /// Runs on z-scored columns.
    Lof { k: usize, threshold: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Operation {
    /// Profiling marker; changes nothing.
    Profile,
    DropColumns,
    DropRowsByMissing { threshold: f64 },
    Impute { strategy: ImputeStrategy },
    ImputeMice { iterations: usize },
    RemoveOutliers { detector: OutlierDetector },
    /// Removes rows by stable row id.
    RemoveRows { row_ids: Vec<usize> },
    Winsorize { lower_pct: f64, upper_pct: f64 },
    /// Removes rows identical in every column, keeping the first.
    DedupeExact,
    Dedupe { r1: f64, rn: f64, window: usize },
    RepairConstraints,
    LabelEncode,
    OneHotEncode { cap: usize },
    FrequencyEncode,
    /// Uses `edges` when given, else quantile bins.
    Discretize {
        bins: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        edges: Vec<f64>,
    },
    BoxCox,
    Power { kind: PowerKind },
    ZScore,
    MinMax { lo: f64, hi: f64 },
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Profile => "profile",
            Operation::DropColumns => "drop_columns",
            Operation::DropRowsByMissing { .. } => "drop_rows_by_missing",
            Operation::Impute { .. } => "impute",
            Operation::ImputeMice { .. } => "impute_mice",
            Operation::RemoveOutliers { .. } => "remove_outliers",
            Operation::RemoveRows { .. } => "remove_rows",
            Operation::Winsorize { .. } => "winsorize",
            Operation::DedupeExact => "dedupe_exact",
            Operation::Dedupe { .. } => "dedupe",
            Operation::RepairConstraints => "repair_constraints",
            Operation::LabelEncode => "label_encode",
            Operation::OneHotEncode { .. } => "one_hot_encode",
            Operation::FrequencyEncode => "frequency_encode",
            Operation::Discretize { .. } => "discretize",
            Operation::BoxCox => "box_cox",
            Operation::Power { .. } => "power",
            Operation::ZScore => "z_score",
            Operation::MinMax { .. } => "min_max",
        }
    }

    /// Encoding, transformation, or scaling.
    pub fn is_preprocessing(&self) -> bool {
        matches!(
            self,
            Operation::LabelEncode
                | Operation::OneHotEncode { .. }
                | Operation::FrequencyEncode
                | Operation::Discretize { .. }
                | Operation::BoxCox
                | Operation::Power { .. }
                | Operation::ZScore
                | Operation::MinMax { .. }
        )
    }

    fn from_preproc(step: &PreprocStep, cap: usize) -> Self {
        match step {
            PreprocStep::Impute { strategy } => Operation::Impute { strategy: *strategy },
            PreprocStep::LabelEncode => Operation::LabelEncode,
            PreprocStep::OneHotEncode => Operation::OneHotEncode { cap },
            PreprocStep::FrequencyEncode => Operation::FrequencyEncode,
            PreprocStep::Discretize { bins } => Operation::Discretize {
                bins: *bins,
                edges: Vec::new(),
            },
            PreprocStep::BoxCox => Operation::BoxCox,
            PreprocStep::Power { kind } => Operation::Power { kind: *kind },
            PreprocStep::ZScore => Operation::ZScore,
            PreprocStep::MinMax { lo, hi } => Operation::MinMax { lo: *lo, hi: *hi },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Recommended,
    UserAccepted,
    UserEdited,
    Propagated,
}

/// What a step did when it ran.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepResult {
    pub rows_before: usize,
    pub rows_after: usize,
    pub rows_removed: usize,
    pub cells_changed: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed_row_ids: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns_added: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns_removed: Vec<String>,
    /// Targets left unchanged because cleaning made them constant or empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    /// Parameters fitted at run time (scaler moments, encoding tables, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fitted: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub id: String,
    pub operation: Operation,
    pub targets: Vec<String>,
    pub origin: Origin,
    /// Earlier origins, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub origin_chain: Vec<Origin>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<StepResult>,
}

impl StepRecord {
    pub fn set_origin(&mut self, origin: Origin) {
        if self.origin != origin {
            self.origin_chain.push(self.origin);
            self.origin = origin;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningPlan {
    pub format: String,
    pub version: u32,
    pub engine_version: String,
    /// Hex SHA-256 of the input file the plan was built for.
    pub fingerprint: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default)]
    pub parse_options: ParseOptions,
    #[serde(default)]
    pub constraints: ConstraintSet,
    pub steps: Vec<StepRecord>,
}

impl CleaningPlan {
    pub fn new(fingerprint: impl Into<String>, seed: u64) -> Self {
        Self {
            format: PLAN_FORMAT.to_string(),
            version: PLAN_VERSION,
            engine_version: ENGINE_VERSION.to_string(),
            fingerprint: fingerprint.into(),
            seed,
            target: None,
            parse_options: ParseOptions::default(),
            constraints: ConstraintSet::default(),
            steps: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        read_document(text, "plan", PLAN_FORMAT, PLAN_VERSION)
    }

    pub fn step(&self, id: &str) -> Option<&StepRecord> {
        self.steps.iter().find(|s| s.id == id)
    }

    pub fn step_mut(&mut self, id: &str) -> Option<&mut StepRecord> {
        self.steps.iter_mut().find(|s| s.id == id)
    }

    pub fn remove_step(&mut self, id: &str) -> Option<StepRecord> {
        let i = self.steps.iter().position(|s| s.id == id)?;
        Some(self.steps.remove(i))
    }

    fn next_id(&self) -> String {
        let max = self
            .steps
            .iter()
            .filter_map(|s| s.id.strip_prefix('s')?.parse::<usize>().ok())
            .max()
            .unwrap_or(0);
        format!("s{:03}", max + 1)
    }

    fn record(&self, operation: Operation, targets: Vec<String>, origin: Origin, note: Option<String>) -> StepRecord {
        StepRecord {
            id: self.next_id(),
            operation,
            targets,
            origin,
            origin_chain: Vec::new(),
            note,
            result: None,
        }
    }

    /// Appends a step and returns its id.
    pub fn push(&mut self, operation: Operation, targets: Vec<String>, origin: Origin) -> String {
        self.push_with_note(operation, targets, origin, None)
    }

    fn push_with_note(
        &mut self,
        operation: Operation,
        targets: Vec<String>,
        origin: Origin,
        note: Option<String>,
    ) -> String {
        let rec = self.record(operation, targets, origin, note);
        let id = rec.id.clone();
        self.steps.push(rec);
        id
    }

    /// Inserts a cleaning step ahead of constraint repair and preprocessing,
    /// keeping the canonical stage order.
    pub fn insert_cleaning_step(&mut self, operation: Operation, targets: Vec<String>, origin: Origin) -> String {
        let rec = self.record(operation, targets, origin, None);
        let id = rec.id.clone();
        let at = self
            .steps
            .iter()
            .position(|s| s.operation.is_preprocessing() || s.operation == Operation::RepairConstraints)
            .unwrap_or(self.steps.len());
        self.steps.insert(at, rec);
        id
    }

    /// Walks the steps tracking which columns exist, and reports the first
    /// step naming a column that does not exist at that point. Columns
    /// created by one-hot encoding are accepted by prefix.
    pub fn check_references(&self, d: &Dataset) -> Result<(), (String, String)> {
        let mut present: BTreeSet<String> = d.column_names().iter().map(|s| s.to_string()).collect();
        let mut one_hot: Vec<String> = Vec::new();
        for s in &self.steps {
            if s.operation == Operation::Profile {
                continue;
            }
            for t in &s.targets {
                let generated = one_hot.iter().any(|p| t.starts_with(&format!("{p}=")));
                if !present.contains(t) && !generated {
                    return Err((s.id.clone(), t.clone()));
                }
            }
            match s.operation {
                Operation::DropColumns => s.targets.iter().for_each(|t| {
                    present.remove(t);
                }),
                Operation::OneHotEncode { .. } => s.targets.iter().for_each(|t| {
                    present.remove(t);
                    one_hot.push(t.clone());
                }),
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanOptions {
    pub seed: u64,
    pub target: Option<String>,
    /// Use the boosted recommender trained on the shipped meta-dataset;
    /// rules otherwise.
    pub use_model: bool,
    /// `None` disables step propagation between similar attributes.
    pub propagation: Option<PropagationConfig>,
    pub one_hot_cap: usize,
    /// Columns missing more than this fraction are dropped.
    pub drop_column_missing_fraction: f64,
    /// Isolation-forest score above which rows are proposed for removal.
    pub outlier_threshold: f64,
    /// Modified z-score a flagged row must exceed in some column.
    pub outlier_confirm_z: Option<f64>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            target: None,
            use_model: true,
            propagation: Some(PropagationConfig::default()),
            one_hot_cap: DEFAULT_ONE_HOT_CAP,
            drop_column_missing_fraction: 0.5,
            outlier_threshold: IsolationForestConfig::default().threshold,
            outlier_confirm_z: Some(3.5),
        }
    }
}

fn applicable(step: &PreprocStep, p: &ColumnProfile, cap: usize) -> bool {
    let numeric = p.vtype == VariableType::ContinuousNumeric;
    let varies = p.std.is_some_and(|s| s > 0.0);
    let min = p.min.unwrap_or(f64::NAN);
    match step {
        PreprocStep::Impute { .. } => false,
        PreprocStep::LabelEncode | PreprocStep::FrequencyEncode => p.vtype.is_categorical(),
        PreprocStep::OneHotEncode => p.vtype.is_categorical() && p.distinct_count <= cap,
        PreprocStep::Discretize { .. } => numeric,
        PreprocStep::BoxCox => numeric && varies && min > 0.0,
        PreprocStep::Power { kind } => match kind {
            PowerKind::BoxCox { .. } | PowerKind::Log | PowerKind::Log10 => numeric && min > 0.0,
            PowerKind::Sqrt | PowerKind::Square => numeric && min >= 0.0,
        },
        PreprocStep::ZScore | PreprocStep::MinMax { .. } => numeric && varies,
    }
}

fn exact_duplicate_count(d: &Dataset) -> usize {
    let mut seen: HashMap<Vec<String>, ()> = HashMap::new();
    (0..d.row_count())
        .filter(|&r| {
            let key: Vec<String> = d.columns().iter().map(|c| c.cells()[r].render()).collect();
            seen.insert(key, ()).is_some()
        })
        .count()
}

/// Builds the recommended, unapplied plan: profiling, then missing values,
/// outliers, duplicates, constraint repair, preprocessing, and finally steps
/// propagated between similarly named attributes. Columns named in a
/// constraint are left to constraint repair and never imputed, encoded,
/// scaled, or transformed.
pub fn build_plan(d: &Dataset, constraints: &ConstraintSet, opts: &PlanOptions) -> Result<CleaningPlan, PipelineError> {
    constraints.check(d)?;
    let target = opts.target.as_deref();
    let analysis = match target {
        Some(t) => {
            let c = d.column(t)?;
            if c.vtype().is_categorical() {
                AnalysisType::Classification
            } else {
                AnalysisType::Regression
            }
        }
        None => AnalysisType::Any,
    };
    let protected = constraints.columns();
    let mut plan = CleaningPlan::new(String::new(), opts.seed);
    plan.target = opts.target.clone();
    plan.constraints = constraints.clone();
    let names: Vec<String> = d.column_names().iter().map(|s| s.to_string()).collect();
    plan.push(Operation::Profile, names.clone(), Origin::Recommended);

    let profiles: BTreeMap<&str, ColumnProfile> = d
        .columns()
        .iter()
        .filter_map(|c| profile_column(c).ok().map(|p| (c.name(), p)))
        .collect();
    let n = d.row_count().max(1) as f64;
    let dropped: Vec<String> = d
        .columns()
        .iter()
        .filter(|c| {
            c.missing_count() as f64 / n > opts.drop_column_missing_fraction
                && !protected.contains(c.name())
                && Some(c.name()) != target
        })
        .map(|c| c.name().to_string())
        .collect();
    if !dropped.is_empty() {
        plan.push(Operation::DropColumns, dropped.clone(), Origin::Recommended);
    }
    let kept: Vec<&str> = names
        .iter()
        .map(String::as_str)
        .filter(|n| !dropped.iter().any(|x| x == n) && profiles.contains_key(n))
        .collect();

    let model = if opts.use_model {
        Some(train_preproc_gbm(&builtin_preproc_rows(), &GbmConfig::default())?)
    } else {
        None
    };
    let recs: BTreeMap<&str, Vec<PreprocStep>> = kept
        .iter()
        .map(|&name| {
            let ctx = PreprocContext {
                analysis,
                is_target: Some(name) == target,
                one_hot_cap: opts.one_hot_cap,
            };
            (name, recommend_preprocessing(&profiles[name], &ctx, model.as_ref()).0)
        })
        .collect();

    // missing values
    for &name in &kept {
        let p = &profiles[name];
        if p.missing_count == 0 || protected.contains(name) {
            continue;
        }
        let strategy = recs[name].iter().find_map(|s| match s {
            PreprocStep::Impute { strategy } => Some(*strategy),
            _ => None,
        });
        let strategy = strategy.or((p.vtype == VariableType::DateTime).then_some(ImputeStrategy::Median));
        if let Some(strategy) = strategy {
            plan.push(Operation::Impute { strategy }, vec![name.to_string()], Origin::Recommended);
        }
    }

    // outliers
    let dims: Vec<&str> = kept
        .iter()
        .copied()
        .filter(|n| profiles[n].vtype == VariableType::ContinuousNumeric && profiles[n].std.is_some_and(|s| s > 0.0))
        .collect();
    if !dims.is_empty() && d.row_count() >= 10 {
        let icfg = IsolationForestConfig {
            n_trees: 100,
            subsample: 256,
            threshold: opts.outlier_threshold,
            seed: opts.seed,
        };
        let detector = OutlierDetector::IsolationForest {
            n_trees: icfg.n_trees,
            subsample: icfg.subsample,
            threshold: icfg.threshold,
            seed: icfg.seed,
            confirm_z: opts.outlier_confirm_z,
        };
        // plan-time preview on median-filled values
        let mut filled = d.clone();
        for name in &dims {
            let (c, _) = impute_simple(d.column(name)?, ImputeStrategy::Median)?;
            filled = filled.replace_column(c)?;
        }
        let dims: Vec<String> = dims.iter().map(|s| s.to_string()).collect();
        let preview = detect_outliers(&filled, &dims, &detector)?;
        if !preview.flagged.is_empty() {
            plan.push(Operation::RemoveOutliers { detector }, dims, Origin::Recommended);
        }
    }

    if exact_duplicate_count(d) > 0 {
        plan.push(Operation::DedupeExact, Vec::new(), Origin::Recommended);
    }
    if !constraints.is_empty() {
        plan.push(Operation::RepairConstraints, Vec::new(), Origin::Recommended);
    }

    // preprocessing
    let mut explicit: BTreeMap<String, Vec<PreprocStep>> = BTreeMap::new();
    for &name in &kept {
        if protected.contains(name) {
            continue;
        }
        let steps: Vec<PreprocStep> = recs[name]
            .iter()
            .filter(|s| !matches!(s, PreprocStep::Impute { .. }))
            .cloned()
            .collect();
        for s in &steps {
            plan.push(Operation::from_preproc(s, opts.one_hot_cap), vec![name.to_string()], Origin::Recommended);
        }
        if !steps.is_empty() {
            explicit.insert(name.to_string(), steps);
        }
    }

    if let Some(pcfg) = &opts.propagation {
        let provider = TrigramProvider::default();
        let mut attrs = Vec::new();
        for &name in kept.iter().filter(|n| !protected.contains(**n) && Some(**n) != target) {
            let c = d.column(name)?;
            attrs.push(AttributeInfo {
                vtype: c.vtype(),
                embedding: embed_attribute(&provider, c)?,
            });
        }
        let mut assigned = explicit.clone();
        for prop in propagate_steps(&attrs, &mut assigned, pcfg)? {
            let p = &profiles[prop.to.as_str()];
            let steps = &assigned[&prop.to];
            if !steps.iter().all(|s| applicable(s, p, opts.one_hot_cap)) {
                continue;
            }
            for s in steps {
                plan.push_with_note(
                    Operation::from_preproc(s, opts.one_hot_cap),
                    vec![prop.to.clone()],
                    Origin::Propagated,
                    Some(format!("inherited from {} (distance {:.3})", prop.from, prop.distance)),
                );
            }
        }
    }
    Ok(plan)
}

/// Parses the input and builds a plan fingerprinted to these exact bytes.
pub fn plan_for_bytes(
    bytes: &[u8],
    parse_options: &ParseOptions,
    constraints: &ConstraintSet,
    opts: &PlanOptions,
) -> Result<(Dataset, TypeInferenceReport, CleaningPlan), PipelineError> {
    let (d, inference) = parse_csv(bytes, parse_options)?;
    let mut plan = build_plan(&d, constraints, opts)?;
    plan.fingerprint = fingerprint(bytes);
    plan.parse_options = parse_options.clone();
    Ok((d, inference, plan))
}
