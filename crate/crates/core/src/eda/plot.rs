//! Plot-type recommendation from column meta-features.
//!
//! Each (variable, optional second variable) selection is summarized as a
//! [`PlotMetaRow`]: the variable types, their distribution shapes, the
//! relation label, and a correlation bucket. A trained [`LinearSvmModel`]
//! maps the one-hot encoding of that row to a plot type; without a model a
//! fixed rule table answers.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::pair::{PairProfile, Relation};
use super::profile::{ColumnProfile, DistributionShape};
use super::svm::LinearSvmModel;
use super::EdaError;
use crate::tabular::VariableType;

static TABLE1_ROWS: &str = include_str!("../../data/plot_meta_table1.csv");
static SYNTHETIC_ROWS: &str = include_str!("../../data/plot_meta_synthetic.csv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PlotType {
    ScatterPlot,
    BarChart,
    ViolinPlot,
    LineGraph,
    PieChart,
    Histogram,
    BoxPlot,
    Heatmap,
    AlluvialPlot,
}

impl PlotType {
    pub const ALL: [PlotType; 9] = [
        PlotType::ScatterPlot,
        PlotType::BarChart,
        PlotType::ViolinPlot,
        PlotType::LineGraph,
        PlotType::PieChart,
        PlotType::Histogram,
        PlotType::BoxPlot,
        PlotType::Heatmap,
        PlotType::AlluvialPlot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotType::ScatterPlot => "ScatterPlot",
            PlotType::BarChart => "BarChart",
            PlotType::ViolinPlot => "ViolinPlot",
            PlotType::LineGraph => "LineGraph",
            PlotType::PieChart => "PieChart",
            PlotType::Histogram => "Histogram",
            PlotType::BoxPlot => "BoxPlot",
            PlotType::Heatmap => "Heatmap",
            PlotType::AlluvialPlot => "AlluvialPlot",
        }
    }

    fn parse_label(s: &str) -> Option<Self> {
        let key: String = s.chars().filter(|c| c.is_alphanumeric()).collect();
        Self::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(&key))
    }
}

impl fmt::Display for PlotType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlotSource {
    Rule,
    Svm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRecommendation {
    pub plot_type: PlotType,
    pub source: PlotSource,
    /// Logistic squash of the winning SVM margin; 1.0 for rule answers.
    pub score: f64,
}

/// Coarse variable type used as a meta-feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaType {
    Continuous,
    Categorical,
    Ordinal,
    DateTime,
    Text,
}

impl MetaType {
    const ALL: [MetaType; 5] = [
        MetaType::Continuous,
        MetaType::Categorical,
        MetaType::Ordinal,
        MetaType::DateTime,
        MetaType::Text,
    ];

    fn is_numeric(self) -> bool {
        matches!(self, MetaType::Continuous | MetaType::DateTime)
    }
}

impl From<VariableType> for MetaType {
    fn from(v: VariableType) -> Self {
        match v {
            VariableType::ContinuousNumeric => MetaType::Continuous,
            VariableType::CategoricalNominal => MetaType::Categorical,
            VariableType::CategoricalOrdinal => MetaType::Ordinal,
            VariableType::DateTime => MetaType::DateTime,
            VariableType::Text => MetaType::Text,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrBucket {
    HighPositive,
    HighNegative,
    LowOrNA,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovarianceSign {
    Positive,
    NonPositive,
}

const SHAPES: [DistributionShape; 6] = [
    DistributionShape::Normal,
    DistributionShape::SkewedLeft,
    DistributionShape::SkewedRight,
    DistributionShape::Uniform,
    DistributionShape::Varied,
    DistributionShape::Binary,
];

const RELATIONS: [Relation; 6] = [
    Relation::PositiveLinear,
    Relation::NegativeLinear,
    Relation::PositiveRelation,
    Relation::NegativeRelation,
    Relation::NoRelation,
    Relation::NoClearRelation,
];

/// One meta-training example (or a query, with `label` unset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotMetaRow {
    pub v1_type: MetaType,
    pub v1_shape: DistributionShape,
    pub v2_type: Option<MetaType>,
    pub v2_shape: Option<DistributionShape>,
    pub relation: Option<Relation>,
    pub corr_bucket: CorrBucket,
    pub covariance: Option<CovarianceSign>,
    pub label: Option<PlotType>,
}

/// Length of [`PlotMetaRow::encode`].
pub const PLOT_FEATURE_DIM: usize = 5 + 6 + 6 + 7 + 7 + 3 + 3;

fn one_hot<T: PartialEq>(out: &mut Vec<f64>, vocab: &[T], value: Option<&T>, with_absent: bool) {
    for v in vocab {
        out.push(if value == Some(v) { 1.0 } else { 0.0 });
    }
    if with_absent {
        out.push(if value.is_none() { 1.0 } else { 0.0 });
    }
}

impl PlotMetaRow {
    /// One-hot encoding, blocks in this order: v1 type (5), v1 shape (6),
    /// v2 type (5 + absent), v2 shape (6 + absent), relation (6 + absent),
    /// correlation bucket (3), covariance sign (2 + absent).
    pub fn encode(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(PLOT_FEATURE_DIM);
        one_hot(&mut f, &MetaType::ALL, Some(&self.v1_type), false);
        one_hot(&mut f, &SHAPES, Some(&self.v1_shape), false);
        one_hot(&mut f, &MetaType::ALL, self.v2_type.as_ref(), true);
        one_hot(&mut f, &SHAPES, self.v2_shape.as_ref(), true);
        one_hot(&mut f, &RELATIONS, self.relation.as_ref(), true);
        one_hot(
            &mut f,
            &[CorrBucket::HighPositive, CorrBucket::HighNegative, CorrBucket::LowOrNA],
            Some(&self.corr_bucket),
            false,
        );
        one_hot(
            &mut f,
            &[CovarianceSign::Positive, CovarianceSign::NonPositive],
            self.covariance.as_ref(),
            true,
        );
        debug_assert_eq!(f.len(), PLOT_FEATURE_DIM);
        f
    }

    /// Meta-features of a selection of one or two profiled variables.
    pub fn from_profiles(
        p1: &ColumnProfile,
        p2: Option<&ColumnProfile>,
        pair: Option<&PairProfile>,
    ) -> Self {
        let r = pair.and_then(|p| p.pearson_r);
        let corr_bucket = match r {
            Some(r) if r >= 0.6 => CorrBucket::HighPositive,
            Some(r) if r <= -0.6 => CorrBucket::HighNegative,
            _ => CorrBucket::LowOrNA,
        };
        let covariance = pair
            .filter(|p| p.pearson_r.is_some())
            .and_then(|p| p.covariance)
            .map(|c| {
                if c > 0.0 {
                    CovarianceSign::Positive
                } else {
                    CovarianceSign::NonPositive
                }
            });
        PlotMetaRow {
            v1_type: p1.vtype.into(),
            v1_shape: p1.shape,
            v2_type: p2.map(|p| p.vtype.into()),
            v2_shape: p2.map(|p| p.shape),
            relation: pair.map(|p| p.relation),
            corr_bucket,
            covariance,
            label: None,
        }
    }
}

fn parse_meta_type(s: &str) -> Result<MetaType, EdaError> {
    match s.trim().to_lowercase().as_str() {
        "continuous" | "numeric" => Ok(MetaType::Continuous),
        "categorical" | "nominal" => Ok(MetaType::Categorical),
        "ordinal" => Ok(MetaType::Ordinal),
        "datetime" => Ok(MetaType::DateTime),
        "text" => Ok(MetaType::Text),
        other => Err(EdaError::Fixture(format!("unknown variable type `{other}`"))),
    }
}

fn parse_shape(s: &str) -> Result<DistributionShape, EdaError> {
    let key: String = s.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
    match key.as_str() {
        "normal" => Ok(DistributionShape::Normal),
        "skewedleft" => Ok(DistributionShape::SkewedLeft),
        "skewedright" => Ok(DistributionShape::SkewedRight),
        "uniform" => Ok(DistributionShape::Uniform),
        "varied" => Ok(DistributionShape::Varied),
        "binary" | "equalmalefemale" => Ok(DistributionShape::Binary),
        _ => Err(EdaError::Fixture(format!("unknown distribution `{s}`"))),
    }
}

fn parse_relation(s: &str) -> Result<Relation, EdaError> {
    let key: String = s.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect();
    match key.as_str() {
        "positivelinear" => Ok(Relation::PositiveLinear),
        "negativelinear" => Ok(Relation::NegativeLinear),
        "positiverelation" => Ok(Relation::PositiveRelation),
        "negativerelation" => Ok(Relation::NegativeRelation),
        "norelation" => Ok(Relation::NoRelation),
        "noclearrelation" => Ok(Relation::NoClearRelation),
        _ => Err(EdaError::Fixture(format!("unknown relation `{s}`"))),
    }
}

fn parse_corr(s: &str) -> CorrBucket {
    let l = s.to_lowercase();
    if l.starts_with("high positive") {
        CorrBucket::HighPositive
    } else if l.starts_with("high negative") {
        CorrBucket::HighNegative
    } else {
        CorrBucket::LowOrNA
    }
}

fn parse_rows(text: &str) -> Result<Vec<PlotMetaRow>, EdaError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| EdaError::Fixture(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let opt = |i: usize| Some(field(i)).filter(|s| !s.is_empty());
        let label = PlotType::parse_label(field(6))
            .ok_or_else(|| EdaError::Fixture(format!("unknown plot type `{}`", field(6))))?;
        rows.push(PlotMetaRow {
            v1_type: parse_meta_type(field(1))?,
            v1_shape: parse_shape(field(2))?,
            v2_type: opt(4).map(parse_meta_type).transpose()?,
            v2_shape: opt(5).map(parse_shape).transpose()?,
            relation: opt(7).map(parse_relation).transpose()?,
            corr_bucket: parse_corr(field(8)),
            covariance: None,
            label: Some(label),
        });
    }
    Ok(rows)
}

/// The eight example rows of the curated plot meta-dataset.
pub fn table1_plot_rows() -> Vec<PlotMetaRow> {
    parse_rows(TABLE1_ROWS).expect("bundled fixture parses")
}

/// Table rows plus the shipped synthetic expansions (single-variable rows and
/// extra pair shapes); the training set of the default model.
pub fn builtin_plot_rows() -> Vec<PlotMetaRow> {
    let mut rows = table1_plot_rows();
    rows.extend(parse_rows(SYNTHETIC_ROWS).expect("bundled fixture parses"));
    rows
}

/// Rule table used when no model is supplied.
pub fn rule_plot(row: &PlotMetaRow) -> PlotType {
    let t1 = row.v1_type;
    match row.v2_type {
        None if t1.is_numeric() => PlotType::Histogram,
        None => PlotType::BarChart,
        Some(t2) => match (t1.is_numeric(), t2.is_numeric()) {
            (true, true) if t1 == MetaType::DateTime || t2 == MetaType::DateTime => {
                PlotType::LineGraph
            }
            (true, true) => PlotType::ScatterPlot,
            (false, false) => PlotType::BarChart,
            _ => PlotType::ViolinPlot,
        },
    }
}

/// Recommends a plot for one variable or a pair. With a model the SVM
/// decides; margin ties go to the rule answer, then to the
/// lexicographically smallest plot name.
pub fn recommend_plot(
    p1: &ColumnProfile,
    p2: Option<&ColumnProfile>,
    pair: Option<&PairProfile>,
    model: Option<&LinearSvmModel>,
) -> PlotRecommendation {
    let row = PlotMetaRow::from_profiles(p1, p2, pair);
    let rule = rule_plot(&row);
    match model {
        None => PlotRecommendation {
            plot_type: rule,
            source: PlotSource::Rule,
            score: 1.0,
        },
        Some(m) => {
            let (plot_type, margin) = m.predict_with_fallback(&row.encode(), rule);
            PlotRecommendation {
                plot_type,
                source: PlotSource::Svm,
                score: 1.0 / (1.0 + (-margin).exp()),
            }
        }
    }
}
