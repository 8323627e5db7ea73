use serde::{Deserialize, Serialize};

use super::gbm::{
    AnalysisType, Cardinality, GbmModel, MissingHandling, OriginalDistribution, PreprocLabels,
    PreprocMetaRow, ScaleOfMeasurement, ScalingLabel, TransformationLabel, VariableNature,
};
use super::{PowerKind, DEFAULT_ONE_HOT_CAP};
use crate::cleaner::ImputeStrategy;
use crate::eda::{ColumnProfile, DistributionShape};
use crate::tabular::VariableType;

/// Numeric span above which a target counts as wide-ranged.
const WIDE_RANGE: f64 = 1e3;
const STRONG_SKEW: f64 = 1.0;
const DISCRETIZE_BINS: usize = 4;

/// What the recommender knows beyond the column profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocContext {
    /// Task implied by the target; predictors are always treated as `Any`.
    pub analysis: AnalysisType,
    pub is_target: bool,
    pub one_hot_cap: usize,
}

impl Default for PreprocContext {
    fn default() -> Self {
        Self {
            analysis: AnalysisType::Any,
            is_target: false,
            one_hot_cap: DEFAULT_ONE_HOT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum PreprocStep {
    Impute { strategy: ImputeStrategy },
    LabelEncode,
    OneHotEncode,
    FrequencyEncode,
    /// Quantile bins computed when the step runs.
    Discretize { bins: usize },
    /// Box-Cox with the exponent fitted when the step runs.
    BoxCox,
    Power { kind: PowerKind },
    ZScore,
    MinMax { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecommendationSource {
    Model,
    Rules,
}

/// Meta-dataset row describing a profiled column, or `None` for columns the
/// recommender does not handle (timestamps, free text).
pub fn meta_row_for(p: &ColumnProfile, ctx: &PreprocContext) -> Option<PreprocMetaRow> {
    use OriginalDistribution::*;
    let (dist, scale, cardinality) = match p.vtype {
        VariableType::CategoricalOrdinal => (CategoricalOrdinal, ScaleOfMeasurement::Ordinal, Some(Cardinality::Low)),
        VariableType::CategoricalNominal => {
            let d = if p.distinct_count == 2 {
                CategoricalBinary
            } else if p.distinct_count > ctx.one_hot_cap {
                CategoricalHighCardinality
            } else {
                CategoricalMany
            };
            (d, ScaleOfMeasurement::Nominal, None)
        }
        VariableType::ContinuousNumeric => {
            let (min, max) = (p.min?, p.max?);
            let skew = p.skewness.unwrap_or(0.0);
            let d = if p.distinct_count == 2 || p.shape == DistributionShape::Binary {
                BinaryNumeric
            } else if ctx.is_target && max - min >= WIDE_RANGE {
                WideRange
            } else {
                match p.shape {
                    DistributionShape::Uniform => Uniform,
                    DistributionShape::SkewedRight if skew >= STRONG_SKEW => RightSkewed,
                    DistributionShape::SkewedRight => SlightlyRightSkewed,
                    DistributionShape::SkewedLeft if skew <= -STRONG_SKEW => LeftSkewed,
                    DistributionShape::SkewedLeft => SlightlyLeftSkewed,
                    _ => Continuous,
                }
            };
            (d, ScaleOfMeasurement::Ratio, None)
        }
        VariableType::DateTime | VariableType::Text => return None,
    };
    Some(PreprocMetaRow {
        name: p.name.clone(),
        original_distribution: dist,
        analysis_type: Some(if ctx.is_target { ctx.analysis } else { AnalysisType::Any }),
        variable_nature: if ctx.is_target { VariableNature::Target } else { VariableNature::Predictor },
        scale,
        cardinality,
        has_missing: p.missing_count > 0,
        new_distribution: None,
        labels: None,
    })
}

fn rule_labels(p: &ColumnProfile, row: &PreprocMetaRow, ctx: &PreprocContext) -> PreprocLabels {
    use OriginalDistribution::*;
    let categorical = row.scale != ScaleOfMeasurement::Ratio;
    let d = row.original_distribution;
    let missing = if !row.has_missing {
        MissingHandling::None
    } else if categorical {
        MissingHandling::Mode
    } else if matches!(d, RightSkewed | WideRange) {
        MissingHandling::Median
    } else {
        MissingHandling::Mean
    };
    let transformation = if categorical {
        if (ctx.is_target && ctx.analysis == AnalysisType::Classification)
            || matches!(d, CategoricalOrdinal | CategoricalBinary)
        {
            TransformationLabel::LabelEncoding
        } else if d == CategoricalHighCardinality {
            TransformationLabel::FrequencyEncoding
        } else {
            TransformationLabel::OneHotEncoding
        }
    } else if ctx.is_target {
        TransformationLabel::None
    } else {
        let min = p.min.unwrap_or(f64::NAN);
        match d {
            RightSkewed if min > 0.0 => TransformationLabel::BoxCox,
            RightSkewed if min >= 0.0 => TransformationLabel::Sqrt,
            LeftSkewed if min >= 0.0 => TransformationLabel::Square,
            _ => TransformationLabel::None,
        }
    };
    let scaling = if categorical || d == BinaryNumeric {
        ScalingLabel::None
    } else if ctx.is_target {
        if d == WideRange { ScalingLabel::MinMax } else { ScalingLabel::None }
    } else if d == Uniform {
        ScalingLabel::MinMax
    } else {
        ScalingLabel::ZScore
    };
    PreprocLabels {
        missing,
        transformation,
        scaling,
        outlier_treatment: !categorical && d != BinaryNumeric && d != Uniform,
    }
}

/// Replaces model outputs that cannot run on this column with the rule
/// choice for that field.
fn sanitize(p: &ColumnProfile, row: &PreprocMetaRow, model: PreprocLabels, rules: PreprocLabels, cap: usize) -> PreprocLabels {
    let categorical = p.vtype.is_categorical();
    let missing = match (row.has_missing, model.missing) {
        (false, _) => MissingHandling::None,
        (true, MissingHandling::None) => rules.missing,
        (true, MissingHandling::Mode) if !categorical => rules.missing,
        (true, MissingHandling::Mean | MissingHandling::Median) if categorical => MissingHandling::Mode,
        (true, m) => m,
    };
    let min = p.min.unwrap_or(f64::NAN);
    let transformation = match model.transformation {
        TransformationLabel::OneHotEncoding if categorical && p.distinct_count > cap => {
            TransformationLabel::FrequencyEncoding
        }
        TransformationLabel::LabelEncoding
        | TransformationLabel::OneHotEncoding
        | TransformationLabel::FrequencyEncoding
            if categorical =>
        {
            model.transformation
        }
        TransformationLabel::None | TransformationLabel::Discretization if !categorical => model.transformation,
        TransformationLabel::Square | TransformationLabel::Sqrt if !categorical && min >= 0.0 => {
            model.transformation
        }
        TransformationLabel::BoxCox if !categorical && min > 0.0 => model.transformation,
        _ => rules.transformation,
    };
    let scaling = if categorical || transformation == TransformationLabel::Discretization {
        ScalingLabel::None
    } else {
        model.scaling
    };
    PreprocLabels {
        missing,
        transformation,
        scaling,
        outlier_treatment: model.outlier_treatment,
    }
}

/// Numeric predictor already standardized or inside `[-1, 1]`.
fn prescaled(p: &ColumnProfile) -> bool {
    if p.vtype != VariableType::ContinuousNumeric {
        return false;
    }
    let standardized = matches!((p.mean, p.std), (Some(m), Some(s)) if m.abs() < 1e-6 && (s - 1.0).abs() < 1e-6);
    let bounded = matches!((p.min, p.max), (Some(lo), Some(hi)) if lo >= -1.0 && hi <= 1.0);
    standardized || bounded
}

fn labels_to_steps(l: &PreprocLabels) -> Vec<PreprocStep> {
    let mut steps = Vec::new();
    match l.missing {
        MissingHandling::None => {}
        MissingHandling::Mean => steps.push(PreprocStep::Impute { strategy: ImputeStrategy::Mean }),
        MissingHandling::Median => steps.push(PreprocStep::Impute { strategy: ImputeStrategy::Median }),
        MissingHandling::Mode => steps.push(PreprocStep::Impute { strategy: ImputeStrategy::Mode }),
    }
    match l.transformation {
        TransformationLabel::None => {}
        TransformationLabel::FrequencyEncoding => steps.push(PreprocStep::FrequencyEncode),
        TransformationLabel::LabelEncoding => steps.push(PreprocStep::LabelEncode),
        TransformationLabel::OneHotEncoding => steps.push(PreprocStep::OneHotEncode),
        TransformationLabel::Discretization => steps.push(PreprocStep::Discretize { bins: DISCRETIZE_BINS }),
        TransformationLabel::Square => steps.push(PreprocStep::Power { kind: PowerKind::Square }),
        TransformationLabel::Sqrt => steps.push(PreprocStep::Power { kind: PowerKind::Sqrt }),
        TransformationLabel::BoxCox => steps.push(PreprocStep::BoxCox),
    }
    match l.scaling {
        ScalingLabel::None => {}
        ScalingLabel::MinMax => steps.push(PreprocStep::MinMax { lo: 0.0, hi: 1.0 }),
        ScalingLabel::ZScore => steps.push(PreprocStep::ZScore),
    }
    steps
}

/// Ordered steps for one column: imputation, then encoding or
/// transformation, then scaling. With a model, each predicted field is kept
/// when it can run on the column and replaced by the rule choice otherwise.
pub fn recommend_preprocessing(
    p: &ColumnProfile,
    ctx: &PreprocContext,
    model: Option<&GbmModel>,
) -> (Vec<PreprocStep>, RecommendationSource) {
    let source = if model.is_some() { RecommendationSource::Model } else { RecommendationSource::Rules };
    let Some(row) = meta_row_for(p, ctx) else {
        return (Vec::new(), source);
    };
    let rules = rule_labels(p, &row, ctx);
    let mut labels = match model {
        Some(m) => sanitize(p, &row, m.predict(&row), rules, ctx.one_hot_cap),
        None => rules,
    };
    let constant = p.vtype == VariableType::ContinuousNumeric && p.std.is_none_or(|s| s <= 0.0);
    if constant || (!ctx.is_target && prescaled(p)) {
        labels.transformation = TransformationLabel::None;
        labels.scaling = ScalingLabel::None;
    }
    (labels_to_steps(&labels), source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eda::profile_column;
    use crate::tabular::Column;
    use crate::transform::{builtin_preproc_rows, train_preproc_gbm, GbmConfig};

    fn steps_for(c: &Column, ctx: &PreprocContext, model: Option<&GbmModel>) -> Vec<PreprocStep> {
        recommend_preprocessing(&profile_column(c).unwrap(), ctx, model).0
    }

    fn right_skewed() -> Vec<Option<f64>> {
        let mut v: Vec<Option<f64>> = (1..=200).map(|i| Some((i as f64 / 40.0).exp())).collect();
        v[3] = None;
        v
    }

    #[test]
    fn rule_recommendations() {
        let ctx = PreprocContext::default();
        let skewed = Column::numeric_opt("income", &right_skewed());
        assert_eq!(
            steps_for(&skewed, &ctx, None),
            vec![
                PreprocStep::Impute { strategy: ImputeStrategy::Median },
                PreprocStep::BoxCox,
                PreprocStep::ZScore
            ]
        );
        // left skewed with a missing value
        let mut left: Vec<Option<f64>> = (1..=200).map(|i| Some(100.0 - (i as f64 / 40.0).exp() / 2.0)).collect();
        left[0] = None;
        assert_eq!(
            steps_for(&Column::numeric_opt("experience", &left), &ctx, None),
            vec![
                PreprocStep::Impute { strategy: ImputeStrategy::Mean },
                PreprocStep::Power { kind: PowerKind::Square },
                PreprocStep::ZScore
            ]
        );
        let mut zeros = right_skewed();
        zeros[3] = Some(0.0);
        assert_eq!(
            steps_for(&Column::numeric_opt("porch", &zeros), &ctx, None),
            vec![PreprocStep::Power { kind: PowerKind::Sqrt }, PreprocStep::ZScore]
        );
        let gender = Column::nominal("g", &[Some("M"), Some("F"), Some("M"), None]);
        assert_eq!(
            steps_for(&gender, &ctx, None),
            vec![PreprocStep::Impute { strategy: ImputeStrategy::Mode }, PreprocStep::LabelEncode]
        );
        let names: Vec<String> = (0..60).map(|i| format!("c{}", i % 5)).collect();
        let refs: Vec<Option<&str>> = names.iter().map(|s| Some(s.as_str())).collect();
        assert_eq!(steps_for(&Column::nominal("p", &refs), &ctx, None), vec![PreprocStep::OneHotEncode]);
        let many: Vec<String> = (0..120).map(|i| format!("city{i}")).collect();
        let refs: Vec<Option<&str>> = many.iter().map(|s| Some(s.as_str())).collect();
        assert_eq!(steps_for(&Column::nominal("city", &refs), &ctx, None), vec![PreprocStep::FrequencyEncode]);

        let target = PreprocContext { analysis: AnalysisType::Regression, is_target: true, ..ctx };
        let salary: Vec<f64> = (0..100).map(|i| 30_000.0 + 1_000.0 * i as f64).collect();
        assert_eq!(
            steps_for(&Column::numeric("salary", &salary), &target, None),
            vec![PreprocStep::MinMax { lo: 0.0, hi: 1.0 }]
        );
        let scaled: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        assert!(steps_for(&Column::numeric("s", &scaled), &ctx, None).is_empty());
    }

    #[test]
    fn model_and_rules_agree_on_common_columns() {
        let model = train_preproc_gbm(&builtin_preproc_rows(), &GbmConfig::default()).unwrap();
        let ctx = PreprocContext::default();
        let skewed = Column::numeric_opt("income", &right_skewed());
        assert_eq!(steps_for(&skewed, &ctx, Some(&model)), steps_for(&skewed, &ctx, None));
        let gender = Column::nominal("g", &[Some("M"), Some("F"), Some("M")]);
        assert_eq!(steps_for(&gender, &ctx, Some(&model)), vec![PreprocStep::LabelEncode]);
        assert!(steps_for(&Column::text("t", &[Some("free text")]), &ctx, Some(&model)).is_empty());
    }
}
