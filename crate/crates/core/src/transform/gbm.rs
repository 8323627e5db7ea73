use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TransformError;

static TABLE2_ROWS: &str = include_str!("../../data/preproc_meta_table2.csv");
static SYNTHETIC_ROWS: &str = include_str!("../../data/preproc_meta_synthetic.csv");

macro_rules! vocab {
    ($name:ident { $($variant:ident),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name { $($variant),+ }
        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];
            fn index(self) -> usize {
                Self::ALL.iter().position(|v| *v == self).expect("listed")
            }
        }
    };
}

vocab!(OriginalDistribution {
    CategoricalHighCardinality,
    CategoricalBinary,
    CategoricalMany,
    CategoricalOrdinal,
    Continuous,
    WideRange,
    LeftSkewed,
    SlightlyLeftSkewed,
    RightSkewed,
    SlightlyRightSkewed,
    Uniform,
    BinaryNumeric,
});
vocab!(AnalysisType { Any, Classification, Regression });
vocab!(VariableNature { Predictor, Target });
vocab!(ScaleOfMeasurement { Nominal, Ordinal, Interval, Ratio });
vocab!(Cardinality { Low, Medium, High });
vocab!(MissingHandling { None, Mean, Median, Mode });
vocab!(TransformationLabel {
    None,
    FrequencyEncoding,
    LabelEncoding,
    OneHotEncoding,
    Discretization,
    Square,
    Sqrt,
    BoxCox,
});
vocab!(ScalingLabel { None, MinMax, ZScore });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocLabels {
    pub missing: MissingHandling,
    pub transformation: TransformationLabel,
    pub scaling: ScalingLabel,
    pub outlier_treatment: bool,
}

/// One attribute of the preprocessing meta-dataset. Optional fields that are
/// unset get their own indicator in the feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocMetaRow {
    pub name: String,
    pub original_distribution: OriginalDistribution,
    pub analysis_type: Option<AnalysisType>,
    pub variable_nature: VariableNature,
    pub scale: ScaleOfMeasurement,
    pub cardinality: Option<Cardinality>,
    pub has_missing: bool,
    pub new_distribution: Option<String>,
    pub labels: Option<PreprocLabels>,
}

const FEATURE_DIM: usize = OriginalDistribution::ALL.len()
    + AnalysisType::ALL.len()
    + 1
    + VariableNature::ALL.len()
    + ScaleOfMeasurement::ALL.len()
    + Cardinality::ALL.len()
    + 1
    + 2;

impl PreprocMetaRow {
    /// One-hot encoding of every input field; unset options use a
    /// dedicated slot.
    pub fn features(&self) -> Vec<bool> {
        let mut f = vec![false; FEATURE_DIM];
        let mut at = 0;
        let mut put = |i: usize, width: usize| {
            f[at + i] = true;
            at += width;
        };
        put(self.original_distribution.index(), OriginalDistribution::ALL.len());
        let n = AnalysisType::ALL.len();
        put(self.analysis_type.map_or(n, AnalysisType::index), n + 1);
        put(self.variable_nature.index(), VariableNature::ALL.len());
        put(self.scale.index(), ScaleOfMeasurement::ALL.len());
        let n = Cardinality::ALL.len();
        put(self.cardinality.map_or(n, Cardinality::index), n + 1);
        put(usize::from(self.has_missing), 2);
        f
    }
}

fn parse_distribution(s: &str) -> Result<OriginalDistribution, TransformError> {
    use OriginalDistribution::*;
    let l = s.to_lowercase();
    let d = if l.contains("100+") {
        CategoricalHighCardinality
    } else if l.contains("ordinal") {
        CategoricalOrdinal
    } else if l.starts_with("categorical") && (l.contains("binary") || l.contains("'male'")) {
        CategoricalBinary
    } else if l.starts_with("categorical") {
        CategoricalMany
    } else if l.contains("binary") {
        BinaryNumeric
    } else if l.contains("wide range") || l.contains("wide-range") {
        WideRange
    } else if l.contains("slightly left") {
        SlightlyLeftSkewed
    } else if l.contains("left") {
        LeftSkewed
    } else if l.contains("slightly right") {
        SlightlyRightSkewed
    } else if l.contains("right") {
        RightSkewed
    } else if l.contains("uniform") {
        Uniform
    } else if l.starts_with("continuous") {
        Continuous
    } else {
        return Err(TransformError::Fixture(format!("unknown distribution `{s}`")));
    };
    Ok(d)
}

fn parse_analysis(s: &str) -> Result<Option<AnalysisType>, TransformError> {
    Ok(match s.to_lowercase().as_str() {
        "" => None,
        "any" => Some(AnalysisType::Any),
        "classification" => Some(AnalysisType::Classification),
        "regression" => Some(AnalysisType::Regression),
        _ => return Err(TransformError::Fixture(format!("unknown analysis type `{s}`"))),
    })
}

fn parse_missing(s: &str) -> Result<MissingHandling, TransformError> {
    let l = s.to_lowercase();
    Ok(match l.split_whitespace().next().unwrap_or("") {
        "none" => MissingHandling::None,
        "mean" => MissingHandling::Mean,
        "median" => MissingHandling::Median,
        "mode" => MissingHandling::Mode,
        _ => return Err(TransformError::Fixture(format!("unknown missing handling `{s}`"))),
    })
}

fn parse_transformation(s: &str) -> Result<TransformationLabel, TransformError> {
    use TransformationLabel::*;
    let l = s.to_lowercase();
    Ok(if l == "none" {
        None
    } else if l.starts_with("frequency") {
        FrequencyEncoding
    } else if l.starts_with("label") {
        LabelEncoding
    } else if l.starts_with("one-hot") {
        OneHotEncoding
    } else if l.starts_with("discretization") {
        Discretization
    } else if l.starts_with("square root") || l.starts_with("sqrt") {
        Sqrt
    } else if l.starts_with("square") {
        Square
    } else if l.starts_with("box-cox") {
        BoxCox
    } else {
        return Err(TransformError::Fixture(format!("unknown transformation `{s}`")));
    })
}

fn parse_scaling(s: &str) -> Result<ScalingLabel, TransformError> {
    let l = s.to_lowercase();
    Ok(if l == "none" {
        ScalingLabel::None
    } else if l.starts_with("min-max") {
        ScalingLabel::MinMax
    } else if l.starts_with("z-score") {
        ScalingLabel::ZScore
    } else {
        return Err(TransformError::Fixture(format!("unknown scaling `{s}`")));
    })
}

fn parse_yes_no(s: &str) -> Result<bool, TransformError> {
    match s.to_lowercase().as_str() {
        "yes" => Ok(true),
        "no" => Ok(false),
        _ => Err(TransformError::Fixture(format!("expected yes/no, got `{s}`"))),
    }
}

fn parse_nature(s: &str) -> Result<VariableNature, TransformError> {
    match s.to_lowercase().as_str() {
        "predictor" => Ok(VariableNature::Predictor),
        "target" => Ok(VariableNature::Target),
        _ => Err(TransformError::Fixture(format!("unknown variable nature `{s}`"))),
    }
}

fn parse_scale(s: &str) -> Result<ScaleOfMeasurement, TransformError> {
    match s.to_lowercase().as_str() {
        "nominal" => Ok(ScaleOfMeasurement::Nominal),
        "ordinal" => Ok(ScaleOfMeasurement::Ordinal),
        "interval" => Ok(ScaleOfMeasurement::Interval),
        "ratio" => Ok(ScaleOfMeasurement::Ratio),
        _ => Err(TransformError::Fixture(format!("unknown scale `{s}`"))),
    }
}

fn parse_cardinality(s: &str) -> Result<Option<Cardinality>, TransformError> {
    Ok(match s.to_lowercase().as_str() {
        "" => None,
        "low" => Some(Cardinality::Low),
        "medium" => Some(Cardinality::Medium),
        "high" => Some(Cardinality::High),
        _ => return Err(TransformError::Fixture(format!("unknown cardinality `{s}`"))),
    })
}

/// Reads the fixture CSV layout. Without a `has_missing` column, presence of
/// missing values is inferred from the missing-value handling label.
fn parse_rows(text: &str) -> Result<Vec<PreprocMetaRow>, TransformError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| TransformError::Fixture(e.to_string()))?
        .clone();
    let has_missing_col = headers.iter().position(|h| h == "has_missing");
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| TransformError::Fixture(e.to_string()))?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim();
        let labels = PreprocLabels {
            missing: parse_missing(field(2))?,
            transformation: parse_transformation(field(3))?,
            scaling: parse_scaling(field(4))?,
            outlier_treatment: parse_yes_no(field(7))?,
        };
        let has_missing = match has_missing_col {
            Some(i) => parse_yes_no(field(i))?,
            None => labels.missing != MissingHandling::None,
        };
        rows.push(PreprocMetaRow {
            name: field(0).to_string(),
            original_distribution: parse_distribution(field(1))?,
            analysis_type: parse_analysis(field(6))?,
            variable_nature: parse_nature(field(8))?,
            scale: parse_scale(field(9))?,
            cardinality: parse_cardinality(field(10))?,
            has_missing,
            new_distribution: Some(field(5).to_string()).filter(|s| !s.is_empty()),
            labels: Some(labels),
        });
    }
    Ok(rows)
}

/// The eight example rows of the curated preprocessing meta-dataset.
pub fn table2_preproc_rows() -> Vec<PreprocMetaRow> {
    parse_rows(TABLE2_ROWS).expect("bundled fixture parses")
}

/// Table rows plus the shipped synthetic rows; the default training set.
pub fn builtin_preproc_rows() -> Vec<PreprocMetaRow> {
    let mut rows = table2_preproc_rows();
    rows.extend(parse_rows(SYNTHETIC_ROWS).expect("bundled fixture parses"));
    rows
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbmConfig {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    /// Fraction of rows each tree is fit on; rows are drawn with `seed`.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbmConfig {
    fn default() -> Self {
        Self {
            n_rounds: 50,
            max_depth: 3,
            learning_rate: 0.1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        absent: Box<Node>,
        present: Box<Node>,
    },
}

impl Node {
    fn predict(&self, x: &[bool]) -> f64 {
        match self {
            Node::Leaf(v) => *v,
            Node::Split {
                feature,
                absent,
                present,
            } => {
                if x[*feature] {
                    present.predict(x)
                } else {
                    absent.predict(x)
                }
            }
        }
    }
}

fn sse(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let s: f64 = ys.iter().sum();
    (ys.iter().map(|y| y * y).sum::<f64>() - s * s / n, s / n)
}

/// Least-squares tree on indicator features.
fn fit_tree(xs: &[&[bool]], ys: &[f64], depth: usize) -> Node {
    let (total, mean) = sse(ys);
    if depth == 0 || ys.len() < 2 || total <= 1e-15 {
        return Node::Leaf(mean);
    }
    let mut best: Option<(f64, usize)> = None;
    for f in 0..FEATURE_DIM {
        let (on, off): (Vec<f64>, Vec<f64>) = {
            let mut on = Vec::new();
            let mut off = Vec::new();
            for (x, y) in xs.iter().zip(ys) {
                if x[f] { on.push(*y) } else { off.push(*y) }
            }
            (on, off)
        };
        if on.is_empty() || off.is_empty() {
            continue;
        }
        let gain = total - sse(&on).0 - sse(&off).0;
        if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, f));
        }
    }
    let Some((_, feature)) = best else {
        return Node::Leaf(mean);
    };
    let split = |flag: bool| {
        let (sx, sy): (Vec<&[bool]>, Vec<f64>) = xs
            .iter()
            .zip(ys)
            .filter(|(x, _)| x[feature] == flag)
            .map(|(x, y)| (*x, *y))
            .unzip();
        Box::new(fit_tree(&sx, &sy, depth - 1))
    };
    Node::Split {
        feature,
        absent: split(false),
        present: split(true),
    }
}

/// One-vs-rest squared-loss boosting for a single label field.
#[derive(Debug, Clone)]
struct Booster {
    init: Vec<f64>,
    trees: Vec<Vec<Node>>,
    learning_rate: f64,
    loss_history: Vec<f64>,
}

impl Booster {
    fn fit(xs: &[Vec<bool>], ys: &[usize], n_classes: usize, cfg: &GbmConfig, seed: u64) -> Self {
        let n = xs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let targets: Vec<Vec<f64>> = (0..n_classes)
            .map(|k| ys.iter().map(|y| f64::from(u8::from(*y == k))).collect())
            .collect();
        let init: Vec<f64> = targets.iter().map(|t| t.iter().sum::<f64>() / n as f64).collect();
        let mut scores: Vec<Vec<f64>> = init.iter().map(|m| vec![*m; n]).collect();
        let loss = |scores: &[Vec<f64>]| {
            targets
                .iter()
                .zip(scores)
                .map(|(t, s)| t.iter().zip(s).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum::<f64>()
                / n as f64
        };
        let mut loss_history = vec![loss(&scores)];
        let mut trees = vec![Vec::with_capacity(cfg.n_rounds); n_classes];
        let take = ((cfg.subsample * n as f64).round() as usize).clamp(1, n);
        for _ in 0..cfg.n_rounds {
            let rows: Vec<usize> = if take == n {
                (0..n).collect()
            } else {
                let mut r = sample(&mut rng, n, take).into_vec();
                r.sort_unstable();
                r
            };
            let sx: Vec<&[bool]> = rows.iter().map(|&i| xs[i].as_slice()).collect();
            for k in 0..n_classes {
                let residuals: Vec<f64> = rows.iter().map(|&i| targets[k][i] - scores[k][i]).collect();
                let tree = fit_tree(&sx, &residuals, cfg.max_depth);
                for (i, x) in xs.iter().enumerate() {
                    scores[k][i] += cfg.learning_rate * tree.predict(x);
                }
                trees[k].push(tree);
            }
            let l = loss(&scores);
            if take == n {
                debug_assert!(l <= loss_history.last().unwrap() + 1e-12, "training loss increased");
            }
            loss_history.push(l);
        }
        Self {
            init,
            trees,
            learning_rate: cfg.learning_rate,
            loss_history,
        }
    }

    fn predict(&self, x: &[bool]) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (k, trees) in self.trees.iter().enumerate() {
            let s = self.init[k] + trees.iter().map(|t| self.learning_rate * t.predict(x)).sum::<f64>();
            if s > best.1 {
                best = (k, s);
            }
        }
        best.0
    }
}

/// Boosted classifiers, one per label field.
#[derive(Debug, Clone)]
pub struct GbmModel {
    missing: Booster,
    transformation: Booster,
    scaling: Booster,
    outlier: Booster,
    pub config: GbmConfig,
}

impl GbmModel {
    pub fn predict(&self, row: &PreprocMetaRow) -> PreprocLabels {
        let x = row.features();
        PreprocLabels {
            missing: MissingHandling::ALL[self.missing.predict(&x)],
            transformation: TransformationLabel::ALL[self.transformation.predict(&x)],
            scaling: ScalingLabel::ALL[self.scaling.predict(&x)],
            outlier_treatment: self.outlier.predict(&x) == 1,
        }
    }

    /// Mean squared training loss before the first round and after each
    /// round, per field: missing, transformation, scaling, outlier.
    pub fn loss_histories(&self) -> [&[f64]; 4] {
        [
            &self.missing.loss_history,
            &self.transformation.loss_history,
            &self.scaling.loss_history,
            &self.outlier.loss_history,
        ]
    }
}

pub fn train_preproc_gbm(rows: &[PreprocMetaRow], cfg: &GbmConfig) -> Result<GbmModel, TransformError> {
    let labeled: Vec<(&PreprocMetaRow, PreprocLabels)> =
        rows.iter().filter_map(|r| r.labels.map(|l| (r, l))).collect();
    if labeled.len() < 2 {
        return Err(TransformError::TooFewRows(labeled.len()));
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0) {
        return Err(TransformError::InvalidParameter(format!("learning rate {}", cfg.learning_rate)));
    }
    if !(cfg.subsample > 0.0 && cfg.subsample <= 1.0) {
        return Err(TransformError::InvalidParameter(format!("subsample {}", cfg.subsample)));
    }
    let first = labeled[0].1;
    if labeled.iter().all(|(_, l)| *l == first) {
        return Err(TransformError::DegenerateLabels);
    }
    let xs: Vec<Vec<bool>> = labeled.iter().map(|(r, _)| r.features()).collect();
    let field = |f: &dyn Fn(&PreprocLabels) -> usize| labeled.iter().map(|(_, l)| f(l)).collect::<Vec<_>>();
    Ok(GbmModel {
        missing: Booster::fit(&xs, &field(&|l| l.missing.index()), MissingHandling::ALL.len(), cfg, cfg.seed),
        transformation: Booster::fit(
            &xs,
            &field(&|l| l.transformation.index()),
            TransformationLabel::ALL.len(),
            cfg,
            cfg.seed.wrapping_add(1),
        ),
        scaling: Booster::fit(&xs, &field(&|l| l.scaling.index()), ScalingLabel::ALL.len(), cfg, cfg.seed.wrapping_add(2)),
        outlier: Booster::fit(
            &xs,
            &field(&|l| usize::from(l.outlier_treatment)),
            2,
            cfg,
            cfg.seed.wrapping_add(3),
        ),
        config: *cfg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table2_fixture_parses() {
        let rows = table2_preproc_rows();
        assert_eq!(rows.len(), 8);
        let income = &rows[2];
        assert_eq!(income.name, "Income");
        assert_eq!(income.analysis_type, None);
        assert_eq!(income.variable_nature, VariableNature::Target);
        assert_eq!(income.cardinality, Some(Cardinality::High));
        assert_eq!(income.labels.unwrap().missing, MissingHandling::Median);
        assert_eq!(rows[5].labels.unwrap().transformation, TransformationLabel::Square);
        let features: Vec<Vec<bool>> = builtin_preproc_rows().iter().map(|r| r.features()).collect();
        for (i, a) in features.iter().enumerate() {
            assert_eq!(a.iter().filter(|b| **b).count(), 6);
            for b in &features[i + 1..] {
                assert_ne!(a, b, "duplicate feature vector");
            }
        }
    }

    #[test]
    fn reproduces_table2_and_loss_never_rises() {
        let model = train_preproc_gbm(&builtin_preproc_rows(), &GbmConfig::default()).unwrap();
        for row in table2_preproc_rows() {
            assert_eq!(model.predict(&row), row.labels.unwrap(), "row {}", row.name);
        }
        for h in model.loss_histories() {
            assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn degenerate_inputs() {
        let rows = table2_preproc_rows();
        let same = vec![rows[0].clone(), rows[0].clone()];
        assert_eq!(train_preproc_gbm(&same, &GbmConfig::default()).unwrap_err(), TransformError::DegenerateLabels);
        assert_eq!(train_preproc_gbm(&rows[..1], &GbmConfig::default()).unwrap_err(), TransformError::TooFewRows(1));
    }
}
