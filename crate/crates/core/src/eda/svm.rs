//! One-vs-rest linear SVM trained by stochastic subgradient descent on the
//! L2-regularized hinge loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plot::{PlotMetaRow, PlotType, PLOT_FEATURE_DIM};
use super::EdaError;

const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 regularization strength.
    pub lambda: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            learning_rate: 0.05,
            epochs: 2000,
            lambda: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    /// Classes seen in training, sorted by plot name.
    pub classes: Vec<PlotType>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub config: SvmConfig,
}

impl LinearSvmModel {
    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect()
    }

    /// Highest-margin class. Ties prefer `fallback`, then the smallest name.
    pub fn predict_with_fallback(&self, x: &[f64], fallback: PlotType) -> (PlotType, f64) {
        let margins = self.margins(x);
        let best = margins.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<PlotType> = self
            .classes
            .iter()
            .zip(&margins)
            .filter(|(_, m)| best - **m <= TIE_EPS)
            .map(|(c, _)| *c)
            .collect();
        let pick = if tied.contains(&fallback) {
            fallback
        } else {
            *tied.iter().min_by_key(|c| c.name()).expect("at least one class")
        };
        (pick, best)
    }

    pub fn predict(&self, row: &PlotMetaRow) -> PlotType {
        self.predict_with_fallback(&row.encode(), super::plot::rule_plot(row))
            .0
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains one binary hinge-loss classifier per plot type present in `rows`.
pub fn train_plot_svm(rows: &[PlotMetaRow], config: &SvmConfig) -> Result<LinearSvmModel, EdaError> {
    if rows.is_empty() {
        return Err(EdaError::EmptyTraining);
    }
    let labels: Vec<PlotType> = rows
        .iter()
        .map(|r| r.label.ok_or_else(|| EdaError::Fixture("training row without label".into())))
        .collect::<Result<_, _>>()?;
    let mut classes = labels.clone();
    classes.sort_by_key(|c| c.name());
    classes.dedup();
    if classes.len() < 2 {
        return Err(EdaError::SingleClass);
    }
    let xs: Vec<Vec<f64>> = rows.iter().map(PlotMetaRow::encode).collect();

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for (ci, class) in classes.iter().enumerate() {
        let ys: Vec<f64> = labels
            .iter()
            .map(|l| if l == class { 1.0 } else { -1.0 })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (ci as u64).wrapping_mul(0x9E37_79B9));
        let (w, b) = train_binary(&xs, &ys, config, &mut rng);
        weights.push(w);
        biases.push(b);
    }
    Ok(LinearSvmModel {
        classes,
        weights,
        biases,
        config: config.clone(),
    })
}

fn train_binary(xs: &[Vec<f64>], ys: &[f64], cfg: &SvmConfig, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let mut w = vec![0.0; PLOT_FEATURE_DIM];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let eta = cfg.learning_rate;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut violations = 0;
        for &i in &order {
            let margin = ys[i] * (dot(&w, &xs[i]) + b);
            let shrink = 1.0 - eta * cfg.lambda;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if margin < 1.0 {
                violations += 1;
                for (wj, xj) in w.iter_mut().zip(&xs[i]) {
                    *wj += eta * ys[i] * xj;
                }
                b += eta * ys[i];
            }
        }
        if violations == 0 {
            break;
        }
    }
    (w, b)
}
