//! CART trees grown on bootstrap samples; importance is the impurity decrease
//! credited to each feature, averaged over trees.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MinerError;
use crate::tabular::{Dataset, VariableType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or minimal.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means ⌊√p⌋ (at least one).
    pub max_features: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub target: String,
    /// Descending by score; ties in name order.
    pub features: Vec<FeatureImportance>,
    pub config: ForestConfig,
}

impl ImportanceRanking {
    pub fn top(&self) -> Option<&str> {
        self.features.first().map(|f| f.name.as_str())
    }
}

enum Target {
    Regression(Vec<f64>),
    Classification { codes: Vec<usize>, classes: usize },
}

/// Ranks every non-text column other than `target` by random-forest impurity
/// importance. Rows with a missing target are ignored. Missing numeric
/// predictors are filled with the column median; missing categorical
/// predictors get their own code.
pub fn rank_features(
    d: &Dataset,
    target: &str,
    config: &ForestConfig,
) -> Result<ImportanceRanking, MinerError> {
    let tcol = d
        .column(target)
        .map_err(|_| MinerError::UnknownColumn(target.to_string()))?;
    let rows: Vec<usize> = (0..d.row_count())
        .filter(|&r| !tcol.cells()[r].is_missing())
        .collect();

    let y = if tcol.vtype().is_numeric() {
        let v: Vec<f64> = rows.iter().map(|&r| tcol.cells()[r].as_f64().unwrap_or(0.0)).collect();
        if v.iter().all(|x| *x == v[0]) {
            return Err(MinerError::ConstantTarget(target.to_string()));
        }
        Target::Regression(v)
    } else {
        let (levels, codes) = tcol.level_codes();
        let codes: Vec<usize> = rows.iter().map(|&r| codes[r].expect("observed")).collect();
        if codes.iter().all(|c| *c == codes[0]) {
            return Err(MinerError::ConstantTarget(target.to_string()));
        }
        Target::Classification {
            codes,
            classes: levels.len(),
        }
    };
    if rows.is_empty() {
        return Err(MinerError::ConstantTarget(target.to_string()));
    }

    let mut names = Vec::new();
    let mut features: Vec<Vec<f64>> = Vec::new();
    for c in d.columns() {
        if c.name() == target || c.vtype() == VariableType::Text {
            continue;
        }
        let values: Vec<f64> = if c.vtype().is_numeric() {
            let nums = c.numbers();
            let observed: Vec<f64> = rows.iter().filter_map(|&r| nums[r]).collect();
            let fill = if observed.is_empty() {
                0.0
            } else {
                crate::stats::median(&observed)
            };
            rows.iter().map(|&r| nums[r].unwrap_or(fill)).collect()
        } else {
            let (_, codes) = c.level_codes();
            rows.iter()
                .map(|&r| codes[r].map_or(-1.0, |k| k as f64))
                .collect()
        };
        names.push(c.name().to_string());
        features.push(values);
    }
    if names.is_empty() {
        return Err(MinerError::NoPredictors);
    }

    let p = names.len();
    let mtry = config
        .max_features
        .unwrap_or_else(|| (p as f64).sqrt().floor() as usize)
        .clamp(1, p);
    let data = TrainData {
        features: &features,
        target: &y,
        mtry,
        max_depth: config.max_depth,
        min_leaf: config.min_samples_leaf.max(1),
    };
    let per_tree: Vec<Vec<f64>> = (0..config.n_trees.max(1))
        .into_par_iter()
        .map(|t| {
            let seed = config
                .seed
                .wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rows.len();
            let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut gains = vec![0.0; p];
            data.grow(sample, 0, &mut rng, &mut gains);
            let total: f64 = gains.iter().sum();
            if total > 0.0 {
                gains.iter_mut().for_each(|g| *g /= total);
            }
            gains
        })
        .collect();

    let mut scores = vec![0.0; p];
    for g in &per_tree {
        for (s, x) in scores.iter_mut().zip(g) {
            *s += x;
        }
    }
    let total: f64 = scores.iter().sum();
    if total > 0.0 {
        scores.iter_mut().for_each(|s| *s /= total);
    } else {
        scores.iter_mut().for_each(|s| *s = 1.0 / p as f64);
    }
    let mut ranked: Vec<FeatureImportance> = names
        .into_iter()
        .zip(scores)
        .map(|(name, score)| FeatureImportance { name, score })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name)));
    Ok(ImportanceRanking {
        target: target.to_string(),
        features: ranked,
        config: config.clone(),
    })
}

struct TrainData<'a> {
    features: &'a [Vec<f64>],
    target: &'a Target,
    mtry: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TrainData<'_> {
    /// Total impurity of a node times its size (sum of squared deviations
    /// for regression, n·Gini for classification).
    fn node_impurity(&self, idx: &[usize]) -> f64 {
        match self.target {
            Target::Regression(y) => {
                let n = idx.len() as f64;
                let s: f64 = idx.iter().map(|&i| y[i]).sum();
                let ss: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
                (ss - s * s / n).max(0.0)
            }
            Target::Classification { codes, classes } => {
                let mut counts = vec![0usize; *classes];
                for &i in idx {
                    counts[codes[i]] += 1;
                }
                gini_total(&counts, idx.len())
            }
        }
    }

    fn grow(&self, idx: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng, gains: &mut [f64]) {
        if idx.len() < 2 * self.min_leaf || self.max_depth.is_some_and(|m| depth >= m) {
            return;
        }
        let parent = self.node_impurity(&idx);
        if parent <= 1e-12 {
            return;
        }
        let Some(split) = self.best_split(&idx, parent, rng) else {
            return;
        };
        gains[split.feature] += split.gain;
        let col = &self.features[split.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| col[i] <= split.threshold);
        self.grow(left, depth + 1, rng, gains);
        self.grow(right, depth + 1, rng, gains);
    }

    /// Scans features in random order until `mtry` non-constant ones have
    /// been evaluated.
    fn best_split(&self, idx: &[usize], parent: f64, rng: &mut ChaCha8Rng) -> Option<Split> {
        let mut order: Vec<usize> = (0..self.features.len()).collect();
        order.shuffle(rng);
        let mut tried = 0;
        let mut best: Option<Split> = None;
        let mut sorted = idx.to_vec();
        for f in order {
            if tried == self.mtry {
                break;
            }
            let col = &self.features[f];
            sorted.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            if col[sorted[0]] == col[sorted[sorted.len() - 1]] {
                continue;
            }
            tried += 1;
            if let Some((threshold, child)) = self.scan(col, &sorted) {
                let gain = parent - child;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(Split {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    /// Best threshold on one feature: returns the midpoint and the summed
    /// child impurity.
    fn scan(&self, col: &[f64], sorted: &[usize]) -> Option<(f64, f64)> {
        let n = sorted.len();
        let mut best: Option<(f64, f64)> = None;
        let mut consider = |k: usize, child: f64| {
            // split between positions k-1 and k
            let (a, b) = (col[sorted[k - 1]], col[sorted[k]]);
            if a == b || k < self.min_leaf || n - k < self.min_leaf {
                return;
            }
            if best.is_none_or(|(_, c)| child < c) {
                best = Some((a + (b - a) / 2.0, child));
            }
        };
        match self.target {
            Target::Regression(y) => {
                let (total_s, total_ss) = sorted
                    .iter()
                    .fold((0.0, 0.0), |(s, ss), &i| (s + y[i], ss + y[i] * y[i]));
                let (mut s, mut ss) = (0.0, 0.0);
                for k in 1..n {
                    let v = y[sorted[k - 1]];
                    s += v;
                    ss += v * v;
                    let nl = k as f64;
                    let nr = (n - k) as f64;
                    let left = (ss - s * s / nl).max(0.0);
                    let (rs, rss) = (total_s - s, total_ss - ss);
                    let right = (rss - rs * rs / nr).max(0.0);
                    consider(k, left + right);
                }
            }
            Target::Classification { codes, classes } => {
                let mut right = vec![0usize; *classes];
                for &i in sorted {
                    right[codes[i]] += 1;
                }
                let mut left = vec![0usize; *classes];
                for k in 1..n {
                    let c = codes[sorted[k - 1]];
                    left[c] += 1;
                    right[c] -= 1;
                    consider(k, gini_total(&left, k) + gini_total(&right, n - k));
                }
            }
        }
        best
    }
}

fn gini_total(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let sum_sq: f64 = counts.iter().map(|&c| (c as f64) * (c as f64)).sum();
    nf - sum_sq / nf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;
    use rand_distr::{Distribution, Normal};

    fn linear_dataset(seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let x1: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let x2: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let y: Vec<f64> = x1.iter().map(|x| 5.0 * x + normal.sample(&mut rng)).collect();
        Dataset::new(
            "lin",
            vec![
                Column::numeric("x1", &x1),
                Column::numeric("x2", &x2),
                Column::numeric("y", &y),
            ],
        )
        .unwrap()
    }

    /// Univariate least-squares R².
    fn r_squared(x: &[f64], y: &[f64]) -> f64 {
        let r = crate::stats::pearson(x, y).0.unwrap();
        r * r
    }

    #[test]
    fn signal_feature_dominates() {
        let d = linear_dataset(3, 300);
        let x1 = d.column("x1").unwrap().observed_numbers();
        let x2 = d.column("x2").unwrap().observed_numbers();
        let y = d.column("y").unwrap().observed_numbers();
        assert!(r_squared(&x1, &y) > 0.9 && r_squared(&x2, &y) < 0.05);

        let cfg = ForestConfig {
            n_trees: 30,
            ..ForestConfig::default()
        };
        let rank = rank_features(&d, "y", &cfg).unwrap();
        assert_eq!(rank.top(), Some("x1"));
        assert!(rank.features[0].score > 0.8, "{rank:?}");
        let sum: f64 = rank.features.iter().map(|f| f.score).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn deterministic_and_single_predictor() {
        let d = linear_dataset(5, 100);
        let cfg = ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        };
        assert_eq!(rank_features(&d, "y", &cfg).unwrap(), rank_features(&d, "y", &cfg).unwrap());
        let single = d.select_columns(&["x2", "y"]).unwrap();
        let r = rank_features(&single, "y", &cfg).unwrap();
        assert_eq!(r.features.len(), 1);
        assert!((r.features[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classification_target() {
        let labels: Vec<Option<&str>> = (0..60).map(|i| Some(if i % 3 == 0 { "a" } else { "b" })).collect();
        let signal: Vec<f64> = (0..60).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let noise: Vec<f64> = (0..60).map(|i| ((i * 37) % 11) as f64).collect();
        let d = Dataset::new(
            "c",
            vec![
                Column::nominal("label", &labels),
                Column::numeric("noise", &noise),
                Column::numeric("signal", &signal),
            ],
        )
        .unwrap();
        let r = rank_features(&d, "label", &ForestConfig { n_trees: 20, ..Default::default() }).unwrap();
        assert_eq!(r.top(), Some("signal"));
    }

    #[test]
    fn errors() {
        let d = Dataset::new(
            "e",
            vec![Column::numeric("a", &[1.0, 1.0]), Column::numeric("b", &[1.0, 2.0])],
        )
        .unwrap();
        let cfg = ForestConfig::default();
        assert_eq!(rank_features(&d, "a", &cfg).unwrap_err(), MinerError::ConstantTarget("a".into()));
        assert_eq!(rank_features(&d, "zz", &cfg).unwrap_err(), MinerError::UnknownColumn("zz".into()));
        let only = d.select_columns(&["b"]).unwrap();
        assert_eq!(rank_features(&only, "b", &cfg).unwrap_err(), MinerError::NoPredictors);
    }
}
