use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EdaError;
use crate::stats;
use crate::tabular::{CellValue, Column, VariableType};

const SKEW_CUTOFF: f64 = 0.5;
const UNIFORM_BINS: usize = 10;
/// Smallest sample giving an expected count of 5 per bin.
const UNIFORM_MIN_N: usize = 5 * UNIFORM_BINS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistributionShape {
    Normal,
    SkewedLeft,
    SkewedRight,
    Uniform,
    Varied,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub vtype: VariableType,
    pub count: usize,
    pub missing_count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub mode: Option<String>,
    pub std: Option<f64>,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub distinct_count: usize,
    pub shape: DistributionShape,
    /// p-value of the 10-bin chi-square uniformity test, when it was run.
    pub uniform_p: Option<f64>,
}

impl ColumnProfile {
    pub fn observed(&self) -> usize {
        self.count - self.missing_count
    }

    pub fn is_numeric(&self) -> bool {
        self.vtype.is_numeric()
    }
}

/// Computes statistics over the non-missing cells of a column.
pub fn profile_column(c: &Column) -> Result<ColumnProfile, EdaError> {
    let count = c.len();
    let missing_count = c.missing_count();
    if missing_count == count {
        return Err(EdaError::EmptyColumn(c.name().to_string()));
    }
    let (mode, distinct_count) = mode_and_distinct(c.cells());

    let mut p = ColumnProfile {
        name: c.name().to_string(),
        vtype: c.vtype(),
        count,
        missing_count,
        mean: None,
        median: None,
        mode: Some(mode),
        std: None,
        skewness: None,
        kurtosis: None,
        min: None,
        max: None,
        distinct_count,
        shape: DistributionShape::Varied,
        uniform_p: None,
    };

    if c.vtype().is_numeric() {
        let xs = c.observed_numbers();
        let sorted = stats::sorted(&xs);
        p.mean = Some(stats::mean(&xs));
        p.median = Some(stats::quantile_sorted(&sorted, 0.5));
        p.std = Some(stats::sample_std(&xs));
        p.skewness = stats::skewness(&xs);
        p.kurtosis = stats::excess_kurtosis(&xs);
        p.min = sorted.first().copied();
        p.max = sorted.last().copied();
        if xs.len() >= UNIFORM_MIN_N {
            p.uniform_p = Some(uniformity_p(&sorted));
        }
    }
    p.shape = classify_shape(&p);
    Ok(p)
}

fn classify_shape(p: &ColumnProfile) -> DistributionShape {
    if p.distinct_count == 2 {
        return DistributionShape::Binary;
    }
    if !p.vtype.is_numeric() {
        return DistributionShape::Varied;
    }
    if p.uniform_p.is_some_and(|pv| pv > 0.05) {
        return DistributionShape::Uniform;
    }
    match p.skewness.unwrap_or(0.0) {
        s if s > SKEW_CUTOFF => DistributionShape::SkewedRight,
        s if s < -SKEW_CUTOFF => DistributionShape::SkewedLeft,
        _ => DistributionShape::Normal,
    }
}

/// Chi-square goodness of fit against a uniform distribution over
/// `[min, max]`, using equal-width bins.
fn uniformity_p(sorted: &[f64]) -> f64 {
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    if hi <= lo {
        return 0.0;
    }
    let mut counts = [0usize; UNIFORM_BINS];
    let width = (hi - lo) / UNIFORM_BINS as f64;
    for &x in sorted {
        let b = (((x - lo) / width) as usize).min(UNIFORM_BINS - 1);
        counts[b] += 1;
    }
    let expected = sorted.len() as f64 / UNIFORM_BINS as f64;
    let stat: f64 = counts
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    stats::chi_square_sf(stat, (UNIFORM_BINS - 1) as f64)
}

/// Most frequent rendered value (ties → first seen) and distinct count.
fn mode_and_distinct(cells: &[CellValue]) -> (String, usize) {
    let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
    for (i, cell) in cells.iter().enumerate() {
        if cell.is_missing() {
            continue;
        }
        counts.entry(cell.render()).or_insert((0, i)).0 += 1;
    }
    let distinct = counts.len();
    let mode = counts
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .map(|(v, _)| v)
        .unwrap_or_default();
    (mode, distinct)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn symmetric_sequence_is_normal() {
        let p = profile_column(&Column::numeric("x", &[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert!(p.skewness.unwrap().abs() < 1e-12);
        assert_eq!(p.shape, DistributionShape::Normal);
        assert_eq!(p.median, Some(3.0));
        assert!((p.std.unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lognormal_is_skewed_right() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..1000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z.exp()
            })
            .collect();
        // independent skewness: sample central moments, then the small-sample adjustment
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        let m3 = xs.iter().map(|x| (x - m) * (x - m) * (x - m)).sum::<f64>() / n;
        let oracle = m3 / m2.powf(1.5) * (n * (n - 1.0)).sqrt() / (n - 2.0);
        assert!(oracle > 0.5);

        let p = profile_column(&Column::numeric("x", &xs)).unwrap();
        assert!((p.skewness.unwrap() - oracle).abs() < 1e-9);
        assert_eq!(p.shape, DistributionShape::SkewedRight);
    }

    #[test]
    fn gender_is_binary_with_mode() {
        let c = Column::nominal("g", &[Some("Male"), Some("Female"), Some("Male")]);
        let p = profile_column(&c).unwrap();
        assert_eq!(p.shape, DistributionShape::Binary);
        assert_eq!(p.mode.as_deref(), Some("Male"));
        assert_eq!(p.mean, None);
    }

    #[test]
    fn uniform_grid_is_uniform() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let p = profile_column(&Column::numeric("u", &xs)).unwrap();
        assert_eq!(p.shape, DistributionShape::Uniform);
    }

    #[test]
    fn all_missing_is_an_error() {
        let c = Column::numeric_opt("m", &[None, None]);
        assert_eq!(profile_column(&c).unwrap_err(), EdaError::EmptyColumn("m".into()));
    }

    #[test]
    fn mode_ties_break_first_seen() {
        let c = Column::nominal("c", &[Some("b"), Some("a"), Some("a"), Some("b"), None]);
        let p = profile_column(&c).unwrap();
        assert_eq!(p.mode.as_deref(), Some("b"));
        assert_eq!(p.missing_count, 1);
        assert_eq!(p.shape, DistributionShape::Binary);
    }

    #[test]
    fn skewness_is_antisymmetric() {
        let xs = [1.0, 2.0, 2.5, 9.0, 4.0, 0.3];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        let a = stats::skewness(&xs).unwrap();
        let b = stats::skewness(&neg).unwrap();
        assert!((a + b).abs() < 1e-12);
    }
}
