use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_points, CleanerError};
use crate::stats;
use crate::tabular::{CellValue, Column, VariableType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    Iqr,
    Dbscan,
    IsolationForest,
    Lof,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPoint {
    /// Position in the detector input.
    pub index: usize,
    /// Larger is more anomalous.
    pub score: f64,
    /// Coordinates of the point (one value for univariate detectors).
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub detector: DetectorKind,
    pub parameters: BTreeMap<String, f64>,
    /// Flagged points in input order.
    pub flagged: Vec<FlaggedPoint>,
    /// Score of every input point, same convention as `flagged`.
    pub scores: Vec<f64>,
}

impl OutlierReport {
    pub fn flagged_indices(&self) -> Vec<usize> {
        self.flagged.iter().map(|f| f.index).collect()
    }
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Tukey fences on type-7 quartiles. Scores are the distance beyond the
/// nearer fence in IQR units (raw distance when the IQR is zero). For
/// observed cells only; `index` is the row position in the column.
pub fn detect_iqr(c: &Column, k: f64) -> Result<OutlierReport, CleanerError> {
    if !c.vtype().is_numeric() {
        return Err(CleanerError::NonNumeric(c.name().to_string()));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(CleanerError::InvalidParameter(format!("IQR multiplier {k}")));
    }
    let values = c.numbers();
    let observed: Vec<f64> = values.iter().flatten().copied().collect();
    if observed.len() < 4 {
        return Err(CleanerError::TooFewValues {
            column: c.name().to_string(),
            found: observed.len(),
            needed: 4,
        });
    }
    let sorted = stats::sorted(&observed);
    let q1 = stats::quantile_sorted(&sorted, 0.25);
    let q3 = stats::quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let (lo, hi) = (q1 - k * iqr, q3 + k * iqr);
    let unit = if iqr > 0.0 { iqr } else { 1.0 };
    let mut flagged = Vec::new();
    let mut scores = Vec::with_capacity(values.len());
    for (index, v) in values.iter().enumerate() {
        let Some(x) = *v else {
            scores.push(0.0);
            continue;
        };
        let beyond = if x < lo {
            lo - x
        } else if x > hi {
            x - hi
        } else {
            0.0
        };
        let score = beyond / unit;
        scores.push(score);
        if beyond > 0.0 {
            flagged.push(FlaggedPoint {
                index,
                score,
                values: vec![x],
            });
        }
    }
    Ok(OutlierReport {
        detector: DetectorKind::Iqr,
        parameters: params(&[("k", k), ("q1", q1), ("q3", q3), ("lower", lo), ("upper", hi)]),
        flagged,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DbscanConfig {
    /// Neighborhood radius; `None` picks the k-distance knee.
    pub eps: Option<f64>,
    pub min_pts: usize,
}

impl Default for DbscanConfig {
    fn default() -> Self {
        DbscanConfig {
            eps: None,
            min_pts: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DbscanLabel {
    Cluster(usize),
    Noise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbscanResult {
    pub labels: Vec<DbscanLabel>,
    pub eps: f64,
    /// Noise points, scored by k-distance over eps.
    pub report: OutlierReport,
}

/// Uniform grid with cell side `eps`; used for radius queries in up to three
/// dimensions.
struct Grid<'a> {
    points: &'a [Vec<f64>],
    eps: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(points: &'a [Vec<f64>], eps: f64) -> Self {
        let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(p, eps)).or_default().push(i);
        }
        Grid { points, eps, cells }
    }

    fn key(p: &[f64], eps: f64) -> Vec<i64> {
        p.iter().map(|x| (x / eps).floor() as i64).collect()
    }

    /// All points within `eps` of point `i` (inclusive, including `i`),
    /// ascending.
    fn neighbors(&self, i: usize) -> Vec<usize> {
        let p = &self.points[i];
        let base = Self::key(p, self.eps);
        let eps2 = self.eps * self.eps;
        let mut out = Vec::new();
        let dim = base.len();
        let mut offset = vec![-1i64; dim];
        loop {
            let key: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(members) = self.cells.get(&key) {
                for &j in members {
                    if stats::squared_euclidean(p, &self.points[j]) <= eps2 {
                        out.push(j);
                    }
                }
            }
            // odometer over {-1, 0, 1}^dim
            let mut d = 0;
            while d < dim && offset[d] == 1 {
                offset[d] = -1;
                d += 1;
            }
            if d == dim {
                break;
            }
            offset[d] += 1;
        }
        out.sort_unstable();
        out
    }
}

fn radius_neighbors(points: &[Vec<f64>], eps: f64) -> Vec<Vec<usize>> {
    let dim = points[0].len();
    if (1..=3).contains(&dim) {
        let grid = Grid::new(points, eps);
        (0..points.len()).into_par_iter().map(|i| grid.neighbors(i)).collect()
    } else {
        let eps2 = eps * eps;
        (0..points.len())
            .into_par_iter()
            .map(|i| {
                (0..points.len())
                    .filter(|&j| stats::squared_euclidean(&points[i], &points[j]) <= eps2)
                    .collect()
            })
            .collect()
    }
}

/// Distance from each point to its `k`-th nearest point, counting the point
/// itself as the first.
fn k_distances(points: &[Vec<f64>], k: usize) -> Vec<f64> {
    let k = k.clamp(1, points.len());
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = points
                .iter()
                .map(|q| stats::squared_euclidean(&points[i], q))
                .collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            kth.sqrt()
        })
        .collect()
}

/// Knee of the ascending k-distance curve: the position with the largest
/// discrete second difference. Falls back to the smallest positive
/// k-distance (or 1) when the knee is at zero.
pub fn knee_eps(points: &[Vec<f64>], min_pts: usize) -> Result<f64, CleanerError> {
    check_points(points)?;
    Ok(knee_from(k_distances(points, min_pts)))
}

fn knee_from(mut kd: Vec<f64>) -> f64 {
    kd.sort_by(f64::total_cmp);
    let mut best = (f64::NEG_INFINITY, kd.len() - 1);
    for i in 1..kd.len().saturating_sub(1) {
        let second = kd[i - 1] - 2.0 * kd[i] + kd[i + 1];
        if second > best.0 {
            best = (second, i);
        }
    }
    let eps = kd[best.1];
    if eps > 0.0 {
        eps
    } else {
        kd.iter().copied().find(|&x| x > 0.0).unwrap_or(1.0)
    }
}

/// Density-based clustering. Core points have at least `min_pts` points
/// (themselves included) within `eps`. Clusters are the connected
/// components of cores, numbered by their lowest-index core. A border point
/// joins the cluster of its nearest core (ties go to the core with the
/// lexicographically smallest coordinates), which keeps the partition
/// independent of input order.
pub fn detect_dbscan(points: &[Vec<f64>], cfg: &DbscanConfig) -> Result<DbscanResult, CleanerError> {
    check_points(points)?;
    if cfg.min_pts == 0 {
        return Err(CleanerError::InvalidParameter("min_pts must be at least 1".into()));
    }
    let kd = k_distances(points, cfg.min_pts);
    let eps = match cfg.eps {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(CleanerError::InvalidParameter(format!("eps {e}"))),
        None => knee_from(kd.clone()),
    };
    let neighbors = radius_neighbors(points, eps);
    let core: Vec<bool> = neighbors.iter().map(|n| n.len() >= cfg.min_pts).collect();

    let n = points.len();
    let mut labels = vec![DbscanLabel::Noise; n];
    let mut next = 0;
    for start in 0..n {
        if !core[start] || labels[start] != DbscanLabel::Noise {
            continue;
        }
        let id = DbscanLabel::Cluster(next);
        next += 1;
        labels[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                if core[q] && labels[q] == DbscanLabel::Noise {
                    labels[q] = id;
                    queue.push_back(q);
                }
            }
        }
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let nearest = neighbors[i]
            .iter()
            .copied()
            .filter(|&j| core[j])
            .min_by(|&a, &b| {
                stats::squared_euclidean(&points[i], &points[a])
                    .total_cmp(&stats::squared_euclidean(&points[i], &points[b]))
                    .then_with(|| lex_cmp(&points[a], &points[b]))
            });
        if let Some(c) = nearest {
            labels[i] = labels[c];
        }
    }

    let scores: Vec<f64> = kd.iter().map(|k| k / eps).collect();
    let flagged = (0..n)
        .filter(|&i| labels[i] == DbscanLabel::Noise)
        .map(|i| FlaggedPoint {
            index: i,
            score: scores[i],
            values: points[i].clone(),
        })
        .collect();
    Ok(DbscanResult {
        labels,
        eps,
        report: OutlierReport {
            detector: DetectorKind::Dbscan,
            parameters: params(&[("eps", eps), ("min_pts", cfg.min_pts as f64)]),
            flagged,
            scores,
        },
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IsolationForestConfig {
    pub n_trees: usize,
    pub subsample: usize,
    /// Points scoring above this are flagged.
    pub threshold: f64,
    pub seed: u64,
}

impl Default for IsolationForestConfig {
    fn default() -> Self {
        IsolationForestConfig {
            n_trees: 100,
            subsample: 256,
            threshold: 0.6,
            seed: 0,
        }
    }
}

/// Average path length of an unsuccessful search in a binary search tree
/// of `n` nodes.
fn average_path(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => {
            let nf = n as f64;
            2.0 * ((nf - 1.0).ln() + 0.577_215_664_901_532_9) - 2.0 * (nf - 1.0) / nf
        }
    }
}

enum ITree {
    Leaf { size: usize },
    Split { feature: usize, value: f64, left: Box<ITree>, right: Box<ITree> },
}

impl ITree {
    fn grow(points: &[Vec<f64>], idx: Vec<usize>, depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> ITree {
        if idx.len() <= 1 || depth >= limit {
            return ITree::Leaf { size: idx.len() };
        }
        let dim = points[idx[0]].len();
        let ranges: Vec<(usize, f64, f64)> = (0..dim)
            .filter_map(|f| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    (lo.min(points[i][f]), hi.max(points[i][f]))
                });
                (hi > lo).then_some((f, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return ITree::Leaf { size: idx.len() };
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let value = lo + rng.random::<f64>() * (hi - lo);
        let (l, r): (Vec<usize>, Vec<usize>) = idx.into_iter().partition(|&i| points[i][feature] < value);
        ITree::Split {
            feature,
            value,
            left: Box::new(Self::grow(points, l, depth + 1, limit, rng)),
            right: Box::new(Self::grow(points, r, depth + 1, limit, rng)),
        }
    }

    fn path_length(&self, x: &[f64]) -> f64 {
        let mut node = self;
        let mut depth = 0.0;
        loop {
            match node {
                ITree::Leaf { size } => return depth + average_path(*size),
                ITree::Split { feature, value, left, right } => {
                    node = if x[*feature] < *value { left } else { right };
                    depth += 1.0;
                }
            }
        }
    }
}

/// Isolation forest with score `2^(−E[h(x)] / c(ψ))`.
pub fn detect_isolation_forest(
    points: &[Vec<f64>],
    cfg: &IsolationForestConfig,
) -> Result<OutlierReport, CleanerError> {
    check_points(points)?;
    let n = points.len();
    if n < 2 {
        return Err(CleanerError::TooFewPoints(n));
    }
    if cfg.n_trees == 0 || cfg.subsample < 2 {
        return Err(CleanerError::InvalidParameter(
            "isolation forest needs at least one tree and a subsample of 2".into(),
        ));
    }
    let psi = cfg.subsample.min(n);
    let limit = (psi as f64).log2().ceil() as usize;
    let trees: Vec<ITree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(
                cfg.seed.wrapping_add((t as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
            );
            let idx = sample(&mut rng, n, psi).into_vec();
            ITree::grow(points, idx, 0, limit, &mut rng)
        })
        .collect();
    let c = average_path(psi);
    let scores: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let mean = trees.iter().map(|t| t.path_length(p)).sum::<f64>() / trees.len() as f64;
            2f64.powf(-mean / c)
        })
        .collect();
    let flagged = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cfg.threshold)
        .map(|(i, &s)| FlaggedPoint {
            index: i,
            score: s,
            values: points[i].clone(),
        })
        .collect();
    Ok(OutlierReport {
        detector: DetectorKind::IsolationForest,
        parameters: params(&[
            ("n_trees", cfg.n_trees as f64),
            ("subsample", psi as f64),
            ("threshold", cfg.threshold),
            ("seed", cfg.seed as f64),
        ]),
        flagged,
        scores,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LofConfig {
    pub k: usize,
    pub threshold: f64,
}

impl Default for LofConfig {
    fn default() -> Self {
        LofConfig { k: 20, threshold: 1.5 }
    }
}

/// Added to the mean reachability distance before inverting, so identical
/// points get a finite density and a LOF of exactly 1.
const LRD_EPS: f64 = 1e-10;

/// Local outlier factor. The k-neighborhood includes every point tied at
/// the k-distance.
pub fn detect_lof(points: &[Vec<f64>], cfg: &LofConfig) -> Result<OutlierReport, CleanerError> {
    check_points(points)?;
    let n = points.len();
    if cfg.k == 0 || n <= cfg.k {
        return Err(CleanerError::KTooLarge { k: cfg.k, n });
    }
    let k = cfg.k;
    // (k-distance, neighbors with distances)
    let hoods: Vec<(f64, Vec<(usize, f64)>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (j, stats::euclidean(&points[i], &points[j])))
                .collect();
            d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            let kd = d[k - 1].1;
            let cut = d.partition_point(|x| x.1 <= kd);
            d.truncate(cut);
            (kd, d)
        })
        .collect();
    let lrd: Vec<f64> = hoods
        .iter()
        .map(|(_, hood)| {
            let reach: f64 = hood.iter().map(|&(o, d)| hoods[o].0.max(d)).sum();
            1.0 / (reach / hood.len() as f64 + LRD_EPS)
        })
        .collect();
    let scores: Vec<f64> = hoods
        .iter()
        .enumerate()
        .map(|(i, (_, hood))| {
            hood.iter().map(|&(o, _)| lrd[o]).sum::<f64>() / hood.len() as f64 / lrd[i]
        })
        .collect();
    let flagged = scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > cfg.threshold)
        .map(|(i, &s)| FlaggedPoint {
            index: i,
            score: s,
            values: points[i].clone(),
        })
        .collect();
    Ok(OutlierReport {
        detector: DetectorKind::Lof,
        parameters: params(&[("k", k as f64), ("threshold", cfg.threshold)]),
        flagged,
        scores,
    })
}

/// Clamps values to the type-7 `lo_pct` and `hi_pct` percentiles of the
/// observed values. Returns the new column and the bounds used.
pub fn winsorize(c: &Column, lo_pct: f64, hi_pct: f64) -> Result<(Column, Option<(f64, f64)>), CleanerError> {
    if !c.vtype().is_numeric() {
        return Err(CleanerError::NonNumeric(c.name().to_string()));
    }
    if !(0.0..=100.0).contains(&lo_pct) || !(0.0..=100.0).contains(&hi_pct) || lo_pct >= hi_pct {
        return Err(CleanerError::InvalidParameter(format!(
            "winsorize percentiles ({lo_pct}, {hi_pct})"
        )));
    }
    let observed = c.observed_numbers();
    if observed.is_empty() {
        return Ok((c.clone(), None));
    }
    let sorted = stats::sorted(&observed);
    let lo = stats::quantile_sorted(&sorted, lo_pct / 100.0);
    let hi = stats::quantile_sorted(&sorted, hi_pct / 100.0);
    Ok((winsorize_with_bounds(c, lo, hi)?, Some((lo, hi))))
}

/// Clamps observed values into `[lo, hi]`. Applying the same bounds twice
/// equals applying them once.
pub fn winsorize_with_bounds(c: &Column, lo: f64, hi: f64) -> Result<Column, CleanerError> {
    if !c.vtype().is_numeric() {
        return Err(CleanerError::NonNumeric(c.name().to_string()));
    }
    let cells = c
        .cells()
        .iter()
        .map(|v| match v.as_f64() {
            Some(x) if x < lo || x > hi => {
                let y = x.clamp(lo, hi);
                if c.vtype() == VariableType::DateTime {
                    CellValue::Timestamp(y.round() as i64)
                } else {
                    CellValue::number(y)
                }
            }
            _ => v.clone(),
        })
        .collect();
    Ok(c.with_cells(cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn iqr_flags_planted_value() {
        let mut v: Vec<f64> = (1..=100).map(f64::from).collect();
        v.push(1000.0);
        let c = Column::numeric("x", &v);
        let rep = detect_iqr(&c, 1.5).unwrap();
        assert_eq!(rep.flagged_indices(), vec![100]);
        // oracle fences: Q1 = 26, Q3 = 76 for 1..=100 ∪ {1000} (n = 101)
        assert_eq!(rep.parameters["q1"], 26.0);
        assert_eq!(rep.parameters["q3"], 76.0);
        assert!((rep.flagged[0].score - (1000.0 - 151.0) / 50.0).abs() < 1e-12);

        let constant = Column::numeric("c", &[3.0; 6]);
        assert!(detect_iqr(&constant, 1.5).unwrap().flagged.is_empty());
        assert!(matches!(
            detect_iqr(&Column::numeric("s", &[1.0, 2.0, 3.0]), 1.5),
            Err(CleanerError::TooFewValues { found: 3, .. })
        ));
        assert!(matches!(
            detect_iqr(&Column::nominal("n", &[Some("a")]), 1.5),
            Err(CleanerError::NonNumeric(_))
        ));
    }

    #[test]
    fn dbscan_far_point_is_noise() {
        let mut pts: Vec<Vec<f64>> = (0..10).map(|i| vec![0.01 * i as f64, 0.0]).collect();
        pts.push(vec![100.0, 0.0]);
        let r = detect_dbscan(&pts, &DbscanConfig { eps: Some(1.0), min_pts: 3 }).unwrap();
        assert_eq!(r.report.flagged_indices(), vec![10]);
        assert!(r.labels[..10].iter().all(|l| *l == DbscanLabel::Cluster(0)));

        let same = vec![vec![1.0, 1.0]; 8];
        let r = detect_dbscan(&same, &DbscanConfig::default()).unwrap();
        assert!(r.labels.iter().all(|l| *l == DbscanLabel::Cluster(0)));
        assert!(r.eps > 0.0);

        assert_eq!(detect_dbscan(&[], &DbscanConfig::default()).unwrap_err(), CleanerError::EmptyInput);
        assert_eq!(
            detect_dbscan(&[vec![f64::NAN]], &DbscanConfig::default()).unwrap_err(),
            CleanerError::NonFinite(0)
        );
    }

    #[test]
    fn dbscan_grid_matches_brute_force_in_four_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..120).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let cfg = DbscanConfig { eps: Some(0.15), min_pts: 4 };
        let a = detect_dbscan(&pts, &cfg).unwrap();
        // same points padded with a constant fourth coordinate take the brute-force path
        let padded: Vec<Vec<f64>> = pts.iter().map(|p| [p.as_slice(), &[0.5]].concat()).collect();
        let b = detect_dbscan(&padded, &cfg).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn knee_is_at_the_elbow() {
        let mut kd: Vec<f64> = (0..50).map(|i| 0.1 + 0.001 * i as f64).collect();
        kd.extend([5.0, 9.0]);
        let eps = knee_from(kd);
        assert!((eps - 0.149).abs() < 1e-12, "{eps}");
    }

    #[test]
    fn isolation_forest_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        pts.push(vec![20.0, 20.0]);
        pts.push(vec![0.5, 0.5]);
        pts.push(vec![0.5, 0.5]);
        let rep = detect_isolation_forest(&pts, &IsolationForestConfig::default()).unwrap();
        let top = (0..pts.len()).max_by(|&a, &b| rep.scores[a].total_cmp(&rep.scores[b])).unwrap();
        assert_eq!(top, 300);
        assert_eq!(rep.scores[301], rep.scores[302]);
        assert!(rep.scores.iter().all(|&s| s > 0.0 && s <= 1.0));
        let again = detect_isolation_forest(&pts, &IsolationForestConfig::default()).unwrap();
        assert_eq!(rep, again);
        assert_eq!(
            detect_isolation_forest(&[vec![1.0]], &IsolationForestConfig::default()).unwrap_err(),
            CleanerError::TooFewPoints(1)
        );
    }

    #[test]
    fn lof_grid_and_isolated_point() {
        let mut pts: Vec<Vec<f64>> = Vec::new();
        for i in 0..15 {
            for j in 0..15 {
                pts.push(vec![i as f64, j as f64]);
            }
        }
        pts.push(vec![50.0, 50.0]);
        let rep = detect_lof(&pts, &LofConfig { k: 5, threshold: 1.5 }).unwrap();
        let interior = 7 * 15 + 7;
        assert!((0.8..=1.2).contains(&rep.scores[interior]), "{}", rep.scores[interior]);
        let top = (0..pts.len()).max_by(|&a, &b| rep.scores[a].total_cmp(&rep.scores[b])).unwrap();
        assert_eq!(top, 225);
        assert!(rep.scores[225] > 1.5);
    }

    #[test]
    fn lof_duplicates_score_one() {
        let k = 4;
        let mut pts = vec![vec![1.0, 2.0]; k + 1];
        pts.extend([vec![5.0, 5.0], vec![6.0, 5.0], vec![9.0, 1.0]]);
        let rep = detect_lof(&pts, &LofConfig { k, threshold: 1.5 }).unwrap();
        for s in &rep.scores[..=k] {
            assert_eq!(*s, 1.0);
        }
        assert_eq!(
            detect_lof(&pts[..3], &LofConfig { k: 3, threshold: 1.5 }).unwrap_err(),
            CleanerError::KTooLarge { k: 3, n: 3 }
        );
    }

    #[test]
    fn winsorize_bounds() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let (out, bounds) = winsorize(&Column::numeric("x", &v), 5.0, 95.0).unwrap();
        let (lo, hi) = bounds.unwrap();
        // type-7: h = 99 · 0.05 = 4.95 → 5 + 0.95 · (6 − 5)
        assert!((lo - 5.95).abs() < 1e-12 && (hi - 95.05).abs() < 1e-12);
        let o = out.observed_numbers();
        assert_eq!(o.iter().copied().fold(f64::INFINITY, f64::min), lo);
        assert_eq!(o.iter().copied().fold(f64::NEG_INFINITY, f64::max), hi);

        let inside = Column::numeric("c", &[2.0; 5]);
        assert_eq!(winsorize(&inside, 5.0, 95.0).unwrap().0, inside);
        assert!(winsorize(&inside, 95.0, 5.0).is_err());
    }

    proptest! {
        #[test]
        fn fitted_winsorization_is_idempotent(v in prop::collection::vec(-1e6f64..1e6, 1..60)) {
            let c = Column::numeric("x", &v);
            let (once, bounds) = winsorize(&c, 5.0, 95.0).unwrap();
            let (lo, hi) = bounds.unwrap();
            prop_assert_eq!(winsorize_with_bounds(&once, lo, hi).unwrap(), once);
        }

        #[test]
        fn dbscan_partition_is_order_invariant(
            pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..60),
            seed in any::<u64>(),
        ) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|(x, y)| vec![x, y]).collect();
            let cfg = DbscanConfig { eps: Some(1.2), min_pts: 3 };
            let mut perm: Vec<usize> = (0..pts.len()).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(seed));
            let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].clone()).collect();
            let a = detect_dbscan(&pts, &cfg).unwrap().labels;
            let b = detect_dbscan(&shuffled, &cfg).unwrap().labels;
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let same_a = a[perm[i]] == a[perm[j]] && a[perm[i]] != DbscanLabel::Noise;
                    let same_b = b[i] == b[j] && b[i] != DbscanLabel::Noise;
                    prop_assert_eq!(same_a, same_b);
                }
                prop_assert_eq!(a[perm[i]] == DbscanLabel::Noise, b[i] == DbscanLabel::Noise);
            }
        }
    }
}
