use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EdaError;
use crate::stats;
use crate::tabular::{Dataset, VariableType};

const KMEANS_MAX_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub columns: Vec<String>,
    /// Row-major, symmetric. Pairs with an undefined correlation (a
    /// zero-variance side) hold 0.
    pub values: Vec<Vec<f64>>,
}

/// Pearson correlations between all continuous columns, each pair computed
/// over the rows where both cells are observed.
pub fn correlation_matrix(d: &Dataset) -> Result<CorrelationMatrix, EdaError> {
    let numeric: Vec<_> = d
        .columns()
        .iter()
        .filter(|c| c.vtype() == VariableType::ContinuousNumeric)
        .collect();
    if numeric.len() < 2 {
        return Err(EdaError::TooFewNumericColumns(numeric.len()));
    }
    let views: Vec<Vec<Option<f64>>> = numeric.iter().map(|c| c.numbers()).collect();
    let k = numeric.len();
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        values[i][i] = 1.0;
        for j in (i + 1)..k {
            let (xs, ys): (Vec<f64>, Vec<f64>) = views[i]
                .iter()
                .zip(&views[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            let r = stats::pearson(&xs, &ys).0.unwrap_or(0.0);
            values[i][j] = r;
            values[j][i] = r;
        }
    }
    Ok(CorrelationMatrix {
        columns: numeric.iter().map(|c| c.name().to_string()).collect(),
        values,
    })
}

struct Cluster {
    leaves: Vec<usize>,
    min_index: usize,
}

/// Leaf order of an average-linkage dendrogram over the distance `1 − |r|`.
///
/// Among equally close cluster pairs the one with the smaller minimum column
/// indices merges first; within a merge the cluster holding the smaller
/// index is placed first.
pub fn hierarchical_order(m: &[Vec<f64>]) -> Vec<usize> {
    let n = m.len();
    let mut clusters: Vec<Option<Cluster>> = (0..n)
        .map(|i| {
            Some(Cluster {
                leaves: vec![i],
                min_index: i,
            })
        })
        .collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 1.0 - m[i][j].abs()).collect())
        .collect();

    for _ in 1..n {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for a in 0..n {
            let Some(ca) = &clusters[a] else { continue };
            for b in (a + 1)..n {
                let Some(cb) = &clusters[b] else { continue };
                let (lo, hi) = if ca.min_index < cb.min_index {
                    (ca.min_index, cb.min_index)
                } else {
                    (cb.min_index, ca.min_index)
                };
                let key = (dist[a][b], lo, hi);
                let better = match best {
                    None => true,
                    Some((d, l, h, _, _)) => {
                        key.0 < d || (key.0 == d && (key.1, key.2) < (l, h))
                    }
                };
                if better {
                    best = Some((key.0, lo, hi, a, b));
                }
            }
        }
        let (_, _, _, a, b) = best.expect("at least two clusters remain");
        let ca = clusters[a].take().expect("live cluster");
        let cb = clusters[b].take().expect("live cluster");
        let (na, nb) = (ca.leaves.len() as f64, cb.leaves.len() as f64);
        for k in 0..n {
            if clusters[k].is_some() {
                let d = (na * dist[k][a] + nb * dist[k][b]) / (na + nb);
                dist[k][a] = d;
                dist[a][k] = d;
            }
        }
        let (first, second) = if ca.min_index < cb.min_index {
            (ca, cb)
        } else {
            (cb, ca)
        };
        let mut leaves = first.leaves;
        leaves.extend(second.leaves);
        clusters[a] = Some(Cluster {
            leaves,
            min_index: first.min_index,
        });
    }
    clusters
        .into_iter()
        .flatten()
        .next()
        .map(|c| c.leaves)
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the final assignment.
    pub wcss: f64,
    /// WCSS after each assignment step.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, EdaError> {
    if k == 0 {
        return Err(EdaError::ZeroK);
    }
    if k > points.len() {
        return Err(EdaError::KTooLarge { k, n: points.len() });
    }
    let dim = points[0].len();
    if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
        return Err(EdaError::DimensionMismatch {
            index,
            expected: dim,
            found: p.len(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignments: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let (next, wcss) = assign(points, &centroids);
        history.push(wcss);
        let stable = next == assignments;
        assignments = next;
        if stable || iterations >= KMEANS_MAX_ITER {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignments) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        wcss: *history.last().expect("one iteration ran"),
        history,
        iterations,
    })
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut wcss = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (best, d) = centroids
                .iter()
                .enumerate()
                .map(|(i, c)| (i, stats::squared_euclidean(p, c)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            wcss += d;
            best
        })
        .collect();
    (labels, wcss)
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| stats::squared_euclidean(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            if d2[pick] == 0.0 {
                // rounding ran past the end; take the last positive weight
                pick = d2.iter().rposition(|&w| w > 0.0).unwrap_or(pick);
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k ≤ n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(stats::squared_euclidean(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;

    #[test]
    fn identical_and_negated_columns() {
        let d = Dataset::new(
            "t",
            vec![
                Column::numeric("a", &[1.0, 2.0, 4.0]),
                Column::numeric("b", &[1.0, 2.0, 4.0]),
                Column::numeric("c", &[-1.0, -2.0, -4.0]),
            ],
        )
        .unwrap();
        let m = correlation_matrix(&d).unwrap();
        assert_eq!(m.values[0][1], 1.0);
        assert_eq!(m.values[0][2], -1.0);
        for i in 0..3 {
            assert_eq!(m.values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(m.values[i][j], m.values[j][i]);
            }
        }
    }

    #[test]
    fn too_few_numeric_columns() {
        let d = Dataset::new("t", vec![Column::numeric("a", &[1.0, 2.0])]).unwrap();
        assert_eq!(correlation_matrix(&d).unwrap_err(), EdaError::TooFewNumericColumns(1));
    }

    #[test]
    fn hierarchical_edge_cases() {
        assert_eq!(hierarchical_order(&[vec![1.0]]), vec![0]);
        let identity: Vec<Vec<f64>> = (0..5)
            .map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(hierarchical_order(&identity), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn identical_columns_end_up_adjacent() {
        // columns 1 and 4 are identical (|r| = 1); everything else is weak
        let mut m = vec![vec![0.1; 5]; 5];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        m[1][4] = 1.0;
        m[4][1] = 1.0;
        m[0][2] = 0.5;
        m[2][0] = 0.5;
        let order = hierarchical_order(&m);
        let p1 = order.iter().position(|&x| x == 1).unwrap();
        let p4 = order.iter().position(|&x| x == 4).unwrap();
        assert_eq!(p1.abs_diff(p4), 1, "{order:?}");
    }

    #[test]
    fn kmeans_small_cases() {
        let pts = vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![10.0, 10.0], vec![10.0, 10.1]];
        let r = kmeans(&pts, 2, 7).unwrap();
        assert_eq!(r.assignments[0], r.assignments[1]);
        assert_eq!(r.assignments[2], r.assignments[3]);
        assert_ne!(r.assignments[0], r.assignments[2]);

        let r = kmeans(&pts, 4, 1).unwrap();
        assert_eq!(r.wcss, 0.0);

        let r = kmeans(&pts, 1, 1).unwrap();
        assert!((r.centroids[0][0] - 5.025).abs() < 1e-12);
        assert!((r.centroids[0][1] - 5.025).abs() < 1e-12);

        assert!(matches!(kmeans(&pts, 5, 1), Err(EdaError::KTooLarge { .. })));
        assert!(matches!(
            kmeans(&[vec![0.0], vec![1.0, 2.0]], 1, 1),
            Err(EdaError::DimensionMismatch { index: 1, .. })
        ));
    }
}
