use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::CleanerError;
use crate::stats;
use crate::tabular::{CellValue, Column, Dataset, VariableType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMissing {
    pub column: String,
    pub rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMissing {
    pub row: usize,
    pub count: usize,
    pub fraction: f64,
}

/// Positions of missing cells. Only columns and rows with at least one
/// missing cell are listed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MissingReport {
    pub columns: Vec<ColumnMissing>,
    pub rows: Vec<RowMissing>,
    pub total: usize,
}

impl MissingReport {
    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

pub fn find_missing(d: &Dataset) -> MissingReport {
    let mut per_row = vec![0usize; d.row_count()];
    let mut columns = Vec::new();
    for c in d.columns() {
        let rows: Vec<usize> = c
            .cells()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_missing())
            .map(|(i, _)| i)
            .collect();
        for &r in &rows {
            per_row[r] += 1;
        }
        if !rows.is_empty() {
            columns.push(ColumnMissing {
                column: c.name().to_string(),
                rows,
            });
        }
    }
    let width = d.column_count().max(1) as f64;
    let rows: Vec<RowMissing> = per_row
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(row, &count)| RowMissing {
            row,
            count,
            fraction: count as f64 / width,
        })
        .collect();
    MissingReport {
        total: per_row.iter().sum(),
        columns,
        rows,
    }
}

/// Removes rows whose missing fraction strictly exceeds `threshold`.
/// Returns the new dataset and the removed positions.
pub fn drop_rows_by_missing(
    d: &Dataset,
    threshold: f64,
) -> Result<(Dataset, Vec<usize>), CleanerError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CleanerError::InvalidParameter(format!(
            "missing-row threshold {threshold} outside [0, 1]"
        )));
    }
    let removed: Vec<usize> = find_missing(d)
        .rows
        .into_iter()
        .filter(|r| r.fraction > threshold)
        .map(|r| r.row)
        .collect();
    let mut keep = Vec::with_capacity(d.row_count() - removed.len());
    let mut it = removed.iter().peekable();
    for r in 0..d.row_count() {
        if it.peek() == Some(&&r) {
            it.next();
        } else {
            keep.push(r);
        }
    }
    Ok((d.take_rows(&keep), removed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImputeStrategy {
    Mean,
    Median,
    Mode,
}

impl ImputeStrategy {
    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "Mean",
            Self::Median => "Median",
            Self::Mode => "Mode",
        }
    }
}

/// Fill value for `c` under `strategy`, computed from observed cells.
fn fill_value(c: &Column, strategy: ImputeStrategy) -> Result<CellValue, CleanerError> {
    if c.missing_count() == c.len() {
        return Err(CleanerError::AllMissing(c.name().to_string()));
    }
    let numeric = |x: f64| {
        if c.vtype() == VariableType::DateTime {
            CellValue::Timestamp(x.round() as i64)
        } else {
            CellValue::number(x)
        }
    };
    match strategy {
        ImputeStrategy::Mean | ImputeStrategy::Median => {
            if !c.vtype().is_numeric() {
                return Err(CleanerError::StrategyTypeMismatch {
                    column: c.name().to_string(),
                    strategy: strategy.name().to_string(),
                });
            }
            let xs = c.observed_numbers();
            Ok(numeric(if strategy == ImputeStrategy::Mean {
                stats::mean(&xs)
            } else {
                stats::median(&xs)
            }))
        }
        ImputeStrategy::Mode => {
            let mut counts: HashMap<String, (usize, usize)> = HashMap::new();
            for (i, v) in c.cells().iter().enumerate() {
                if !v.is_missing() {
                    counts.entry(v.render()).or_insert((0, i)).0 += 1;
                }
            }
            // highest count, then earliest first occurrence
            let (_, first) = counts
                .values()
                .copied()
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                .expect("observed cell");
            Ok(c.cells()[first].clone())
        }
    }
}

/// Replaces every missing cell with the column statistic.
pub fn impute_simple(
    c: &Column,
    strategy: ImputeStrategy,
) -> Result<(Column, CellValue), CleanerError> {
    let fill = fill_value(c, strategy)?;
    let cells = c
        .cells()
        .iter()
        .map(|v| if v.is_missing() { fill.clone() } else { v.clone() })
        .collect();
    Ok((c.with_cells(cells), fill))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiceConfig {
    pub iterations: usize,
    /// Accepted for interface stability; the chained regressions are
    /// deterministic and draw no random numbers.
    pub seed: u64,
}

impl Default for MiceConfig {
    fn default() -> Self {
        MiceConfig {
            iterations: 10,
            seed: 0,
        }
    }
}

/// Working representation of one column during chained imputation.
enum Slot {
    Numeric(Vec<f64>),
    Categorical { codes: Vec<usize>, levels: usize },
    /// Text columns are filled once and take no part in the regressions.
    Passive,
}

/// Chained-equation imputation: every incomplete column is regressed on all
/// other columns (least squares for numeric targets, nearest class centroid
/// for categorical ones), cycling until predictions stop changing or the
/// iteration budget runs out.
pub fn impute_mice(d: &Dataset, cfg: &MiceConfig) -> Result<Dataset, CleanerError> {
    if d.column_count() < 2 {
        return Err(CleanerError::TooFewColumns(d.column_count()));
    }
    for c in d.columns() {
        if c.missing_count() == c.len() && !c.is_empty() {
            return Err(CleanerError::AllMissing(c.name().to_string()));
        }
    }
    let n = d.row_count();
    let missing: Vec<Vec<usize>> = d
        .columns()
        .iter()
        .map(|c| (0..n).filter(|&r| c.cells()[r].is_missing()).collect())
        .collect();
    if missing.iter().all(Vec::is_empty) {
        return Ok(d.clone());
    }

    let mut level_names: Vec<Vec<String>> = Vec::new();
    let mut slots: Vec<Slot> = Vec::new();
    for c in d.columns() {
        if c.vtype().is_numeric() {
            let fill = stats::mean(&c.observed_numbers());
            slots.push(Slot::Numeric(
                c.numbers().into_iter().map(|x| x.unwrap_or(fill)).collect(),
            ));
            level_names.push(Vec::new());
        } else if c.vtype().is_categorical() {
            let (levels, codes) = c.level_codes();
            let CellValue::Category(mode) = fill_value(c, ImputeStrategy::Mode)? else {
                unreachable!("categorical mode is a category");
            };
            let mode_code = levels.iter().position(|l| **l == *mode).expect("observed level");
            slots.push(Slot::Categorical {
                codes: codes.into_iter().map(|k| k.unwrap_or(mode_code)).collect(),
                levels: levels.len(),
            });
            level_names.push(levels);
        } else {
            slots.push(Slot::Passive);
            level_names.push(Vec::new());
        }
    }

    for _ in 0..cfg.iterations.max(1) {
        let mut changed = false;
        for j in 0..slots.len() {
            if missing[j].is_empty() || matches!(slots[j], Slot::Passive) {
                continue;
            }
            let x = design_matrix(&slots, j, n);
            let observed: Vec<usize> = (0..n).filter(|r| missing[j].binary_search(r).is_err()).collect();
            match &slots[j] {
                Slot::Numeric(y) => {
                    let preds = ols_predict(&x, y, &observed, &missing[j]);
                    let Slot::Numeric(y) = &mut slots[j] else { unreachable!() };
                    for (&r, p) in missing[j].iter().zip(preds) {
                        if y[r] != p {
                            changed = true;
                            y[r] = p;
                        }
                    }
                }
                Slot::Categorical { codes, levels } => {
                    let preds = centroid_predict(&x, codes, *levels, &observed, &missing[j]);
                    let Slot::Categorical { codes, .. } = &mut slots[j] else { unreachable!() };
                    for (&r, p) in missing[j].iter().zip(preds) {
                        if codes[r] != p {
                            changed = true;
                            codes[r] = p;
                        }
                    }
                }
                Slot::Passive => {}
            }
        }
        if !changed {
            break;
        }
    }

    let mut columns = Vec::with_capacity(d.column_count());
    for (j, c) in d.columns().iter().enumerate() {
        if missing[j].is_empty() {
            columns.push(c.clone());
            continue;
        }
        let mut cells = c.cells().to_vec();
        match &slots[j] {
            Slot::Numeric(y) => {
                for &r in &missing[j] {
                    cells[r] = if c.vtype() == VariableType::DateTime {
                        CellValue::Timestamp(y[r].round() as i64)
                    } else {
                        CellValue::number(y[r])
                    };
                }
            }
            Slot::Categorical { codes, .. } => {
                for &r in &missing[j] {
                    cells[r] = CellValue::category(&level_names[j][codes[r]]);
                }
            }
            Slot::Passive => {
                let fill = fill_value(c, ImputeStrategy::Mode)?;
                for &r in &missing[j] {
                    cells[r] = fill.clone();
                }
            }
        }
        columns.push(c.with_cells(cells));
    }
    Ok(d.with_columns(columns)?)
}

/// Standardized predictors from every active column except `target`;
/// categorical columns expand to indicator columns.
fn design_matrix(slots: &[Slot], target: usize, n: usize) -> Vec<Vec<f64>> {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (j, s) in slots.iter().enumerate() {
        if j == target {
            continue;
        }
        match s {
            Slot::Numeric(v) => cols.push(v.clone()),
            Slot::Categorical { codes, levels } => {
                for level in 0..*levels {
                    cols.push(codes.iter().map(|&c| f64::from(u8::from(c == level))).collect());
                }
            }
            Slot::Passive => {}
        }
    }
    for col in cols.iter_mut() {
        let m = stats::mean(col);
        let s = stats::sample_std(col);
        for x in col.iter_mut() {
            *x = if s > 0.0 { (*x - m) / s } else { 0.0 };
        }
    }
    // row-major
    (0..n).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
}

/// Least squares with intercept fitted on `train` rows, solved through the
/// SVD of the normal equations so collinear predictors stay well defined.
fn ols_predict(x: &[Vec<f64>], y: &[f64], train: &[usize], predict: &[usize]) -> Vec<f64> {
    let p = x.first().map_or(0, Vec::len) + 1;
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    let row = |r: usize| std::iter::once(1.0).chain(x[r].iter().copied());
    for &r in train {
        let v: Vec<f64> = row(r).collect();
        for a in 0..p {
            xty[a] += v[a] * y[r];
            for b in a..p {
                xtx[(a, b)] += v[a] * v[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }
    let beta = xtx
        .svd(true, true)
        .solve(&xty, 1e-10)
        .unwrap_or_else(|_| DVector::zeros(p));
    predict
        .iter()
        .map(|&r| row(r).zip(beta.iter()).map(|(a, b)| a * b).sum())
        .collect()
}

fn centroid_predict(
    x: &[Vec<f64>],
    codes: &[usize],
    levels: usize,
    train: &[usize],
    predict: &[usize],
) -> Vec<usize> {
    let p = x.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; p]; levels];
    let mut counts = vec![0usize; levels];
    for &r in train {
        counts[codes[r]] += 1;
        for (s, v) in sums[codes[r]].iter_mut().zip(&x[r]) {
            *s += v;
        }
    }
    let centroids: Vec<Option<Vec<f64>>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| (c > 0).then(|| s.into_iter().map(|v| v / c as f64).collect()))
        .collect();
    predict
        .iter()
        .map(|&r| {
            let mut best = (f64::INFINITY, 0);
            for (k, c) in centroids.iter().enumerate() {
                if let Some(c) = c {
                    let d = stats::squared_euclidean(&x[r], c);
                    if d < best.0 {
                        best = (d, k);
                    }
                }
            }
            best.1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(cols: Vec<Column>) -> Dataset {
        Dataset::new("t", cols).unwrap()
    }

    #[test]
    fn missing_report_and_row_drop() {
        let d = ds(vec![
            Column::numeric_opt("a", &[Some(1.0), None, Some(3.0)]),
            Column::numeric_opt("b", &[None, None, Some(1.0)]),
            Column::numeric_opt("c", &[Some(1.0), None, Some(1.0)]),
        ]);
        let rep = find_missing(&d);
        assert_eq!(rep.total, 4);
        assert_eq!(rep.columns[0].rows, vec![1]);
        assert_eq!(rep.rows[0], RowMissing { row: 0, count: 1, fraction: 1.0 / 3.0 });
        assert!(find_missing(&d.take_rows(&[2])).is_empty());

        let (out, removed) = drop_rows_by_missing(&d, 0.5).unwrap();
        assert_eq!(removed, vec![1]);
        assert_eq!(out.row_ids(), &[0, 2]);
        assert_eq!(drop_rows_by_missing(&d, 1.0).unwrap().1, Vec::<usize>::new());
        assert_eq!(drop_rows_by_missing(&d, 0.0).unwrap().1, vec![0, 1]);
        assert!(drop_rows_by_missing(&d, 1.5).is_err());
    }

    #[test]
    fn simple_imputation() {
        let c = Column::numeric_opt("x", &[Some(1.0), None, Some(3.0)]);
        let (out, fill) = impute_simple(&c, ImputeStrategy::Mean).unwrap();
        assert_eq!(fill, CellValue::Number(2.0));
        assert_eq!(out.observed_numbers(), vec![1.0, 2.0, 3.0]);

        let c = Column::numeric_opt("x", &[Some(1.0), None, Some(3.0), Some(100.0)]);
        assert_eq!(impute_simple(&c, ImputeStrategy::Median).unwrap().1, CellValue::Number(3.0));

        let c = Column::nominal("s", &[Some("a"), Some("a"), Some("b"), None]);
        assert_eq!(impute_simple(&c, ImputeStrategy::Mode).unwrap().1, CellValue::category("a"));
        let tie = Column::nominal("s", &[Some("b"), Some("a"), None]);
        assert_eq!(impute_simple(&tie, ImputeStrategy::Mode).unwrap().1, CellValue::category("b"));

        assert!(matches!(
            impute_simple(&tie, ImputeStrategy::Mean),
            Err(CleanerError::StrategyTypeMismatch { .. })
        ));
        let empty = Column::numeric_opt("e", &[None, None]);
        assert_eq!(
            impute_simple(&empty, ImputeStrategy::Mean).unwrap_err(),
            CleanerError::AllMissing("e".into())
        );
    }

    #[test]
    fn mice_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [Some(2.0), Some(4.0), Some(6.0), None, Some(10.0), Some(12.0)];
        let d = ds(vec![Column::numeric("x", &x), Column::numeric_opt("y", &y)]);
        let two = impute_mice(&d, &MiceConfig { iterations: 2, seed: 0 }).unwrap();
        let ten = impute_mice(&d, &MiceConfig::default()).unwrap();
        let v = two.column("y").unwrap().cells()[3].as_f64().unwrap();
        assert!((v - 8.0).abs() < 1e-6, "{v}");
        assert!(two.same_content(&ten));
    }

    #[test]
    fn mice_fills_categorical_by_centroid() {
        let x: Vec<f64> = vec![0.0, 0.1, 0.2, 10.0, 10.1, 10.2, 0.05, 10.05];
        let g = vec![Some("lo"), Some("lo"), Some("lo"), Some("hi"), Some("hi"), Some("hi"), None, None];
        let d = ds(vec![Column::numeric("x", &x), Column::nominal("g", &g)]);
        let out = impute_mice(&d, &MiceConfig::default()).unwrap();
        let g = out.column("g").unwrap();
        assert_eq!(g.cells()[6], CellValue::category("lo"));
        assert_eq!(g.cells()[7], CellValue::category("hi"));
    }

    #[test]
    fn mice_identity_and_errors() {
        let d = ds(vec![Column::numeric("a", &[1.0, 2.0]), Column::numeric("b", &[3.0, 1.0])]);
        assert_eq!(impute_mice(&d, &MiceConfig::default()).unwrap(), d);
        let one = ds(vec![Column::numeric("a", &[1.0])]);
        assert_eq!(impute_mice(&one, &MiceConfig::default()).unwrap_err(), CleanerError::TooFewColumns(1));
        let bad = ds(vec![Column::numeric("a", &[1.0, 2.0]), Column::numeric_opt("b", &[None, None])]);
        assert_eq!(impute_mice(&bad, &MiceConfig::default()).unwrap_err(), CleanerError::AllMissing("b".into()));
    }
}
