use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::stats;
use crate::tabular::{format_number, CellValue, Column, VariableType};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ScalerParams {
    ZScore { mean: f64, std: f64 },
    /// Maps `[min, max]` onto `[lo, hi]`.
    MinMax { min: f64, max: f64, lo: f64, hi: f64 },
}

fn require_numeric(c: &Column) -> Result<(), TransformError> {
    if c.vtype() == VariableType::ContinuousNumeric {
        Ok(())
    } else {
        Err(TransformError::NonNumeric(c.name().to_string()))
    }
}

fn map_numbers(c: &Column, f: impl Fn(f64) -> f64) -> Column {
    let cells = c
        .cells()
        .iter()
        .map(|v| match v {
            CellValue::Number(x) => CellValue::number(f(*x)),
            other => other.clone(),
        })
        .collect();
    c.with_cells(cells)
}

/// Standardizes with the sample standard deviation.
pub fn zscore(c: &Column) -> Result<(Column, ScalerParams), TransformError> {
    require_numeric(c)?;
    let xs = c.observed_numbers();
    let std = stats::sample_std(&xs);
    if xs.len() < 2 || std <= 0.0 || !std.is_finite() {
        return Err(TransformError::ZeroVariance(c.name().to_string()));
    }
    let params = ScalerParams::ZScore {
        mean: stats::mean(&xs),
        std,
    };
    Ok((apply_scaler(c, &params), params))
}

/// Affine map sending the observed minimum to `range.0` and the maximum to
/// `range.1`.
pub fn minmax(c: &Column, range: (f64, f64)) -> Result<(Column, ScalerParams), TransformError> {
    require_numeric(c)?;
    if !(range.0 < range.1) {
        return Err(TransformError::InvalidParameter(format!(
            "min-max target range ({}, {})",
            range.0, range.1
        )));
    }
    let xs = c.observed_numbers();
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() || !(max > min) {
        return Err(TransformError::ZeroRange(c.name().to_string()));
    }
    let params = ScalerParams::MinMax {
        min,
        max,
        lo: range.0,
        hi: range.1,
    };
    Ok((apply_scaler(c, &params), params))
}

pub fn apply_scaler(c: &Column, p: &ScalerParams) -> Column {
    match *p {
        ScalerParams::ZScore { mean, std } => map_numbers(c, |x| (x - mean) / std),
        ScalerParams::MinMax { min, max, lo, hi } => map_numbers(c, |x| {
            // endpoints land exactly; rounding never leaves the range for
            // values inside [min, max]
            if x == min {
                return lo;
            }
            if x == max {
                return hi;
            }
            let t = (x - min) / (max - min);
            let y = lo + t * (hi - lo);
            if (0.0..=1.0).contains(&t) {
                y.clamp(lo, hi)
            } else {
                y
            }
        }),
    }
}

pub fn inverse_scaler(c: &Column, p: &ScalerParams) -> Column {
    match *p {
        ScalerParams::ZScore { mean, std } => map_numbers(c, |z| z * std + mean),
        ScalerParams::MinMax { min, max, lo, hi } => map_numbers(c, |y| {
            let t = (y - lo) / (hi - lo);
            min + t * (max - min)
        }),
    }
}

/// Bins labeled `[lo,hi)`, the last one closed. Values outside the edges
/// become missing. The result is ordinal in bin order.
pub fn discretize(c: &Column, edges: &[f64]) -> Result<Column, TransformError> {
    if !c.vtype().is_numeric() {
        return Err(TransformError::NonNumeric(c.name().to_string()));
    }
    if edges.len() < 2
        || edges.iter().any(|e| !e.is_finite())
        || edges.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(TransformError::UnsortedEdges);
    }
    let bins = edges.len() - 1;
    let labels: Vec<String> = (0..bins)
        .map(|i| {
            let close = if i + 1 == bins { "]" } else { ")" };
            format!("[{},{}{close}", format_number(edges[i]), format_number(edges[i + 1]))
        })
        .collect();
    let cells = c
        .cells()
        .iter()
        .map(|v| match v.as_f64() {
            Some(x) if x >= edges[0] && x <= edges[bins] => {
                // first edge strictly above x, clamped into the last bin
                let i = edges.partition_point(|e| *e <= x).saturating_sub(1).min(bins - 1);
                CellValue::category(&labels[i])
            }
            _ => CellValue::Missing,
        })
        .collect();
    Ok(Column::new(c.name(), VariableType::CategoricalOrdinal, cells).with_order(labels))
}

/// Distinct type-7 quantile cut points at `0, 1/bins, …, 1`.
pub fn quantile_edges(c: &Column, bins: usize) -> Vec<f64> {
    let xs = stats::sorted(&c.observed_numbers());
    if xs.is_empty() || bins == 0 {
        return Vec::new();
    }
    let mut edges: Vec<f64> = (0..=bins)
        .map(|i| stats::quantile_sorted(&xs, i as f64 / bins as f64))
        .collect();
    edges.dedup();
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zscore_examples() {
        let (out, _) = zscore(&Column::numeric("x", &[-1.0, 0.0, 1.0])).unwrap();
        assert_eq!(out.observed_numbers(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(
            zscore(&Column::numeric("x", &[2.0, 2.0])).unwrap_err(),
            TransformError::ZeroVariance("x".into())
        );
    }

    #[test]
    fn minmax_examples() {
        let c = Column::numeric("x", &[0.0, 5.0, 10.0]);
        assert_eq!(minmax(&c, (0.0, 1.0)).unwrap().0.observed_numbers(), vec![0.0, 0.5, 1.0]);
        assert_eq!(minmax(&c, (-1.0, 1.0)).unwrap().0.observed_numbers(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(
            minmax(&Column::numeric("k", &[3.0, 3.0]), (0.0, 1.0)).unwrap_err(),
            TransformError::ZeroRange("k".into())
        );
    }

    #[test]
    fn discretize_examples() {
        let c = Column::numeric("age", &[15.0, 25.0, 40.0, -1.0, 65.0]);
        let out = discretize(&c, &[0.0, 18.0, 65.0]).unwrap();
        let r: Vec<String> = out.cells().iter().map(CellValue::render).collect();
        assert_eq!(r, vec!["[0,18)", "[18,65]", "[18,65]", "", "[18,65]"]);
        assert_eq!(out.vtype(), VariableType::CategoricalOrdinal);
        let one = discretize(&Column::numeric("x", &[1.0, 2.0]), &[0.0, 10.0]).unwrap();
        assert_eq!(one.cells()[0], one.cells()[1]);
        assert_eq!(discretize(&c, &[5.0, 1.0]).unwrap_err(), TransformError::UnsortedEdges);
        assert_eq!(quantile_edges(&Column::numeric("x", &[1.0, 2.0, 3.0, 4.0, 5.0]), 4), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    proptest! {
        #[test]
        fn scaler_contracts(v in prop::collection::vec(-1e3f64..1e3, 2..200)) {
            let c = Column::numeric("x", &v);
            if let Ok((z, p)) = zscore(&c) {
                let out = z.observed_numbers();
                prop_assert!(stats::mean(&out).abs() < 1e-12);
                prop_assert!((stats::sample_variance(&out) - 1.0).abs() < 1e-12);
                let back = inverse_scaler(&z, &p).observed_numbers();
                for (a, b) in back.iter().zip(&v) {
                    prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
                }
            }
            for range in [(0.0, 1.0), (-1.0, 1.0)] {
                if let Ok((m, p)) = minmax(&c, range) {
                    let out = m.observed_numbers();
                    prop_assert!(out.iter().all(|x| *x >= range.0 && *x <= range.1));
                    prop_assert!(out.contains(&range.0) && out.contains(&range.1));
                    let back = inverse_scaler(&m, &p).observed_numbers();
                    for (a, b) in back.iter().zip(&v) {
                        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0) * 1e3);
                    }
                }
            }
        }
    }
}
