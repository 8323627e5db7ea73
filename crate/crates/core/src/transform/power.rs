use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::tabular::{CellValue, Column, VariableType};

/// Search interval for the Box-Cox exponent.
pub const BOXCOX_INTERVAL: (f64, f64) = (-5.0, 5.0);
const GOLDEN_TOL: f64 = 1e-4;
/// Below this |λ| the Box-Cox transform is taken as `ln x`.
const LAMBDA_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PowerKind {
    BoxCox { lambda: f64 },
    Sqrt,
    Log,
    Log10,
    Square,
}

impl PowerKind {
    pub fn name(self) -> &'static str {
        match self {
            PowerKind::BoxCox { .. } => "box-cox",
            PowerKind::Sqrt => "sqrt",
            PowerKind::Log => "log",
            PowerKind::Log10 => "log10",
            PowerKind::Square => "square",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTransformParams {
    pub kind: PowerKind,
    /// Log-likelihood at the fitted exponent (Box-Cox only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_likelihood: Option<f64>,
}

fn boxcox_value(x: f64, lambda: f64) -> f64 {
    if lambda.abs() < LAMBDA_ZERO {
        x.ln()
    } else {
        (lambda * x.ln()).exp_m1() / lambda
    }
}

fn boxcox_inverse_value(y: f64, lambda: f64) -> f64 {
    if lambda.abs() < LAMBDA_ZERO {
        y.exp()
    } else {
        ((lambda * y).ln_1p() / lambda).exp()
    }
}

/// Profile log-likelihood of the Box-Cox exponent under a normal model:
/// `(λ − 1) Σ ln x − n/2 · ln σ²(λ)` with σ² the population variance of the
/// transformed values.
pub fn boxcox_log_likelihood(xs: &[f64], lambda: f64) -> f64 {
    let n = xs.len() as f64;
    let log_sum: f64 = xs.iter().map(|x| x.ln()).sum();
    let ys: Vec<f64> = xs.iter().map(|&x| boxcox_value(x, lambda)).collect();
    let m = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / n;
    (lambda - 1.0) * log_sum - n / 2.0 * var.ln()
}

fn require_numeric(c: &Column) -> Result<Vec<f64>, TransformError> {
    if c.vtype() != VariableType::ContinuousNumeric {
        return Err(TransformError::NonNumeric(c.name().to_string()));
    }
    let xs = c.observed_numbers();
    if xs.is_empty() {
        return Err(TransformError::AllMissing(c.name().to_string()));
    }
    Ok(xs)
}

/// Fits the Box-Cox exponent by golden-section search over
/// [`BOXCOX_INTERVAL`] and applies it.
pub fn boxcox(c: &Column) -> Result<(Column, PowerTransformParams), TransformError> {
    let xs = require_numeric(c)?;
    if xs.iter().any(|x| *x <= 0.0) {
        return Err(TransformError::NonPositiveValues(c.name().to_string()));
    }
    if xs.iter().all(|x| *x == xs[0]) {
        return Err(TransformError::ZeroVariance(c.name().to_string()));
    }
    let f = |l: f64| boxcox_log_likelihood(&xs, l);
    let lambda = golden_max(f, BOXCOX_INTERVAL.0, BOXCOX_INTERVAL.1, GOLDEN_TOL);
    let kind = PowerKind::BoxCox { lambda };
    let params = PowerTransformParams {
        kind,
        log_likelihood: Some(f(lambda)),
    };
    Ok((apply_power(c, kind)?, params))
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Applies a fixed transform, checking the domain first.
pub fn apply_power(c: &Column, kind: PowerKind) -> Result<Column, TransformError> {
    let xs = require_numeric(c)?;
    let name = || c.name().to_string();
    match kind {
        PowerKind::BoxCox { .. } | PowerKind::Log | PowerKind::Log10 => {
            if xs.iter().any(|x| *x <= 0.0) {
                return Err(TransformError::NonPositiveValues(name()));
            }
        }
        PowerKind::Sqrt | PowerKind::Square => {
            if xs.iter().any(|x| *x < 0.0) {
                return Err(TransformError::NegativeValues(name()));
            }
        }
    }
    let f = |x: f64| match kind {
        PowerKind::BoxCox { lambda } => boxcox_value(x, lambda),
        PowerKind::Sqrt => x.sqrt(),
        PowerKind::Log => x.ln(),
        PowerKind::Log10 => x.log10(),
        PowerKind::Square => x * x,
    };
    Ok(map_numbers(c, f))
}

/// Inverse of [`apply_power`] on its image.
pub fn inverse_power(c: &Column, kind: PowerKind) -> Column {
    map_numbers(c, |y| match kind {
        PowerKind::BoxCox { lambda } => boxcox_inverse_value(y, lambda),
        PowerKind::Sqrt => y * y,
        PowerKind::Log => y.exp(),
        PowerKind::Log10 => 10f64.powf(y),
        PowerKind::Square => y.sqrt(),
    })
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, LogNormal};

    #[test]
    fn lognormal_fits_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = LogNormal::new(0.0, 1.0).unwrap();
        let xs: Vec<f64> = (0..2000).map(|_| d.sample(&mut rng)).collect();
        let (out, p) = boxcox(&Column::numeric("x", &xs)).unwrap();
        let PowerKind::BoxCox { lambda } = p.kind else { panic!() };
        assert!(lambda.abs() < 0.1, "lambda {lambda}");
        let ll = p.log_likelihood.unwrap();
        assert!(ll >= boxcox_log_likelihood(&xs, lambda + 0.01));
        assert!(ll >= boxcox_log_likelihood(&xs, lambda - 0.01));
        assert!(stats::skewness(&out.observed_numbers()).unwrap().abs() < 0.2);
    }

    #[test]
    fn domain_errors() {
        let c = Column::numeric("x", &[1.0, 0.0, 2.0]);
        assert_eq!(boxcox(&c).unwrap_err(), TransformError::NonPositiveValues("x".into()));
        assert_eq!(apply_power(&c, PowerKind::Log).unwrap_err(), TransformError::NonPositiveValues("x".into()));
        assert!(apply_power(&c, PowerKind::Sqrt).is_ok());
        let neg = Column::numeric("n", &[-1.0, 4.0]);
        assert_eq!(apply_power(&neg, PowerKind::Square).unwrap_err(), TransformError::NegativeValues("n".into()));
        assert_eq!(
            boxcox(&Column::numeric("k", &[2.0, 2.0])).unwrap_err(),
            TransformError::ZeroVariance("k".into())
        );
    }

    #[test]
    fn inverses_round_trip() {
        let xs = [0.5, 1.0, 3.0, 40.0];
        let c = Column::numeric("x", &xs);
        for kind in [
            PowerKind::BoxCox { lambda: 0.3 },
            PowerKind::BoxCox { lambda: 0.0 },
            PowerKind::BoxCox { lambda: -1.2 },
            PowerKind::Sqrt,
            PowerKind::Log,
            PowerKind::Log10,
            PowerKind::Square,
        ] {
            let back = inverse_power(&apply_power(&c, kind).unwrap(), kind).observed_numbers();
            for (a, b) in back.iter().zip(xs) {
                assert!((a - b).abs() < 1e-9 * b, "{kind:?}: {a} vs {b}");
            }
        }
        let sq = apply_power(&Column::numeric("e", &[3.0]), PowerKind::Square).unwrap();
        assert_eq!(sq.observed_numbers(), vec![9.0]);
    }
}
