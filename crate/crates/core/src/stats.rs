//! Small numeric kernels shared across modules.

use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

/// Mean with a residual correction pass.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    m + xs.iter().map(|x| x - m).sum::<f64>() / n
}

/// Sample variance (n − 1 denominator); zero for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let (ss, s) = xs.iter().fold((0.0, 0.0), |(ss, s), x| {
        let d = x - m;
        (ss + d * d, s + d)
    });
    let n = xs.len() as f64;
    ((ss - s * s / n) / (n - 1.0)).max(0.0)
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(xs: &[f64]) -> f64 {
    quantile_sorted(&sorted(xs), 0.5)
}

/// Adjusted Fisher-Pearson skewness G1. `None` below three values or at zero
/// variance.
pub fn skewness(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let m = mean(xs);
    let nf = n as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return None;
    }
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / nf;
    let g1 = m3 / m2.powf(1.5);
    Some((nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1)
}

/// Bias-corrected excess kurtosis G2. `None` below four values or at zero
/// variance.
pub fn excess_kurtosis(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 4 {
        return None;
    }
    let m = mean(xs);
    let nf = n as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / nf;
    if m2 <= 0.0 {
        return None;
    }
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / nf;
    let g2 = m4 / (m2 * m2) - 3.0;
    Some((nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0))
}

/// Pearson correlation and sample covariance over paired values. The
/// correlation is `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> (Option<f64>, f64) {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return (None, 0.0);
    }
    let mx = mean(xs);
    let my = mean(ys);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let cov = sxy / (n as f64 - 1.0);
    if sxx <= 0.0 || syy <= 0.0 {
        return (None, cov);
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    (Some(r), cov)
}

/// Upper-tail probability of a chi-square statistic.
pub fn chi_square_sf(stat: f64, df: f64) -> f64 {
    if df <= 0.0 {
        return 1.0;
    }
    match ChiSquared::new(df) {
        Ok(dist) => (1.0 - dist.cdf(stat.max(0.0))).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

/// Upper-tail probability of an F statistic.
pub fn f_sf(stat: f64, df1: f64, df2: f64) -> f64 {
    if df1 <= 0.0 || df2 <= 0.0 || !stat.is_finite() {
        return if stat.is_infinite() { 0.0 } else { 1.0 };
    }
    match FisherSnedecor::new(df1, df2) {
        Ok(dist) => (1.0 - dist.cdf(stat.max(0.0))).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Standardizes each coordinate to zero mean and unit sample deviation;
/// constant coordinates are only centered.
pub fn standardize_points(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let Some(dim) = points.first().map(Vec::len) else {
        return Vec::new();
    };
    let mut out = points.to_vec();
    for j in 0..dim {
        let col: Vec<f64> = points.iter().map(|p| p[j]).collect();
        let m = mean(&col);
        let s = sample_std(&col);
        for p in out.iter_mut() {
            p[j] = if s > 0.0 { (p[j] - m) / s } else { p[j] - m };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_type7() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_sorted(&xs, 0.25) - 25.75).abs() < 1e-12);
        assert!((quantile_sorted(&xs, 0.75) - 75.25).abs() < 1e-12);
        assert_eq!(median(&[1.0, 3.0, 100.0]), 3.0);
    }

    #[test]
    fn symmetric_data_has_zero_skew() {
        assert!(skewness(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap().abs() < 1e-12);
        assert!(skewness(&[2.0, 2.0, 2.0]).is_none());
    }

    #[test]
    fn variance_and_pearson() {
        assert!((sample_variance(&[-1.0, 0.0, 1.0]) - 1.0).abs() < 1e-15);
        let (r, _) = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert_eq!(r, Some(1.0));
        assert_eq!(pearson(&[1.0, 1.0], &[2.0, 3.0]).0, None);
    }

    #[test]
    fn tail_probabilities() {
        assert!((chi_square_sf(0.0, 1.0) - 1.0).abs() < 1e-12);
        assert!((chi_square_sf(3.841458820694124, 1.0) - 0.05).abs() < 1e-9);
        assert!((f_sf(4.0, 2.0, 10.0) - 0.052_922_149).abs() < 1e-6);
    }
}
