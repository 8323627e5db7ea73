use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EdaError;
use crate::stats;
use crate::tabular::{CellValue, Column, VariableType};

const LINEAR_CUTOFF: f64 = 0.6;
const WEAK_CUTOFF: f64 = 0.2;
const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    PositiveLinear,
    NegativeLinear,
    PositiveRelation,
    NegativeRelation,
    NoRelation,
    NoClearRelation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairKind {
    NumericNumeric,
    CategoricalCategorical,
    CategoricalNumeric,
    /// Text columns have no association test.
    Unsupported,
}

/// Association between two columns. Only the statistics of the test matching
/// the type pair are populated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProfile {
    pub a: String,
    pub b: String,
    pub kind: PairKind,
    /// Rows where both cells are observed.
    pub n: usize,
    pub pearson_r: Option<f64>,
    pub covariance: Option<f64>,
    pub chi_square: Option<f64>,
    pub chi_square_p: Option<f64>,
    pub anova_f: Option<f64>,
    pub anova_p: Option<f64>,
    pub relation: Relation,
    /// Set when the test statistic is undefined (zero variance, a single
    /// group or level).
    pub degenerate: bool,
}

enum Side {
    Numeric,
    Categorical,
    Other,
}

fn side(v: VariableType) -> Side {
    match v {
        VariableType::ContinuousNumeric | VariableType::DateTime => Side::Numeric,
        VariableType::CategoricalNominal | VariableType::CategoricalOrdinal => Side::Categorical,
        VariableType::Text => Side::Other,
    }
}

/// Picks and runs the association test for the type pair: Pearson for two
/// numeric columns, chi-square independence for two categoricals, one-way
/// ANOVA for a categorical against a numeric column.
pub fn profile_pair(a: &Column, b: &Column) -> Result<PairProfile, EdaError> {
    if a.len() != b.len() {
        return Err(EdaError::LengthMismatch(a.len(), b.len()));
    }
    let mut out = PairProfile {
        a: a.name().to_string(),
        b: b.name().to_string(),
        kind: PairKind::Unsupported,
        n: 0,
        pearson_r: None,
        covariance: None,
        chi_square: None,
        chi_square_p: None,
        anova_f: None,
        anova_p: None,
        relation: Relation::NoClearRelation,
        degenerate: false,
    };
    match (side(a.vtype()), side(b.vtype())) {
        (Side::Numeric, Side::Numeric) => numeric_pair(a, b, &mut out),
        (Side::Categorical, Side::Categorical) => categorical_pair(a, b, &mut out),
        (Side::Categorical, Side::Numeric) => anova_pair(a, b, &mut out),
        (Side::Numeric, Side::Categorical) => anova_pair(b, a, &mut out),
        _ => {
            out.n = complete_rows(a, b).count();
        }
    }
    Ok(out)
}

fn complete_rows<'a>(a: &'a Column, b: &'a Column) -> impl Iterator<Item = usize> + 'a {
    (0..a.len()).filter(move |&i| !a.cells()[i].is_missing() && !b.cells()[i].is_missing())
}

fn numeric_pair(a: &Column, b: &Column, out: &mut PairProfile) {
    out.kind = PairKind::NumericNumeric;
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..a.len())
        .filter_map(|i| Some((a.cells()[i].as_f64()?, b.cells()[i].as_f64()?)))
        .unzip();
    out.n = xs.len();
    let (r, cov) = stats::pearson(&xs, &ys);
    out.covariance = Some(cov);
    match r {
        Some(r) => {
            out.pearson_r = Some(r);
            out.relation = if r >= LINEAR_CUTOFF {
                Relation::PositiveLinear
            } else if r <= -LINEAR_CUTOFF {
                Relation::NegativeLinear
            } else if r.abs() < WEAK_CUTOFF {
                Relation::NoRelation
            } else if r > 0.0 {
                Relation::PositiveRelation
            } else {
                Relation::NegativeRelation
            };
        }
        None => {
            out.degenerate = true;
            out.relation = Relation::NoRelation;
        }
    }
}

/// Level code of a categorical cell: the ordinal rank when the column has an
/// order, else `None`.
fn ordinal_code(c: &Column, cell: &CellValue) -> Option<f64> {
    let order = c.order()?;
    let s = cell.as_str()?;
    order.iter().position(|o| o == s).map(|p| p as f64)
}

fn significant_relation(p: f64, sign: Option<f64>) -> Relation {
    if p >= ALPHA {
        Relation::NoRelation
    } else if sign.is_some_and(|s| s < 0.0) {
        Relation::NegativeRelation
    } else {
        Relation::PositiveRelation
    }
}

fn categorical_pair(a: &Column, b: &Column, out: &mut PairProfile) {
    out.kind = PairKind::CategoricalCategorical;
    let rows: Vec<usize> = complete_rows(a, b).collect();
    out.n = rows.len();
    let mut table: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut row_tot: BTreeMap<String, f64> = BTreeMap::new();
    let mut col_tot: BTreeMap<String, f64> = BTreeMap::new();
    for &i in &rows {
        let ka = a.cells()[i].render();
        let kb = b.cells()[i].render();
        *table.entry((ka.clone(), kb.clone())).or_default() += 1.0;
        *row_tot.entry(ka).or_default() += 1.0;
        *col_tot.entry(kb).or_default() += 1.0;
    }
    let df = (row_tot.len().saturating_sub(1) * col_tot.len().saturating_sub(1)) as f64;
    if df == 0.0 {
        out.degenerate = true;
        out.relation = Relation::NoClearRelation;
        return;
    }
    let n = rows.len() as f64;
    let mut chi2 = 0.0;
    for (ra, ta) in &row_tot {
        for (cb, tb) in &col_tot {
            let expected = ta * tb / n;
            let observed = table.get(&(ra.clone(), cb.clone())).copied().unwrap_or(0.0);
            chi2 += (observed - expected).powi(2) / expected;
        }
    }
    let p = stats::chi_square_sf(chi2, df);
    out.chi_square = Some(chi2);
    out.chi_square_p = Some(p);

    let sign = if a.order().is_some() && b.order().is_some() {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|&i| {
                Some((
                    ordinal_code(a, &a.cells()[i])?,
                    ordinal_code(b, &b.cells()[i])?,
                ))
            })
            .unzip();
        stats::pearson(&xs, &ys).0
    } else {
        None
    };
    out.relation = significant_relation(p, sign);
}

fn anova_pair(cat: &Column, num: &Column, out: &mut PairProfile) {
    out.kind = PairKind::CategoricalNumeric;
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut codes = Vec::new();
    let mut values = Vec::new();
    for i in 0..cat.len() {
        let (c, Some(x)) = (&cat.cells()[i], num.cells()[i].as_f64()) else {
            continue;
        };
        if c.is_missing() {
            continue;
        }
        groups.entry(c.render()).or_default().push(x);
        if let Some(code) = ordinal_code(cat, c) {
            codes.push(code);
            values.push(x);
        }
    }
    let n: usize = groups.values().map(Vec::len).sum();
    out.n = n;
    let k = groups.len();
    if k < 2 || n <= k {
        out.degenerate = true;
        out.relation = Relation::NoClearRelation;
        return;
    }
    let all: Vec<f64> = groups.values().flatten().copied().collect();
    let grand = stats::mean(&all);
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for g in groups.values() {
        let m = stats::mean(g);
        ssb += g.len() as f64 * (m - grand).powi(2);
        ssw += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    let (f, p) = if ssw <= 0.0 {
        if ssb > 0.0 {
            (f64::INFINITY, 0.0)
        } else {
            out.degenerate = true;
            (0.0, 1.0)
        }
    } else {
        let f = (ssb / df1) / (ssw / df2);
        (f, stats::f_sf(f, df1, df2))
    };
    out.anova_f = f.is_finite().then_some(f);
    out.anova_p = Some(p);
    let sign = if cat.order().is_some() {
        stats::pearson(&codes, &values).0
    } else {
        None
    };
    out.relation = significant_relation(p, sign);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    #[test]
    fn exact_linearity() {
        let p = profile_pair(
            &Column::numeric("a", &[1.0, 2.0, 3.0]),
            &Column::numeric("b", &[2.0, 4.0, 6.0]),
        )
        .unwrap();
        assert_eq!(p.pearson_r, Some(1.0));
        assert_eq!(p.relation, Relation::PositiveLinear);
        assert_eq!(p.chi_square_p, None);
        assert_eq!(p.anova_p, None);
    }

    #[test]
    fn balanced_contingency_table_is_independent() {
        let a = Column::nominal("a", &[Some("x"), Some("x"), Some("y"), Some("y")]);
        let b = Column::nominal("b", &[Some("u"), Some("v"), Some("u"), Some("v")]);
        let p = profile_pair(&a, &b).unwrap();
        assert_eq!(p.chi_square, Some(0.0));
        assert!((p.chi_square_p.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(p.relation, Relation::NoRelation);
        assert_eq!(p.pearson_r, None);
    }

    #[test]
    fn negated_noisy_copy_is_negative_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let a: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let b: Vec<f64> = a.iter().map(|x| -x + noise.sample(&mut rng)).collect();
        // direct-formula oracle
        let n = a.len() as f64;
        let (sa, sb) = (a.iter().sum::<f64>(), b.iter().sum::<f64>());
        let sab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let saa: f64 = a.iter().map(|x| x * x).sum();
        let sbb: f64 = b.iter().map(|y| y * y).sum();
        let oracle = (n * sab - sa * sb) / ((n * saa - sa * sa).sqrt() * (n * sbb - sb * sb).sqrt());
        assert!(oracle < -0.9);

        let p = profile_pair(&Column::numeric("a", &a), &Column::numeric("b", &b)).unwrap();
        assert!((p.pearson_r.unwrap() - oracle).abs() < 1e-12);
        assert_eq!(p.relation, Relation::NegativeLinear);
    }

    #[test]
    fn zero_variance_is_flagged() {
        let p = profile_pair(
            &Column::numeric("a", &[1.0, 1.0, 1.0]),
            &Column::numeric("b", &[1.0, 2.0, 3.0]),
        )
        .unwrap();
        assert!(p.degenerate);
        assert_eq!(p.relation, Relation::NoRelation);
        assert_eq!(p.pearson_r, None);
    }

    #[test]
    fn anova_detects_group_shift_in_either_order() {
        let cat: Vec<Option<&str>> = (0..60).map(|i| Some(["a", "b", "c"][i % 3])).collect();
        let num: Vec<f64> = (0..60).map(|i| (i % 3) as f64 * 10.0 + (i % 7) as f64).collect();
        let c = Column::nominal("c", &cat);
        let x = Column::numeric("x", &num);
        let p1 = profile_pair(&c, &x).unwrap();
        let p2 = profile_pair(&x, &c).unwrap();
        assert_eq!(p1.kind, PairKind::CategoricalNumeric);
        assert!(p1.anova_p.unwrap() < 1e-6);
        assert_eq!(p1.relation, Relation::PositiveRelation);
        assert_eq!(p1.anova_p, p2.anova_p);
    }

    #[test]
    fn ordinal_decreasing_group_means_are_negative() {
        let levels = ["low", "medium", "high"];
        let cat: Vec<Option<&str>> = (0..60).map(|i| Some(levels[i % 3])).collect();
        let num: Vec<f64> = (0..60).map(|i| 100.0 - (i % 3) as f64 * 10.0 + (i % 5) as f64).collect();
        let c = Column::ordinal("q", &cat, &levels).unwrap();
        let p = profile_pair(&c, &Column::numeric("x", &num)).unwrap();
        assert_eq!(p.relation, Relation::NegativeRelation);
    }

    #[test]
    fn length_mismatch() {
        let err = profile_pair(&Column::numeric("a", &[1.0]), &Column::numeric("b", &[1.0, 2.0]));
        assert_eq!(err.unwrap_err(), EdaError::LengthMismatch(1, 2));
    }

    #[test]
    fn pearson_is_affine_invariant() {
        let a = [1.0, 4.0, 2.0, 8.0, 5.0];
        let b = [3.0, 1.0, 4.0, 1.0, 5.0];
        let scaled: Vec<f64> = a.iter().map(|x| 3.5 * x - 2.0).collect();
        let r1 = stats::pearson(&a, &b).0.unwrap();
        let r2 = stats::pearson(&scaled, &b).0.unwrap();
        assert!((r1 - r2).abs() < 1e-12);
    }
}
