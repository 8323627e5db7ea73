//! Column type inference over raw text cells.

use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::VariableType;

const PARSE_THRESHOLD: f64 = 0.95;
const ORDINAL_INT_MAX_LEVELS: usize = 10;

static BUILTIN_LEXICON: &str = include_str!("../../data/ordinal_lexicon.txt");

/// Ordered vocabularies that mark a categorical column as ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct OrdinalLexicon {
    orders: Vec<Vec<String>>,
}

impl OrdinalLexicon {
    /// The shipped lexicon (`data/ordinal_lexicon.txt`).
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON)
    }

    /// One comma-separated order per line, `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        let orders = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split(',').map(|s| s.trim().to_lowercase()).collect())
            .collect();
        OrdinalLexicon { orders }
    }

    pub fn extend(&mut self, orders: &[Vec<String>]) {
        for o in orders {
            self.orders
                .push(o.iter().map(|s| s.trim().to_lowercase()).collect());
        }
    }

    /// First order containing every value; returns the values sorted by it.
    fn match_values(&self, distinct: &[&str]) -> Option<Vec<String>> {
        for order in &self.orders {
            let ranks: Option<Vec<(usize, &str)>> = distinct
                .iter()
                .map(|v| {
                    let lower = v.trim().to_lowercase();
                    order.iter().position(|o| *o == lower).map(|r| (r, *v))
                })
                .collect();
            if let Some(mut ranked) = ranks {
                ranked.sort();
                return Some(ranked.into_iter().map(|(_, v)| v.to_string()).collect());
            }
        }
        None
    }
}

impl Default for OrdinalLexicon {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Settings shared by every column of one parse.
#[derive(Debug, Clone)]
pub struct InferenceContext {
    pub missing_tokens: Vec<String>,
    pub lexicon: OrdinalLexicon,
}

impl Default for InferenceContext {
    fn default() -> Self {
        InferenceContext {
            missing_tokens: super::DEFAULT_MISSING_TOKENS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            lexicon: OrdinalLexicon::builtin(),
        }
    }
}

impl InferenceContext {
    pub fn is_missing(&self, raw: &str) -> bool {
        let t = raw.trim();
        if self.missing_tokens.iter().any(|m| m == t) {
            return true;
        }
        matches!(t.parse::<f64>(), Ok(x) if !x.is_finite())
    }
}

/// Share of non-missing values accepted by each candidate type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateRatios {
    pub numeric: f64,
    pub datetime: f64,
    pub ordinal_lexicon: f64,
    pub categorical: f64,
    pub text: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeGuess {
    pub vtype: VariableType,
    pub ordinal_order: Option<Vec<String>>,
    pub ratios: CandidateRatios,
    pub distinct_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnInference {
    pub name: String,
    pub vtype: VariableType,
    pub ratios: CandidateRatios,
    pub distinct_count: usize,
    pub ordinal_order: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeInferenceReport {
    pub columns: Vec<ColumnInference>,
}

pub(crate) fn parse_number(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS[.f]`, the same with a space
/// separator, and RFC 3339 with an offset. Returns epoch seconds.
pub(crate) fn parse_timestamp(raw: &str) -> Option<i64> {
    let t = raw.trim();
    if t.len() < 10 {
        return None;
    }
    if let Ok(d) = NaiveDate::parse_from_str(t, "%Y-%m-%d") {
        return d.and_hms_opt(0, 0, 0).map(|dt| dt.and_utc().timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(t, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    DateTime::parse_from_rfc3339(t).ok().map(|dt| dt.timestamp())
}

/// Infers a column type with the default missing tokens and lexicon.
pub fn infer_type(raw_values: &[&str]) -> TypeGuess {
    infer_type_with(raw_values, &InferenceContext::default())
}

/// Classification rules, applied to the non-missing values:
///
/// 1. every distinct value (at least two) belongs to one lexicon order → ordinal;
/// 2. ≥ 95% numeric → continuous, unless values repeat and the distinct count
///    is ≤ max(10, 5% of rows), in which case small consecutive integers are
///    ordinal and anything else nominal;
/// 3. ≥ 95% ISO-8601 timestamps → date-time;
/// 4. otherwise nominal, or free text when nearly every value is distinct.
pub fn infer_type_with(raw_values: &[&str], ctx: &InferenceContext) -> TypeGuess {
    let total = raw_values.len();
    let present: Vec<&str> = raw_values
        .iter()
        .copied()
        .filter(|v| !ctx.is_missing(v))
        .collect();
    let n = present.len();
    if n == 0 {
        return TypeGuess {
            vtype: VariableType::Text,
            ordinal_order: None,
            ratios: CandidateRatios::default(),
            distinct_count: 0,
        };
    }

    let mut seen = HashSet::new();
    let distinct: Vec<&str> = present.iter().copied().filter(|v| seen.insert(*v)).collect();
    let numbers: Vec<f64> = present.iter().filter_map(|v| parse_number(v)).collect();
    let dates = present.iter().filter(|v| parse_timestamp(v).is_some()).count();
    let lexicon_order = if distinct.len() >= 2 {
        ctx.lexicon.match_values(&distinct)
    } else {
        None
    };

    let ratios = CandidateRatios {
        numeric: numbers.len() as f64 / n as f64,
        datetime: dates as f64 / n as f64,
        ordinal_lexicon: if lexicon_order.is_some() { 1.0 } else { 0.0 },
        categorical: 1.0,
        text: 1.0,
    };
    let guess = |vtype, ordinal_order| TypeGuess {
        vtype,
        ordinal_order,
        ratios: ratios.clone(),
        distinct_count: distinct.len(),
    };

    if let Some(order) = lexicon_order {
        return guess(VariableType::CategoricalOrdinal, Some(order));
    }

    if ratios.numeric >= PARSE_THRESHOLD {
        let repeats = distinct.len() < n;
        let cap = (total as f64 * 0.05).max(10.0);
        if !repeats || distinct.len() as f64 > cap {
            return guess(VariableType::ContinuousNumeric, None);
        }
        if let Some(order) = consecutive_integer_order(&distinct) {
            return guess(VariableType::CategoricalOrdinal, Some(order));
        }
        return guess(VariableType::CategoricalNominal, None);
    }

    if ratios.datetime >= PARSE_THRESHOLD {
        return guess(VariableType::DateTime, None);
    }

    let text_cap = (n as f64 * 0.5).max(20.0);
    if distinct.len() as f64 > text_cap {
        guess(VariableType::Text, None)
    } else {
        guess(VariableType::CategoricalNominal, None)
    }
}

/// Distinct values that are all integers forming a gap-free run of at most
/// ten levels, sorted ascending.
fn consecutive_integer_order(distinct: &[&str]) -> Option<Vec<String>> {
    if distinct.len() > ORDINAL_INT_MAX_LEVELS {
        return None;
    }
    let mut by_value: BTreeMap<i64, Vec<&str>> = BTreeMap::new();
    for v in distinct {
        let x = parse_number(v)?;
        if x.fract() != 0.0 || x.abs() > 1e9 {
            return None;
        }
        by_value.entry(x as i64).or_default().push(v);
    }
    let keys: Vec<i64> = by_value.keys().copied().collect();
    if keys.windows(2).any(|w| w[1] - w[0] != 1) {
        return None;
    }
    let mut order = Vec::new();
    for (_, mut spellings) in by_value {
        spellings.sort();
        order.extend(spellings.into_iter().map(str::to_string));
    }
    Some(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn high_cardinality_numbers_are_continuous() {
        let raw: Vec<String> = (0..500).map(|i| format!("{}.5", i)).collect();
        let refs: Vec<&str> = raw.iter().map(String::as_str).collect();
        assert_eq!(infer_type(&refs).vtype, VariableType::ContinuousNumeric);
    }

    #[test]
    fn lexicon_ordinal() {
        let g = infer_type(&["low", "high", "medium", "low"]);
        assert_eq!(g.vtype, VariableType::CategoricalOrdinal);
        assert_eq!(
            g.ordinal_order.unwrap(),
            vec!["low".to_string(), "medium".into(), "high".into()]
        );
    }

    #[test]
    fn gender_is_nominal() {
        let g = infer_type(&["Male", "Female", "Female"]);
        assert_eq!(g.vtype, VariableType::CategoricalNominal);
        assert_eq!(g.distinct_count, 2);
    }

    #[test]
    fn small_consecutive_integers_are_ordinal() {
        let raw: Vec<String> = (0..200).map(|i| (1 + i % 9).to_string()).collect();
        let refs: Vec<&str> = raw.iter().map(String::as_str).collect();
        let g = infer_type(&refs);
        assert_eq!(g.vtype, VariableType::CategoricalOrdinal);
        assert_eq!(g.ordinal_order.unwrap()[0], "1");
    }

    #[test]
    fn repeated_non_consecutive_numbers_are_nominal() {
        let raw: Vec<String> = (0..200).map(|i| ((i % 3) * 10).to_string()).collect();
        let refs: Vec<&str> = raw.iter().map(String::as_str).collect();
        assert_eq!(infer_type(&refs).vtype, VariableType::CategoricalNominal);
    }

    #[test]
    fn dirty_numeric_column_stays_numeric() {
        let mut raw: Vec<String> = (0..100).map(|i| format!("{}", i as f64 * 1.1)).collect();
        raw[3] = "oops".into();
        let refs: Vec<&str> = raw.iter().map(String::as_str).collect();
        let g = infer_type(&refs);
        assert_eq!(g.vtype, VariableType::ContinuousNumeric);
        assert!((g.ratios.numeric - 0.99).abs() < 1e-12);
    }

    #[test]
    fn dates_and_text() {
        let g = infer_type(&["2020-01-01", "2020-01-02", "2021-03-04T10:00:00", "NA"]);
        assert_eq!(g.vtype, VariableType::DateTime);
        let names: Vec<String> = (0..60).map(|i| format!("person {i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        assert_eq!(infer_type(&refs).vtype, VariableType::Text);
        assert_eq!(infer_type(&["", "NA"]).vtype, VariableType::Text);
    }

    #[test]
    fn inference_is_deterministic() {
        let raw = ["3", "1", "2", "1", "x"];
        assert_eq!(infer_type(&raw), infer_type(&raw));
    }
}
