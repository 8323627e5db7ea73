use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::tabular::{CellValue, Column, VariableType};

pub const DEFAULT_ONE_HOT_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingKind {
    Label,
    OneHot,
    Frequency,
}

/// Fitted category table. `categories[i]` maps to code `i` (Label), to
/// column `columns[i]` (OneHot), or to `frequencies[i]` (Frequency).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodingMap {
    pub kind: EncodingKind,
    pub column: String,
    pub categories: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frequencies: Vec<f64>,
}

fn require_categorical(c: &Column) -> Result<(), TransformError> {
    if c.vtype().is_categorical() {
        Ok(())
    } else {
        Err(TransformError::NonCategorical(c.name().to_string()))
    }
}

/// Distinct rendered values in first-seen order.
fn first_seen(c: &Column) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    c.cells()
        .iter()
        .filter(|v| !v.is_missing())
        .map(CellValue::render)
        .filter(|s| seen.insert(s.clone()))
        .collect()
}

/// Integer codes following `order` when given (it must list every observed
/// category), else first-seen order. Missing cells stay missing.
pub fn label_encode(
    c: &Column,
    order: Option<&[String]>,
) -> Result<(Column, EncodingMap), TransformError> {
    require_categorical(c)?;
    let categories: Vec<String> = match order {
        Some(o) => {
            for v in first_seen(c) {
                if !o.contains(&v) {
                    return Err(TransformError::IncompleteOrder {
                        column: c.name().to_string(),
                        value: v,
                    });
                }
            }
            o.to_vec()
        }
        None => first_seen(c),
    };
    let index: HashMap<&str, usize> = categories
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let cells = c
        .cells()
        .iter()
        .map(|v| {
            if v.is_missing() {
                CellValue::Missing
            } else {
                CellValue::Number(index[v.render().as_str()] as f64)
            }
        })
        .collect();
    let map = EncodingMap {
        kind: EncodingKind::Label,
        column: c.name().to_string(),
        categories,
        columns: Vec::new(),
        frequencies: Vec::new(),
    };
    Ok((Column::new(c.name(), VariableType::ContinuousNumeric, cells), map))
}

/// Inverse of [`label_encode`]; codes outside the table become missing.
pub fn decode_labels(c: &Column, map: &EncodingMap) -> Column {
    let cells = c
        .cells()
        .iter()
        .map(|v| match v.as_f64() {
            Some(x) if x >= 0.0 && x.fract() == 0.0 && (x as usize) < map.categories.len() => {
                CellValue::category(&map.categories[x as usize])
            }
            _ => CellValue::Missing,
        })
        .collect();
    Column::new(c.name(), VariableType::CategoricalNominal, cells)
}

/// One 0/1 indicator column per category (first-seen order), named
/// `<column>=<category>`. A missing cell is missing in every indicator.
pub fn one_hot_encode(c: &Column, cap: usize) -> Result<(Vec<Column>, EncodingMap), TransformError> {
    require_categorical(c)?;
    let categories = first_seen(c);
    if categories.len() > cap {
        return Err(TransformError::CardinalityTooHigh {
            column: c.name().to_string(),
            distinct: categories.len(),
            cap,
        });
    }
    let rendered: Vec<Option<String>> = c
        .cells()
        .iter()
        .map(|v| (!v.is_missing()).then(|| v.render()))
        .collect();
    let names: Vec<String> = categories.iter().map(|k| format!("{}={k}", c.name())).collect();
    let columns = categories
        .iter()
        .zip(&names)
        .map(|(k, name)| {
            let cells = rendered
                .iter()
                .map(|r| match r {
                    None => CellValue::Missing,
                    Some(s) => CellValue::Number(f64::from(u8::from(s == k))),
                })
                .collect();
            Column::new(name.clone(), VariableType::ContinuousNumeric, cells)
        })
        .collect();
    let map = EncodingMap {
        kind: EncodingKind::OneHot,
        column: c.name().to_string(),
        categories,
        columns: names,
        frequencies: Vec::new(),
    };
    Ok((columns, map))
}

/// Each category replaced by its share of the observed cells.
pub fn frequency_encode(c: &Column) -> Result<(Column, EncodingMap), TransformError> {
    require_categorical(c)?;
    let categories = first_seen(c);
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut observed = 0usize;
    for v in c.cells().iter().filter(|v| !v.is_missing()) {
        *counts.entry(v.render()).or_default() += 1;
        observed += 1;
    }
    let freq = |k: &str| counts[k] as f64 / observed as f64;
    let cells = c
        .cells()
        .iter()
        .map(|v| {
            if v.is_missing() {
                CellValue::Missing
            } else {
                CellValue::Number(freq(&v.render()))
            }
        })
        .collect();
    let map = EncodingMap {
        kind: EncodingKind::Frequency,
        column: c.name().to_string(),
        frequencies: categories.iter().map(|k| freq(k)).collect(),
        categories,
        columns: Vec::new(),
    };
    Ok((Column::new(c.name(), VariableType::ContinuousNumeric, cells), map))
}

/// Maps each frequency back to the first category (in table order) with
/// that frequency; unknown values become missing.
pub fn decode_frequency(c: &Column, map: &EncodingMap) -> Column {
    let cells = c
        .cells()
        .iter()
        .map(|v| {
            v.as_f64()
                .and_then(|x| map.frequencies.iter().position(|f| *f == x))
                .map_or(CellValue::Missing, |i| CellValue::category(&map.categories[i]))
        })
        .collect();
    Column::new(c.name(), VariableType::CategoricalNominal, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cat(values: &[Option<&str>]) -> Column {
        Column::nominal("c", values)
    }

    #[test]
    fn label_encoding_follows_order() {
        let c = cat(&[Some("low"), Some("high"), Some("medium"), None]);
        let order: Vec<String> = ["low", "medium", "high"].map(String::from).to_vec();
        let (out, map) = label_encode(&c, Some(&order)).unwrap();
        assert_eq!(out.numbers(), vec![Some(0.0), Some(2.0), Some(1.0), None]);
        let back = decode_labels(&out, &map);
        assert_eq!(back.cells(), c.cells());

        let g = cat(&[Some("Male"), Some("Female"), Some("Male")]);
        assert_eq!(label_encode(&g, None).unwrap().0.numbers(), vec![Some(0.0), Some(1.0), Some(0.0)]);

        let short: Vec<String> = ["low", "medium"].map(String::from).to_vec();
        assert_eq!(
            label_encode(&c, Some(&short)).unwrap_err(),
            TransformError::IncompleteOrder { column: "c".into(), value: "high".into() }
        );
        assert!(matches!(
            label_encode(&Column::numeric("n", &[1.0]), None),
            Err(TransformError::NonCategorical(_))
        ));
    }

    #[test]
    fn one_hot_indicators() {
        let (cols, map) = one_hot_encode(&cat(&[Some("a"), Some("b"), Some("a"), None]), 50).unwrap();
        assert_eq!(map.columns, vec!["c=a", "c=b"]);
        assert_eq!(cols[0].numbers(), vec![Some(1.0), Some(0.0), Some(1.0), None]);
        assert_eq!(cols[1].numbers(), vec![Some(0.0), Some(1.0), Some(0.0), None]);

        let many: Vec<String> = (0..100).map(|i| format!("city{i}")).collect();
        let refs: Vec<Option<&str>> = many.iter().map(|s| Some(s.as_str())).collect();
        assert_eq!(
            one_hot_encode(&cat(&refs), 50).unwrap_err(),
            TransformError::CardinalityTooHigh { column: "c".into(), distinct: 100, cap: 50 }
        );
    }

    #[test]
    fn frequency_encoding() {
        let (out, map) = frequency_encode(&cat(&[Some("a"), Some("a"), Some("b")])).unwrap();
        assert_eq!(out.numbers(), vec![Some(2.0 / 3.0), Some(2.0 / 3.0), Some(1.0 / 3.0)]);
        let (single, _) = frequency_encode(&cat(&[Some("z"), Some("z")])).unwrap();
        assert_eq!(single.numbers(), vec![Some(1.0), Some(1.0)]);
        let decoded = decode_frequency(&out, &map);
        let (again, _) = frequency_encode(&decoded).unwrap();
        assert_eq!(again.numbers(), out.numbers());
    }

    proptest! {
        #[test]
        fn one_hot_rows_sum_to_one(values in prop::collection::vec(prop::option::weighted(0.8, 0u8..6), 1..40)) {
            let names: Vec<Option<String>> = values.iter().map(|v| v.map(|x| format!("k{x}"))).collect();
            let refs: Vec<Option<&str>> = names.iter().map(|v| v.as_deref()).collect();
            let c = cat(&refs);
            prop_assume!(refs.iter().any(Option::is_some));
            let (cols, _) = one_hot_encode(&c, 50).unwrap();
            for r in 0..refs.len() {
                let row: Vec<Option<f64>> = cols.iter().map(|k| k.cells()[r].as_f64()).collect();
                if refs[r].is_some() {
                    prop_assert_eq!(row.iter().map(|x| x.unwrap()).sum::<f64>(), 1.0);
                } else {
                    prop_assert!(row.iter().all(Option::is_none));
                }
            }
            let (codes, map) = label_encode(&c, None).unwrap();
            let decoded = decode_labels(&codes, &map);
            prop_assert_eq!(decoded.cells(), c.cells());
        }
    }
}
