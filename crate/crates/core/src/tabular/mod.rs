//! Columnar dataset model.
//!
//! A [`Dataset`] is an immutable value: every operation that changes rows or
//! columns returns a new dataset. Column cells live behind an `Arc`, so
//! selecting or reordering columns never copies cell data.

mod csv_io;
mod infer;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use csv_io::{parse_csv, to_csv_bytes, ParseOptions, DEFAULT_MISSING_TOKENS};
pub use infer::{
    infer_type, infer_type_with, CandidateRatios, ColumnInference, InferenceContext,
    OrdinalLexicon, TypeGuess, TypeInferenceReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TabularError {
    #[error("empty input")]
    EmptyInput,
    #[error("input is not valid UTF-8 (byte offset {offset})")]
    InvalidUtf8 { offset: u64 },
    #[error("malformed CSV at row {row} (line {line}): expected {expected} fields, found {found}")]
    MalformedCsv {
        row: usize,
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("malformed CSV at line {line}: {message}")]
    CsvSyntax { line: u64, message: String },
    #[error("duplicate column name `{0}`")]
    DuplicateHeader(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("row index {index} out of range for {row_count} rows")]
    IndexOutOfRange { index: usize, row_count: usize },
    #[error("column `{name}` has {found} cells, expected {expected}")]
    LengthMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("ordinal column `{column}` has no order entry for `{value}`")]
    IncompleteOrder { column: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariableType {
    ContinuousNumeric,
    CategoricalNominal,
    CategoricalOrdinal,
    DateTime,
    Text,
}

impl VariableType {
    pub fn is_categorical(self) -> bool {
        matches!(self, Self::CategoricalNominal | Self::CategoricalOrdinal)
    }

    /// Numeric for statistics purposes; timestamps count as numbers.
    pub fn is_numeric(self) -> bool {
        matches!(self, Self::ContinuousNumeric | Self::DateTime)
    }
}

impl fmt::Display for VariableType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::ContinuousNumeric => "ContinuousNumeric",
            Self::CategoricalNominal => "CategoricalNominal",
            Self::CategoricalOrdinal => "CategoricalOrdinal",
            Self::DateTime => "DateTime",
            Self::Text => "Text",
        };
        f.write_str(s)
    }
}

/// A single cell. Non-finite numbers are never stored: they are `Missing`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CellValue {
    Number(f64),
    Category(Arc<str>),
    /// Seconds since the Unix epoch, UTC.
    Timestamp(i64),
    Text(String),
    Missing,
}

impl CellValue {
    /// Builds a number cell, mapping NaN and infinities to `Missing`.
    pub fn number(x: f64) -> Self {
        if x.is_finite() {
            CellValue::Number(x)
        } else {
            CellValue::Missing
        }
    }

    pub fn category(s: &str) -> Self {
        CellValue::Category(Arc::from(s))
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    /// Numeric view: numbers, timestamps, and categories that parse as numbers.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            CellValue::Number(x) => Some(*x),
            CellValue::Timestamp(t) => Some(*t as f64),
            CellValue::Category(s) => s.trim().parse::<f64>().ok().filter(|x| x.is_finite()),
            _ => None,
        }
    }

    /// String view for categories and text.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            CellValue::Category(s) => Some(s),
            CellValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// Text rendering used by CSV export and by category-keyed maps.
    pub fn render(&self) -> String {
        match self {
            CellValue::Number(x) => format_number(*x),
            CellValue::Category(s) => s.to_string(),
            CellValue::Timestamp(t) => csv_io::format_timestamp(*t),
            CellValue::Text(s) => s.clone(),
            CellValue::Missing => String::new(),
        }
    }
}

/// Shortest representation that parses back to the identical `f64`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        // normalizes -0.0
        return "0".to_string();
    }
    format!("{x}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    vtype: VariableType,
    order: Option<Vec<String>>,
    cells: Arc<Vec<CellValue>>,
}

impl Column {
    pub fn new(name: impl Into<String>, vtype: VariableType, cells: Vec<CellValue>) -> Self {
        Column {
            name: name.into(),
            vtype,
            order: None,
            cells: Arc::new(cells),
        }
    }

    pub fn numeric(name: impl Into<String>, values: &[f64]) -> Self {
        let cells = values.iter().map(|&x| CellValue::number(x)).collect();
        Column::new(name, VariableType::ContinuousNumeric, cells)
    }

    /// Numeric column from optional values (`None` is missing).
    pub fn numeric_opt(name: impl Into<String>, values: &[Option<f64>]) -> Self {
        let cells = values
            .iter()
            .map(|v| v.map_or(CellValue::Missing, CellValue::number))
            .collect();
        Column::new(name, VariableType::ContinuousNumeric, cells)
    }

    pub fn nominal(name: impl Into<String>, values: &[Option<&str>]) -> Self {
        let cells = values
            .iter()
            .map(|v| v.map_or(CellValue::Missing, CellValue::category))
            .collect();
        Column::new(name, VariableType::CategoricalNominal, cells)
    }

    /// Ordinal column with an explicit level order. Every observed value must
    /// appear in `order`.
    pub fn ordinal(
        name: impl Into<String>,
        values: &[Option<&str>],
        order: &[&str],
    ) -> Result<Self, TabularError> {
        let name = name.into();
        for v in values.iter().flatten() {
            if !order.contains(v) {
                return Err(TabularError::IncompleteOrder {
                    column: name,
                    value: v.to_string(),
                });
            }
        }
        let cells = values
            .iter()
            .map(|v| v.map_or(CellValue::Missing, CellValue::category))
            .collect();
        Ok(Column::new(name, VariableType::CategoricalOrdinal, cells)
            .with_order(order.iter().map(|s| s.to_string()).collect()))
    }

    pub fn text(name: impl Into<String>, values: &[Option<&str>]) -> Self {
        let cells = values
            .iter()
            .map(|v| v.map_or(CellValue::Missing, |s| CellValue::Text(s.to_string())))
            .collect();
        Column::new(name, VariableType::Text, cells)
    }

    pub fn with_order(mut self, order: Vec<String>) -> Self {
        self.order = Some(order);
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vtype(&self) -> VariableType {
        self.vtype
    }

    /// Level order of an ordinal column.
    pub fn order(&self) -> Option<&[String]> {
        self.order.as_deref()
    }

    pub fn cells(&self) -> &[CellValue] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_missing()).count()
    }

    /// Per-row numeric view (`None` for missing or non-numeric cells).
    pub fn numbers(&self) -> Vec<Option<f64>> {
        self.cells.iter().map(CellValue::as_f64).collect()
    }

    /// Non-missing numeric values in row order.
    pub fn observed_numbers(&self) -> Vec<f64> {
        self.cells.iter().filter_map(CellValue::as_f64).collect()
    }

    /// Integer codes for the rendered cell values. Levels follow the declared
    /// order for ordinal columns (unlisted values appended sorted) and sorted
    /// order otherwise.
    pub fn level_codes(&self) -> (Vec<String>, Vec<Option<usize>>) {
        let mut levels: Vec<String> = self.order.clone().unwrap_or_default();
        let known: HashSet<String> = levels.iter().cloned().collect();
        let extra: BTreeSet<String> = self
            .cells
            .iter()
            .filter(|c| !c.is_missing())
            .map(CellValue::render)
            .filter(|s| !known.contains(s))
            .collect();
        levels.extend(extra);
        let index: std::collections::HashMap<&str, usize> =
            levels.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let codes = self
            .cells
            .iter()
            .map(|c| (!c.is_missing()).then(|| index[c.render().as_str()]))
            .collect();
        (levels, codes)
    }

    /// Same column metadata with new cells.
    pub fn with_cells(&self, cells: Vec<CellValue>) -> Self {
        Column {
            name: self.name.clone(),
            vtype: self.vtype,
            order: self.order.clone(),
            cells: Arc::new(cells),
        }
    }

    fn take_rows(&self, keep: &[usize]) -> Self {
        self.with_cells(keep.iter().map(|&i| self.cells[i].clone()).collect())
    }
}

/// A table of named, equally long columns.
///
/// Each row carries a stable row id (its position in the originally parsed
/// data), preserved through row removal so user selections stay valid across
/// plan steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    columns: Vec<Column>,
    row_ids: Arc<Vec<usize>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, TabularError> {
        let rows = columns.first().map_or(0, Column::len);
        let row_ids = Arc::new((0..rows).collect());
        Self::with_row_ids(name, columns, row_ids)
    }

    fn with_row_ids(
        name: impl Into<String>,
        columns: Vec<Column>,
        row_ids: Arc<Vec<usize>>,
    ) -> Result<Self, TabularError> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(TabularError::DuplicateHeader(c.name.clone()));
            }
            if c.len() != row_ids.len() {
                return Err(TabularError::LengthMismatch {
                    name: c.name.clone(),
                    expected: row_ids.len(),
                    found: c.len(),
                });
            }
        }
        Ok(Dataset {
            name: name.into(),
            columns,
            row_ids,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn row_count(&self) -> usize {
        self.row_ids.len()
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Stable ids of the current rows, in order.
    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn column(&self, name: &str) -> Result<&Column, TabularError> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| TabularError::UnknownColumn(name.to_string()))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column_index(name).is_some()
    }

    pub fn cell(&self, row: usize, column: usize) -> &CellValue {
        &self.columns[column].cells[row]
    }

    /// New dataset with only the named columns, in the given order.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset, TabularError> {
        let columns = names
            .iter()
            .map(|n| self.column(n.as_ref()).cloned())
            .collect::<Result<Vec<_>, _>>()?;
        Dataset::with_row_ids(self.name.clone(), columns, self.row_ids.clone())
    }

    /// Removes the rows at the given positions. Returns the new dataset and
    /// the number of rows removed.
    pub fn drop_rows(&self, rows: &BTreeSet<usize>) -> Result<(Dataset, usize), TabularError> {
        if let Some(&max) = rows.iter().next_back() {
            if max >= self.row_count() {
                return Err(TabularError::IndexOutOfRange {
                    index: max,
                    row_count: self.row_count(),
                });
            }
        }
        if rows.is_empty() {
            return Ok((self.clone(), 0));
        }
        let keep: Vec<usize> = (0..self.row_count()).filter(|i| !rows.contains(i)).collect();
        Ok((self.take_rows(&keep), rows.len()))
    }

    /// Keeps the rows at the given positions, in the given order.
    pub fn take_rows(&self, keep: &[usize]) -> Dataset {
        let columns = self.columns.iter().map(|c| c.take_rows(keep)).collect();
        let row_ids = keep.iter().map(|&i| self.row_ids[i]).collect();
        Dataset {
            name: self.name.clone(),
            columns,
            row_ids: Arc::new(row_ids),
        }
    }

    /// Replaces the column with the same name.
    pub fn replace_column(&self, column: Column) -> Result<Dataset, TabularError> {
        let idx = self
            .column_index(&column.name)
            .ok_or_else(|| TabularError::UnknownColumn(column.name.clone()))?;
        self.splice_columns(idx, vec![column])
    }

    /// Replaces the column at `idx` by `replacement` (possibly several columns
    /// or none), keeping the others in place.
    pub fn splice_columns(
        &self,
        idx: usize,
        replacement: Vec<Column>,
    ) -> Result<Dataset, TabularError> {
        let mut columns = self.columns.clone();
        columns.splice(idx..=idx, replacement);
        Dataset::with_row_ids(self.name.clone(), columns, self.row_ids.clone())
    }

    pub fn with_columns(&self, columns: Vec<Column>) -> Result<Dataset, TabularError> {
        Dataset::with_row_ids(self.name.clone(), columns, self.row_ids.clone())
    }

    /// Cell-for-cell equality, ignoring row ids and the dataset name.
    pub fn same_content(&self, other: &Dataset) -> bool {
        self.columns == other.columns
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_by_three() -> Dataset {
        Dataset::new(
            "t",
            vec![
                Column::numeric("a", &[1.0, 2.0, 3.0]),
                Column::nominal("b", &[Some("x"), Some("y"), None]),
                Column::numeric("c", &[7.0, 8.0, 9.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn non_finite_numbers_become_missing() {
        assert_eq!(CellValue::number(f64::NAN), CellValue::Missing);
        assert_eq!(CellValue::number(f64::INFINITY), CellValue::Missing);
        assert_eq!(CellValue::number(-1.5), CellValue::Number(-1.5));
    }

    #[test]
    fn select_all_is_identity() {
        let d = three_by_three();
        let s = d.select_columns(&d.column_names()).unwrap();
        assert_eq!(s, d);
    }

    #[test]
    fn select_one_and_unknown() {
        let d = three_by_three();
        let s = d.select_columns(&["a"]).unwrap();
        assert_eq!(s.column_count(), 1);
        assert_eq!(s.row_count(), 3);
        assert_eq!(
            d.select_columns(&["zzz"]).unwrap_err(),
            TabularError::UnknownColumn("zzz".into())
        );
    }

    #[test]
    fn drop_rows_cases() {
        let d = three_by_three();
        let (same, n) = d.drop_rows(&BTreeSet::new()).unwrap();
        assert_eq!(n, 0);
        assert_eq!(same, d);

        let (two, n) = d.drop_rows(&BTreeSet::from([0])).unwrap();
        assert_eq!(n, 1);
        assert_eq!(two.row_count(), 2);
        assert_eq!(two.cell(0, 0), &CellValue::Number(2.0));
        assert_eq!(two.row_ids(), &[1, 2]);

        assert_eq!(
            d.drop_rows(&BTreeSet::from([5])).unwrap_err(),
            TabularError::IndexOutOfRange {
                index: 5,
                row_count: 3
            }
        );
    }

    #[test]
    fn construction_checks_invariants() {
        let err = Dataset::new(
            "t",
            vec![Column::numeric("a", &[1.0]), Column::numeric("a", &[2.0])],
        )
        .unwrap_err();
        assert_eq!(err, TabularError::DuplicateHeader("a".into()));

        let err = Dataset::new(
            "t",
            vec![Column::numeric("a", &[1.0]), Column::numeric("b", &[])],
        )
        .unwrap_err();
        assert!(matches!(err, TabularError::LengthMismatch { .. }));

        let empty = Dataset::new("t", vec![Column::numeric("a", &[])]).unwrap();
        assert_eq!(empty.row_count(), 0);
    }

    #[test]
    fn ordinal_requires_complete_order() {
        let err = Column::ordinal("q", &[Some("low"), Some("high")], &["low", "medium"]).unwrap_err();
        assert!(matches!(err, TabularError::IncompleteOrder { .. }));
    }
}
