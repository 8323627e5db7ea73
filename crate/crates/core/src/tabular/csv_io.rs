//! RFC 4180 reading and writing.

use std::collections::HashMap;
use std::sync::Arc;

use chrono::{DateTime, Timelike};
use serde::{Deserialize, Serialize};

use super::infer::{parse_number, parse_timestamp, InferenceContext, OrdinalLexicon};
use super::{CellValue, Column, Dataset, TabularError, TypeInferenceReport, VariableType};
use crate::tabular::ColumnInference;

pub const DEFAULT_MISSING_TOKENS: &[&str] = &["", "NA", "NaN", "nan", "null", "inf", "-inf"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParseOptions {
    pub delimiter: char,
    pub has_header: bool,
    pub missing_tokens: Vec<String>,
    /// Additional ordinal vocabularies on top of the shipped lexicon.
    pub extra_ordinal_orders: Vec<Vec<String>>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: ',',
            has_header: true,
            missing_tokens: DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect(),
            extra_ordinal_orders: Vec::new(),
        }
    }
}

impl ParseOptions {
    fn context(&self) -> InferenceContext {
        let mut lexicon = OrdinalLexicon::builtin();
        lexicon.extend(&self.extra_ordinal_orders);
        InferenceContext {
            missing_tokens: self.missing_tokens.clone(),
            lexicon,
        }
    }

    fn delimiter_byte(&self) -> u8 {
        let mut buf = [0u8; 4];
        let s = self.delimiter.encode_utf8(&mut buf);
        s.as_bytes()[0]
    }
}

/// Parses CSV bytes into a typed dataset plus the per-column inference report.
pub fn parse_csv(
    bytes: &[u8],
    options: &ParseOptions,
) -> Result<(Dataset, TypeInferenceReport), TabularError> {
    if bytes.iter().all(|b| b.is_ascii_whitespace()) {
        return Err(TabularError::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter_byte())
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);

    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec.map_err(map_csv_error)?);
    }
    if records.is_empty() {
        return Err(TabularError::EmptyInput);
    }

    let width = records[0].len();
    let (header, body): (Vec<String>, &[csv::StringRecord]) = if options.has_header {
        (records[0].iter().map(|h| h.trim().to_string()).collect(), &records[1..])
    } else {
        ((1..=width).map(|i| format!("column_{i}")).collect(), &records[..])
    };
    for (i, name) in header.iter().enumerate() {
        if header[..i].contains(name) {
            return Err(TabularError::DuplicateHeader(name.clone()));
        }
    }
    for (i, rec) in body.iter().enumerate() {
        if rec.len() != width {
            return Err(TabularError::MalformedCsv {
                row: i + 1,
                line: rec.position().map_or(0, |p| p.line()),
                expected: width,
                found: rec.len(),
            });
        }
    }

    let ctx = options.context();
    let mut columns = Vec::with_capacity(width);
    let mut report = TypeInferenceReport::default();
    for (j, name) in header.iter().enumerate() {
        let raw: Vec<&str> = body.iter().map(|r| &r[j]).collect();
        let guess = super::infer_type_with(&raw, &ctx);
        let cells = build_cells(&raw, guess.vtype, &ctx);
        let mut column = Column::new(name.clone(), guess.vtype, cells);
        if let Some(order) = &guess.ordinal_order {
            column = column.with_order(order.clone());
        }
        columns.push(column);
        report.columns.push(ColumnInference {
            name: name.clone(),
            vtype: guess.vtype,
            ratios: guess.ratios,
            distinct_count: guess.distinct_count,
            ordinal_order: guess.ordinal_order,
        });
    }
    Ok((Dataset::new("dataset", columns)?, report))
}

fn map_csv_error(err: csv::Error) -> TabularError {
    let line = err.position().map_or(0, |p| p.line());
    match err.kind() {
        csv::ErrorKind::Utf8 { pos, .. } => TabularError::InvalidUtf8 {
            offset: pos.as_ref().map_or(0, |p| p.byte()),
        },
        _ => TabularError::CsvSyntax {
            line,
            message: err.to_string(),
        },
    }
}

fn build_cells(raw: &[&str], vtype: VariableType, ctx: &InferenceContext) -> Vec<CellValue> {
    let mut interned: HashMap<&str, Arc<str>> = HashMap::new();
    raw.iter()
        .map(|&v| {
            if ctx.is_missing(v) {
                return CellValue::Missing;
            }
            match vtype {
                VariableType::ContinuousNumeric => {
                    parse_number(v).map_or(CellValue::Missing, CellValue::Number)
                }
                VariableType::DateTime => {
                    parse_timestamp(v).map_or(CellValue::Missing, CellValue::Timestamp)
                }
                VariableType::CategoricalNominal | VariableType::CategoricalOrdinal => {
                    CellValue::Category(interned.entry(v).or_insert_with(|| Arc::from(v)).clone())
                }
                VariableType::Text => CellValue::Text(v.to_string()),
            }
        })
        .collect()
}

pub(crate) fn format_timestamp(t: i64) -> String {
    match DateTime::from_timestamp(t, 0) {
        Some(dt) if dt.num_seconds_from_midnight() == 0 => dt.format("%Y-%m-%d").to_string(),
        Some(dt) => dt.format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => t.to_string(),
    }
}

/// Serializes a dataset as RFC 4180 CSV (header row, CRLF line endings,
/// minimal quoting). Missing cells are written as empty fields.
pub fn to_csv_bytes(d: &Dataset, delimiter: char) -> Vec<u8> {
    let mut buf = [0u8; 4];
    let delim = delimiter.encode_utf8(&mut buf).as_bytes()[0];
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delim)
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    // writing into a Vec cannot fail
    writer.write_record(d.column_names()).expect("in-memory write");
    let mut row = Vec::with_capacity(d.column_count());
    for i in 0..d.row_count() {
        row.clear();
        row.extend(d.columns().iter().map(|c| c.cells()[i].render()));
        writer.write_record(&row).expect("in-memory write");
    }
    writer.into_inner().expect("in-memory flush")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Dataset, TabularError> {
        parse_csv(s.as_bytes(), &ParseOptions::default()).map(|(d, _)| d)
    }

    #[test]
    fn simple_parse() {
        let d = parse("a,b\n1,x\n2,y").unwrap();
        assert_eq!(d.row_count(), 2);
        assert_eq!(d.column_count(), 2);
        assert_eq!(d.column("a").unwrap().vtype(), VariableType::ContinuousNumeric);
    }

    #[test]
    fn infinity_is_missing() {
        let d = parse("a\n1\ninf\n3").unwrap();
        assert_eq!(
            d.column("a").unwrap().cells(),
            &[CellValue::Number(1.0), CellValue::Missing, CellValue::Number(3.0)]
        );
        let d = parse("a\n1\nInfinity\n3\nNaN\n").unwrap();
        assert_eq!(d.column("a").unwrap().missing_count(), 2);
    }

    #[test]
    fn ragged_row_is_reported() {
        let err = parse("a,b\n1,2\n3").unwrap_err();
        assert!(matches!(err, TabularError::MalformedCsv { row: 2, line: 3, .. }), "{err:?}");
    }

    #[test]
    fn empty_and_duplicate_header() {
        assert_eq!(parse("").unwrap_err(), TabularError::EmptyInput);
        assert_eq!(
            parse("a,a\n1,2").unwrap_err(),
            TabularError::DuplicateHeader("a".into())
        );
    }

    #[test]
    fn quoted_fields_and_crlf() {
        let d = parse("name,v\r\n\"Smith, J\",1\r\n\"say \"\"hi\"\"\",2\r\n").unwrap();
        let names = d.column("name").unwrap();
        assert_eq!(names.cells()[0].as_str(), Some("Smith, J"));
        assert_eq!(names.cells()[1].as_str(), Some("say \"hi\""));
    }

    #[test]
    fn header_only_and_headerless() {
        let d = parse("a,b\n").unwrap();
        assert_eq!(d.row_count(), 0);
        assert_eq!(to_csv_bytes(&d, ','), b"a,b\r\n");

        let opts = ParseOptions {
            has_header: false,
            ..ParseOptions::default()
        };
        let (d, _) = parse_csv(b"1,2\n3,4", &opts).unwrap();
        assert_eq!(d.column_names(), vec!["column_1", "column_2"]);
    }

    #[test]
    fn single_column_missing_round_trips() {
        let d = parse("a\n1\n\n3").unwrap();
        // the csv reader skips blank lines, so the middle row is dropped on input
        assert_eq!(d.row_count(), 2);
        let d = parse("a,b\n1,\n,2\n3,4").unwrap();
        let bytes = to_csv_bytes(&d.select_columns(&["a"]).unwrap(), ',');
        let back = parse(std::str::from_utf8(&bytes).unwrap()).unwrap();
        assert_eq!(back.row_count(), 3);
        assert_eq!(back.column("a").unwrap().missing_count(), 1);
    }

    #[test]
    fn timestamps_render_round_trip() {
        let d = parse("t\n2020-01-01\n2020-01-02T10:30:00\n2020-02-01").unwrap();
        let bytes = to_csv_bytes(&d, ',');
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            "t\r\n2020-01-01\r\n2020-01-02T10:30:00\r\n2020-02-01\r\n"
        );
    }
}
