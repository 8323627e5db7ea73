use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::CleanerError;
use crate::tabular::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    NotNull { column: String },
    /// Inclusive bounds on observed numeric values.
    Range { column: String, lo: f64, hi: f64 },
    /// No two rows share the same values on `columns`. Rows with a missing
    /// cell in the key are exempt.
    Unique { columns: Vec<String> },
    Domain { column: String, allowed: Vec<String> },
}

impl Constraint {
    pub fn columns(&self) -> Vec<&str> {
        match self {
            Constraint::NotNull { column }
            | Constraint::Range { column, .. }
            | Constraint::Domain { column, .. } => vec![column.as_str()],
            Constraint::Unique { columns } => columns.iter().map(String::as_str).collect(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Constraint::NotNull { column } => format!("not_null({column})"),
            Constraint::Range { column, lo, hi } => format!("range({column}, {lo}, {hi})"),
            Constraint::Unique { columns } => format!("unique({})", columns.join(", ")),
            Constraint::Domain { column, allowed } => {
                format!("domain({column}, {{{}}})", allowed.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        ConstraintSet { constraints }
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Every column referenced by some constraint.
    pub fn columns(&self) -> BTreeSet<String> {
        self.constraints
            .iter()
            .flat_map(|c| c.columns().into_iter().map(str::to_string))
            .collect()
    }

    /// Checks the set is well formed against `d`.
    pub fn check(&self, d: &Dataset) -> Result<(), CleanerError> {
        for c in &self.constraints {
            for col in c.columns() {
                if !d.has_column(col) {
                    return Err(CleanerError::UnknownColumn(col.to_string()));
                }
            }
            match c {
                Constraint::Range { lo, hi, .. } if !(lo <= hi) => {
                    return Err(CleanerError::InvalidConstraint(format!(
                        "{}: lo must not exceed hi",
                        c.describe()
                    )));
                }
                Constraint::Unique { columns } if columns.is_empty() => {
                    return Err(CleanerError::InvalidConstraint("unique() needs a column".into()));
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Index into the constraint set.
    pub constraint: usize,
    pub description: String,
    pub columns: Vec<String>,
    /// Offending row positions.
    pub rows: Vec<usize>,
    pub message: String,
}

/// Checks every constraint; an empty result means the dataset satisfies the
/// set. References to absent columns are reported as violations.
pub fn validate_constraints(d: &Dataset, set: &ConstraintSet) -> Vec<Violation> {
    let mut out = Vec::new();
    for (ci, c) in set.constraints.iter().enumerate() {
        let violation = |rows: Vec<usize>, message: String| Violation {
            constraint: ci,
            description: c.describe(),
            columns: c.columns().into_iter().map(str::to_string).collect(),
            rows,
            message,
        };
        if let Some(missing) = c.columns().into_iter().find(|col| !d.has_column(col)) {
            out.push(violation(Vec::new(), format!("column `{missing}` does not exist")));
            continue;
        }
        match c {
            Constraint::NotNull { column } => {
                let col = d.column(column).expect("checked");
                for (r, v) in col.cells().iter().enumerate() {
                    if v.is_missing() {
                        out.push(violation(vec![r], format!("row {r}: `{column}` is missing")));
                    }
                }
            }
            Constraint::Range { column, lo, hi } => {
                let col = d.column(column).expect("checked");
                for (r, v) in col.cells().iter().enumerate() {
                    if v.is_missing() {
                        continue;
                    }
                    match v.as_f64() {
                        Some(x) if x >= *lo && x <= *hi => {}
                        Some(x) => out.push(violation(
                            vec![r],
                            format!("row {r}: `{column}` = {x} outside [{lo}, {hi}]"),
                        )),
                        None => out.push(violation(
                            vec![r],
                            format!("row {r}: `{column}` = {:?} is not numeric", v.render()),
                        )),
                    }
                }
            }
            Constraint::Domain { column, allowed } => {
                let col = d.column(column).expect("checked");
                for (r, v) in col.cells().iter().enumerate() {
                    if !v.is_missing() && !allowed.contains(&v.render()) {
                        out.push(violation(
                            vec![r],
                            format!("row {r}: `{column}` = {:?} not in domain", v.render()),
                        ));
                    }
                }
            }
            Constraint::Unique { columns } => {
                for rows in duplicate_groups(d, columns) {
                    let message = format!("rows {rows:?} share key ({})", columns.join(", "));
                    out.push(violation(rows, message));
                }
            }
        }
    }
    out
}

/// Groups of two or more rows sharing a complete key, ordered by first row.
fn duplicate_groups(d: &Dataset, columns: &[String]) -> Vec<Vec<usize>> {
    let cols: Vec<_> = columns.iter().map(|c| d.column(c).expect("checked")).collect();
    let mut groups: HashMap<Vec<String>, Vec<usize>> = HashMap::new();
    for r in 0..d.row_count() {
        if cols.iter().any(|c| c.cells()[r].is_missing()) {
            continue;
        }
        let key = cols.iter().map(|c| c.cells()[r].render()).collect();
        groups.entry(key).or_default().push(r);
    }
    let mut dup: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
    dup.sort();
    dup
}

/// Enforces the set by deleting rows: rows violating a per-row constraint
/// go first, then every repeated key keeps only its first row. Removing rows
/// cannot create new violations, so the result always satisfies the set.
pub fn repair_constraints(
    d: &Dataset,
    set: &ConstraintSet,
) -> Result<(Dataset, Vec<usize>), CleanerError> {
    set.check(d)?;
    let per_row: BTreeSet<usize> = validate_constraints(d, set)
        .into_iter()
        .filter(|v| !matches!(set.constraints[v.constraint], Constraint::Unique { .. }))
        .flat_map(|v| v.rows)
        .collect();
    let keep: Vec<usize> = (0..d.row_count()).filter(|r| !per_row.contains(r)).collect();
    let mut current = d.take_rows(&keep);
    let mut removed: BTreeSet<usize> = per_row;
    for c in &set.constraints {
        if let Constraint::Unique { columns } = c {
            let extra: BTreeSet<usize> = duplicate_groups(&current, columns)
                .into_iter()
                .flat_map(|g| g.into_iter().skip(1))
                .collect();
            if extra.is_empty() {
                continue;
            }
            // map back to positions in `d` through row ids
            let ids = current.row_ids();
            for &r in &extra {
                let pos = d.row_ids().iter().position(|&x| x == ids[r]).expect("row id present");
                removed.insert(pos);
            }
            current = current.drop_rows(&extra)?.0;
        }
    }
    Ok((current, removed.into_iter().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;

    fn d() -> Dataset {
        Dataset::new(
            "c",
            vec![
                Column::numeric("id", &[1.0, 2.0, 2.0, 3.0]),
                Column::numeric_opt("age", &[Some(30.0), Some(999.0), Some(40.0), None]),
                Column::nominal("g", &[Some("m"), Some("f"), Some("x"), Some("f")]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn violations_are_listed() {
        let d = d();
        let ok = ConstraintSet::new(vec![Constraint::NotNull { column: "id".into() }]);
        assert!(validate_constraints(&d, &ok).is_empty());

        let set = ConstraintSet::new(vec![
            Constraint::Range { column: "age".into(), lo: 0.0, hi: 120.0 },
            Constraint::Unique { columns: vec!["id".into()] },
            Constraint::NotNull { column: "age".into() },
            Constraint::Domain { column: "g".into(), allowed: vec!["m".into(), "f".into()] },
        ]);
        let v = validate_constraints(&d, &set);
        assert_eq!(v.len(), 4);
        assert_eq!((v[0].constraint, v[0].rows.clone()), (0, vec![1]));
        assert_eq!(v[1].rows, vec![1, 2]);
        assert_eq!(v[2].rows, vec![3]);
        assert_eq!(v[3].rows, vec![2]);

        let (fixed, removed) = repair_constraints(&d, &set).unwrap();
        assert!(validate_constraints(&fixed, &set).is_empty());
        assert_eq!(removed, vec![1, 2, 3]);
    }

    #[test]
    fn unique_keeps_first_row() {
        let d = d();
        let set = ConstraintSet::new(vec![Constraint::Unique { columns: vec!["id".into()] }]);
        let (fixed, removed) = repair_constraints(&d, &set).unwrap();
        assert_eq!(removed, vec![2]);
        assert_eq!(fixed.row_ids(), &[0, 1, 3]);
    }

    #[test]
    fn malformed_sets() {
        let d = d();
        let bad = ConstraintSet::new(vec![Constraint::Range { column: "age".into(), lo: 5.0, hi: 1.0 }]);
        assert!(matches!(bad.check(&d), Err(CleanerError::InvalidConstraint(_))));
        let unknown = ConstraintSet::new(vec![Constraint::NotNull { column: "zz".into() }]);
        assert_eq!(unknown.check(&d).unwrap_err(), CleanerError::UnknownColumn("zz".into()));
        assert_eq!(validate_constraints(&d, &unknown).len(), 1);
    }

    #[test]
    fn serde_shape() {
        let json = r#"{"constraints":[{"kind":"range","column":"age","lo":0,"hi":120}]}"#;
        let set: ConstraintSet = serde_json::from_str(json).unwrap();
        assert_eq!(set.constraints[0], Constraint::Range { column: "age".into(), lo: 0.0, hi: 120.0 });
    }
}
