use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use super::plan::{fingerprint, CleaningPlan, Operation, OutlierDetector, StepRecord, StepResult};
use super::report::{eda_summary, ReportOptions, RunReport, Shape, StepOutliers};
use super::PipelineError;
use crate::cleaner::{
    dedupe, detect_dbscan, detect_iqr, detect_isolation_forest, detect_lof, drop_rows_by_missing, impute_mice,
    impute_simple, repair_constraints, validate_constraints, winsorize, Blocking, CleanerError, DbscanConfig,
    DedupeConfig, DetectorKind, FlaggedPoint, IsolationForestConfig, LofConfig, MergeEntry, MiceConfig,
    OutlierReport, SimilarityModel,
};
use crate::stats::{mean, median, standardize_points};
use crate::tabular::{parse_csv, to_csv_bytes, Column, Dataset, TypeInferenceReport, VariableType};
use crate::transform::{
    apply_power, boxcox, discretize, frequency_encode, label_encode, minmax, one_hot_encode, quantile_edges, zscore,
    TransformError,
};

/// Checks the fingerprint, parses with the plan's options, and executes.
pub fn execute_plan(input: &[u8], plan: &CleaningPlan) -> Result<(Dataset, RunReport), PipelineError> {
    let found = fingerprint(input);
    if found != plan.fingerprint {
        return Err(PipelineError::FingerprintMismatch {
            expected: plan.fingerprint.clone(),
            found,
        });
    }
    let (d, inference) = parse_csv(input, &plan.parse_options)?;
    execute_plan_on(&d, plan, Some(inference), &ReportOptions::default())
}

/// Applies the steps in order. The result depends only on the dataset and
/// the plan (including its seed).
pub fn execute_plan_on(
    d: &Dataset,
    plan: &CleaningPlan,
    inference: Option<TypeInferenceReport>,
    opts: &ReportOptions,
) -> Result<(Dataset, RunReport), PipelineError> {
    plan.constraints.check(d)?;
    let eda = eda_summary(d, plan.target.as_deref(), plan.seed, opts)?;
    let mut report = RunReport::start(plan, d, inference, eda);
    report.constraints_before = validate_constraints(d, &plan.constraints);

    let input_ids: BTreeSet<usize> = d.row_ids().iter().copied().collect();
    let mut current = d.clone();
    for step in &plan.steps {
        match apply_step(&current, step, plan, &input_ids, &mut report) {
            Ok((next, result)) => {
                let mut rec = step.clone();
                rec.result = Some(result);
                report.applied_plan.push(rec);
                current = next;
            }
            Err(e) => {
                report.output = Shape::of(&current);
                return Err(PipelineError::StepFailed {
                    step: step.id.clone(),
                    message: e.to_string(),
                    partial: Box::new(report),
                });
            }
        }
    }
    report.output = Shape::of(&current);
    report.constraints_after = validate_constraints(&current, &plan.constraints);
    if !report.constraints_after.is_empty() {
        return Err(PipelineError::ConstraintViolationAfterRepair {
            violations: report.constraints_after.clone(),
            partial: Box::new(report),
        });
    }
    Ok((current, report))
}

pub fn export_csv(d: &Dataset, path: &Path) -> Result<(), PipelineError> {
    write(path, &to_csv_bytes(d, ','))
}

pub fn export_report(report: &RunReport, path: &Path) -> Result<(), PipelineError> {
    write(path, report.to_json().as_bytes())
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    std::fs::write(path, bytes).map_err(|e| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Runs a detector over `columns`. Multivariate detectors see only rows
/// complete in those columns; DBSCAN and LOF see them z-scored. IQR flags
/// the union of per-column fences. Flagged indices in the returned report
/// are row positions in `d`, and rows that were not scored get score 0.
pub fn detect_outliers(
    d: &Dataset,
    columns: &[String],
    detector: &OutlierDetector,
) -> Result<OutlierReport, PipelineError> {
    let cols: Vec<&Column> = columns.iter().map(|c| d.column(c)).collect::<Result<_, _>>()?;
    if let Some(c) = cols.iter().find(|c| !c.vtype().is_numeric()) {
        return Err(CleanerError::NonNumeric(c.name().to_string()).into());
    }
    let n = d.row_count();

    if let OutlierDetector::Iqr { k } = detector {
        let mut scores = vec![0.0; n];
        let mut flagged: BTreeMap<usize, FlaggedPoint> = BTreeMap::new();
        for c in &cols {
            let r = detect_iqr(c, *k)?;
            for (s, &v) in scores.iter_mut().zip(&r.scores) {
                *s = f64::max(*s, v);
            }
            for f in r.flagged {
                let e = flagged.entry(f.index).or_insert_with(|| f.clone());
                if f.score > e.score {
                    *e = f;
                }
            }
        }
        return Ok(OutlierReport {
            detector: DetectorKind::Iqr,
            parameters: [("k".to_string(), *k)].into(),
            flagged: flagged.into_values().collect(),
            scores,
        });
    }

    let numbers: Vec<Vec<Option<f64>>> = cols.iter().map(|c| c.numbers()).collect();
    let complete: Vec<usize> = (0..n).filter(|&r| numbers.iter().all(|c| c[r].is_some())).collect();
    let points: Vec<Vec<f64>> = complete
        .iter()
        .map(|&r| numbers.iter().map(|c| c[r].expect("complete row")).collect())
        .collect();
    let inner = match detector {
        OutlierDetector::Iqr { .. } => unreachable!(),
        OutlierDetector::Dbscan { eps, min_pts } => {
            let cfg = DbscanConfig { eps: *eps, min_pts: *min_pts };
            detect_dbscan(&standardize_points(&points), &cfg)?.report
        }
        OutlierDetector::IsolationForest {
            n_trees,
            subsample,
            threshold,
            seed,
            ..
        } => {
            let cfg = IsolationForestConfig {
                n_trees: *n_trees,
                subsample: *subsample,
                threshold: *threshold,
                seed: *seed,
            };
            detect_isolation_forest(&points, &cfg)?
        }
        OutlierDetector::Lof { k, threshold } => {
            let cfg = LofConfig { k: *k, threshold: *threshold };
            detect_lof(&standardize_points(&points), &cfg)?
        }
    };
    let confirm = match detector {
        OutlierDetector::IsolationForest { confirm_z: Some(z), .. } => Some(*z),
        _ => None,
    };
    let extreme = confirm.map(|z| robust_extremes(&points, z));
    let mut scores = vec![0.0; n];
    for (&r, &s) in complete.iter().zip(&inner.scores) {
        scores[r] = s;
    }
    let flagged = inner
        .flagged
        .into_iter()
        .filter(|f| extreme.as_ref().is_none_or(|e| e[f.index]))
        .map(|f| FlaggedPoint {
            index: complete[f.index],
            values: points[f.index].clone(),
            score: f.score,
        })
        .collect();
    let mut parameters = inner.parameters;
    if let Some(z) = confirm {
        parameters.insert("confirm_z".to_string(), z);
    }
    Ok(OutlierReport {
        detector: inner.detector,
        parameters,
        flagged,
        scores,
    })
}

/// Marks points with some coordinate whose modified z-score exceeds `z`.
/// Columns with zero MAD fall back to 1.2533 times the mean absolute
/// deviation; constant columns never mark anything.
fn robust_extremes(points: &[Vec<f64>], z: f64) -> Vec<bool> {
    let mut out = vec![false; points.len()];
    let dim = points.first().map_or(0, Vec::len);
    for j in 0..dim {
        let col: Vec<f64> = points.iter().map(|p| p[j]).collect();
        let med = median(&col);
        let dev: Vec<f64> = col.iter().map(|x| (x - med).abs()).collect();
        let mad = median(&dev);
        let spread = if mad > 0.0 { 1.4826 * mad } else { 1.2533 * mean(&dev) };
        if spread <= 0.0 {
            continue;
        }
        for (o, x) in out.iter_mut().zip(&col) {
            *o |= (x - med).abs() / spread > z;
        }
    }
    out
}

fn to_json<T: serde::Serialize>(v: &T) -> Option<serde_json::Value> {
    Some(serde_json::to_value(v).expect("fitted parameters serialize"))
}

fn changed(a: &Column, b: &Column) -> usize {
    a.cells().iter().zip(b.cells()).filter(|(x, y)| x != y).count()
}

fn ids_at(d: &Dataset, positions: impl IntoIterator<Item = usize>) -> Vec<usize> {
    positions.into_iter().map(|p| d.row_ids()[p]).collect()
}

/// Targets of a per-column step; an empty list means every column that
/// `eligible` accepts.
fn targets_or<'a>(d: &'a Dataset, step: &'a StepRecord, eligible: impl Fn(&Column) -> bool) -> Vec<String> {
    if step.targets.is_empty() {
        d.columns().iter().filter(|c| eligible(c)).map(|c| c.name().to_string()).collect()
    } else {
        step.targets.clone()
    }
}

fn remove_positions(d: &Dataset, positions: &BTreeSet<usize>, result: &mut StepResult) -> Result<Dataset, PipelineError> {
    result.removed_row_ids = ids_at(d, positions.iter().copied());
    let (next, removed) = d.drop_rows(positions)?;
    result.rows_removed = removed;
    Ok(next)
}

/// Transform failures caused by a column with nothing left to fit.
fn degenerate(e: &TransformError) -> bool {
    matches!(
        e,
        TransformError::ZeroVariance(_) | TransformError::ZeroRange(_) | TransformError::AllMissing(_)
    )
}

fn apply_step(
    d: &Dataset,
    step: &StepRecord,
    plan: &CleaningPlan,
    input_ids: &BTreeSet<usize>,
    report: &mut RunReport,
) -> Result<(Dataset, StepResult), PipelineError> {
    let mut result = StepResult {
        rows_before: d.row_count(),
        ..StepResult::default()
    };
    let mut fitted: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    let mut current = d.clone();

    match &step.operation {
        Operation::Profile => {}
        Operation::DropColumns => {
            let drop: BTreeSet<&str> = step.targets.iter().map(String::as_str).collect();
            for t in &drop {
                d.column(t)?;
            }
            let keep: Vec<&str> = d.column_names().into_iter().filter(|c| !drop.contains(c)).collect();
            current = d.select_columns(&keep)?;
            result.columns_removed = step.targets.clone();
        }
        Operation::DropRowsByMissing { threshold } => {
            let (next, removed) = drop_rows_by_missing(d, *threshold)?;
            result.removed_row_ids = ids_at(d, removed.iter().copied());
            result.rows_removed = removed.len();
            current = next;
        }
        Operation::Impute { strategy } => {
            for t in targets_or(d, step, |c| c.missing_count() > 0) {
                let c = current.column(&t)?;
                if c.missing_count() == 0 {
                    continue;
                }
                let (filled, value) = impute_simple(c, *strategy)?;
                result.cells_changed += changed(c, &filled);
                fitted.insert(t.clone(), serde_json::Value::String(value.render()));
                current = current.replace_column(filled)?;
            }
        }
        Operation::ImputeMice { iterations } => {
            let cfg = MiceConfig {
                iterations: *iterations,
                seed: plan.seed,
            };
            let filled = impute_mice(d, &cfg)?;
            let targets = targets_or(d, step, |_| true);
            for t in targets {
                let c = filled.column(&t)?.clone();
                result.cells_changed += changed(d.column(&t)?, &c);
                current = current.replace_column(c)?;
            }
        }
        Operation::RemoveOutliers { detector } => {
            let columns = targets_or(d, step, |c| c.vtype() == VariableType::ContinuousNumeric);
            let out = detect_outliers(d, &columns, detector)?;
            let positions: BTreeSet<usize> = out.flagged_indices().into_iter().collect();
            current = remove_positions(d, &positions, &mut result)?;
            report.outliers.push(StepOutliers {
                step: step.id.clone(),
                columns,
                flagged_row_ids: result.removed_row_ids.clone(),
                report: out,
            });
        }
        Operation::RemoveRows { row_ids } => {
            // rows an earlier step already removed are skipped
            if let Some(id) = row_ids.iter().find(|id| !input_ids.contains(id)) {
                return Err(CleanerError::InvalidParameter(format!("unknown row id {id}")).into());
            }
            let pos: HashMap<usize, usize> = d.row_ids().iter().enumerate().map(|(p, &id)| (id, p)).collect();
            let positions: BTreeSet<usize> = row_ids.iter().filter_map(|id| pos.get(id).copied()).collect();
            current = remove_positions(d, &positions, &mut result)?;
        }
        Operation::Winsorize { lower_pct, upper_pct } => {
            for t in targets_or(d, step, |c| c.vtype() == VariableType::ContinuousNumeric) {
                let c = current.column(&t)?;
                let (w, bounds) = winsorize(c, *lower_pct, *upper_pct)?;
                result.cells_changed += changed(c, &w);
                fitted.insert(t.clone(), to_json(&bounds).unwrap_or_default());
                current = current.replace_column(w)?;
            }
        }
        Operation::DedupeExact => {
            let mut first: HashMap<Vec<String>, usize> = HashMap::new();
            let mut positions = BTreeSet::new();
            for r in 0..d.row_count() {
                let key: Vec<String> = d.columns().iter().map(|c| c.cells()[r].render()).collect();
                match first.get(&key) {
                    Some(&kept) => {
                        positions.insert(r);
                        report.merge_log.push(MergeEntry::Remove {
                            row_id: d.row_ids()[r],
                            kept_row_id: d.row_ids()[kept],
                            distance: 0.0,
                        });
                    }
                    None => {
                        first.insert(key, r);
                    }
                }
            }
            current = remove_positions(d, &positions, &mut result)?;
        }
        Operation::Dedupe { r1, rn, window } => {
            let model = SimilarityModel::uniform(d, &step.targets, *r1, *rn)?;
            let cfg = DedupeConfig {
                blocking: Blocking::SortedNeighborhood { window: *window },
            };
            let (next, log) = dedupe(d, &model, &cfg)?;
            for e in &log {
                match e {
                    MergeEntry::Remove { row_id, .. } => result.removed_row_ids.push(*row_id),
                    MergeEntry::Substitute { .. } => result.cells_changed += 1,
                }
            }
            result.rows_removed = result.removed_row_ids.len();
            report.merge_log.extend(log);
            current = next;
        }
        Operation::RepairConstraints => {
            let (next, removed) = repair_constraints(d, &plan.constraints)?;
            result.removed_row_ids = ids_at(d, removed.iter().copied());
            result.rows_removed = removed.len();
            current = next;
        }
        Operation::LabelEncode => {
            for t in &step.targets {
                let c = current.column(t)?;
                let (enc, map) = label_encode(c, c.order())?;
                result.cells_changed += c.len();
                fitted.insert(t.clone(), to_json(&map).unwrap_or_default());
                current = current.replace_column(enc)?;
            }
        }
        Operation::OneHotEncode { cap } => {
            for t in &step.targets {
                let c = current.column(t)?;
                let (cols, map) = one_hot_encode(c, *cap)?;
                result.columns_added.extend(cols.iter().map(|c| c.name().to_string()));
                result.columns_removed.push(t.clone());
                fitted.insert(t.clone(), to_json(&map).unwrap_or_default());
                let idx = current.column_index(t).expect("column resolved above");
                current = current.splice_columns(idx, cols)?;
            }
        }
        Operation::FrequencyEncode => {
            for t in &step.targets {
                let c = current.column(t)?;
                let (enc, map) = frequency_encode(c)?;
                result.cells_changed += c.len();
                fitted.insert(t.clone(), to_json(&map).unwrap_or_default());
                current = current.replace_column(enc)?;
            }
        }
        Operation::Discretize { bins, edges } => {
            for t in &step.targets {
                let c = current.column(t)?;
                let edges = if edges.is_empty() { quantile_edges(c, *bins) } else { edges.clone() };
                let binned = discretize(c, &edges)?;
                result.cells_changed += c.len();
                fitted.insert(t.clone(), to_json(&edges).unwrap_or_default());
                current = current.replace_column(binned)?;
            }
        }
        Operation::BoxCox => {
            for t in &step.targets {
                let c = current.column(t)?;
                let (out, params) = match boxcox(c) {
                    Err(e) if degenerate(&e) => {
                        result.skipped.push(t.clone());
                        continue;
                    }
                    r => r?,
                };
                result.cells_changed += changed(c, &out);
                fitted.insert(t.clone(), to_json(&params).unwrap_or_default());
                current = current.replace_column(out)?;
            }
        }
        Operation::Power { kind } => {
            for t in &step.targets {
                let c = current.column(t)?;
                let out = apply_power(c, *kind)?;
                result.cells_changed += changed(c, &out);
                current = current.replace_column(out)?;
            }
        }
        Operation::ZScore => {
            for t in &step.targets {
                let c = current.column(t)?;
                let (out, params) = match zscore(c) {
                    Err(e) if degenerate(&e) => {
                        result.skipped.push(t.clone());
                        continue;
                    }
                    r => r?,
                };
                result.cells_changed += changed(c, &out);
                fitted.insert(t.clone(), to_json(&params).unwrap_or_default());
                current = current.replace_column(out)?;
            }
        }
        Operation::MinMax { lo, hi } => {
            for t in &step.targets {
                let c = current.column(t)?;
                let (out, params) = match minmax(c, (*lo, *hi)) {
                    Err(e) if degenerate(&e) => {
                        result.skipped.push(t.clone());
                        continue;
                    }
                    r => r?,
                };
                result.cells_changed += changed(c, &out);
                fitted.insert(t.clone(), to_json(&params).unwrap_or_default());
                current = current.replace_column(out)?;
            }
        }
    }

    result.rows_after = current.row_count();
    if !fitted.is_empty() {
        result.fitted = to_json(&fitted);
    }
    Ok((current, result))
}
