use std::collections::BTreeSet;

use dataprep_core::cleaner::{validate_constraints, Constraint, ConstraintSet, ImputeStrategy};
use dataprep_core::fixtures::{air_quality_like, house_prices_like};
use dataprep_core::pipeline::{
    build_plan, execute_plan, execute_plan_on, export_csv, fingerprint, plan_for_bytes, CleaningPlan, Operation,
    Origin, PipelineError, PlanOptions, ReportOptions, RunReport,
};
use dataprep_core::tabular::{parse_csv, to_csv_bytes, Column, Dataset, ParseOptions};

fn parse(bytes: &[u8]) -> Dataset {
    parse_csv(bytes, &ParseOptions::default()).unwrap().0
}

fn plan_for(bytes: &[u8], target: Option<&str>) -> CleaningPlan {
    let opts = PlanOptions {
        target: target.map(str::to_string),
        ..PlanOptions::default()
    };
    plan_for_bytes(bytes, &ParseOptions::default(), &ConstraintSet::default(), &opts)
        .unwrap()
        .2
}

fn has_step(plan: &CleaningPlan, pred: impl Fn(&Operation) -> bool, column: &str) -> bool {
    plan.steps
        .iter()
        .any(|s| pred(&s.operation) && s.targets.iter().any(|t| t == column))
}

const SMALL: &str = "a,b,c\n1,x,2.5\n2,,3.5\n,y,\n4,x,1.0\n5,y,\n6,x,7.0\n";

#[test]
fn empty_plan_is_identity() {
    let bytes = SMALL.as_bytes();
    let plan = CleaningPlan::new(fingerprint(bytes), 0);
    let (out, report) = execute_plan(bytes, &plan).unwrap();
    assert!(out.same_content(&parse(bytes)));
    // same records, RFC 4180 line endings, shortest float rendering
    let expected = SMALL.replace(".0\n", "\n").replace('\n', "\r\n");
    assert_eq!(String::from_utf8(to_csv_bytes(&out, ',')).unwrap(), expected);
    assert!(report.applied_plan.is_empty());
    assert!(report.outliers.is_empty());
    assert!(report.merge_log.is_empty());
    assert!(report.constraints_before.is_empty() && report.constraints_after.is_empty());
    assert_eq!(report.input, report.output);
}

#[test]
fn drop_rows_by_missing_zero_removes_partial_rows() {
    let bytes = SMALL.as_bytes();
    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::DropRowsByMissing { threshold: 0.0 }, vec![], Origin::UserAccepted);
    let (out, report) = execute_plan(bytes, &plan).unwrap();
    assert_eq!(out.row_count(), 3);
    let r = report.applied_plan[0].result.as_ref().unwrap();
    assert_eq!(r.rows_removed, 3);
    assert_eq!(r.removed_row_ids, vec![1, 2, 4]);
    assert_eq!(out.row_ids(), &[0, 3, 5]);
}

#[test]
fn fingerprint_mismatch_is_rejected() {
    let bytes = SMALL.as_bytes();
    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::ZScore, vec!["c".into()], Origin::UserEdited);
    let edited = SMALL.replace("7.0", "7.5");
    match execute_plan(edited.as_bytes(), &plan) {
        Err(PipelineError::FingerprintMismatch { expected, found }) => {
            assert_eq!(expected, plan.fingerprint);
            assert_eq!(found, fingerprint(edited.as_bytes()));
        }
        other => panic!("expected fingerprint mismatch, got {other:?}"),
    }
}

#[test]
fn plan_json_round_trips_exactly() {
    let bytes = house_prices_like(3);
    let mut plan = plan_for(&bytes, Some("SalePrice"));
    plan.push(Operation::MinMax { lo: -1.0, hi: 0.1 + 0.2 }, vec!["LotArea".into()], Origin::UserEdited);
    plan.push(
        Operation::Winsorize {
            lower_pct: 1.0 / 3.0,
            upper_pct: 99.0,
        },
        vec!["GrLivArea".into()],
        Origin::UserAccepted,
    );
    let text = plan.to_json();
    assert_eq!(CleaningPlan::from_json(&text).unwrap(), plan);
    assert!(text.contains("\"format\": \"dataprep-plan\""));
}

#[test]
fn plan_document_version_is_checked() {
    let plan = CleaningPlan::new("00", 1);
    let text = plan.to_json().replace("\"version\": 1", "\"version\": 9");
    assert!(matches!(
        CleaningPlan::from_json(&text),
        Err(PipelineError::UnsupportedVersion { kind: "plan", found: 9 })
    ));
    assert!(matches!(
        CleaningPlan::from_json("{\"steps\": []}"),
        Err(PipelineError::Format { .. })
    ));
}

#[test]
fn clean_prescaled_data_gets_profiling_only() {
    // a uniform lattice on [-1, 1]^2: bounded, dense, nothing anomalous
    let k = 15;
    let grid = |i: usize| -1.0 + 2.0 * i as f64 / (k - 1) as f64;
    let x: Vec<f64> = (0..k * k).map(|i| grid(i / k)).collect();
    let y: Vec<f64> = (0..k * k).map(|i| grid(i % k)).collect();
    let d = Dataset::new("clean", vec![Column::numeric("x", &x), Column::numeric("y", &y)]).unwrap();
    let plan = build_plan(&d, &ConstraintSet::default(), &PlanOptions::default()).unwrap();
    assert!(
        plan.steps.iter().all(|s| s.operation == Operation::Profile),
        "{:?}",
        plan.steps
    );
    let (out, report) = execute_plan_on(&d, &plan, None, &ReportOptions::default()).unwrap();
    assert!(out.same_content(&d));
    assert!(report.applied_plan.iter().all(|s| s.result.as_ref().unwrap().cells_changed == 0));
}

#[test]
fn house_fixture_plan_shape() {
    let bytes = house_prices_like(1);
    let plan = plan_for(&bytes, Some("SalePrice"));
    let one_hot = |op: &Operation| matches!(op, Operation::OneHotEncode { .. });
    let label = |op: &Operation| *op == Operation::LabelEncode;
    let power = |op: &Operation| matches!(op, Operation::BoxCox | Operation::Power { .. });
    let scale = |op: &Operation| matches!(op, Operation::ZScore | Operation::MinMax { .. });
    assert!(has_step(&plan, one_hot, "MSZoning"));
    assert!(has_step(&plan, one_hot, "Neighborhood"));
    for q in ["ExterQual", "KitchenQual", "HeatingQC"] {
        assert!(has_step(&plan, label, q), "{q}");
    }
    for c in ["GrLivArea", "LotArea"] {
        assert!(has_step(&plan, power, c) && has_step(&plan, scale, c), "{c}");
    }
    let outliers = plan
        .steps
        .iter()
        .find(|s| matches!(s.operation, Operation::RemoveOutliers { .. }))
        .expect("outlier removal step");
    assert!(outliers.targets.iter().any(|t| t == "GrLivArea"));

    // mostly-missing columns are dropped before anything else touches them
    let dropped = plan.steps.iter().find(|s| s.operation == Operation::DropColumns).unwrap();
    for c in ["Alley", "PoolQC", "Fence", "MiscFeature"] {
        assert!(dropped.targets.iter().any(|t| t == c), "{c}");
    }
    assert!(plan.check_references(&parse(&bytes)).is_ok());
}

#[test]
fn house_fixture_run_removes_planted_rows() {
    let bytes = house_prices_like(1);
    let plan = plan_for(&bytes, Some("SalePrice"));
    let (out, report) = execute_plan(&bytes, &plan).unwrap();
    let flagged: BTreeSet<usize> = report.outliers.iter().flat_map(|o| o.flagged_row_ids.iter().copied()).collect();
    assert!(flagged.contains(&523) && flagged.contains(&1298), "{flagged:?}");
    assert!(!out.row_ids().contains(&523));
    assert!(report.eda.importance.is_some());
    // nothing downstream of imputation reintroduces missing cells
    assert!(out.columns().iter().all(|c| c.missing_count() == 0));
}

#[test]
fn air_fixture_plan_shape() {
    let bytes = air_quality_like(1);
    let plan = plan_for(&bytes, None);
    assert!(has_step(&plan, |op| matches!(op, Operation::OneHotEncode { .. }), "City"));
    assert!(has_step(&plan, |op| *op == Operation::LabelEncode, "AQI_Bucket"));
    for p in ["PM2.5", "PM10", "NO2", "SO2", "CO", "O3"] {
        assert!(has_step(&plan, |op| *op == Operation::ZScore, p), "{p}");
    }
}

#[test]
fn replay_is_byte_identical() {
    let bytes = house_prices_like(5);
    let plan = plan_for(&bytes, Some("SalePrice"));
    let plan = CleaningPlan::from_json(&plan.to_json()).unwrap();
    let (a, ra) = execute_plan(&bytes, &plan).unwrap();
    let (b, rb) = execute_plan(&bytes, &plan).unwrap();
    assert_eq!(to_csv_bytes(&a, ','), to_csv_bytes(&b, ','));
    assert_eq!(ra.to_json(), rb.to_json());
    assert_eq!(RunReport::from_json(&ra.to_json()).unwrap(), ra);
}

#[test]
fn export_round_trips_and_handles_empty() {
    let dir = std::env::temp_dir().join(format!("dataprep-export-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let d = parse(SMALL.as_bytes());
    let path = dir.join("out.csv");
    export_csv(&d, &path).unwrap();
    assert!(parse(&std::fs::read(&path).unwrap()).same_content(&d));

    let empty = d.take_rows(&[]);
    export_csv(&empty, &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b,c\r\n");

    let missing_dir = dir.join("no/such/dir/out.csv");
    assert!(matches!(export_csv(&d, &missing_dir), Err(PipelineError::Io { .. })));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn constraints_are_enforced_after_execution() {
    let bytes = b"id,v\n1,5\n2,50\n2,7\n3,\n";
    let set = ConstraintSet::new(vec![
        Constraint::Unique { columns: vec!["id".into()] },
        Constraint::Range {
            column: "v".into(),
            lo: 0.0,
            hi: 10.0,
        },
    ]);
    let (d, _, mut plan) = plan_for_bytes(bytes, &ParseOptions::default(), &set, &PlanOptions::default()).unwrap();
    assert!(plan.steps.iter().any(|s| s.operation == Operation::RepairConstraints));
    // constrained columns are never imputed or rescaled
    assert!(plan.steps.iter().all(|s| !s.operation.is_preprocessing()
        && !matches!(s.operation, Operation::Impute { .. })));
    let (out, report) = execute_plan(bytes, &plan).unwrap();
    assert!(validate_constraints(&out, &set).is_empty());
    assert!(!report.constraints_before.is_empty());
    assert!(report.constraints_after.is_empty());
    assert_eq!(out.row_count(), 3);
    let _ = d;

    let repair = plan.steps.iter().find(|s| s.operation == Operation::RepairConstraints).unwrap().id.clone();
    plan.remove_step(&repair);
    match execute_plan(bytes, &plan) {
        Err(PipelineError::ConstraintViolationAfterRepair { violations, partial }) => {
            assert_eq!(violations.len(), 2);
            assert_eq!(partial.applied_plan.len(), plan.steps.len());
        }
        other => panic!("expected violation error, got {other:?}"),
    }
}

#[test]
fn failing_step_returns_partial_report() {
    let bytes = SMALL.as_bytes();
    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::Impute { strategy: ImputeStrategy::Median }, vec!["a".into()], Origin::Recommended);
    let bad = plan.push(Operation::ZScore, vec!["b".into()], Origin::UserEdited);
    plan.push(Operation::ZScore, vec!["c".into()], Origin::Recommended);
    match execute_plan(bytes, &plan) {
        Err(PipelineError::StepFailed { step, partial, .. }) => {
            assert_eq!(step, bad);
            assert_eq!(partial.applied_plan.len(), 1);
            assert_eq!(partial.applied_plan[0].result.as_ref().unwrap().cells_changed, 1);
        }
        other => panic!("expected step failure, got {other:?}"),
    }

    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::RemoveRows { row_ids: vec![1, 99] }, vec![], Origin::UserAccepted);
    assert!(matches!(execute_plan(bytes, &plan), Err(PipelineError::StepFailed { .. })));
}

#[test]
fn remove_rows_and_exact_dedupe_use_stable_ids() {
    let bytes = b"k,v\na,1\nb,2\na,1\nc,3\nb,2\n";
    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::RemoveRows { row_ids: vec![3] }, vec![], Origin::UserAccepted);
    plan.push(Operation::DedupeExact, vec![], Origin::Recommended);
    let (out, report) = execute_plan(bytes, &plan).unwrap();
    assert_eq!(out.row_ids(), &[0, 1]);
    assert_eq!(report.applied_plan[1].result.as_ref().unwrap().removed_row_ids, vec![2, 4]);
    assert_eq!(report.merge_log.len(), 2);
    let text = serde_json::to_string(&report.merge_log[0]).unwrap();
    assert!(text.contains("\"distance\":0.0"), "{text}");
}

#[test]
fn references_to_dropped_columns_are_caught() {
    let bytes = SMALL.as_bytes();
    let d = parse(bytes);
    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::DropColumns, vec!["c".into()], Origin::Recommended);
    plan.push(Operation::OneHotEncode { cap: 10 }, vec!["b".into()], Origin::Recommended);
    plan.push(Operation::ZScore, vec!["b=x".into()], Origin::UserEdited);
    assert!(plan.check_references(&d).is_ok());
    let bad = plan.push(Operation::ZScore, vec!["c".into()], Origin::UserEdited);
    assert_eq!(plan.check_references(&d), Err((bad, "c".to_string())));
}

#[test]
fn cleaning_steps_insert_ahead_of_preprocessing() {
    let bytes = house_prices_like(2);
    let mut plan = plan_for(&bytes, Some("SalePrice"));
    let id = plan.insert_cleaning_step(
        Operation::Winsorize {
            lower_pct: 1.0,
            upper_pct: 99.0,
        },
        vec!["LotArea".into()],
        Origin::UserAccepted,
    );
    let pos = plan.steps.iter().position(|s| s.id == id).unwrap();
    assert!(plan.steps[..pos].iter().all(|s| !s.operation.is_preprocessing()));
    assert!(plan.steps[pos + 1].operation.is_preprocessing());
    let ids: BTreeSet<&str> = plan.steps.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(ids.len(), plan.steps.len());
}

#[test]
fn origin_changes_keep_their_history() {
    let mut plan = CleaningPlan::new("00", 0);
    let id = plan.push(Operation::ZScore, vec!["x".into()], Origin::Recommended);
    let s = plan.step_mut(&id).unwrap();
    s.set_origin(Origin::UserAccepted);
    s.set_origin(Origin::UserEdited);
    s.set_origin(Origin::UserEdited);
    assert_eq!(s.origin, Origin::UserEdited);
    assert_eq!(s.origin_chain, vec![Origin::Recommended, Origin::UserAccepted]);
}

#[test]
fn plans_are_deterministic() {
    let bytes = air_quality_like(4);
    assert_eq!(plan_for(&bytes, None).to_json(), plan_for(&bytes, None).to_json());
}

#[test]
fn remove_rows_skips_rows_already_gone_but_rejects_unknown_ids() {
    let bytes = b"k,v\na,1\nb,2\na,1\nc,3\n";
    let mut plan = CleaningPlan::new(fingerprint(bytes), 0);
    plan.push(Operation::DedupeExact, vec![], Origin::Recommended);
    plan.push(Operation::RemoveRows { row_ids: vec![2, 3] }, vec![], Origin::UserAccepted);
    let (out, _) = execute_plan(bytes, &plan).unwrap();
    assert_eq!(out.row_ids(), &[0, 1]);

    plan.push(Operation::RemoveRows { row_ids: vec![17] }, vec![], Origin::UserAccepted);
    assert!(matches!(execute_plan(bytes, &plan), Err(PipelineError::StepFailed { .. })));
}

#[test]
fn scaling_skips_columns_left_constant() {
    let d = Dataset::new(
        "t",
        vec![Column::numeric("x", &[1.0, 2.0, 3.0]), Column::numeric("y", &[5.5, 5.5, 5.5])],
    )
    .unwrap();
    let mut plan = CleaningPlan::new(String::new(), 0);
    plan.push(Operation::ZScore, vec!["x".into(), "y".into()], Origin::Recommended);
    plan.push(Operation::MinMax { lo: 0.0, hi: 1.0 }, vec!["y".into()], Origin::Recommended);
    let (out, report) = execute_plan_on(&d, &plan, None, &ReportOptions::default()).unwrap();
    assert_eq!(out.column("y").unwrap().observed_numbers(), vec![5.5; 3]);
    for step in &report.applied_plan {
        assert_eq!(step.result.as_ref().unwrap().skipped, vec!["y".to_string()]);
    }
    assert_eq!(out.column("x").unwrap().observed_numbers(), vec![-1.0, 0.0, 1.0]);
}

#[test]
fn constraint_documents_round_trip() {
    use dataprep_core::pipeline::{constraints_from_json, constraints_to_json};
    let set = ConstraintSet::new(vec![
        Constraint::NotNull { column: "a".into() },
        Constraint::Range {
            column: "c".into(),
            lo: 0.1,
            hi: 7.25,
        },
        Constraint::Unique {
            columns: vec!["a".into(), "b".into()],
        },
        Constraint::Domain {
            column: "b".into(),
            allowed: vec!["x".into(), "y".into()],
        },
    ]);
    let text = constraints_to_json(&set);
    assert_eq!(constraints_from_json(&text).unwrap(), set);
    assert!(matches!(
        constraints_from_json(&text.replace("\"version\": 1", "\"version\": 9")),
        Err(PipelineError::UnsupportedVersion { .. })
    ));
    assert!(matches!(constraints_from_json("{}"), Err(PipelineError::Format { .. })));
}
