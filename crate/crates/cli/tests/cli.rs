use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("dataprep-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn dataprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dataprep")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const DATA: &str = "id,score,color\n1,3.5,red\n2,,blue\n3,4.0,red\n4,2.5,\n5,9.0,blue\n6,3.0,red\n";

#[test]
fn malformed_inputs_exit_with_3() {
    let dir = scratch("malformed");
    let ragged = dir.join("ragged.csv");
    std::fs::write(&ragged, "a,b\n1,2\n3\n").unwrap();
    let o = dataprep(&["profile", ragged.to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    let data = dir.join("d.csv");
    std::fs::write(&data, DATA).unwrap();
    let plan = dir.join("plan.json");
    let o = dataprep(&["plan", data.to_str().unwrap(), "-o", plan.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&plan).unwrap();
    std::fs::write(&plan, text.replace("\"version\": 1", "\"version\": 7")).unwrap();
    let out = dir.join("out.csv");
    let o = dataprep(&["run", data.to_str().unwrap(), "--plan", plan.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn plan_for_other_file_is_rejected() {
    let dir = scratch("fingerprint");
    let data = dir.join("d.csv");
    std::fs::write(&data, DATA).unwrap();
    let plan = dir.join("plan.json");
    assert_eq!(code(&dataprep(&["plan", data.to_str().unwrap(), "-o", plan.to_str().unwrap()])), 0);
    let other = dir.join("other.csv");
    std::fs::write(&other, DATA.replace("9.0", "9.5")).unwrap();
    let out = dir.join("out.csv");
    let o = dataprep(&["run", other.to_str().unwrap(), "--plan", plan.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("fingerprint"));
}

#[test]
fn unrepaired_violations_exit_with_2_and_keep_the_report() {
    let dir = scratch("violation");
    let data = dir.join("d.csv");
    std::fs::write(&data, DATA).unwrap();
    let constraints = dir.join("constraints.json");
    let doc = serde_json::json!({
        "format": "dataprep-constraints",
        "version": 1,
        "constraints": [{ "kind": "domain", "column": "color", "allowed": ["red"] }],
    });
    std::fs::write(&constraints, doc.to_string()).unwrap();
    let plan = dir.join("plan.json");
    let o = dataprep(&[
        "plan",
        data.to_str().unwrap(),
        "--constraints",
        constraints.to_str().unwrap(),
        "-o",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // a repaired run is clean
    let out = dir.join("out.csv");
    let report = dir.join("report.json");
    let run = |plan: &PathBuf| {
        dataprep(&[
            "run",
            data.to_str().unwrap(),
            "--plan",
            plan.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ])
    };
    assert_eq!(code(&run(&plan)), 0);
    assert!(!std::fs::read_to_string(&out).unwrap().contains("blue"));

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    v["steps"]
        .as_array_mut()
        .unwrap()
        .retain(|s| s["operation"]["op"] != "repair_constraints");
    let unrepaired = dir.join("unrepaired.json");
    std::fs::write(&unrepaired, v.to_string()).unwrap();
    let o = run(&unrepaired);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("violation"));
    let partial: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(!partial["constraints_after"].as_array().unwrap().is_empty());
}

#[test]
fn profile_and_plot_recommendations_are_json() {
    let dir = scratch("profile");
    let data = dir.join("d.csv");
    std::fs::write(&data, DATA).unwrap();
    let o = dataprep(&["profile", data.to_str().unwrap(), "--target", "score"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["format"], "dataprep-profile");
    assert_eq!(v["rows"], 6);
    assert_eq!(v["eda"]["profiles"].as_array().unwrap().len(), 3);

    let o = dataprep(&["recommend-plot", data.to_str().unwrap(), "--x", "color", "--y", "score"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["recommendation"]["plot_type"].is_string());
}
