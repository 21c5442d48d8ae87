use std::process::{Command, Output};

use congruence_core::report::Report;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_congruence"))
        .args(args)
        .env_remove("CONGRUENCE_CLOSURE_CAP")
        .env_remove("CONGRUENCE_ENUM_CAP")
        .output()
        .expect("binary runs")
}

fn report_of(out: &Output) -> Report {
    Report::from_json(std::str::from_utf8(&out.stdout).unwrap()).expect("valid report")
}

#[test]
fn explog_selftest_example() {
    let out = run(&["explog-selftest", "--p", "5", "--N", "6", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert!(r.pass);
    assert_eq!(r.records[0]["exp_log_round_trips"], 500);
    assert_eq!(r.records[0]["log_exp_round_trips"], 500);
}

#[test]
fn approx_worst_case_example() {
    let out = run(&[
        "approx",
        "--worst-case",
        "--p",
        "3",
        "--n",
        "4",
        "--certify-optimality",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = report_of(&out);
    assert_eq!(r.records[0]["m_achieved"], 2);
    assert_eq!(r.records[0]["optimal_refuted_at"], 3);
}

#[test]
fn approx_reads_lattice_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lattice.json");
    // Z h + p Z e + p^4 Z f at p = 3
    std::fs::write(
        &path,
        r#"{"p":3,"N":7,"columns":[[0,1,0],[3,0,0],[0,0,81]]}"#,
    )
    .unwrap();
    let out = run(&[
        "approx",
        "--p",
        "3",
        "--n",
        "4",
        "--N",
        "7",
        "--input",
        path.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = report_of(&out);
    assert!(r.records[0]["m_achieved"].as_u64().unwrap() >= 2);
}

#[test]
fn unknown_flag_is_a_config_error() {
    assert_eq!(run(&["approx", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["phi", "--p", "4", "--n", "2"]).status.code(), Some(2));
    assert_eq!(
        run(&["count", "--poly", "x +", "--p", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn budget_override_gives_exit_3() {
    let out = Command::new(env!("CARGO_BIN_EXE_congruence"))
        .args(["phi", "--p", "3", "--n", "2", "--x", "[[1,1],[0,1]]"])
        .env("CONGRUENCE_ENUM_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let bad = Command::new(env!("CARGO_BIN_EXE_congruence"))
        .args(["phi", "--p", "3", "--n", "2"])
        .env("CONGRUENCE_ENUM_CAP", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let args = [
        "explog-selftest",
        "--p",
        "7",
        "--N",
        "4",
        "--seed",
        "11",
        "--no-timing",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "explog-selftest",
        "--p",
        "7",
        "--N",
        "4",
        "--seed",
        "12",
        "--no-timing",
    ]);
    assert_ne!(report_of(&a).digest, report_of(&c).digest);
    // timing does not enter the digest
    let d = run(&["explog-selftest", "--p", "7", "--N", "4", "--seed", "11"]);
    assert_eq!(report_of(&a).digest, report_of(&d).digest);
}

#[test]
fn phi_example_matches_closed_form() {
    let out = run(&[
        "phi",
        "--p",
        "3",
        "--n",
        "2",
        "--K",
        "gamma0",
        "--x",
        "[[1,1],[0,1]]",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &report_of(&out).records[0];
    assert_eq!(rec["match"], true);
    assert_eq!(rec["ratio"], rec["closed_form"]);
    assert_eq!(rec["count"], 162);
    assert_eq!(rec["total"], 648);
}

#[test]
fn cdelta_and_count_examples() {
    let out = run(&["cdelta", "--gamma", "[[1,1],[0,1]]", "--gamma0", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &report_of(&out).records[0];
    assert_eq!(rec["index"], 12);
    assert_eq!(rec["count"], 3);

    for mode in ["affine", "sl2", "schmidt"] {
        let out = run(&[
            "count",
            "--poly",
            "x0^2+x1^2",
            "--p",
            "3",
            "--n",
            "2",
            "--mode",
            mode,
        ]);
        assert_eq!(out.status.code(), Some(0), "{mode}");
        let rec = &report_of(&out).records[0];
        assert!(rec["bound_form"].is_string());
        assert_eq!(rec["pass"], true);
    }
    // x^2 + y^2 ≡ 0 mod 9 forces x ≡ y ≡ 0 mod 3
    let out = run(&["count", "--poly", "x0^2+x1^2", "--p", "3", "--n", "2"]);
    assert_eq!(report_of(&out).records[0]["count"], 9);
}

#[test]
fn nori_reports_smallest_passing_prime() {
    let out = run(&["nori", "--p", "7", "--roundtrip"]);
    assert_eq!(out.status.code(), Some(0));
    let rec = &report_of(&out).records[0];
    assert_eq!(rec["smallest_passing_p_so_far"], 5);
    assert_eq!(rec["subgroup_count"], 10);
    assert_eq!(rec["algebra_count"], 10);
    // below the floor: a warning, not a failure
    let small = run(&["nori", "--p", "3", "--roundtrip"]);
    assert_eq!(small.status.code(), Some(0));
    assert!(!report_of(&small).anomalies.is_empty());
}

#[test]
fn csv_projection_and_merge() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("decay.csv");
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let out = run(&[
        "cdelta",
        "--decay-table",
        "--primes",
        "3,5",
        "--n-max",
        "2",
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let headers = reader.headers().unwrap().clone();
    let ratio = headers.iter().position(|h| h == "ratio").unwrap();
    let predicted = headers.iter().position(|h| h == "predicted").unwrap();
    assert!(rows.iter().all(|r| r[ratio] == r[predicted]));

    run(&[
        "explog-selftest",
        "--p",
        "5",
        "--N",
        "3",
        "--out",
        b.to_str().unwrap(),
    ]);
    let merged = run(&[
        "report-merge",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        a.to_str().unwrap(),
    ]);
    assert_eq!(merged.status.code(), Some(0));
    let m = report_of(&merged);
    assert_eq!(m.command, "report-merge");
    assert_eq!(m.records.len(), 2);

    std::fs::write(&b, "{\"schema_version\": 1}").unwrap();
    assert_eq!(
        run(&["report-merge", b.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn json_schema_lists_report_fields() {
    let out = run(&["--json-schema"]);
    assert_eq!(out.status.code(), Some(0));
    let schema: Value = serde_json::from_slice(&out.stdout).unwrap();
    let required: Vec<&str> = schema["required"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(required.contains(&"digest"));
    assert!(required.contains(&"config"));
}
