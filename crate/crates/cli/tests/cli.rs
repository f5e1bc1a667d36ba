use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_dirint"));
    for var in ["DIRINT_SEED", "DIRINT_SAMPLES", "DIRINT_OUT", "DIRINT_TOLERANCE", "DIRINT_TIMING", "DIRINT_FORMAT", "DIRINT_PARTITIONS"] {
        c.env_remove(var);
    }
    c
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn dirint(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

/// Rows of a CSV report as header-keyed maps.
fn rows(out: &Output) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| header.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn scalar17_reports_fourth_root_of_17() {
    let out = dirint(&["run", bundled("scalar17.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    let expected = 17f64.powf(0.25);
    let first = &rows[0];
    assert_eq!(first["check"], "sandwich");
    assert!((num(&first["lower"]) - expected).abs() <= 1e-12 * expected);
    assert!((num(&first["upper"]) - expected).abs() <= 1e-12 * expected);
    let audit = rows.iter().find(|r| r["check"] == "phi_audit").unwrap();
    assert!((num(&audit["upper"]) - 17.0).abs() <= 1e-9 * 17.0);
    assert!(num(&audit["metric"]) <= 1e-9);
}

#[test]
fn projection_gap_is_reported_not_failed() {
    let out = dirint(&["run", bundled("projection_gap.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for r in rows(&out) {
        assert_eq!(r["equality"], "false");
        assert_eq!(r["status"], "ok");
        assert!((num(&r["lower"]) - 1.0).abs() <= 1e-6);
        assert!((num(&r["upper"]) - 2f64.sqrt()).abs() <= 1e-12);
    }
}

#[test]
fn graph_scenarios_match_hand_values() {
    let out = dirint(&["run", bundled("graph_swap.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = &rows(&out)[0];
    assert_eq!((r["p"].as_str(), r["q"].as_str()), ("2.0000000000000000e0", "2.0000000000000000e0"));
    assert_eq!(num(&r["upper"]), 2.0);
    assert_eq!(num(&r["lower"]), 2.0);

    let out = dirint(&["run", bundled("two_to_one.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    let exact = rows.iter().find(|r| r["check"] == "exact_norm").unwrap();
    assert!((num(&exact["lower"]) - 2f64.sqrt()).abs() <= 1e-12);
    let graph = rows.iter().find(|r| r["detail"].contains("variant=graph")).unwrap();
    assert_eq!(graph["status"], "rejected");
}

#[test]
fn mixed_composition_scenario() {
    let out = dirint(&["run", bundled("mixed_composition.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    let computed: Vec<_> = rows.iter().filter(|r| r["status"] == "ok").collect();
    assert_eq!(computed.len(), 4);
    for r in &computed {
        assert_eq!(r["equality"], "true");
        assert!(num(&r["metric"]) <= 1e-9);
    }
    let flipped = rows.iter().find(|r| r["detail"].contains("α>β")).unwrap();
    assert_eq!(flipped["status"], "rejected");
    // The collapsed outer map has no criterion but a well-defined norm.
    let collapsed = rows.iter().find(|r| r["detail"].starts_with("mapping=collapsed")).unwrap();
    assert_eq!(collapsed["status"], "rejected");
    assert!((num(&collapsed["lower"]) - 2f64.sqrt()).abs() <= 1e-12);
}

#[test]
fn sweep_counts_rejected_rows() {
    let out = dirint(&["sweep", bundled("scalar17.json").to_str().unwrap(), "--p", "1,2,3", "--q", "1,2,3"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = rows(&out);
    assert_eq!(rows.len(), 9);
    assert_eq!(rows.iter().filter(|r| r["status"] == "ok").count(), 6);
    let rejected: Vec<_> = rows.iter().filter(|r| r["status"] == "rejected").collect();
    assert_eq!(rejected.len(), 3);
    assert!(rejected.iter().all(|r| r["detail"].contains("rejected: p<q out of scope")));
    for r in rows.iter().filter(|r| r["p"] == r["q"]) {
        assert_eq!(r["kappa"], "inf");
    }
}

#[test]
fn phi_audit_verb() {
    let path = bundled("scalar17.json");
    let out = dirint(&["phi-audit", path.to_str().unwrap(), "--partitions", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &rows(&out)[0];
    assert!(r["detail"].contains("partitions=20"));
    assert!(num(&r["metric"]) <= 1e-9);

    let out = dirint(&["phi-audit", path.to_str().unwrap(), "--p", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rows(&out)[0]["status"], "rejected");
}

#[test]
fn single_atom_audit_has_no_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    std::fs::write(
        &path,
        r#"{"schema_version": 1, "id": "one",
            "spaces": {"T": {"t": 2}, "S": {"s": 1}},
            "relations": {"F": {"source": "S", "target": "T", "pairs": [["s", "t", 0.5]]}},
            "families": {"W": {"base": "T", "default": {"r": 2, "dim": 1}},
                         "V": {"base": "S", "default": {"r": 2, "dim": 1}}},
            "kernels": {"P": {"relation": "F", "source": "W", "target": "V", "default": {"scalar": 3}}},
            "checks": [{"kind": "phi_audit", "kernel": "P", "exponents": [[3, 2]]}]}"#,
    )
    .unwrap();
    let out = dirint(&["phi-audit", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(num(&rows(&out)[0]["metric"]), 0.0);
}

#[test]
fn input_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"schema_version\": 1, ").unwrap();
    assert_eq!(dirint(&["run", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(dirint(&["run", dir.path().join("missing.json").to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(dirint(&["run"]).status.code(), Some(1));
    assert_eq!(dirint(&["sweep", bundled("scalar17.json").to_str().unwrap(), "--p", "0.5", "--q", "1"]).status.code(), Some(1));
    assert_eq!(dirint(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_assertion_exits_2() {
    // uniform_bounds with bounds that do not hold for the kernel.
    let text = std::fs::read_to_string(bundled("two_to_one.json"))
        .unwrap()
        .replace(r#""bounds": [1, 1], "exponents": [[2, 2], [4, 2]]"#, r#""bounds": [3, 4], "exponents": [[2, 2]]"#);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wrong.json");
    std::fs::write(&path, text).unwrap();
    let out = dirint(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(rows(&out).iter().any(|r| r["status"] == "fail"));
}

#[test]
fn out_flag_and_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("report.csv");
    let path = bundled("scalar17.json");
    let out = bin()
        .args(["sweep", path.to_str().unwrap(), "--p", "4", "--q", "2", "--out", file.to_str().unwrap()])
        .env("DIRINT_FORMAT", "json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&file).unwrap();
    assert_eq!(written.first(), Some(&b'['));
    let again = dirint(&["sweep", path.to_str().unwrap(), "--p", "4", "--q", "2", "--format", "json"]);
    assert_eq!(written, again.stdout);
}

#[test]
fn json_format_keeps_column_order() {
    let out = dirint(&["run", bundled("scalar17.json").to_str().unwrap(), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let keys: Vec<_> = v[0].as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, dirint_cli::report::COLUMNS);
}
