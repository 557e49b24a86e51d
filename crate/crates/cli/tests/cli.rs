use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dlie_cli::workspace::{RawCochain, RawWorkspace};
use dlie_cli::{parse_workspace, rational::from_vec};
use dlie_core::corpus::{random_cochain, rng};
use dlie_core::lierinehart::{is_cocycle, FlatConnectionModule};
use serde_json::Value;

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn dlie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dlie")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8")
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn dual() -> String {
    manifest("data/dual_numbers.json").display().to_string()
}

fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(manifest("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    v
}

#[test]
fn empty_document_is_an_empty_workspace() {
    let ws = parse_workspace("{}").unwrap();
    assert!(ws.algebras.is_empty() && ws.cocycles.is_empty() && ws.connections.is_empty());
    assert!(ws.reports.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "empty.json", "{}");
    let o = dlie(&["validate", "-w", &p]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "");
}

#[test]
fn dual_numbers_file_has_one_algebra_and_one_derivation() {
    let ws = dlie_cli::load_workspace(Path::new(&dual())).unwrap();
    assert_eq!(ws.algebras.len(), 1);
    assert!(ws.is_valid());
    let o = dlie(&["derivations", "-w", &dual(), "-n", "A"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(manifest("tests/golden/dual_derivations.txt")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn undefined_cocycle_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(
        &dir,
        "dangling.json",
        r#"{"algebras": {"A": {"kind": "rationals"}}, "dlie": {"T": {"kind": "d1", "cocycle": "g"}}}"#,
    );
    let o = dlie(&["validate", "-w", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("\"g\""), "{}", stderr(&o));
    assert!(matches!(
        parse_workspace(&std::fs::read_to_string(&p).unwrap()),
        Err(dlie_cli::WorkspaceError::Object { section: "dlie", .. })
    ));
}

#[test]
fn unknown_fields_are_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        r#"{"algebras": {"A": {"kind": "rationals", "x": 1}}}"#,
        r#"{"algebras": {"A": {"kind": "truncated", "degree": 2, "unit": ["1"]}}}"#,
        r#"{"algebra": {}}"#,
    ]
    .iter()
    .enumerate()
    {
        let p = write_temp(&dir, &format!("u{i}.json"), text);
        let o = dlie(&["validate", "-w", &p]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let e = stderr(&o);
        assert!(e.contains("unknown field") && e.contains("line 1 column"), "{e}");
    }
}

#[test]
fn syntax_errors_report_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "bad.json", "{\n  \"algebras\": [\n");
    let o = dlie(&["validate", "-w", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2 column"), "{}", stderr(&o));
    let p = write_temp(&dir, "rat.json", r#"{"algebras": {"A": {"kind": "table", "labels": ["1"], "unit": ["1/0"], "products": {}}}}"#);
    assert_eq!(dlie(&["validate", "-w", &p]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(dlie(&["frobnicate", "-w", &dual()]).status.code(), Some(2));
    assert_eq!(dlie(&["validate"]).status.code(), Some(2));
    assert_eq!(dlie(&["derivations", "-w", &dual()]).status.code(), Some(2));
    assert_eq!(dlie(&["derivations", "-w", &dual(), "-n", "B"]).status.code(), Some(2));
    assert_eq!(dlie(&["validate", "-w", "/nonexistent/ws.json"]).status.code(), Some(2));
}

#[test]
fn corpus_validates() {
    for f in corpus_files() {
        let o = dlie(&["validate", "-w", f.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", f.display());
        assert!(!stdout(&o).contains("[FAIL]"));
    }
}

#[test]
fn class_equal_with_itself_has_zero_witness() {
    let o = dlie(&["class-equal", "-w", &dual(), "-n", "exact", "-n", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("cohomologous: true") && s.contains("phi: 0"), "{s}");
}

#[test]
fn reconstruct_after_functor_finds_isomorphism() {
    let o = dlie(&["build-dlie", "-w", &dual(), "-n", "Line", "-n", "exact"]);
    assert_eq!(o.status.code(), Some(0));
    let o = dlie(&["reconstruct", "-w", &dual(), "-n", "F_line"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("isomorphism: found"));
}

#[test]
fn nonfree_quotient_is_a_mathematical_failure() {
    let o = dlie(&["reconstruct", "-w", &dual(), "-n", "F_exact"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("not a free A-module"));
}

/// The plane corpus algebra with a 2-cochain whose differential is nonzero.
fn non_cocycle_workspace() -> String {
    let text = std::fs::read_to_string(manifest("corpus/plane.json")).unwrap();
    let mut raw: RawWorkspace = serde_json::from_str(&text).unwrap();
    let ws = parse_workspace(&text).unwrap();
    let l = &ws.lie_rinehart["Der"].lr;
    let m = FlatConnectionModule::trivial(l);
    let mut r = rng(7);
    let f = (0..50)
        .map(|_| random_cochain(l, &m, 2, &mut r))
        .find(|f| !is_cocycle(l, &m, f).unwrap().is_cocycle)
        .expect("a non-cocycle");
    let mut values = BTreeMap::new();
    for (t, v) in f.tuples().iter().zip(f.values()) {
        let key: Vec<String> = t.iter().map(|i| i.to_string()).collect();
        values.insert(key.join(","), from_vec(v));
    }
    raw.cocycles.insert("bad".into(), RawCochain::Values { lie_rinehart: "Der".into(), degree: 2, values });
    serde_json::to_string(&raw).unwrap()
}

#[test]
fn non_cocycle_build_d1_gives_jacobi_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_temp(&dir, "nc.json", &non_cocycle_workspace());
    assert_eq!(dlie(&["validate", "-w", &p]).status.code(), Some(0));
    let o = dlie(&["cocycle-check", "-w", &p, "-n", "bad"]);
    assert_eq!(o.status.code(), Some(1));
    let o = dlie(&["build-d1", "-w", &p, "-n", "bad"]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.contains("is_cocycle: false"), "{s}");
    assert!(s.contains("FAIL jacobi") && s.contains("witness: jacobi at ("), "{s}");
}

#[test]
fn repeated_runs_are_identical() {
    for f in corpus_files().iter().filter(|f| !f.ends_with("classes.json")) {
        let w = f.to_str().unwrap();
        for json in [false, true] {
            let mut args = vec!["suite", "-w", w];
            if json {
                args.push("--json");
            }
            let a = dlie(&args);
            let b = dlie(&args);
            assert_eq!(a.status.code(), Some(0), "{w}");
            assert_eq!(a.stdout, b.stdout, "{w}");
        }
    }
}

/// Text rendering of the JSON report, written against the JSON schema only.
fn render_from_json(v: &Value) -> String {
    let mut out = String::new();
    for o in v.as_array().unwrap() {
        let status = if o["passed"].as_bool().unwrap() { "pass" } else { "FAIL" };
        writeln!(out, "== {} {} [{status}]", o["command"].as_str().unwrap(), o["subject"].as_str().unwrap()).unwrap();
        for (k, val) in o["facts"].as_object().unwrap() {
            writeln!(out, "  {k}: {}", val.as_str().unwrap()).unwrap();
        }
        for r in o["reports"].as_array().unwrap() {
            let checks = r["checks"].as_array().unwrap();
            let valid = checks.iter().all(|c| c["failures"].as_u64() == Some(0));
            writeln!(out, "  {}: {}", r["subject"].as_str().unwrap(), if valid { "valid" } else { "INVALID" }).unwrap();
            for c in checks {
                let n = c["failures"].as_u64().unwrap();
                let name = c["name"].as_str().unwrap();
                if n == 0 {
                    writeln!(out, "    ok   {name}").unwrap();
                } else {
                    writeln!(out, "    FAIL {name} ({n} violations)").unwrap();
                }
            }
            for w in r["violations"].as_array().unwrap() {
                let idx: Vec<String> = w["indices"].as_array().unwrap().iter().map(|i| i.to_string()).collect();
                writeln!(
                    out,
                    "    witness: {} at ({}): {} != {}",
                    w["check"].as_str().unwrap(),
                    idx.join(","),
                    w["lhs"].as_str().unwrap(),
                    w["rhs"].as_str().unwrap()
                )
                .unwrap();
            }
            for n in r["notes"].as_array().unwrap() {
                writeln!(out, "    note: {}", n.as_str().unwrap()).unwrap();
            }
        }
    }
    out
}

#[test]
fn json_and_human_reports_carry_the_same_facts() {
    let dir = tempfile::tempdir().unwrap();
    let nc = write_temp(&dir, "nc.json", &non_cocycle_workspace());
    let mut runs: Vec<Vec<String>> = corpus_files()
        .iter()
        .filter(|f| !f.ends_with("classes.json"))
        .map(|f| vec!["suite".into(), "-w".into(), f.display().to_string()])
        .collect();
    runs.push(vec!["build-d1".into(), "-w".into(), nc.clone(), "-n".into(), "bad".into()]);
    runs.push(vec!["reconstruct".into(), "-w".into(), dual(), "-n".into(), "F_exact".into()]);
    for args in runs {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let human = dlie(&args);
        let mut with_json = args.clone();
        with_json.push("--json");
        let json = dlie(&with_json);
        assert_eq!(human.status.code(), json.status.code(), "{args:?}");
        let v: Value = serde_json::from_slice(&json.stdout).unwrap();
        assert_eq!(render_from_json(&v), stdout(&human), "{args:?}");
    }
}

#[test]
fn section_filter_restricts_validation() {
    let o = dlie(&["validate", "-w", &dual(), "--section", "cocycles"]);
    assert_eq!(o.status.code(), Some(0));
    let heads: Vec<String> = stdout(&o).lines().filter(|l| l.starts_with("== ")).map(String::from).collect();
    assert_eq!(heads, ["== validate cocycles.exact [pass]", "== validate cocycles.zero [pass]"]);
    assert_eq!(dlie(&["validate", "-w", &dual(), "--section", "nope"]).status.code(), Some(2));
}
