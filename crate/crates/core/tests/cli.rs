//! Subcommands driven through the same entry point as the binary.

use std::path::Path;

use serde_json::Value;
use thermalcat::cli::main_with_args;

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(name);
    let mut argv = vec!["thermalcat".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--out".into());
    argv.push(out.to_string_lossy().into_owned());
    let code = main_with_args(argv);
    (code, std::fs::read_to_string(&out).unwrap_or_default())
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let meta = lines.next().expect("parameter line");
    assert!(meta.starts_with("# artifact=thermalcat/"), "{meta}");
    let header: Vec<String> = lines.next().expect("header").split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn visibility_of_hot_cat_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "v.csv", &["visibility", "--V", "100", "--d", "100", "--phi", "pi"]);
    assert_eq!(code, 0);
    let (h, rows) = csv_rows(&text);
    let v = column(&h, &rows, "v")[0];
    assert!((v - 1.0).abs() < 1e-9, "{v}");
    assert!(text.contains("V=100.0") && text.contains("phi=3.141592653589793"));
}

#[test]
fn chsh_sweep_at_zero_displacement() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "s.csv", &["chsh-sweep", "--family", "bs", "--V", "1000", "--d", "0..0", "--points", "1"]);
    assert_eq!(code, 0);
    let (h, rows) = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    let b = column(&h, &rows, "B")[0];
    assert!((b - 2.324).abs() < 0.01, "{b}");
}

#[test]
fn identical_arguments_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["bell-measure", "--V", "10", "--d", "3", "--trials", "500", "--seed", "11", "--points", "21"],
        vec!["chsh-optimize", "--family", "tm", "--V", "2", "--d", "1.5", "--restarts", "4", "--seed", "3"],
        vec!["wigner-grid", "--state", "bs", "--V", "3", "--d", "2", "--mode", "1", "--points", "15"],
        vec!["kerr-movie", "--V", "4", "--d", "1", "--frames", "3", "--points", "5"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let (c1, a) = run_to(dir.path(), &format!("a{i}"), args);
        let (c2, b) = run_to(dir.path(), &format!("b{i}"), args);
        assert_eq!((c1, c2), (0, 0), "{args:?}");
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
    let (_, other_seed) = run_to(dir.path(), "c", &["bell-measure", "--V", "1", "--d", "0.5", "--trials", "500", "--seed", "12", "--points", "3"]);
    let (_, seed_a) = run_to(dir.path(), "d", &["bell-measure", "--V", "1", "--d", "0.5", "--trials", "500", "--seed", "11", "--points", "3"]);
    assert_ne!(other_seed, seed_a);
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("wigner-grid", vec!["wigner-grid", "--state", "superposition", "--V", "2", "--d", "1", "--points", "5"]),
        ("marginal", vec!["marginal", "--state", "two-mode-thermal", "--V", "2", "--d", "2", "--mode", "1", "--theta", "pi/2"]),
        ("negativity", vec!["negativity", "--state", "qubit-field", "--V", "1", "--d", "0", "--grid-points", "15"]),
        ("visibility", vec!["visibility", "--V", "5", "--d", "2000", "--phi", "pi/1000"]),
        ("kerr-movie", vec!["kerr-movie", "--V", "2", "--d", "0", "--frames", "2", "--points", "3", "--sign", "-"]),
        ("chsh-optimize", vec!["chsh-optimize", "--V", "1", "--d", "2", "--restarts", "2"]),
        ("chsh-sweep", vec!["chsh-sweep", "--V", "2", "--d", "3", "--theta", "pi/2..pi", "--points", "3", "--restarts", "2"]),
        ("bell-measure", vec!["bell-measure", "--label", "Psi-", "--V", "2", "--d", "2", "--trials", "100", "--points", "5"]),
        ("distinguish", vec!["distinguish", "--V", "10", "--d", "1..3", "--points", "3"]),
        ("teleport", vec!["teleport", "--V", "10", "--d", "2,8", "--correction", "formal"]),
        ("oracle-check", vec!["oracle-check", "--max-V", "1", "--max-d", "0.5", "--grid-points", "5"]),
    ];
    for (name, args) in cases {
        let (code, text) = run_to(dir.path(), name, &args);
        assert_eq!(code, 0, "{name}");
        if text.starts_with('{') {
            let doc: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(doc["command"], name);
            assert!(doc["artifact"].as_str().unwrap().starts_with("thermalcat/"));
            assert!(doc["parameters"].is_object());
        } else {
            let (_, rows) = csv_rows(&text);
            assert!(!rows.is_empty(), "{name}");
            assert!(text.lines().next().unwrap().contains(&format!("command={name}")));
        }
    }
}

#[test]
fn format_flag_switches_encoding() {
    let dir = tempfile::tempdir().unwrap();
    let (_, json) = run_to(dir.path(), "j", &["distinguish", "--V", "10", "--d", "5.5", "--format", "json"]);
    let doc: Value = serde_json::from_str(&json).unwrap();
    let ps = doc["result"][0]["P_s"].as_f64().unwrap();
    assert!((ps - 0.99).abs() < 0.005, "{ps}");
    let (_, csv) = run_to(dir.path(), "c", &["teleport", "--format", "csv"]);
    assert!(csv.lines().nth(1).unwrap().starts_with("d,outcome,probability"));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["visibility", "--V", "0.9"],
        vec!["wigner-grid", "--points", "1"],
        vec!["marginal", "--theta", "half"],
        vec!["chsh-sweep", "--d", "0..1", "--theta", "0..pi"],
        vec!["teleport", "--a", "1", "--b", "1"],
        vec!["bell-measure", "--label", "Chi+"],
        vec!["no-such-command"],
    ] {
        let (code, _) = run_to(dir.path(), "x", &args);
        assert_eq!(code, 2, "{args:?}");
    }
}

#[test]
fn impossible_branch_is_reported_not_panicked() {
    let dir = tempfile::tempdir().unwrap();
    // vacuum has no odd branch
    let (code, _) = run_to(dir.path(), "x", &["wigner-grid", "--V", "1", "--d", "0", "--sign", "-"]);
    assert_eq!(code, 2);
}
