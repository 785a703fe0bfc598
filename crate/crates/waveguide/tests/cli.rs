use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use waveguide::io::parse_record;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(config: &Path, out: &Path, overrides: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_waveguide"));
    cmd.arg("--config").arg(config).arg("--out").arg(out);
    for o in overrides {
        cmd.arg("--override").arg(o);
    }
    cmd.output().expect("binary runs")
}

fn record_value(path: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    parse_record(&text)
        .into_iter()
        .find(|(k, _)| k == key)
        .unwrap_or_else(|| panic!("{key} missing from {}", path.display()))
        .1
        .parse()
        .unwrap()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (head, rows)
}

fn column(head: &[String], name: &str) -> usize {
    head.iter().position(|h| h == name).unwrap()
}

fn assert_headers(dir: &Path) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let text = fs::read_to_string(&path).unwrap();
        if path.extension().is_some_and(|e| e == "toml") {
            assert!(text.starts_with('#'), "{}", path.display());
        } else {
            assert!(text.starts_with("# waveguide "), "{}", path.display());
        }
    }
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "command = \"solve\"\n[spec]\nk = -1.0\n").unwrap();
    let out = run(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    let line = err.lines().find(|l| l.starts_with("error: ")).expect("error line");
    assert!(line.contains("kind=config code=2"), "{line}");

    fs::write(&cfg, "command = \"solve\"\nbogus = 1\n").unwrap();
    assert_eq!(run(&cfg, &dir.path().join("o"), &[]).status.code(), Some(2));
}

#[test]
fn unconverged_design_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let out = run(&configs().join("design.toml"), &out_dir, &["design.max_iter=1", "spec.mesh_target_h=0.1"]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("kind=non_convergence code=4"), "{err}");
    assert!(out_dir.join("convergence.csv").exists());
}

#[test]
fn pure_strip_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&configs().join("null_test.toml"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rec = dir.path().join("coefficients.txt");
    assert!(record_value(&rec, "abs_s_minus") <= 1e-8);
    assert!(record_value(&rec, "abs_s_plus") <= 1e-8);
    assert_headers(dir.path());
}

#[test]
fn design_converges_and_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ov = ["spec.mesh_target_h=0.1"];
    for d in [&a, &b] {
        let out = run(&configs().join("design.toml"), d.path(), &ov);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let csv_a = fs::read(a.path().join("convergence.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.path().join("convergence.csv")).unwrap());

    let (head, rows) = csv_rows(&a.path().join("convergence.csv"));
    let step = column(&head, "step_norm");
    let last: f64 = rows.last().unwrap()[step].parse().unwrap();
    assert!(last <= 1e-9, "final step {last}");
    assert!(rows.len() <= 20);

    let rec = a.path().join("coefficients.txt");
    assert!(record_value(&rec, "abs_s_minus") <= 1e-6);
    assert!(record_value(&rec, "abs_s_plus") <= 1e-6);
    assert!(a.path().join("final_spec.toml").exists());
    assert_headers(a.path());
}

#[test]
fn final_spec_solves_to_the_same_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let ov = ["spec.mesh_target_h=0.1"];
    assert!(run(&configs().join("design.toml"), dir.path(), &ov).status.success());
    let spec = fs::read_to_string(dir.path().join("final_spec.toml")).unwrap();
    let cfg = dir.path().join("resolve.toml");
    fs::write(&cfg, format!("command = \"solve\"\n{spec}")).unwrap();
    let again = dir.path().join("again");
    let out = run(&cfg, &again, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for key in ["re_s_minus", "im_s_minus", "re_s_plus", "im_s_plus"] {
        let x = record_value(&dir.path().join("coefficients.txt"), key);
        let y = record_value(&again.join("coefficients.txt"), key);
        assert!((x - y).abs() <= 1e-12, "{key}: {x} vs {y}");
    }
}

#[test]
fn design_sweep_writes_one_history_per_width() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &configs().join("sweep.toml"),
        dir.path(),
        &["spec.mesh_target_h=0.1", "sweep.eps=[0.3, 0.2]"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..2 {
        let (_, rows) = csv_rows(&dir.path().join(format!("convergence_{i}.csv")));
        assert!(!rows.is_empty() && rows.len() <= 16);
    }
    let (head, rows) = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(head.join(","), waveguide::io::SWEEP_COLUMNS);
    assert_eq!(rows.len(), 2);
    assert_headers(dir.path());
}

#[test]
fn predict_and_obstruction_write_records() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run(&configs().join("predict.toml"), dir.path(), &[]).status.success());
    let first = dir.path().join("first_order.txt");
    assert!(record_value(&first, "k") > 0.0);

    let out = run(&configs().join("obstruction.toml"), dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let k_star = record_value(&dir.path().join("obstruction.txt"), "k_star_bound");
    assert!(k_star > 0.0 && k_star < std::f64::consts::PI);
    assert_headers(dir.path());
}
