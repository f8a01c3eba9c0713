use std::path::Path;
use std::process::{Command, Output};

fn mplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mplab")).args(args).output().expect("spawn mplab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn spectrum_prints_ground_energy() {
    let out = mplab(&["ising", "spectrum", "--L", "4", "--k", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let e0: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    // Periodic L=4 ground energy: -2 Σ_k cos(k/2) over k = ±π/4, ±3π/4.
    let want = -2.0 * (2.0 * (std::f64::consts::PI / 8.0).cos() + 2.0 * (3.0 * std::f64::consts::PI / 8.0).cos());
    assert!((e0 - want).abs() < 1e-9, "{e0} vs {want}");
}

#[test]
fn renyi_curve_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let out = mplab(&["renyi", "curve", "--L", "6", "--channel", "z", "--p", "0.3", "--out", path(&csv)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("l,chord,value,method"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn shadow_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("s.bin");
    let est = dir.path().join("e.csv");
    let out = mplab(&["--seed", "3", "shadow", "simulate", "--L", "3", "--M", "500", "--out", path(&data)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = mplab(&[
        "shadow",
        "estimate",
        "--input",
        path(&data),
        "--quantity",
        "purity",
        "--jackknife",
        "--out",
        path(&est),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&est).unwrap();
    assert!(text.lines().next().unwrap().contains("quantity"));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn svd_decode_noiseless_is_perfect() {
    let out = mplab(&["decode", "svd", "--L", "3", "--p", "0"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let fe: f64 = row[4].parse().unwrap();
    assert!((fe - 1.0).abs() < 1e-9);
}

#[test]
fn violated_sandwich_exits_one() {
    let out = mplab(&["bounds", "--L", "3", "--channel", "z", "--p", "0.1", "--fe", "0"]);
    assert_eq!(code(&out), 1);
    let out = mplab(&["bounds", "--L", "3", "--channel", "z", "--p", "0.1"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn argument_errors_exit_two() {
    assert_eq!(code(&mplab(&["decode", "svd", "--L", "3", "--p", "1.5"])), 2);
    assert_eq!(code(&mplab(&["renyi", "curve"])), 2);
    assert_eq!(code(&mplab(&["no-such-command"])), 2);
}

#[test]
fn memory_cap_exits_three() {
    let out = mplab(&["--mem-cap", "1K", "renyi", "curve", "--L", "8", "--p", "0.1"]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn empty_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/empty.toml");
    let out_dir = dir.path().join("out");
    let out = mplab(&["run", path(&cfg), "--out-dir", path(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!out_dir.exists() || std::fs::read_dir(&out_dir).unwrap().next().is_none());
}

#[test]
fn run_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/fig3.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = mplab(&["--seed", "1", "run", path(&cfg), "--out-dir", path(d), "--L", "3", "--p", "0.2,0.6"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ca, cb) = (a.join("fig3.csv"), b.join("fig3.csv"));
    assert_eq!(std::fs::read(&ca).unwrap(), std::fs::read(&cb).unwrap());
    assert_eq!(code(&mplab(&["compare", path(&ca), path(&cb)])), 0);

    let text = std::fs::read_to_string(&cb).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let fe_col = lines[0].split(',').position(|h| h == "F_e").unwrap();
    let mut cells: Vec<String> = lines[1].split(',').map(String::from).collect();
    cells[fe_col] = format!("{}", cells[fe_col].parse::<f64>().unwrap() - 1e-3);
    lines[1] = cells.join(",");
    std::fs::write(&cb, lines.join("\n") + "\n").unwrap();
    assert_eq!(code(&mplab(&["compare", path(&ca), path(&cb)])), 1);
    assert_eq!(code(&mplab(&["compare", path(&ca), path(&cb), "--tol", "F_e=1e-2"])), 0);
}
