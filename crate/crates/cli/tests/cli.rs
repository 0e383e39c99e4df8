use std::path::Path;
use std::process::{Command, Output};

fn symflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symflow")).args(args).output().expect("spawn symflow")
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn nilmanifold_hitchin_volume_growth() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = symflow(&["flow", "--preset", "nilmanifold", "--T", "10", "--dt", "1e-3", "--stride", "100", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    let last = rows.last().unwrap();
    let a = last[column(&h, "a")];
    assert!((last[column(&h, "t")] - 10.0).abs() < 1e-12);
    assert!(((1.0 + a).powf(1.5) - 31.0).abs() / 31.0 < 1e-6);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn torus_is_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let o = symflow(&["flow", "--preset", "torus", "--T", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert!(rows.iter().all(|r| r[1] == rows[0][1] && r[2] == rows[0][2]));
}

#[test]
fn solvmanifold_ratios_are_conserved() {
    let dir = tempfile::tempdir().unwrap();
    let o = symflow(&[
        "flow", "--preset", "solvmanifold", "--init", "0.7,1.3,2.1,0.4", "--T", "2", "--stride", "50", "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    for name in ["alphaOverDelta", "betaOverGamma"] {
        let c = column(&h, name);
        let r0 = rows[0][c];
        assert!(rows.iter().all(|r| ((r[c] - r0) / r0).abs() < 1e-8), "{name} drifts");
    }
}

#[test]
fn symbol_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = symflow(&["symbol", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("symbol.json")).unwrap()).unwrap();
    let ev: Vec<f64> = serde_json::from_value(v["eigenvalues"].clone()).unwrap();
    let want = [0.0, 0.0, 1.0, 1.0, 1.0];
    assert!(ev.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-10), "{ev:?}");

    let o = symflow(&["symbol", "--weight", "type-iia", "--xi", "0,0,1,0,0,2", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("symbol.json")).unwrap()).unwrap();
    assert_eq!(v["kernel_dimension"], 1);

    let o = symflow(&["symbol", "--xi", "0,0,0,0,0,0", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn semiflat_flat_data_has_no_residual() {
    let dir = tempfile::tempdir().unwrap();
    let o = symflow(&["semiflat", "--flat", "--n", "8", "--steps", "4", "--dump", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = csv_rows(&dir.path().join("residuals.csv"));
    let c = column(&h, "maxResidual");
    assert!(rows.iter().all(|r| r[c] <= 1e-12));
    let bytes = std::fs::read(dir.path().join("metric.bin")).unwrap();
    assert_eq!(bytes.len(), 6 * 8 * 8 * 8 * 8);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flow.toml");
    std::fs::write(&cfg, "preset = \"torus\"\nbogus = 1\n").unwrap();
    let o = symflow(&["flow", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_used_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("flow.json");
    std::fs::write(&cfg, r#"{"preset": "nilmanifold", "T": 0.5, "dt": 0.01}"#).unwrap();
    let o = symflow(&["flow", "--config", cfg.to_str().unwrap(), "--T", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (_, rows) = csv_rows(&dir.path().join("trajectory.csv"));
    assert!((rows.last().unwrap()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = symflow(&["flow", "--preset", "solvmanifold", "--T", "0.5", "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["trajectory.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn verify_subset() {
    let dir = tempfile::tempdir().unwrap();
    let o = symflow(&["verify-all", "--only", "1,7", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 2);
    let o = symflow(&["verify-all", "--only", "11", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
