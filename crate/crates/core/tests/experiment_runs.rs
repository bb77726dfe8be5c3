use std::fs;
use std::path::Path;

use mch_core::experiments::{run_case, sweep, ErrorNorm, ExperimentConfig};
use mch_core::{Error, Kappa, Period};

fn small(out: Option<&Path>) -> ExperimentConfig {
    ExperimentConfig {
        structure: 2,
        kappa: Kappa::TwoPlusSine,
        eps: Period::from_inverse(4).unwrap(),
        layers: 1,
        n_fine: 20,
        out: out.map(Path::to_path_buf),
        ..Default::default()
    }
}

fn csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("case");
    let cfg = ExperimentConfig { dump_basis: true, ..small(Some(&out)) };
    let report = run_case(&cfg).unwrap();
    for f in ["manifest.json", "errors.csv", "coefficients.csv", "fields_ref.csv", "fields_macro.csv", "averages.csv", "labels.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert_eq!(fs::read_dir(out.join("basis")).unwrap().count(), 16);

    let errors = fs::read_to_string(out.join("errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(lines.next(), Some("structure,kappa,eps,l,e1,e2"));
    assert!(lines.next().unwrap().starts_with("2,sine,1/4,1,"));

    let coeffs = fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert_eq!(coeffs.lines().count(), 17);
    assert_eq!(coeffs.lines().next().unwrap().split(',').count(), 1 + 4 + 8 + 8 + 16 + 2 + 4);

    let labels = fs::read_to_string(out.join("labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 1 + 20 * 20);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["structure_id"], 2);
    assert_eq!(manifest["eps"], "1/4");
    assert_eq!(manifest["n_fine"], 20);
    assert_eq!(manifest["error_norm"], "sqrt");
    assert_eq!(manifest["e1"].as_f64().unwrap(), report.errors[0]);
    // the manifest alone reproduces the run
    let again: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(again, cfg);
    assert!(report.errors.iter().all(|e| *e >= 0.0));
    assert!(report.max_constraint_residual <= 1e-9);
}

#[test]
fn identical_runs_give_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_case(&small(Some(&a))).unwrap();
    run_case(&small(Some(&b))).unwrap();
    let (ca, cb) = (csvs(&a), csvs(&b));
    assert_eq!(ca.len(), 6);
    assert_eq!(ca, cb);
}

#[test]
fn failed_run_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("zero");
    let cfg = ExperimentConfig { source_amplitude: 0.0, dump_basis: true, ..small(Some(&out)) };
    let err = run_case(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "errors", .. }), "{err}");
    assert!(!out.exists());
}

#[test]
fn invalid_config_fails_before_solving() {
    let cfg = ExperimentConfig { layers: 5, ..small(None) };
    assert!(matches!(run_case(&cfg), Err(Error::Stage { stage: "config", .. })));
}

#[test]
fn scaling_source_scales_solutions() {
    let base = run_case(&small(None)).unwrap();
    let tripled = run_case(&ExperimentConfig { source_amplitude: 3.0, ..small(None) }).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    for (x, y) in base.reference_averages.iter().zip(&tripled.reference_averages) {
        for i in 0..2 {
            if let (Some(u), Some(v)) = (x[i], y[i]) {
                assert!(close(3.0 * u, v));
            }
        }
    }
    for (x, y) in base.macro_averages.iter().zip(&tripled.macro_averages) {
        for i in 0..2 {
            assert!(close(3.0 * x[i], y[i]));
        }
    }
    for i in 0..2 {
        assert!(close(base.errors[i], tripled.errors[i]));
    }
}

#[test]
fn ratio_norm_is_square_of_sqrt_norm() {
    let s = run_case(&small(None)).unwrap();
    let r = run_case(&ExperimentConfig { error_norm: ErrorNorm::Ratio, ..small(None) }).unwrap();
    for i in 0..2 {
        assert!((s.errors[i] * s.errors[i] - r.errors[i]).abs() <= 1e-14);
    }
}

#[test]
fn sweep_logs_failures_and_keeps_other_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut configs = Vec::new();
    for (structure, kappa) in [(1, Kappa::ConstantOne), (1, Kappa::TwoPlusSine), (2, Kappa::ConstantOne), (2, Kappa::TwoPlusSine)] {
        for inv in [2, 4] {
            for l in [0, 1] {
                let failing = structure == 2 && kappa == Kappa::ConstantOne;
                configs.push(ExperimentConfig {
                    structure,
                    kappa,
                    eps: Period::from_inverse(inv).unwrap(),
                    layers: l,
                    n_fine: 20,
                    source_amplitude: if failing { 0.0 } else { 1.0 },
                    ..Default::default()
                });
            }
        }
    }
    let outcome = sweep(&configs, dir.path()).unwrap();
    assert!(!outcome.succeeded());
    assert_eq!(outcome.tables.len(), 3);
    assert_eq!(outcome.reports.len(), 12);
    assert_eq!(outcome.failures.len(), 4);
    let log = fs::read_to_string(dir.path().join("failures.log")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(log.lines().all(|l| l.starts_with("s2_one_")));
    let merged = fs::read_to_string(dir.path().join("errors.csv")).unwrap();
    assert_eq!(merged.lines().count(), 13);

    let table = fs::read_to_string(dir.path().join("table_s1_sine.md")).unwrap();
    assert!(table.contains("| l | e1 (1/2) | e2 (1/2) | e1 (1/4) | e2 (1/4) |"));
    let rows: Vec<&str> = table.lines().filter(|l| l.starts_with("| 0 |") || l.starts_with("| 1 |")).collect();
    assert_eq!(rows.len(), 2);
    assert!(!dir.path().join("table_s2_one.md").exists());
}
