use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use secure_logreg::cli::{RunManifest, EXIT_CONFIG, EXIT_DATA, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_PARITY};
use secure_logreg::protocol::FitReport;
use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secure-logreg"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn gen(dir: &Path, out: &str, institutions: &str) {
    let o = run(
        dir,
        &["gen-data", "--records", "3000", "--features", "5", "--institutions", institutions, "--seed", "7", "--out", out],
    );
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
}

fn csvs(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| p.display().to_string())
        .collect();
    v.sort();
    v
}

#[test]
fn gen_data_is_deterministic_and_counts_files() {
    let tmp = tempfile::tempdir().unwrap();
    gen(tmp.path(), "a", "3");
    gen(tmp.path(), "b", "3");
    gen(tmp.path(), "one", "1");
    let ma = RunManifest::read(&tmp.path().join("a/manifest.json")).unwrap();
    let mb = RunManifest::read(&tmp.path().join("b/manifest.json")).unwrap();
    let digests = |m: &RunManifest| m.outputs.iter().map(|a| a.sha256.clone()).collect::<Vec<_>>();
    assert_eq!(digests(&ma), digests(&mb));
    assert_eq!(csvs(&tmp.path().join("a")).len(), 3);
    assert_eq!(csvs(&tmp.path().join("one")).len(), 1);
    let rows: usize = csvs(&tmp.path().join("a"))
        .iter()
        .map(|p| fs::read_to_string(p).unwrap().lines().count() - 1)
        .sum();
    assert_eq!(rows, 3000);
}

#[test]
fn fit_writes_report_trace_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    gen(tmp.path(), "data", "3");
    let mut args = vec!["fit", "--out", "fit", "--transcript", "fit/transcript.jsonl", "--data"];
    let files = csvs(&tmp.path().join("data"));
    args.extend(files.iter().map(String::as_str));
    let o = run(tmp.path(), &args);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));

    let report: FitReport = serde_json::from_str(&fs::read_to_string(tmp.path().join("fit/fit.json")).unwrap()).unwrap();
    assert!(report.converged);
    assert!(report.iterations <= 10);
    assert_eq!(report.samples, 3000);
    assert_eq!(report.institutions, 3);
    assert_eq!(report.coefficients, 5);
    assert!(report.central_runtime_seconds <= report.total_runtime_seconds);
    assert!(report.bytes_transmitted > 0);

    let trace = fs::read_to_string(tmp.path().join("fit/deviance.csv")).unwrap();
    assert_eq!(trace.lines().count(), report.iterations + 1);
    assert!(tmp.path().join("fit/transcript.jsonl").is_file());

    // the manifest alone reproduces the deterministic outputs
    let o = run(tmp.path(), &["rerun", "--manifest", "fit/manifest.json", "--out", "again"]);
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read(tmp.path().join("fit/deviance.csv")).unwrap(),
        fs::read(tmp.path().join("again/deviance.csv")).unwrap()
    );
}

#[test]
fn reports_never_contain_raw_rows() {
    let tmp = tempfile::tempdir().unwrap();
    gen(tmp.path(), "data", "1");
    let data = csvs(&tmp.path().join("data"))[0].clone();
    let o = run(tmp.path(), &["fit", "--data", &data, "--institutions", "4", "--out", "fit"]);
    assert_eq!(code(&o), EXIT_OK);
    let report = fs::read_to_string(tmp.path().join("fit/fit.json")).unwrap();
    let text = fs::read_to_string(&data).unwrap();
    for line in text.lines().skip(1).take(200) {
        for field in line.split(',').skip(1) {
            assert!(!report.contains(field), "covariate {field} leaked");
        }
    }
}

#[test]
fn lambda_zero_single_site_and_compare_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    gen(tmp.path(), "data", "1");
    let data = csvs(&tmp.path().join("data"))[0].clone();
    for lambda in ["0.1", "1", "10"] {
        let o = run(tmp.path(), &["compare", "--data", &data, "--institutions", "5", "--lambda", lambda, "--out", "cmp"]);
        assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stdout));
        let rep: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("cmp/compare.json")).unwrap()).unwrap();
        assert!(rep["r_squared"].as_f64().unwrap() >= 0.999999);
        assert!(rep["max_abs_diff"].as_f64().unwrap() <= 1e-6);
    }
    let o = run(tmp.path(), &["compare", "--data", &data, "--lambda", "0", "--out", "cmp1"]);
    assert_eq!(code(&o), EXIT_OK);
    let rep: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("cmp1/compare.json")).unwrap()).unwrap();
    assert!(rep["max_abs_diff"].as_f64().unwrap() <= 1e-9);
    // an impossible threshold trips the parity exit code
    let o = run(tmp.path(), &["compare", "--data", &data, "--institutions", "3", "--max-diff", "0", "--scale-bits", "8"]);
    assert_eq!(code(&o), EXIT_PARITY);
}

#[test]
fn exit_codes_separate_failure_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["fit", "--data", "missing.csv", "--out", "out"]);
    assert_eq!(code(&o), EXIT_DATA);
    assert!(!tmp.path().join("out").exists(), "no partial outputs");

    fs::write(tmp.path().join("bad.csv"), "y,x1\n0,1.0\n2,0.5\n").unwrap();
    let o = run(tmp.path(), &["fit", "--data", "bad.csv", "--out", "out"]);
    assert_eq!(code(&o), EXIT_DATA);

    gen(tmp.path(), "data", "1");
    let data = csvs(&tmp.path().join("data"))[0].clone();
    let o = run(tmp.path(), &["fit", "--data", &data, "--threshold", "4", "--centers", "3", "--out", "out"]);
    assert_eq!(code(&o), EXIT_CONFIG);
    let o = run(tmp.path(), &["fit", "--data", &data, "--modulus", "1000", "--out", "out"]);
    assert_eq!(code(&o), EXIT_CONFIG);
    let o = run(tmp.path(), &["fit", "--data", &data, "--share-policy", "none", "--out", "out"]);
    assert_eq!(code(&o), EXIT_CONFIG);
    let o = run(tmp.path(), &["fit", "--data", &data, "--max-iter", "2", "--out", "out"]);
    assert_eq!(code(&o), EXIT_NOT_CONVERGED);
}

#[test]
fn bench_emits_one_row_per_sweep_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &["bench-scaling", "--sweep", "2,3,4", "--records-per-institution", "200", "--features", "3", "--out", "bench/s.csv"],
    );
    assert_eq!(code(&o), EXIT_OK, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(tmp.path().join("bench/s.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "institutions,records,iterations,central_seconds,total_seconds,bytes_transmitted"
    );
    assert_eq!(lines.count(), 3);
    assert!(tmp.path().join("bench/s.manifest.json").is_file());
}
