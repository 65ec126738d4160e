use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn chscale(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chscale"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("CHSCALE_OUT")
        .env_remove("CHSCALE_THREADS")
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn classify_d3_is_irrelevant() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = chscale(&["classify", "--config", &config("ch_d3.json")], &out);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("aggregate: irrelevant"), "{text}");
    let report = json(&out.join("classify.json"));
    assert_eq!(report["classification"]["aggregate"], "Irrelevant");
    assert_eq!(report["prediction"]["decay_exponent"], "3/4");
    assert!(out.join("classify.txt").is_file());
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"schema_version": 1, "spec": {"n": 2}, "colour": 1}"#).unwrap();
    let out = tmp.path().join("out");
    let o = chscale(&["classify", "--config", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    let report: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(report["exit_code"], 2);
    assert_eq!(report["kind"], "validation");

    let o = chscale(&["classify", "--config", tmp.path().join("missing.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let o = chscale(&["simulate"], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn large_data_exits_3_with_diagnostic_snapshot() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("blow");
    let o = chscale(&["simulate", "--config", &config("blowup_d1.json")], &out);
    assert_eq!(o.status.code(), Some(3));
    let report = json(&out.join("error.json"));
    assert_eq!(report["kind"], "numerical");
    let header = json(&out.join("run/failure_state.json"));
    assert_eq!(header["grid"]["points"], 128);
    assert!(out.join("run/failure_state.bin").is_file());
    assert!(out.join("run/run.json").is_file());
}

#[test]
fn simulate_then_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    let o = chscale(&["simulate", "--config", &config("simulate_d1.json"), "--gnuplot"], &sim);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(sim.join("run/series.gp").is_file());
    let run = sim.join("run");
    let ana = tmp.path().join("ana");
    let o = chscale(
        &["analyze", run.to_str().unwrap(), "--config", &config("simulate_d1.json"), "--gnuplot"],
        &ana,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&ana.join("analysis.json"));
    let b = report["predicted_amplitude"].as_f64().unwrap();
    let b_hat = report["amplitude"]["amplitude"].as_f64().unwrap();
    assert!((b_hat / b - 1.0).abs() < 0.15, "{b_hat} vs {b}");
    for f in ["decay.csv", "profile.csv", "profile_residuals.csv", "decay.gp", "profile.gp"] {
        assert!(ana.join(f).is_file(), "{f}");
    }
    // No stray temporaries.
    let stray = fs::read_dir(&sim).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().contains(".tmp-"));
    assert_eq!(stray.count(), 0);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = chscale(&["scaled", "--config", &config("scaled_d1.json"), "--threads", "1"], out);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["run/run.json", "run/series.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn spectrum_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("spectrum_d1.json");
    let out = tmp.path().join("eig");
    assert_eq!(chscale(&["spectrum", "eig", "--config", &cfg], &out).status.code(), Some(0));
    let eig = json(&out.join("eig.json"));
    assert_eq!(eig["eigenvalues"][1]["eigenvalue"], "-1/4");

    let out = tmp.path().join("profile");
    assert_eq!(chscale(&["spectrum", "profile", "--config", &cfg], &out).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(csv.starts_with("x1,value,error_estimate\n"));
    assert_eq!(csv.lines().count(), 513);
    assert!((json(&out.join("profile.json"))["integral"].as_f64().unwrap() - 2.5066282746310002).abs() < 1e-8);

    let out = tmp.path().join("kernel");
    assert_eq!(chscale(&["spectrum", "kernel", "--config", &cfg], &out).status.code(), Some(0));
    assert_eq!(fs::read_to_string(out.join("kernel.csv")).unwrap().lines().count(), 202);

    let out = tmp.path().join("fit");
    assert_eq!(chscale(&["spectrum", "decay-fit", "--config", &cfg], &out).status.code(), Some(0));
    let fit = json(&out.join("decay_fit.json"));
    assert!(fit["relative_error"].as_f64().unwrap().abs() < 0.05);
}

#[test]
fn scenario_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = chscale(&["scenario", "semigroup_eig"], &out);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() >= 3, "{stdout}");
    assert_eq!(json(&out.join("report.json"))["passed"], true);
    assert_eq!(chscale(&["scenario", "nope"], &out).status.code(), Some(2));
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_chscale"))
        .args(["classify", "--config", &config("ch_d1.json")])
        .env("CHSCALE_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("classify.json").is_file());
}
