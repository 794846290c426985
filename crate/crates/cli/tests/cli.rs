use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_povm-forge"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("POVM_FORGE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn with_config(command: &str, config: &Path, out: &Path) -> Output {
    run(&[command, "--config", config.to_str().unwrap()], out)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn forward_peaks_rise_with_order() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("forward");
    let res = with_config("forward", &configs().join("forward-two-sided.json"), &out);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let manifest = read_json(&out.join("manifest.json"));
    let modes = manifest["results"]["modes"].as_array().unwrap();
    assert_eq!(modes.len(), 16);
    let peaks: Vec<f64> = modes
        .iter()
        .map(|m| m["peak_amplitude"].as_f64().unwrap())
        .collect();
    assert!(peaks.windows(2).all(|w| w[1] > w[0]), "{peaks:?}");
    for m in &modes[1..] {
        assert!(m["peak_time"].as_f64().unwrap() > -1.25);
    }

    let csv = fs::read_to_string(out.join("forward.csv")).unwrap();
    assert!(csv.starts_with("order,t,amplitude,phase,sqrt_kappa\n"));
    assert_eq!(csv.lines().count(), 1 + 16 * 4097);

    let listed: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["file"].as_str().unwrap())
        .collect();
    assert_eq!(listed, ["drives.json", "forward.csv"]);
}

#[test]
fn invert_gaussian_reaches_full_weight() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("invert");
    let res = with_config("invert", &configs().join("invert-gaussian.json"), &out);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let manifest = read_json(&out.join("manifest.json"));
    let tail = manifest["results"]["one_minus_weight"].as_f64().unwrap();
    assert!(tail < 1e-9, "{tail}");
    assert!(
        manifest["results"]["roundtrip"]["amplitude_l2"]
            .as_f64()
            .unwrap()
            < 1e-6
    );
    for f in ["drive.csv", "mode.csv", "target.csv", "target.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(fs::read_to_string(out.join("mode.csv"))
        .unwrap()
        .starts_with("t,re,im\n"));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("superres.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let res = run(
            &["superres", "--config", cfg.to_str().unwrap(), "--seed", "7"],
            dir,
        );
        assert_eq!(
            res.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    assert_eq!(
        fs::read(a.join("superres.json")).unwrap(),
        fs::read(b.join("superres.json")).unwrap()
    );
    let (ma, mb) = (
        read_json(&a.join("manifest.json")),
        read_json(&b.join("manifest.json")),
    );
    assert_eq!(ma["outputs"], mb["outputs"]);
    assert_eq!(ma["results"], mb["results"]);
    assert_eq!(ma["inputs"]["seed"], 7);

    let est = &ma["results"]["estimate"];
    assert_eq!(est["seed"], 7);
    let eps = est["epsilon_hat"].as_f64().unwrap();
    assert!((eps - 0.05).abs() < 5.0 * est["std_error"].as_f64().unwrap());
    assert!(est["rng"].as_str().unwrap().contains("ChaCha8"));
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("superres.json");
    let one = tmp.path().join("one");
    let res = Command::new(env!("CARGO_BIN_EXE_povm-forge"))
        .args([
            "superres",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            one.to_str().unwrap(),
        ])
        .env("POVM_FORGE_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(0));
    let many = tmp.path().join("many");
    assert_eq!(with_config("superres", &cfg, &many).status.code(), Some(0));
    assert_eq!(
        fs::read(one.join("superres.json")).unwrap(),
        fs::read(many.join("superres.json")).unwrap()
    );
}

#[test]
fn missing_field_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{"target": {"family": "gaussian", "t0": 0.0, "omega0": 0.0, "t_detect": 2.0}}"#,
    );
    let out = tmp.path().join("out");
    let res = with_config("invert", &cfg, &out);
    assert_eq!(res.status.code(), Some(1));
    let record = read_json(&out.join("error.json"));
    assert_eq!(record["kind"], "validation");
    assert_eq!(record["exit_code"], 1);
    assert!(
        record["message"].as_str().unwrap().contains("sigma"),
        "{record}"
    );
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn band_gap_is_a_physical_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "eta": [0.5], "gain": [10], "k_min": [2], "nbar": [0.1], "nbar_reflected": [0.01], "beta2": [0.05],
            "mode_match": {
                "target": {"family": "gaussian", "sigma": 1.0, "t0": 0.0, "omega0": 3.0, "t_detect": 2.0},
                "filter": {"kind": "notch", "center": 3.1, "linewidth": 0.5},
                "detector": {"eta": 0.9, "gain": 10, "nbar": 0.05, "nbar_reflected": 0.01, "k_min": 2}
            }
        }"#,
    );
    let out = tmp.path().join("out");
    let res = with_config("povm", &cfg, &out);
    assert_eq!(
        res.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let record = read_json(&out.join("error.json"));
    assert_eq!(record["kind"], "physical");
    assert!(record["message"].as_str().unwrap().contains("band gap"));
}

#[test]
fn under_resolved_spectrum_is_a_numerical_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
            "modes": [{"label": "coarse", "drive": {"family": "one-sided", "order": 0, "kappa0": 1.0, "sigma": 1.0, "t_detect": 0.0}, "n_points": 257}]
        }"#,
    );
    let out = tmp.path().join("out");
    let res = with_config("uncertainty", &cfg, &out);
    assert_eq!(
        res.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    assert_eq!(read_json(&out.join("error.json"))["kind"], "numerical");
}

#[test]
fn povm_table_and_mode_match() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("povm");
    let res = with_config("povm", &configs().join("povm.json"), &out);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let table = fs::read_to_string(out.join("weights.csv")).unwrap();
    assert!(table.starts_with("eta,G,k_min,nbar,nbar_reflected,beta2,w0,wT,purity\n"));
    assert_eq!(table.lines().count(), 28);
    let manifest = read_json(&out.join("manifest.json"));
    let ratio = manifest["results"]["mode_match"]["probability_over_wt"]
        .as_f64()
        .unwrap();
    assert!((ratio - 1.0).abs() < 1e-6);
}

#[test]
fn uncertainty_and_jitter_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("unc");
    let res = with_config("uncertainty", &configs().join("uncertainty.json"), &out);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let triples = read_json(&out.join("uncertainty.json"));
    let gaussian = triples[0]["product"].as_f64().unwrap();
    assert!((gaussian / (std::f64::consts::E * std::f64::consts::PI) - 1.0).abs() < 0.01);
    assert!(out.join("density_gaussian_frequency.csv").exists());

    let out = tmp.path().join("jitter");
    let res = with_config("jitter", &configs().join("jitter.json"), &out);
    assert_eq!(res.status.code(), Some(0));
    let manifest = read_json(&out.join("manifest.json"));
    assert!(
        manifest["results"]["max_deviation_from_closed_form"]
            .as_f64()
            .unwrap()
            < 1e-4
    );
}

#[test]
fn selftest_passes_and_usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("self");
    let res = run(&["selftest"], &out);
    assert_eq!(
        res.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let manifest = read_json(&out.join("manifest.json"));
    assert!(manifest["results"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["pass"] == true));

    assert_eq!(
        run(&["forward"], &tmp.path().join("x")).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["bogus"], &tmp.path().join("y")).status.code(),
        Some(1)
    );
    let cfg = write_config(
        tmp.path(),
        r#"{"sigma": 1.0, "ratios": [1.0], "extra": true}"#,
    );
    assert_eq!(
        with_config("jitter", &cfg, &tmp.path().join("z"))
            .status
            .code(),
        Some(1)
    );
}
