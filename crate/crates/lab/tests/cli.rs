use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::{Matrix2, Vector2};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_optomech-lab");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn figure_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tr.ini");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["figure", "fig6b", "--config", path(&cfg), "--out", path(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(a.join("fig6b.csv")).unwrap(), std::fs::read(b.join("fig6b.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("fig6b.json")).unwrap(), std::fs::read(b.join("fig6b.json")).unwrap());
    let manifest: Value = serde_json::from_slice(&std::fs::read(a.join("fig6b.json")).unwrap()).unwrap();
    for key in ["id", "model", "grid", "columns", "params", "disorder", "lo_phase", "output_mode", "seed", "code_version"] {
        assert!(manifest.get(key).is_some(), "manifest lacks {key}");
    }
    assert_eq!(manifest["rows"], 60);
}

#[test]
fn missing_required_key_exits_with_config_code_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("tr.ini")).unwrap().replace("cavity_length = 0.09\n", "");
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["figure", "fig2b", "--config", path(&cfg), "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("cavity_length"), "{}", stderr(&o));
}

#[test]
fn wrong_model_and_unknown_figure_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tr.ini");
    for id in ["fig2a", "fig9"] {
        let o = run(&["figure", id, "--config", path(&cfg), "--out", path(dir.path())]);
        assert_eq!(o.status.code(), Some(2), "{id}: {}", stderr(&o));
    }
}

#[test]
fn unstable_configuration_exits_with_physics_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("tr.ini")).unwrap().replace("detuning = 0", "detuning = -1.4816e9\nlaser_power = 10");
    let cfg = dir.path().join("hot.ini");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["sample", "--config", path(&cfg), "-N", "10", "--seed", "1", "--out", path(&dir.path().join("s.csv"))]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn bad_sample_files_exit_with_input_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("cc.ini");
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let header_only = dir.path().join("header.csv");
    std::fs::write(&header_only, "k\n").unwrap();
    let missing = dir.path().join("missing.csv");
    for f in [&empty, &header_only, &missing] {
        let o = run(&["estimate", "--config", path(&cfg), path(f)]);
        assert_eq!(o.status.code(), Some(4), "{}: {}", f.display(), stderr(&o));
    }
}

#[test]
fn samples_from_another_system_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let o = run(&["sample", "--config", path(&configs().join("cc.ini")), "-N", "100", "--seed", "1", "--out", path(&s)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let warm = std::fs::read_to_string(configs().join("cc.ini")).unwrap().replace("temperature = 300", "temperature = 310");
    let cfg = dir.path().join("warm.ini");
    std::fs::write(&cfg, warm).unwrap();
    let o = run(&["estimate", "--config", path(&cfg), path(&s)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("temperature"), "{}", stderr(&o));
}

#[test]
fn sampling_is_reproducible_per_seed_and_stream() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("cc.ini");
    let mut files = Vec::new();
    for (name, seed, stream) in [("a", "5", "0"), ("b", "5", "0"), ("c", "5", "1")] {
        let f = dir.path().join(format!("{name}.csv"));
        let o = run(&["sample", "--config", path(&cfg), "-N", "50", "--seed", seed, "--stream", stream, "--out", path(&f)]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push(std::fs::read(f).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0], files[2]);
}

fn estimate(cfg: &Path, samples: &[&Path]) -> Value {
    let mut args = vec!["estimate", "--config", path(cfg)];
    args.extend(samples.iter().map(|s| path(s)));
    let o = run(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn two_settings_at_rest_estimate_inside_the_three_sigma_ellipse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("cc.ini");
    let rotated = dir.path().join("rotated.ini");
    let theta = (std::f64::consts::PI * 35.0 / 36.0).to_string();
    std::fs::write(&rotated, std::fs::read_to_string(&cfg).unwrap().replace("lo_phase = 0", &format!("lo_phase = {theta}"))).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (c, f, stream) in [(&cfg, &a, "0"), (&rotated, &b, "1")] {
        let o = run(&["sample", "--config", path(c), "-N", "1000000", "--seed", "11", "--stream", stream, "--out", path(f)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let r = estimate(&cfg, &[&a, &b]);
    assert_eq!(r["estimator"], "multi_setting");
    let x = Vector2::new(r["estimate"]["dq1"].as_f64().unwrap(), r["estimate"]["dq2"].as_f64().unwrap());
    let f = &r["joint_fisher"];
    let g = |i: usize, j: usize| f[i][j].as_f64().unwrap();
    let fisher = Matrix2::new(g(0, 0), g(0, 1), g(1, 0), g(1, 1));
    let m = x.dot(&(fisher * x));
    assert!(m <= 9.0, "Mahalanobis² {m}");
    assert_eq!(r["ellipse"]["semi_axes"].as_array().unwrap().len(), 2);
}

#[test]
fn one_setting_gives_an_under_identified_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tr.ini");
    let s = dir.path().join("s.csv");
    let o = run(&["sample", "--config", path(&cfg), "-N", "1000000", "--seed", "17", "--out", path(&s)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = estimate(&cfg, &[&s]);
    assert_eq!(r["identifiability"], "under-identified");
    assert!(!r["curve"].as_array().unwrap().is_empty(), "{r}");
}

#[test]
fn identical_settings_are_pooled() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tr.ini");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for (f, stream) in [(&a, "0"), (&b, "1")] {
        let o = run(&["sample", "--config", path(&cfg), "-N", "500000", "--seed", "17", "--stream", stream, "--out", path(f)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let r = estimate(&cfg, &[&a, &b]);
    assert_eq!(r["estimator"], "solution_set");
    assert_eq!(r["settings"][0]["n"], 1_000_000);
}
