use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fbtc_core::measures::{compute_measure_vector, MeasureConfig, MeasureSet};
use fbtc_core::Trajectory;
use serde_json::Value;

fn fbtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbtc"))
        .args(args)
        .env_remove("FBTC_CONFIG")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = fbtc(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn synth(dir: &Path, extra: &[&str]) -> String {
    let path = dir.join("data.csv").to_str().unwrap().to_string();
    let mut args = vec!["synth", "--out", &path];
    args.extend_from_slice(extra);
    ok(&args);
    path
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(2));
    serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap()
}

#[test]
fn synth_cluster_eval_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), &[]);
    let out = tmp.path().join("run");
    ok(&["cluster", "-i", &data, "-k", "3", "-o", out.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["n"], 45);
    assert_eq!(r["cluster_sizes"].as_array().unwrap().len(), 3);
    // labels in the input are picked up for evaluation
    assert!(r["evaluation"]["matched"].as_u64().unwrap() >= 43);

    let reference = tmp.path().join("reference.csv");
    let mut text = String::from("id,label\n");
    for g in 1..=3 {
        for m in 1..=15 {
            text.push_str(&format!("g{g}-{m:02},group{g}\n"));
        }
    }
    fs::write(&reference, text).unwrap();
    let eval = ok(&[
        "eval",
        "--found",
        out.join("assignments.csv").to_str().unwrap(),
        "--reference",
        reference.to_str().unwrap(),
    ]);
    let eval: Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!(eval["accuracy"].as_f64().unwrap() >= 43.0 / 45.0);
}

#[test]
fn measures_csv_round_trips_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in.csv");
    fs::write(
        &input,
        "id,time,value\nb,0,1\nb,0.5,3\nb,2,2.25\nb,3,7\na,1,0.1\na,2,0.3\na,4,-0.2\n",
    )
    .unwrap();
    let out = tmp.path().join("m");
    ok(&["measures", "-i", input.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    let text = fs::read_to_string(out.join("measures.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("id,m1,m2"));
    let expected = [
        ("b", vec![0.0, 0.5, 2.0, 3.0], vec![1.0, 3.0, 2.25, 7.0]),
        ("a", vec![1.0, 2.0, 4.0], vec![0.1, 0.3, -0.2]),
    ];
    for ((id, t, y), line) in expected.into_iter().zip(lines) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], id, "first-appearance order");
        let traj = Trajectory::new(id, t, y).unwrap();
        let want = compute_measure_vector(&traj, MeasureSet::all(), &MeasureConfig::default())
            .unwrap()
            .to_vec();
        let got: Vec<f64> = fields[1..].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(got, want);
    }
}

#[test]
fn wide_and_long_inputs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let long = tmp.path().join("long.csv");
    let wide = tmp.path().join("wide.csv");
    let mut l = String::from("id,time,value\n");
    let mut w = String::from("id,0,1,2.5,4\n");
    for i in 0..12 {
        let ys: Vec<f64> = [0.0, 1.0, 2.5, 4.0]
            .iter()
            .map(|t| (i % 3) as f64 * t + (i as f64 * 0.37).sin() + t * t * 0.1 * (i % 2) as f64)
            .collect();
        w.push_str(&format!("t{i},{},{},{},{}\n", ys[0], ys[1], ys[2], ys[3]));
        for (t, y) in [0.0, 1.0, 2.5, 4.0].iter().zip(&ys) {
            l.push_str(&format!("t{i},{t},{y}\n"));
        }
    }
    fs::write(&long, l).unwrap();
    fs::write(&wide, w).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&["cluster", "-i", long.to_str().unwrap(), "-k", "3", "-o", a.to_str().unwrap()]);
    ok(&["cluster", "-i", wide.to_str().unwrap(), "-k", "3", "-o", b.to_str().unwrap(), "--format", "wide"]);
    for f in ["measures.csv", "assignments.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn k_of_one_fails_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), &[]);
    let out = tmp.path().join("none");
    let err = stderr_json(&fbtc(&["cluster", "-i", &data, "-k", "1", "-o", out.to_str().unwrap()]));
    assert_eq!(err["error"], "InvalidK");
    assert!(!out.exists() || fs::read_dir(&out).unwrap().next().is_none());
}

/// Rows of a trajectory may come in any order; repeated times are an error.
#[test]
fn invalid_trajectories_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    fs::write(&input, "id,time,value\nok,0,1\nok,1,2\nok,2,0\nshort,0,1\nshort,1,2\nback,0,1\nback,2,1\nback,2,3\n").unwrap();
    let out = tmp.path().join("o");
    let err = stderr_json(&fbtc(&["measures", "-i", input.to_str().unwrap(), "-o", out.to_str().unwrap()]));
    assert_eq!(err["error"], "InvalidTrajectories");
    let items = err["trajectories"].as_array().unwrap();
    let ids: Vec<&str> = items.iter().map(|v| v["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["short", "back"]);
    assert_eq!(items[0]["error"], "TooShort");
    assert_eq!(items[1]["error"], "NonMonotoneTimes");
    assert!(!out.join("measures.csv").exists());
}

#[test]
fn malformed_numbers_report_position() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("bad.csv");
    fs::write(&input, "id,time,value\na,0,1\na,1,x\na,2,3\n").unwrap();
    let err = stderr_json(&fbtc(&["measures", "-i", input.to_str().unwrap(), "-o", tmp.path().to_str().unwrap()]));
    assert_eq!(err["error"], "ParseError");
    assert!(err["message"].as_str().unwrap().contains('3'));
}

#[test]
fn flags_override_config_file_and_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), &["--noise-sd", "0.1"]);
    let config = tmp.path().join("run.toml");
    fs::write(&config, "k = 4\nseed = 11\nmeasures = \"shape-only\"\n").unwrap();
    let out = tmp.path().join("c");
    ok(&["cluster", "--config", config.to_str().unwrap(), "-i", &data, "-k", "3", "-o", out.to_str().unwrap()]);
    let r = report(&out);
    assert_eq!(r["config"]["k"], 3);
    assert_eq!(r["config"]["seed"], 11);
    assert_eq!(r["measures"].as_array().unwrap().len(), 16);

    let env_out = tmp.path().join("e");
    let status = Command::new(env!("CARGO_BIN_EXE_fbtc"))
        .args(["cluster", "-i", &data, "-o", env_out.to_str().unwrap()])
        .env("FBTC_CONFIG", &config)
        .output()
        .unwrap();
    assert!(status.status.success());
    assert_eq!(report(&env_out)["k"], 4);

    fs::write(&config, "clusters = 3\n").unwrap();
    let err = stderr_json(&fbtc(&["cluster", "--config", config.to_str().unwrap(), "-i", &data]));
    assert_eq!(err["error"], "ConfigError");
}

#[test]
fn optional_artifacts_follow_the_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), &[]);
    let out = tmp.path().join("o");
    let dir = out.to_str().unwrap();
    ok(&["cluster", "-i", &data, "-k", "3", "-o", dir, "--embedding", "--dump-similarity", "--timings"]);
    assert!(out.join("embedding.csv").exists() && out.join("similarity.csv").exists());
    assert!(report(&out).get("timings_ms").is_some());
    let similarity = fs::read_to_string(out.join("similarity.csv")).unwrap();
    assert!(similarity.starts_with("i,j,value\n"));

    ok(&["cluster", "-i", &data, "-k", "3", "-o", dir]);
    assert!(!out.join("embedding.csv").exists() && !out.join("similarity.csv").exists());
    assert!(report(&out).get("timings_ms").is_none());
}
