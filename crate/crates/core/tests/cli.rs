mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use common::{data_dir, run_in, BIN};
use manireg::harness::io::{load_dataset, model_from_json, model_to_json, save_dataset};
use manireg::harness::{generate_toy, ToyDatasetSpec, ToyKind};
use manireg::kernels::Kernel;
use manireg::learn::{fit_lap_rls, SolverConfig};
use serde_json::Value;

fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for f in ["k4.edges", "path5.edges", "cloud.csv", "train.toml"] {
        fs::copy(data_dir().join(f), dir.path().join(f)).unwrap();
    }
    dir
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let (code, out, err) = run_in(dir, args);
    assert_eq!(code, 0, "{args:?}: {err}");
    out
}

#[test]
fn complete_graph_spectrum() {
    let dir = workdir();
    ok(dir.path(), &["spectrum", "--edges", "k4.edges", "--out", "s.json"]);
    let v = read_json(&dir.path().join("s.json"));
    assert_eq!(v["tool"], "manireg");
    assert_eq!(v["command"], "spectrum");
    let ev: Vec<f64> = serde_json::from_value(v["result"]["eigenvalues"].clone()).unwrap();
    assert!(common::max_abs_diff(&ev, &[0.0, 4.0, 4.0, 4.0]) <= 1e-8);
    assert_eq!(v["result"]["zero_multiplicity"], 1);
}

#[test]
fn path_cheeger_constant() {
    let dir = workdir();
    let out = ok(dir.path(), &["cheeger", "--edges", "path5.edges", "--out", "c.json"]);
    assert!(out.contains("h(G) = 0.5"));
    let v = read_json(&dir.path().join("c.json"));
    assert_eq!(v["result"]["h"].as_f64(), Some(0.5));
}

#[test]
fn exit_codes() {
    let dir = workdir();
    assert_eq!(run_in(dir.path(), &["spectrum", "--bogus"]).0, 2);
    assert_eq!(run_in(dir.path(), &["no-such-command"]).0, 2);
    assert_eq!(run_in(dir.path(), &["graph", "--points", "cloud.csv", "--graph", "knn:x", "--out", "g"]).0, 2);
    let (code, _, err) = run_in(dir.path(), &["spectrum", "--edges", "missing.edges", "--out", "s.json"]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error: ") && err.contains("missing.edges"), "{err}");
    assert_eq!(run_in(dir.path(), &["--help"]).0, 0);
    assert_eq!(run_in(dir.path(), &["--version"]).0, 0);
}

#[test]
fn dataset_round_trip_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let toy = generate_toy(&ToyDatasetSpec {
        kind: ToyKind::ConcentricCircles { gap: 0.5 },
        n_per_class: 15,
        n_labeled_per_class: 2,
        seed: 9,
    })
    .unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    save_dataset(&a, &toy.data).unwrap();
    let loaded = load_dataset(&a).unwrap();
    assert_eq!(loaded, toy.data);
    save_dataset(&b, &loaded).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn model_json_round_trip() {
    let toy = generate_toy(&ToyDatasetSpec {
        kind: ToyKind::TwoMoons { noise: 0.05 },
        n_per_class: 20,
        n_labeled_per_class: 2,
        seed: 1,
    })
    .unwrap();
    let cfg = SolverConfig::default();
    let kernel = Kernel::gaussian(0.25).unwrap();
    let model = fit_lap_rls(&kernel, &toy.data, cfg.gamma_k, cfg.gamma_i, &cfg.graph).unwrap();
    let text = model_to_json(&model, &cfg).unwrap();
    let (back, back_cfg) = model_from_json(&text).unwrap();
    assert_eq!(back_cfg, cfg);
    assert_eq!(back.coefficients, model.coefficients);
    assert_eq!(back.support_points, model.support_points);
    assert_eq!(model_to_json(&back, &back_cfg).unwrap(), text);

    let mut v: Value = serde_json::from_str(&text).unwrap();
    v.as_object_mut().unwrap().remove("kernel");
    assert!(model_from_json(&v.to_string()).is_err());
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["format_version"] = 99.into();
    assert!(model_from_json(&v.to_string()).is_err());
}

#[test]
fn train_from_config_and_predict() {
    let dir = workdir();
    let d = dir.path();
    ok(d, &["gen", "--seed", "0", "--out", "moons.csv", "--truth", "truth.csv"]);
    ok(d, &["train", "--config", "train.toml"]);
    let model = read_json(&d.join("lap_rls.json"));
    assert_eq!(model["format_version"], 1);
    assert_eq!(model["kernel"]["kind"], "gaussian");
    assert_eq!(model["support_points"].as_array().unwrap().len(), 200);

    let out = ok(d, &["predict", "--model", "lap_rls.json", "--data", "truth.csv", "--out", "scores.csv"]);
    let acc: f64 = out.rsplit(": ").next().unwrap().trim().parse().unwrap();
    assert!(acc >= 0.95, "{out}");
    let scores = fs::read_to_string(d.join("scores.csv")).unwrap();
    let mut lines = scores.lines();
    assert_eq!(lines.next(), Some("score,sign"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    for row in rows {
        let (s, g) = row.split_once(',').unwrap();
        let s: f64 = s.parse().unwrap();
        assert_eq!(g, if s >= 0.0 { "1" } else { "-1" });
    }
}

#[test]
fn flags_override_config_and_labels_limit() {
    let dir = workdir();
    let d = dir.path();
    ok(d, &["gen", "--labeled-per-class", "3", "--n-per-class", "30", "--out", "moons.csv"]);
    ok(d, &["train", "--config", "train.toml", "--algo", "rls", "--labels", "2", "--out", "rls.json"]);
    let model = read_json(&d.join("rls.json"));
    assert_eq!(model["fit"]["algorithm"], "rls");
    assert_eq!(model["support_points"].as_array().unwrap().len(), 2);
    assert!(!d.join("lap_rls.json").exists());
    assert_eq!(run_in(d, &["train", "--config", "train.toml", "--labels", "7"]).0, 2);
}

#[test]
fn thread_count_variable() {
    let dir = workdir();
    let run = |threads: &str| {
        Command::new(BIN)
            .args(["converge", "--n", "200,400", "--seeds", "4", "--out", &format!("c{threads}.csv")])
            .env("MANIREG_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("0").status.code(), Some(2));
    assert_eq!(run("x").status.code(), Some(2));
    assert!(run("1").status.success());
    assert!(run("4").status.success());
    assert_eq!(fs::read(dir.path().join("c1.csv")).unwrap(), fs::read(dir.path().join("c4.csv")).unwrap());
    assert!(dir.path().join("c1.csv.meta.json").exists());
}

#[test]
fn golden_pipeline_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = common::run_golden_pipeline(a.path()).unwrap();
    let fb = common::run_golden_pipeline(b.path()).unwrap();
    assert_eq!(fa.iter().map(|f| &f.0).collect::<Vec<_>>(), fb.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        assert!(x == y, "{name} differs between runs");
    }
}
