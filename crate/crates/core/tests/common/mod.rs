#![allow(dead_code)]

use manireg::graph::DataGraph;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi graph with unit weights.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DataGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                edges.push((i, j, 1.0));
            }
        }
    }
    DataGraph::from_edges(n, &edges).unwrap()
}

/// Erdős–Rényi graph with weights uniform in [0.1, 2).
pub fn random_weighted_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DataGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                edges.push((i, j, rng.random_range(0.1..2.0)));
            }
        }
    }
    DataGraph::from_edges(n, &edges).unwrap()
}

/// Uniform simple d-regular graph by the configuration model with rejection.
pub fn random_regular_graph(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DataGraph {
    assert!((n * d).is_multiple_of(2) && d < n);
    'retry: loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, d)).collect();
        stubs.shuffle(rng);
        let mut w = DMatrix::zeros(n, n);
        for pair in stubs.chunks(2) {
            let (i, j) = (pair[0], pair[1]);
            if i == j || w[(i, j)] != 0.0 {
                continue 'retry;
            }
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
        return DataGraph::from_weights(w).unwrap();
    }
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Induced ∞-norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub const BIN: &str = env!("CARGO_BIN_EXE_manireg");

pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Runs the binary in `dir`; returns (exit code, stdout, stderr).
pub fn run_in(dir: &std::path::Path, args: &[&str]) -> (i32, String, String) {
    let out = std::process::Command::new(BIN).args(args).current_dir(dir).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Every subcommand on fixed inputs and seeds. Returns the produced files
/// (name, bytes) sorted by name.
pub fn run_golden_pipeline(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    for f in ["k4.edges", "path5.edges", "cloud.csv", "train.toml"] {
        std::fs::copy(data_dir().join(f), dir.join(f)).map_err(|e| e.to_string())?;
    }
    let steps: &[&[&str]] = &[
        &["gen", "--seed", "7", "--out", "moons.csv", "--truth", "truth.csv"],
        &["gen", "--kind", "gaussian_blobs", "--n-per-class", "20", "--labeled-per-class", "3", "--out", "blobs.csv"],
        &["train", "--config", "train.toml"],
        &[
            "train",
            "--algo",
            "lap-svm",
            "--kernel",
            "gaussian:0.25",
            "--gamma-k",
            "1e-4",
            "--gamma-i",
            "1e4",
            "--data",
            "moons.csv",
            "--max-iters",
            "300",
            "--seed",
            "3",
            "--out",
            "lap_svm.json",
        ],
        &[
            "train",
            "--algo",
            "logistic",
            "--kernel",
            "poly:1:2",
            "--data",
            "blobs.csv",
            "--max-iters",
            "200",
            "--out",
            "logistic.json",
        ],
        &["predict", "--model", "lap_rls.json", "--data", "truth.csv", "--out", "scores.csv"],
        &["graph", "--points", "cloud.csv", "--graph", "knn:3", "--out", "cloud.edges"],
        &["spectrum", "--edges", "k4.edges", "--vectors", "--out", "spectrum.json"],
        &["bounds", "--edges", "path5.edges", "--out", "bounds.json"],
        &["cheeger", "--edges", "path5.edges", "--out", "cheeger.json"],
        &["sweep", "--edges", "cloud.edges", "--out", "sweep.json"],
        &["interlace", "--edges", "path5.edges", "--edge", "0,4", "--out", "interlace.json"],
        &["heat", "--edges", "cloud.edges", "--t", "0.3", "--normalized", "--out", "heat.json"],
        &["converge", "--n", "200,400", "--seeds", "3", "--out", "converge.csv"],
        &[
            "converge",
            "--manifold",
            "torus",
            "--f",
            "cos:1,1",
            "--z",
            "0.3,1.2",
            "--n",
            "300,600",
            "--seeds",
            "2",
            "--out",
            "torus.csv",
        ],
    ];
    for args in steps {
        let (code, _, err) = run_in(dir, args);
        if code != 0 {
            return Err(format!("{args:?} exited {code}: {err}"));
        }
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(|e| e.to_string())?
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    Ok(files)
}
