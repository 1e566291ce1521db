use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::{heat_kernel, laplacian, DataGraph, GraphSpec};
use crate::kernels::{Kernel, KernelSpec};
use crate::learn::{sign, Algorithm, SemiSupervisedDataset, SolverConfig};
use crate::manifold::{convergence_experiment, AnalyticManifold, ConvergenceTrend, Eigenfunction};
use crate::spectral::{check_interlacing, cheeger_constant_bruteforce, eigenvalue_bounds, spectrum, sweep_cut};

use super::datasets::{generate_toy, ToyDatasetSpec, ToyKind};
use super::io::{self, fmt_f64};

pub const TOOL: &str = "manireg";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "manireg", version, about = "Manifold-regularized kernel learning and spectral graph tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a seeded toy dataset CSV.
    Gen(GenArgs),
    /// Fit a model and write it as JSON.
    Train(TrainArgs),
    /// Score a dataset CSV with a saved model.
    Predict(PredictArgs),
    /// Build a data graph from a point-cloud CSV.
    Graph(GraphArgs),
    /// Laplacian eigenvalues of an edge-list graph.
    Spectrum(SpectrumArgs),
    /// Classical eigenvalue bounds with pass/fail per inequality.
    Bounds(EdgesArgs),
    /// Exact Cheeger constant by enumeration (at most 22 vertices).
    Cheeger(EdgesArgs),
    /// Spectral sweep cut from the second normalized eigenvector.
    Sweep(EdgesArgs),
    /// Eigenvalue interlacing after adding one edge.
    Interlace(InterlaceArgs),
    /// Heat kernel matrix exp(-tL).
    Heat(HeatArgs),
    /// Graph-Laplacian convergence experiment on an analytic manifold.
    Converge(ConvergeArgs),
}

#[derive(Args, Debug, Serialize)]
struct GenArgs {
    /// two_moons, concentric_circles, or gaussian_blobs
    #[arg(long, default_value = "two_moons")]
    kind: String,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    #[arg(long, default_value_t = 2)]
    blobs: usize,
    #[arg(long, default_value_t = 0.3)]
    spread: f64,
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    #[arg(long, default_value_t = 1)]
    labeled_per_class: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also write every point with its true label.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    /// TOML file with any of the options below; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// rls, logistic, svm, lap-rls, lap-svm
    #[arg(long)]
    algo: Option<String>,
    /// linear, min, poly:<c>:<p>, gaussian:<sigma2>, exponential:<gamma>
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    gamma_k: Option<f64>,
    #[arg(long)]
    gamma_i: Option<f64>,
    /// knn:<k>, eps:<e>, gaussian:<t>
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Use only the first N labels of the file; later labeled rows are treated as unlabeled.
    #[arg(long)]
    labels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Keys accepted in a `train --config` file.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    algo: Option<String>,
    kernel: Option<String>,
    sigma2: Option<f64>,
    gamma: Option<f64>,
    c: Option<f64>,
    p: Option<u32>,
    gamma_k: Option<f64>,
    gamma_i: Option<f64>,
    graph: Option<String>,
    data: Option<PathBuf>,
    labels: Option<usize>,
    seed: Option<u64>,
    max_iters: Option<usize>,
    step_size: Option<f64>,
    grad_tol: Option<f64>,
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct GraphArgs {
    #[arg(long)]
    points: PathBuf,
    #[arg(long, default_value = "knn:8")]
    graph: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct EdgesArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SpectrumArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Use I - D^{-1/2} W D^{-1/2} instead of D - W.
    #[arg(long)]
    normalized: bool,
    /// Include eigenvectors (columns) in the report.
    #[arg(long)]
    vectors: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct InterlaceArgs {
    #[arg(long)]
    edges: PathBuf,
    /// Absent edge to add, as `i,j`.
    #[arg(long)]
    edge: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct HeatArgs {
    #[arg(long)]
    edges: PathBuf,
    #[arg(long)]
    t: f64,
    #[arg(long)]
    normalized: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct ConvergeArgs {
    /// circle or torus
    #[arg(long, default_value = "circle")]
    manifold: String,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// const, sin:<m>, cos:<m>; comma-separated frequencies on the torus
    #[arg(long, default_value = "sin:1")]
    f: String,
    /// Evaluation point: an angle on the circle, `θ1,θ2` on the torus.
    #[arg(long, default_value = "1.5707963267948966")]
    z: String,
    /// Ascending comma-separated sample sizes.
    #[arg(long, default_value = "500,2000,8000")]
    n: String,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 2 on usage errors, 1 on runtime errors.
pub fn run_cli(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Parses a flag value, turning a bad value into a usage error.
fn flag<T>(name: &str, r: Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Usage(format!("--{name}: {e}")))
}

fn dispatch(cmd: Command) -> CliResult<String> {
    match cmd {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Graph(a) => cmd_graph(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Cheeger(a) => cmd_cheeger(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Interlace(a) => cmd_interlace(a),
        Command::Heat(a) => cmd_heat(a),
        Command::Converge(a) => cmd_converge(a),
    }
}

/// Wraps a result in the self-describing report envelope.
fn report(command: &str, config: &impl Serialize, result: serde_json::Value) -> Result<String> {
    let v = json!({
        "tool": TOOL,
        "version": VERSION,
        "command": command,
        "config": config,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn write_report(path: &Path, command: &str, config: &impl Serialize, result: serde_json::Value) -> Result<()> {
    io::write_file(path, report(command, config, result)?)?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> CliResult<String> {
    let kind = match a.kind.as_str() {
        "two_moons" => ToyKind::TwoMoons { noise: a.noise },
        "concentric_circles" => ToyKind::ConcentricCircles { gap: a.gap },
        "gaussian_blobs" => ToyKind::GaussianBlobs { count: a.blobs, spread: a.spread },
        other => return usage(format!("--kind: unknown dataset kind '{other}'")),
    };
    let spec =
        ToyDatasetSpec { kind, n_per_class: a.n_per_class, n_labeled_per_class: a.labeled_per_class, seed: a.seed };
    let toy = flag("labeled-per-class", generate_toy(&spec))?;
    io::save_dataset(&a.out, &toy.data)?;
    if let Some(path) = &a.truth {
        let labels: Vec<Option<f64>> = toy.truth.iter().map(|&y| Some(y)).collect();
        io::write_file(path, io::dataset_to_csv(toy.data.points(), &labels))?;
    }
    Ok(format!("wrote {} points ({} labeled) to {}", toy.data.len(), toy.data.n_labeled(), a.out.display()))
}

/// Resolved training options after merging the config file and flags.
#[derive(Debug, Serialize)]
struct TrainPlan {
    algo: Algorithm,
    kernel: KernelSpec,
    data: PathBuf,
    labels: Option<usize>,
    out: PathBuf,
    solver: SolverConfig,
}

fn kernel_from_file(f: &TrainFile) -> CliResult<Option<KernelSpec>> {
    let Some(name) = &f.kernel else { return Ok(None) };
    let missing = |k: &str| CliError::Usage(format!("config: kernel '{name}' needs '{k}'"));
    let spec = match name.as_str() {
        s if s.contains(':') => flag("kernel", KernelSpec::parse(s))?,
        "linear" => KernelSpec::Linear,
        "min" => KernelSpec::Min,
        "gaussian" => KernelSpec::Gaussian { sigma2: f.sigma2.ok_or_else(|| missing("sigma2"))? },
        "exponential" => KernelSpec::Exponential { gamma: f.gamma.ok_or_else(|| missing("gamma"))? },
        "poly" | "polynomial" => {
            KernelSpec::Polynomial { c: f.c.ok_or_else(|| missing("c"))?, p: f.p.ok_or_else(|| missing("p"))? }
        }
        other => return usage(format!("config: unknown kernel '{other}'")),
    };
    flag("kernel", Kernel::try_from(&spec))?;
    Ok(Some(spec))
}

fn plan_training(a: TrainArgs) -> CliResult<TrainPlan> {
    let file: TrainFile = match &a.config {
        Some(path) => {
            let text = io::read_file(path)?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?
        }
        None => TrainFile::default(),
    };
    let algo = match a.algo.as_deref().or(file.algo.as_deref()) {
        Some(s) => flag("algo", Algorithm::parse(s))?,
        None => return usage("--algo is required"),
    };
    let kernel = match &a.kernel {
        Some(s) => flag("kernel", KernelSpec::parse(s))?,
        None => match kernel_from_file(&file)? {
            Some(k) => k,
            None => return usage("--kernel is required"),
        },
    };
    let mut solver = SolverConfig::default();
    if let Some(v) = a.gamma_k.or(file.gamma_k) {
        solver.gamma_k = v;
    }
    if let Some(v) = a.gamma_i.or(file.gamma_i) {
        solver.gamma_i = v;
    }
    if let Some(s) = a.graph.as_deref().or(file.graph.as_deref()) {
        solver.graph = flag("graph", GraphSpec::parse(s))?;
    }
    if let Some(v) = a.seed.or(file.seed) {
        solver.seed = v;
    }
    if let Some(v) = a.max_iters.or(file.max_iters) {
        solver.max_iters = v;
    }
    if let Some(v) = a.step_size.or(file.step_size) {
        solver.step_size = Some(v);
    }
    if let Some(v) = a.grad_tol.or(file.grad_tol) {
        solver.grad_tol = v;
    }
    flag("config", solver.validate())?;
    let Some(data) = a.data.or(file.data) else { return usage("--data is required") };
    let Some(out) = a.out.or(file.out) else { return usage("--out is required") };
    Ok(TrainPlan { algo, kernel, data, labels: a.labels.or(file.labels), out, solver })
}

fn cmd_train(a: TrainArgs) -> CliResult<String> {
    let plan = plan_training(a)?;
    let mut data = io::load_dataset(&plan.data)?;
    if let Some(n_l) = plan.labels {
        if n_l == 0 || n_l > data.n_labeled() {
            return usage(format!("--labels must be in 1..={}, got {n_l}", data.n_labeled()));
        }
        data = SemiSupervisedDataset::new(data.points().to_vec(), data.labels()[..n_l].to_vec())?;
    }
    let kernel = Kernel::try_from(&plan.kernel)?;
    let model = plan.solver.fit(plan.algo, &kernel, &data)?;
    io::save_model(&plan.out, &model, &plan.solver)?;
    Ok(format!(
        "{:?} on {} points ({} labeled): objective {:.6e}, {} iterations, converged {}; model written to {}",
        plan.algo,
        data.len(),
        data.n_labeled(),
        model.fit.objective,
        model.fit.iterations,
        model.fit.converged,
        plan.out.display()
    ))
}

fn cmd_predict(a: PredictArgs) -> CliResult<String> {
    let (model, _) = io::load_model(&a.model)?;
    let (points, labels) = io::load_unlabeled_rows(&a.data)?;
    let scores = model.predict_batch(&points)?;
    let mut out = String::from("score,sign\n");
    for s in &scores {
        out.push_str(&format!("{},{}\n", fmt_f64(*s), sign(*s)));
    }
    io::write_file(&a.out, out)?;
    let known: Vec<(f64, f64)> = scores.iter().zip(&labels).filter_map(|(s, y)| y.map(|y| (*s, y))).collect();
    let mut msg = format!("scored {} points to {}", scores.len(), a.out.display());
    if !known.is_empty() {
        let hits = known.iter().filter(|(s, y)| sign(*s) == *y).count();
        msg.push_str(&format!(
            "; sign accuracy on {} labeled rows: {:.4}",
            known.len(),
            hits as f64 / known.len() as f64
        ));
    }
    Ok(msg)
}

fn cmd_graph(a: GraphArgs) -> CliResult<String> {
    let spec = flag("graph", GraphSpec::parse(&a.graph))?;
    let points = io::load_points(&a.points)?;
    let g = spec.build(&points)?;
    io::save_edge_list(&a.out, &g)?;
    Ok(format!(
        "{} vertices, {} edges, {} components; written to {}",
        g.n(),
        g.edge_count(),
        crate::graph::connected_components(&g),
        a.out.display()
    ))
}

fn load_graph(path: &Path) -> CliResult<DataGraph> {
    Ok(io::load_edge_list(path)?)
}

fn cmd_spectrum(a: SpectrumArgs) -> CliResult<String> {
    let g = load_graph(&a.edges)?;
    let spec = spectrum(&laplacian(&g, a.normalized)?)?;
    let mut result = json!({
        "n": g.n(),
        "eigenvalues": spec.eigenvalues,
        "zero_multiplicity": spec.zero_multiplicity(),
    });
    if a.vectors {
        let cols: Vec<Vec<f64>> = (0..spec.n()).map(|k| spec.eigenvector(k).iter().copied().collect()).collect();
        result["eigenvectors"] = json!(cols);
    }
    write_report(&a.out, "spectrum", &a, result)?;
    Ok(format!(
        "{} eigenvalues, lambda_2 = {}, {} zero eigenvalue(s); report written to {}",
        spec.n(),
        spec.lambda2().map_or("n/a".to_string(), |l| format!("{l:.10}")),
        spec.zero_multiplicity(),
        a.out.display()
    ))
}

fn cmd_bounds(a: EdgesArgs) -> CliResult<String> {
    let g = load_graph(&a.edges)?;
    let b = eigenvalue_bounds(&g)?;
    let all = b.all_hold();
    write_report(&a.out, "bounds", &a, serde_json::to_value(&b).map_err(Error::from)?)?;
    Ok(format!("{} checks, all hold: {all}; report written to {}", b.checks.len(), a.out.display()))
}

fn cmd_cheeger(a: EdgesArgs) -> CliResult<String> {
    let g = load_graph(&a.edges)?;
    let (h, subset) = cheeger_constant_bruteforce(&g)?;
    write_report(&a.out, "cheeger", &a, json!({ "n": g.n(), "h": h, "subset": subset }))?;
    Ok(format!("h(G) = {h}; report written to {}", a.out.display()))
}

fn cmd_sweep(a: EdgesArgs) -> CliResult<String> {
    let g = load_graph(&a.edges)?;
    let cut = sweep_cut(&g)?;
    let phi = cut.conductance;
    write_report(&a.out, "sweep", &a, serde_json::to_value(&cut).map_err(Error::from)?)?;
    Ok(format!("sweep conductance {phi}; report written to {}", a.out.display()))
}

fn cmd_interlace(a: InterlaceArgs) -> CliResult<String> {
    let edge = a
        .edge
        .split_once(',')
        .and_then(|(i, j)| Some((i.trim().parse::<usize>().ok()?, j.trim().parse::<usize>().ok()?)));
    let Some(edge) = edge else { return usage(format!("--edge: expected 'i,j', got '{}'", a.edge)) };
    let g = load_graph(&a.edges)?;
    let r = check_interlacing(&g, edge)?;
    let (ok, td) = (r.interlaces(), r.trace_difference());
    let mut result = serde_json::to_value(&r).map_err(Error::from)?;
    result["interlaces"] = json!(ok);
    result["trace_difference"] = json!(td);
    write_report(&a.out, "interlace", &a, result)?;
    Ok(format!("interlaces: {ok}, trace difference {td}; report written to {}", a.out.display()))
}

fn cmd_heat(a: HeatArgs) -> CliResult<String> {
    let g = load_graph(&a.edges)?;
    let h = flag("t", heat_kernel(&laplacian(&g, a.normalized)?, a.t))?;
    let rows: Vec<Vec<f64>> = (0..g.n()).map(|i| h.matrix.row(i).iter().copied().collect()).collect();
    write_report(&a.out, "heat", &a, json!({ "n": g.n(), "t": a.t, "matrix": rows }))?;
    Ok(format!("{0}x{0} heat kernel at t = {1}; report written to {2}", g.n(), a.t, a.out.display()))
}

fn parse_list<T: std::str::FromStr>(name: &str, s: &str) -> CliResult<Vec<T>> {
    s.split(',')
        .map(|v| v.trim().parse::<T>())
        .collect::<std::result::Result<Vec<T>, _>>()
        .or_else(|_| usage(format!("--{name}: expected a comma-separated list, got '{s}'")))
}

fn cmd_converge(a: ConvergeArgs) -> CliResult<String> {
    let manifold = match a.manifold.as_str() {
        "circle" => flag("radius", AnalyticManifold::circle(a.radius))?,
        "torus" => AnalyticManifold::FlatTorus,
        other => return usage(format!("--manifold: unknown manifold '{other}'")),
    };
    let f = flag("f", Eigenfunction::parse(&a.f))?;
    let angles: Vec<f64> = parse_list("z", &a.z)?;
    let z = flag("z", manifold.point_at(&angles))?;
    let ns: Vec<usize> = parse_list("n", &a.n)?;
    if a.seeds == 0 {
        return usage("--seeds must be >= 1");
    }
    let seeds: Vec<u64> = (a.seed_offset..a.seed_offset + a.seeds).collect();
    let reports = flag("n", convergence_experiment(&manifold, &f, &z, &ns, a.a, &seeds))?;

    let mut csv = String::from("n,t_n,seed,estimate,target,abs_error\n");
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.t_n),
            r.seed,
            fmt_f64(r.estimate),
            fmt_f64(r.analytic_target),
            fmt_f64(r.abs_error)
        ));
    }
    io::write_file(&a.out, csv)?;

    let trend = ConvergenceTrend::from_reports(&reports);
    let target = reports[0].analytic_target;
    let meta = json!({
        "manifold": manifold,
        "z": z,
        "target": target,
        "median_abs_error": trend.medians,
        "non_increasing": trend.non_increasing,
        "reduction": trend.reduction,
    });
    let meta_path = sidecar(&a.out);
    write_report(&meta_path, "converge", &a, meta)?;

    let mut msg = String::new();
    for (n, m) in &trend.medians {
        msg.push_str(&format!("n = {n}: median |error| {m:.6e}\n"));
    }
    msg.push_str(&format!(
        "target {target:.6e}, reduction {:.3}x, non-increasing {}; rows written to {}, summary to {}",
        trend.reduction,
        trend.non_increasing,
        a.out.display(),
        meta_path.display()
    ));
    Ok(msg)
}

/// `report.csv` → `report.csv.meta.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}
