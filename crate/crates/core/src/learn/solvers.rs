use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objectives::{HingeObjective, LapRlsObjective, LogisticObjective, Objective, RlsObjective};
use super::{Algorithm, FitSummary, KernelModel, SemiSupervisedDataset};
use crate::error::{Error, Result};
use crate::graph::{laplacian, GraphSpec};
use crate::kernels::{gram_matrix, Kernel};

/// Consecutive objective increases tolerated before a descent is declared
/// divergent.
const DIVERGENCE_STREAK: usize = 10;

/// Controls for the fixed-step (sub)gradient solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterConfig {
    pub max_iters: usize,
    /// Fixed step; `None` uses `0.1 / L̂` with `L̂` a power-iteration estimate
    /// of the curvature of the quadratic part.
    pub step_size: Option<f64>,
    pub grad_tol: f64,
    /// Seeds the power-iteration start vector.
    pub seed: u64,
}

impl Default for IterConfig {
    fn default() -> Self {
        IterConfig { max_iters: 5000, step_size: None, grad_tol: 1e-6, seed: 0 }
    }
}

impl IterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if let Some(s) = self.step_size {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::InvalidParameter(format!("step size must be positive, got {s}")));
            }
        }
        if !(self.grad_tol.is_finite() && self.grad_tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("grad_tol must be >= 0, got {}", self.grad_tol)));
        }
        Ok(())
    }
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
pub(crate) fn power_iteration(m: &DMatrix<f64>, seed: u64) -> f64 {
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DVector::from_fn(n, |_, _| rng.random::<f64>() + 0.5);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..500 {
        let w = m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= 1e-10 * next.abs() {
            return next;
        }
        estimate = next;
    }
    estimate
}

fn validate_supervised(points: &[Vec<f64>], labels: &[f64], lambda: f64, binary: bool) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput("no training points"));
    }
    if points.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: labels.len() });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if binary {
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter(format!("classification labels must be ±1, got {y}")));
        }
    } else if let Some(y) = labels.iter().find(|y| !y.is_finite()) {
        return Err(Error::InvalidParameter(format!("label {y} is not finite")));
    }
    Ok(())
}

struct Descent {
    best: DVector<f64>,
    best_value: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

/// Fixed-step descent from `a = 0`, keeping the best iterate seen.
fn descend<O: Objective>(obj: &O, step: f64, cfg: &IterConfig) -> Result<Descent> {
    let mut a = DVector::zeros(obj.dim());
    let mut value = obj.value(&a);
    let mut best = a.clone();
    let mut best_value = value;
    let mut trace = vec![value];
    let mut streak = 0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        let g = obj.gradient(&a);
        if g.norm() <= cfg.grad_tol {
            converged = true;
            break;
        }
        a -= g * step;
        let next = obj.value(&a);
        if !next.is_finite() {
            return Err(Error::Diverged { iteration: it + 1, streak });
        }
        iterations = it + 1;
        trace.push(next);
        streak = if next > value { streak + 1 } else { 0 };
        if streak >= DIVERGENCE_STREAK {
            return Err(Error::Diverged { iteration: it + 1, streak });
        }
        value = next;
        if value < best_value {
            best_value = value;
            best = a.clone();
        }
    }
    Ok(Descent { best, best_value, iterations, converged, trace })
}

fn model_from(kernel: &Kernel, points: &[Vec<f64>], a: DVector<f64>, fit: FitSummary) -> KernelModel {
    KernelModel {
        kernel: kernel.clone(),
        support_points: points.to_vec(),
        coefficients: a.iter().copied().collect(),
        fit,
    }
}

fn solve_spd_or_least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let tol = 1e-8 * b.norm().max(f64::MIN_POSITIVE);
    if let Some(chol) = a.clone().cholesky() {
        let x = chol.solve(b);
        if (&a * &x - b).norm() <= tol {
            return Ok((x, false));
        }
    }
    least_squares(a, b).map(|x| (x, true))
}

fn solve_general_or_least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let tol = 1e-10 * b.norm().max(f64::MIN_POSITIVE);
    if let Some(x) = a.clone().lu().solve(b) {
        if (&a * &x - b).norm() <= tol {
            return Ok((x, false));
        }
    }
    least_squares(a, b).map(|x| (x, true))
}

fn least_squares(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    svd.solve(b, eps).map_err(|e| Error::Singular(e.to_string()))
}

/// Regularized least squares: solves `(K + λN I) a = y`.
pub fn fit_rls(kernel: &Kernel, points: &[Vec<f64>], labels: &[f64], lambda: f64) -> Result<KernelModel> {
    validate_supervised(points, labels, lambda, false)?;
    let n = points.len();
    let k = gram_matrix(kernel, points)?.entries;
    let y = DVector::from_column_slice(labels);
    let system = &k + DMatrix::identity(n, n) * (lambda * n as f64);
    let (a, fallback) = solve_spd_or_least_squares(system, &y)?;
    let obj = RlsObjective { gram: k, y, lambda };
    let fit = FitSummary {
        algorithm: Algorithm::Rls,
        objective: obj.value(&a),
        gradient_norm: obj.gradient(&a).norm(),
        iterations: 0,
        converged: true,
        least_squares_fallback: fallback,
        trace: vec![],
    };
    Ok(model_from(kernel, points, a, fit))
}

/// Kernel logistic regression by fixed-step gradient descent.
pub fn fit_kernel_logistic(
    kernel: &Kernel,
    points: &[Vec<f64>],
    labels: &[f64],
    lambda: f64,
    cfg: &IterConfig,
) -> Result<KernelModel> {
    validate_supervised(points, labels, lambda, true)?;
    cfg.validate()?;
    let n = points.len();
    let k = gram_matrix(kernel, points)?.entries;
    // gradient Lipschitz bound: K²/(4N) + 2λK
    let curvature = &k * &k / (4.0 * n as f64) + &k * (2.0 * lambda);
    let step = cfg.step_size.unwrap_or_else(|| 0.1 / power_iteration(&curvature, cfg.seed).max(f64::MIN_POSITIVE));
    let obj = LogisticObjective { gram: k, y: DVector::from_column_slice(labels), lambda };
    let d = descend(&obj, step, cfg)?;
    let fit = FitSummary {
        algorithm: Algorithm::Logistic,
        objective: d.best_value,
        gradient_norm: obj.gradient(&d.best).norm(),
        iterations: d.iterations,
        converged: d.converged,
        least_squares_fallback: false,
        trace: d.trace,
    };
    Ok(model_from(kernel, points, d.best, fit))
}

fn hinge_step(obj: &HingeObjective, cfg: &IterConfig) -> f64 {
    cfg.step_size.unwrap_or_else(|| {
        let mut quad = &obj.gram * (2.0 * obj.gamma_k);
        if let Some(m) = &obj.intrinsic {
            quad += m * 2.0;
        }
        0.1 / power_iteration(&quad, cfg.seed).max(f64::MIN_POSITIVE)
    })
}

fn fit_hinge(
    kernel: &Kernel,
    points: &[Vec<f64>],
    obj: HingeObjective,
    algorithm: Algorithm,
    cfg: &IterConfig,
) -> Result<KernelModel> {
    let step = hinge_step(&obj, cfg);
    let d = descend(&obj, step, cfg)?;
    let fit = FitSummary {
        algorithm,
        objective: d.best_value,
        gradient_norm: obj.gradient(&d.best).norm(),
        iterations: d.iterations,
        converged: d.converged,
        least_squares_fallback: false,
        trace: d.trace,
    };
    Ok(model_from(kernel, points, d.best, fit))
}

/// Kernel SVM (hinge loss) by fixed-step subgradient descent.
pub fn fit_svm(
    kernel: &Kernel,
    points: &[Vec<f64>],
    labels: &[f64],
    lambda: f64,
    cfg: &IterConfig,
) -> Result<KernelModel> {
    validate_supervised(points, labels, lambda, true)?;
    cfg.validate()?;
    let k = gram_matrix(kernel, points)?.entries;
    let obj = HingeObjective { gram: k, y: DVector::from_column_slice(labels), gamma_k: lambda, intrinsic: None };
    fit_hinge(kernel, points, obj, Algorithm::Svm, cfg)
}

fn validate_weights(gamma_k: f64, gamma_i: f64) -> Result<()> {
    if !(gamma_k.is_finite() && gamma_k > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_k must be > 0, got {gamma_k}")));
    }
    if !(gamma_i.is_finite() && gamma_i >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma_i must be >= 0, got {gamma_i}")));
    }
    Ok(())
}

/// The Laplacian-RLS objective for `data`, with the Gram matrix and graph
/// Laplacian built over all points.
pub fn lap_rls_objective(
    kernel: &Kernel,
    data: &SemiSupervisedDataset,
    gamma_k: f64,
    gamma_i: f64,
    graph: &GraphSpec,
) -> Result<LapRlsObjective> {
    validate_weights(gamma_k, gamma_i)?;
    let k = gram_matrix(kernel, data.points())?.entries;
    let l = laplacian(&graph.build(data.points())?, false)?.matrix;
    Ok(LapRlsObjective { gram: k, laplacian: l, y: DVector::from_column_slice(data.labels()), gamma_k, gamma_i })
}

/// Laplacian RLS. Setting the objective's gradient to zero gives
/// `K [(J K + N_L γ_K I + (N_L γ_I / N²) L K) a − Y] = 0`; the bracket is
/// solved directly.
pub fn fit_lap_rls(
    kernel: &Kernel,
    data: &SemiSupervisedDataset,
    gamma_k: f64,
    gamma_i: f64,
    graph: &GraphSpec,
) -> Result<KernelModel> {
    let obj = lap_rls_objective(kernel, data, gamma_k, gamma_i, graph)?;
    let n = data.len();
    let nl = data.n_labeled();
    let k = &obj.gram;
    let mut jk = k.clone();
    for i in nl..n {
        jk.row_mut(i).fill(0.0);
    }
    let scale = nl as f64 * gamma_i / (n as f64 * n as f64);
    let system = jk + DMatrix::identity(n, n) * (nl as f64 * gamma_k) + &obj.laplacian * k * scale;
    let y = DVector::from_fn(n, |i, _| if i < nl { data.labels()[i] } else { 0.0 });
    let (a, fallback) = solve_general_or_least_squares(system, &y)?;
    let fit = FitSummary {
        algorithm: Algorithm::LapRls,
        objective: obj.value(&a),
        gradient_norm: obj.gradient(&a).norm(),
        iterations: 0,
        converged: true,
        least_squares_fallback: fallback,
        trace: vec![],
    };
    Ok(model_from(kernel, data.points(), a, fit))
}

/// Laplacian SVM by fixed-step subgradient descent on the hinge loss plus
/// ambient and intrinsic penalties.
pub fn fit_lap_svm(
    kernel: &Kernel,
    data: &SemiSupervisedDataset,
    gamma_k: f64,
    gamma_i: f64,
    graph: &GraphSpec,
    cfg: &IterConfig,
) -> Result<KernelModel> {
    validate_weights(gamma_k, gamma_i)?;
    if !data.has_binary_labels() {
        return Err(Error::InvalidParameter("classification labels must be ±1".into()));
    }
    cfg.validate()?;
    let k = gram_matrix(kernel, data.points())?.entries;
    let intrinsic = if gamma_i > 0.0 {
        let l = laplacian(&graph.build(data.points())?, false)?.matrix;
        let n = data.len() as f64;
        let mut m = &k * l * &k * (gamma_i / (n * n));
        m = (&m + m.transpose()) * 0.5;
        Some(m)
    } else {
        None
    };
    let obj = HingeObjective { gram: k, y: DVector::from_column_slice(data.labels()), gamma_k, intrinsic };
    fit_hinge(kernel, data.points(), obj, Algorithm::LapSvm, cfg)
}
