//! Kernel solvers with Tikhonov and manifold regularization. Every solver
//! returns a [`KernelModel`]: coefficients over exactly the training points,
//! predicting `f(x) = Σ aᵢ K(xᵢ, x)`.

pub mod objectives;
mod solvers;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSpec;
use crate::kernels::{cross_gram, Kernel};

pub use solvers::{fit_kernel_logistic, fit_lap_rls, fit_lap_svm, fit_rls, fit_svm, lap_rls_objective, IterConfig};

/// `N_L` labeled points followed by `N_U` unlabeled ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiSupervisedDataset {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl SemiSupervisedDataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("dataset needs at least one labeled point"));
        }
        if labels.len() > points.len() {
            return Err(Error::InvalidParameter(format!("{} labels for {} points", labels.len(), points.len())));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::EmptyInput("points have no coordinates"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.len() });
        }
        if let Some(y) = labels.iter().find(|y| !y.is_finite()) {
            return Err(Error::InvalidParameter(format!("label {y} is not finite")));
        }
        Ok(SemiSupervisedDataset { points, labels })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn labeled_points(&self) -> &[Vec<f64>] {
        &self.points[..self.labels.len()]
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.points.len() - self.labels.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn has_binary_labels(&self) -> bool {
        self.labels.iter().all(|&y| y == 1.0 || y == -1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Rls,
    Logistic,
    Svm,
    LapRls,
    LapSvm,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Algorithm> {
        Ok(match s {
            "rls" => Algorithm::Rls,
            "logistic" => Algorithm::Logistic,
            "svm" => Algorithm::Svm,
            "lap-rls" => Algorithm::LapRls,
            "lap-svm" => Algorithm::LapSvm,
            _ => return Err(Error::InvalidParameter(format!("unknown algorithm '{s}'"))),
        })
    }

    pub fn is_semi_supervised(&self) -> bool {
        matches!(self, Algorithm::LapRls | Algorithm::LapSvm)
    }
}

/// How a model was fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub algorithm: Algorithm,
    /// Objective value at the returned coefficients.
    pub objective: f64,
    /// Norm of the (sub)gradient at the returned coefficients.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// Gradient tolerance reached (iterative solvers) or direct solve accepted.
    pub converged: bool,
    /// The direct solve failed its residual check and a least-squares solve
    /// was used instead.
    pub least_squares_fallback: bool,
    /// Objective value after each step, starting with `a = 0`.
    #[serde(skip)]
    pub trace: Vec<f64>,
}

/// A fitted representer-form model.
#[derive(Debug, Clone)]
pub struct KernelModel {
    pub kernel: Kernel,
    pub support_points: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub fit: FitSummary,
}

impl KernelModel {
    pub fn dim(&self) -> usize {
        self.support_points.first().map_or(0, Vec::len)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let mut s = 0.0;
        for (a, p) in self.coefficients.iter().zip(&self.support_points) {
            s += a * self.kernel.eval(p, x)?;
        }
        Ok(s)
    }

    /// Scores for many points at once.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        if let Some(x) = xs.iter().find(|x| x.len() != self.dim()) {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        let k = cross_gram(&self.kernel, xs, &self.support_points)?;
        let a = nalgebra::DVector::from_column_slice(&self.coefficients);
        Ok((k * a).iter().copied().collect())
    }

    pub fn classify(&self, x: &[f64]) -> Result<f64> {
        Ok(sign(self.predict(x)?))
    }
}

/// `±1`, with `sign(0) = +1`.
pub fn sign(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

pub fn predict(model: &KernelModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

pub fn classify(model: &KernelModel, x: &[f64]) -> Result<f64> {
    model.classify(x)
}

/// Regularization weights, graph recipe, and iteration controls for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Ambient (RKHS) weight; the `λ` of the supervised solvers.
    pub gamma_k: f64,
    /// Intrinsic (graph) weight.
    pub gamma_i: f64,
    pub graph: GraphSpec,
    pub max_iters: usize,
    /// Fixed step; `None` uses `0.1 / L̂`.
    pub step_size: Option<f64>,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma_k: 1e-2,
            gamma_i: 1.0,
            graph: GraphSpec::Knn { k: 8 },
            max_iters: 5000,
            step_size: None,
            grad_tol: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_k.is_finite() && self.gamma_k > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_k must be > 0, got {}", self.gamma_k)));
        }
        if !(self.gamma_i.is_finite() && self.gamma_i >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma_i must be >= 0, got {}", self.gamma_i)));
        }
        self.iter().validate()
    }

    pub fn iter(&self) -> IterConfig {
        IterConfig { max_iters: self.max_iters, step_size: self.step_size, grad_tol: self.grad_tol, seed: self.seed }
    }

    /// Dispatches to the solver for `algo`.
    pub fn fit(&self, algo: Algorithm, kernel: &Kernel, data: &SemiSupervisedDataset) -> Result<KernelModel> {
        self.validate()?;
        let labeled = data.labeled_points();
        match algo {
            Algorithm::Rls => fit_rls(kernel, labeled, data.labels(), self.gamma_k),
            Algorithm::Logistic => fit_kernel_logistic(kernel, labeled, data.labels(), self.gamma_k, &self.iter()),
            Algorithm::Svm => fit_svm(kernel, labeled, data.labels(), self.gamma_k, &self.iter()),
            Algorithm::LapRls => fit_lap_rls(kernel, data, self.gamma_k, self.gamma_i, &self.graph),
            Algorithm::LapSvm => fit_lap_svm(kernel, data, self.gamma_k, self.gamma_i, &self.graph, &self.iter()),
        }
    }
}
