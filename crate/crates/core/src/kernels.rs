//! Positive kernels on ℝᵈ, the closure rules that build new kernels from old
//! ones, Gram matrices, and the distance a kernel induces on its inputs.
//!
//! Kernels are evaluated recursively: a composite kernel never materializes a
//! feature map, so infinite-dimensional kernels such as the Gaussian compose
//! freely.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack for positive semidefiniteness checks, scaled by the
/// largest diagonal entry of the matrix under test.
pub const TOL_PSD: f64 = 1e-8;

/// Scalar weight `f` in the rule `f(x) K(x, y) f(y)`.
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// Input warp `f` in the rule `K(f(x), f(y))`.
pub type PointMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Linear,
    Polynomial { c: f64, degree: u32 },
    Gaussian { sigma2: f64 },
    Exponential { gamma: f64 },
    Min,
    Sum(Box<Kernel>, Box<Kernel>),
    Product(Box<Kernel>, Box<Kernel>),
    Scaled(Box<Kernel>, PointFn),
    Warped(Box<Kernel>, PointMap),
    ExpOf(Box<Kernel>),
    Normalized(Box<Kernel>),
}

/// A symmetric positive kernel. Built through the validating constructors
/// below; immutable afterwards.
#[derive(Clone)]
pub struct Kernel {
    kind: Kind,
}

/// Serializable description of a kernel built only from named base kernels
/// and the function-free combinators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { c: f64, p: u32 },
    Gaussian { sigma2: f64 },
    Exponential { gamma: f64 },
    Min,
    Sum { left: Box<KernelSpec>, right: Box<KernelSpec> },
    Product { left: Box<KernelSpec>, right: Box<KernelSpec> },
    ExpOf { inner: Box<KernelSpec> },
    Normalized { inner: Box<KernelSpec> },
}

/// One closure rule of the kernel algebra.
pub enum KernelOp {
    Sum(Kernel, Kernel),
    Product(Kernel, Kernel),
    ScaleByFunction(Kernel, PointFn),
    WarpByFunction(Kernel, PointMap),
    Exp(Kernel),
    Normalize(Kernel),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("point has no coordinates"));
    }
    Ok(())
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

impl Kernel {
    pub fn linear() -> Self {
        Kernel { kind: Kind::Linear }
    }

    /// `(c + ⟨x, y⟩)^p`; positivity needs `c ≥ 0`.
    pub fn polynomial(c: f64, degree: u32) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidParameter(format!("polynomial offset c must be >= 0, got {c}")));
        }
        if degree == 0 {
            return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
        }
        Ok(Kernel { kind: Kind::Polynomial { c, degree } })
    }

    /// `exp(-‖x − y‖² / (2σ²))`, parameterized by the variance σ².
    pub fn gaussian(sigma2: f64) -> Result<Self> {
        let sigma2 = positive("sigma2", sigma2)?;
        Ok(Kernel { kind: Kind::Gaussian { sigma2 } })
    }

    /// `exp(-γ ‖x − y‖)`.
    pub fn exponential(gamma: f64) -> Result<Self> {
        let gamma = positive("gamma", gamma)?;
        Ok(Kernel { kind: Kind::Exponential { gamma } })
    }

    /// `min(s, t)` on nonnegative scalars (Brownian-motion covariance).
    pub fn min() -> Self {
        Kernel { kind: Kind::Min }
    }

    pub fn sum(self, other: Kernel) -> Self {
        Kernel { kind: Kind::Sum(Box::new(self), Box::new(other)) }
    }

    pub fn product(self, other: Kernel) -> Self {
        Kernel { kind: Kind::Product(Box::new(self), Box::new(other)) }
    }

    /// `f(x) K(x, y) f(y)`.
    pub fn scaled_by(self, f: PointFn) -> Self {
        Kernel { kind: Kind::Scaled(Box::new(self), f) }
    }

    /// `K(f(x), f(y))`.
    pub fn warped_by(self, f: PointMap) -> Self {
        Kernel { kind: Kind::Warped(Box::new(self), f) }
    }

    pub fn exp(self) -> Self {
        Kernel { kind: Kind::ExpOf(Box::new(self)) }
    }

    /// `K(x, y) / √(K(x, x) K(y, y))`.
    pub fn normalized(self) -> Self {
        Kernel { kind: Kind::Normalized(Box::new(self)) }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        match &self.kind {
            Kind::Linear => {
                check_dims(x, y)?;
                Ok(dot(x, y))
            }
            Kind::Polynomial { c, degree } => {
                check_dims(x, y)?;
                Ok((c + dot(x, y)).powi(*degree as i32))
            }
            Kind::Gaussian { sigma2 } => {
                check_dims(x, y)?;
                Ok((-sq_dist(x, y) / (2.0 * sigma2)).exp())
            }
            Kind::Exponential { gamma } => {
                check_dims(x, y)?;
                Ok((-gamma * sq_dist(x, y).sqrt()).exp())
            }
            Kind::Min => {
                if x.len() != 1 || y.len() != 1 {
                    return Err(Error::DimensionMismatch {
                        expected: 1,
                        found: if x.len() != 1 { x.len() } else { y.len() },
                    });
                }
                if x[0] < 0.0 || y[0] < 0.0 {
                    return Err(Error::MinKernelDomain);
                }
                Ok(x[0].min(y[0]))
            }
            Kind::Sum(a, b) => Ok(a.eval(x, y)? + b.eval(x, y)?),
            Kind::Product(a, b) => Ok(a.eval(x, y)? * b.eval(x, y)?),
            Kind::Scaled(k, f) => Ok(f(x) * k.eval(x, y)? * f(y)),
            Kind::Warped(k, f) => k.eval(&f(x), &f(y)),
            Kind::ExpOf(k) => Ok(k.eval(x, y)?.exp()),
            Kind::Normalized(k) => {
                let kxx = k.eval(x, x)?;
                let kyy = k.eval(y, y)?;
                for d in [kxx, kyy] {
                    if d <= 0.0 {
                        return Err(Error::ZeroSelfSimilarity(d));
                    }
                }
                Ok(k.eval(x, y)? / (kxx.sqrt() * kyy.sqrt()))
            }
        }
    }

    /// The serializable description, or `None` when the kernel contains a
    /// user-supplied function.
    pub fn spec(&self) -> Option<KernelSpec> {
        Some(match &self.kind {
            Kind::Linear => KernelSpec::Linear,
            Kind::Polynomial { c, degree } => KernelSpec::Polynomial { c: *c, p: *degree },
            Kind::Gaussian { sigma2 } => KernelSpec::Gaussian { sigma2: *sigma2 },
            Kind::Exponential { gamma } => KernelSpec::Exponential { gamma: *gamma },
            Kind::Min => KernelSpec::Min,
            Kind::Sum(a, b) => KernelSpec::Sum { left: Box::new(a.spec()?), right: Box::new(b.spec()?) },
            Kind::Product(a, b) => KernelSpec::Product { left: Box::new(a.spec()?), right: Box::new(b.spec()?) },
            Kind::ExpOf(k) => KernelSpec::ExpOf { inner: Box::new(k.spec()?) },
            Kind::Normalized(k) => KernelSpec::Normalized { inner: Box::new(k.spec()?) },
            Kind::Scaled(..) | Kind::Warped(..) => return None,
        })
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Linear => write!(f, "linear"),
            Kind::Polynomial { c, degree } => write!(f, "polynomial(c={c}, p={degree})"),
            Kind::Gaussian { sigma2 } => write!(f, "gaussian(sigma2={sigma2})"),
            Kind::Exponential { gamma } => write!(f, "exponential(gamma={gamma})"),
            Kind::Min => write!(f, "min"),
            Kind::Sum(a, b) => write!(f, "sum({a:?}, {b:?})"),
            Kind::Product(a, b) => write!(f, "product({a:?}, {b:?})"),
            Kind::Scaled(k, _) => write!(f, "scaled({k:?})"),
            Kind::Warped(k, _) => write!(f, "warped({k:?})"),
            Kind::ExpOf(k) => write!(f, "exp({k:?})"),
            Kind::Normalized(k) => write!(f, "normalized({k:?})"),
        }
    }
}

impl TryFrom<&KernelSpec> for Kernel {
    type Error = Error;

    fn try_from(spec: &KernelSpec) -> Result<Kernel> {
        Ok(match spec {
            KernelSpec::Linear => Kernel::linear(),
            KernelSpec::Polynomial { c, p } => Kernel::polynomial(*c, *p)?,
            KernelSpec::Gaussian { sigma2 } => Kernel::gaussian(*sigma2)?,
            KernelSpec::Exponential { gamma } => Kernel::exponential(*gamma)?,
            KernelSpec::Min => Kernel::min(),
            KernelSpec::Sum { left, right } => Kernel::try_from(left.as_ref())?.sum(Kernel::try_from(right.as_ref())?),
            KernelSpec::Product { left, right } => {
                Kernel::try_from(left.as_ref())?.product(Kernel::try_from(right.as_ref())?)
            }
            KernelSpec::ExpOf { inner } => Kernel::try_from(inner.as_ref())?.exp(),
            KernelSpec::Normalized { inner } => Kernel::try_from(inner.as_ref())?.normalized(),
        })
    }
}

impl KernelSpec {
    /// Parses the compact command-line form: `linear`, `min`,
    /// `poly:<c>:<p>`, `gaussian:<sigma2>`, `exponential:<gamma>`.
    pub fn parse(s: &str) -> Result<KernelSpec> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("kernel '{s}' is missing a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("kernel '{s}': {e}")))
        };
        let spec = match parts[0] {
            "linear" if parts.len() == 1 => KernelSpec::Linear,
            "min" if parts.len() == 1 => KernelSpec::Min,
            "poly" | "polynomial" if parts.len() == 3 => {
                let p = parts[2].parse::<u32>().map_err(|e| Error::InvalidParameter(format!("kernel '{s}': {e}")))?;
                KernelSpec::Polynomial { c: num(1)?, p }
            }
            "gaussian" if parts.len() == 2 => KernelSpec::Gaussian { sigma2: num(1)? },
            "exponential" if parts.len() == 2 => KernelSpec::Exponential { gamma: num(1)? },
            _ => return Err(Error::InvalidParameter(format!("unrecognized kernel '{s}'"))),
        };
        Kernel::try_from(&spec)?;
        Ok(spec)
    }
}

/// Applies one closure rule. The result is positive whenever the inputs are.
pub fn combine_kernels(op: KernelOp) -> Kernel {
    match op {
        KernelOp::Sum(a, b) => a.sum(b),
        KernelOp::Product(a, b) => a.product(b),
        KernelOp::ScaleByFunction(k, f) => k.scaled_by(f),
        KernelOp::WarpByFunction(k, f) => k.warped_by(f),
        KernelOp::Exp(k) => k.exp(),
        KernelOp::Normalize(k) => k.normalized(),
    }
}

pub fn eval_kernel(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    kernel.eval(x, y)
}

/// Pairwise kernel evaluations over a point set.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub points: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.entries.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Builds the Gram matrix row-parallel over the upper triangle and mirrors
/// it, so the result is exactly symmetric.
pub fn gram_matrix(kernel: &Kernel, points: &[Vec<f64>]) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyInput("gram matrix needs at least one point"));
    }
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel.eval(&points[i], &points[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut entries = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    Ok(GramMatrix { entries, points: points.to_vec() })
}

/// Cross-kernel matrix `K(xs[i], ys[j])`.
pub fn cross_gram(kernel: &Kernel, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| ys.iter().map(|y| kernel.eval(x, y)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(xs.len(), ys.len(), |i, j| rows[i][j]))
}

/// `d_K(x, y) = √(K(x,x) − 2K(x,y) + K(y,y))`, the feature-space distance.
pub fn kernel_distance(kernel: &Kernel, x: &[f64], y: &[f64]) -> Result<f64> {
    let kxx = kernel.eval(x, x)?;
    let kyy = kernel.eval(y, y)?;
    let kxy = kernel.eval(x, y)?;
    distance_from_parts(kxx, kxy, kyy)
}

fn distance_from_parts(kxx: f64, kxy: f64, kyy: f64) -> Result<f64> {
    let d2 = (kxx + kyy) - 2.0 * kxy;
    let tol = TOL_PSD * kxx.abs().max(kyy.abs());
    if d2 < -tol {
        return Err(Error::NotPositive(d2));
    }
    Ok(d2.max(0.0).sqrt())
}
