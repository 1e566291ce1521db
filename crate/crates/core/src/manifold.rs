//! Sample manifolds with closed-form Laplace–Beltrami eigenpairs, and the
//! pointwise convergence experiment for the Gaussian-weighted graph
//! Laplacian.
//!
//! Sign convention: `Δ` is the positive Laplacian, so `Δ sin(kθ) = k² sin(kθ)`
//! on the unit circle.
//!
//! The estimator at a point `z` with bandwidth `t` is
//!
//! ```text
//! 1 / (n · t · (4πt)^{k/2}) · Σⱼ (f(z) − f(xⱼ)) · exp(−‖z − xⱼ‖² / 4t)
//! ```
//!
//! and, for uniform samples with `t_n = n^{−1/(k+2+a)}`, tends to
//! `Δf(z) / vol(M)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{families, laplacian};
use crate::kernels::sq_dist;
use crate::spectral::spectrum;

const ON_MANIFOLD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticManifold {
    /// Circle of the given radius in ℝ².
    Circle { radius: f64 },
    /// Product of two unit circles in ℝ⁴, `(cos θ₁, sin θ₁, cos θ₂, sin θ₂)`.
    /// Intrinsically flat with volume 4π².
    FlatTorus,
}

impl AnalyticManifold {
    pub fn circle(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        Ok(AnalyticManifold::Circle { radius })
    }

    pub fn intrinsic_dim(&self) -> usize {
        match self {
            AnalyticManifold::Circle { .. } => 1,
            AnalyticManifold::FlatTorus => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.intrinsic_dim()
    }

    pub fn volume(&self) -> f64 {
        match self {
            AnalyticManifold::Circle { radius } => 2.0 * PI * radius,
            AnalyticManifold::FlatTorus => 4.0 * PI * PI,
        }
    }

    /// Embeds angle coordinates.
    pub fn point_at(&self, angles: &[f64]) -> Result<Vec<f64>> {
        if angles.len() != self.intrinsic_dim() {
            return Err(Error::DimensionMismatch { expected: self.intrinsic_dim(), found: angles.len() });
        }
        Ok(match self {
            AnalyticManifold::Circle { radius } => vec![radius * angles[0].cos(), radius * angles[0].sin()],
            AnalyticManifold::FlatTorus => {
                vec![angles[0].cos(), angles[0].sin(), angles[1].cos(), angles[1].sin()]
            }
        })
    }

    /// Angle coordinates of an embedded point; errors when the point is
    /// further than 1e-9 from the manifold.
    pub fn angles_of(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), found: point.len() });
        }
        let pair = |x: f64, y: f64, r: f64| -> Result<f64> {
            let off = (x.hypot(y) - r).abs();
            if off > ON_MANIFOLD_TOL {
                return Err(Error::OffManifold(off));
            }
            Ok(y.atan2(x))
        };
        Ok(match self {
            AnalyticManifold::Circle { radius } => vec![pair(point[0], point[1], *radius)?],
            AnalyticManifold::FlatTorus => {
                vec![pair(point[0], point[1], 1.0)?, pair(point[2], point[3], 1.0)?]
            }
        })
    }

    /// `n` i.i.d. uniform samples (uniform angles), deterministic per seed.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.intrinsic_dim();
        (0..n)
            .map(|_| {
                let angles: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
                self.point_at(&angles).expect("angle count matches")
            })
            .collect()
    }

    /// `n` equally spaced points on the circle, starting at angle 0.
    pub fn equispaced(&self, n: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            AnalyticManifold::Circle { .. } => {
                (0..n).map(|i| self.point_at(&[2.0 * PI * i as f64 / n as f64])).collect()
            }
            AnalyticManifold::FlatTorus => {
                Err(Error::InvalidParameter("equispaced sampling is only defined for the circle".into()))
            }
        }
    }
}

pub fn sample_manifold(manifold: &AnalyticManifold, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    Ok(manifold.sample(n, seed))
}

/// Laplace–Beltrami eigenfunctions in angle coordinates: constants and
/// `sin`/`cos` of `⟨m, θ⟩` for an integer frequency vector `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "freq", rename_all = "snake_case")]
pub enum Eigenfunction {
    Constant,
    Sin(Vec<i64>),
    Cos(Vec<i64>),
}

impl Eigenfunction {
    /// `const`, `sin:<m>`, `cos:<m>`, or comma-separated frequencies for
    /// the torus (`sin:1,0`).
    pub fn parse(s: &str) -> Result<Eigenfunction> {
        if s == "const" || s == "constant" {
            return Ok(Eigenfunction::Constant);
        }
        let bad = || Error::InvalidParameter(format!("unrecognized eigenfunction '{s}'"));
        let (kind, freq) = s.split_once(':').ok_or_else(bad)?;
        let freq: Vec<i64> =
            freq.split(',').map(|v| v.trim().parse::<i64>().map_err(|_| bad())).collect::<Result<_>>()?;
        match kind {
            "sin" => Ok(Eigenfunction::Sin(freq)),
            "cos" => Ok(Eigenfunction::Cos(freq)),
            _ => Err(bad()),
        }
    }

    fn validate(&self, manifold: &AnalyticManifold) -> Result<()> {
        match self {
            Eigenfunction::Constant => Ok(()),
            Eigenfunction::Sin(m) | Eigenfunction::Cos(m) if m.len() == manifold.intrinsic_dim() => Ok(()),
            Eigenfunction::Sin(m) | Eigenfunction::Cos(m) => {
                Err(Error::DimensionMismatch { expected: manifold.intrinsic_dim(), found: m.len() })
            }
        }
    }

    /// Value at angle coordinates.
    pub fn value_at_angles(&self, angles: &[f64]) -> f64 {
        let phase = |m: &[i64]| m.iter().zip(angles).map(|(&k, a)| k as f64 * a).sum::<f64>();
        match self {
            Eigenfunction::Constant => 1.0,
            Eigenfunction::Sin(m) => phase(m).sin(),
            Eigenfunction::Cos(m) => phase(m).cos(),
        }
    }

    /// Laplace–Beltrami eigenvalue: `|m|²/r²` on the circle, `|m|²` on the
    /// unit-circle torus.
    pub fn eigenvalue(&self, manifold: &AnalyticManifold) -> f64 {
        let m2 = match self {
            Eigenfunction::Constant => return 0.0,
            Eigenfunction::Sin(m) | Eigenfunction::Cos(m) => m.iter().map(|&k| (k * k) as f64).sum::<f64>(),
        };
        match manifold {
            AnalyticManifold::Circle { radius } => m2 / (radius * radius),
            AnalyticManifold::FlatTorus => m2,
        }
    }
}

/// `(f(p), Δf(p))` for an analytic eigenfunction at an embedded point.
pub fn analytic_eigenfunction(manifold: &AnalyticManifold, f: &Eigenfunction, point: &[f64]) -> Result<(f64, f64)> {
    f.validate(manifold)?;
    let angles = manifold.angles_of(point)?;
    let v = f.value_at_angles(&angles);
    Ok((v, f.eigenvalue(manifold) * v))
}

fn check_bandwidth(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth t must be positive, got {t}")));
    }
    Ok(())
}

/// The scaled heat-weighted graph Laplacian of `f` evaluated at an arbitrary
/// point `z` with known value `f_z`.
pub fn laplacian_estimate_at(
    points: &[Vec<f64>],
    f_values: &[f64],
    z: &[f64],
    f_z: f64,
    t: f64,
    intrinsic_dim: usize,
) -> Result<f64> {
    check_bandwidth(t)?;
    if points.is_empty() {
        return Err(Error::EmptyInput("no sample points"));
    }
    if f_values.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: f_values.len() });
    }
    if let Some(p) = points.iter().find(|p| p.len() != z.len()) {
        return Err(Error::DimensionMismatch { expected: z.len(), found: p.len() });
    }
    let n = points.len() as f64;
    let sum: f64 = points.iter().zip(f_values).map(|(x, fx)| (f_z - fx) * (-sq_dist(z, x) / (4.0 * t)).exp()).sum();
    let scale = n * t * (4.0 * PI * t).powf(intrinsic_dim as f64 / 2.0);
    Ok(sum / scale)
}

/// The estimator at a sample point. The self term contributes zero.
pub fn pointwise_laplacian_estimate(
    points: &[Vec<f64>],
    f_values: &[f64],
    z_index: usize,
    t: f64,
    intrinsic_dim: usize,
) -> Result<f64> {
    if z_index >= points.len() {
        return Err(Error::InvalidParameter(format!("z index {z_index} out of range for {} points", points.len())));
    }
    if f_values.len() != points.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), found: f_values.len() });
    }
    laplacian_estimate_at(points, f_values, &points[z_index], f_values[z_index], t, intrinsic_dim)
}

/// `t_n = n^{−1/(k+2+a)}`.
pub fn bandwidth_schedule(n: usize, intrinsic_dim: usize, a: f64) -> f64 {
    (n as f64).powf(-1.0 / (intrinsic_dim as f64 + 2.0 + a))
}

/// One run of the convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub n: usize,
    pub t_n: f64,
    pub seed: u64,
    pub z: Vec<f64>,
    pub estimate: f64,
    pub analytic_target: f64,
    pub abs_error: f64,
}

/// For each `n` in the schedule and each seed: sample uniformly, estimate
/// at `z` with `t_n`, compare with `Δf(z) / vol(M)`. Reports come back
/// ordered by `n`, then seed.
pub fn convergence_experiment(
    manifold: &AnalyticManifold,
    f: &Eigenfunction,
    z: &[f64],
    n_schedule: &[usize],
    a: f64,
    seeds: &[u64],
) -> Result<Vec<ConvergenceReport>> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidParameter(format!("schedule exponent a must be > 0, got {a}")));
    }
    if n_schedule.is_empty() || n_schedule.contains(&0) {
        return Err(Error::InvalidParameter("sample sizes must be >= 1".into()));
    }
    if n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sample sizes must be strictly ascending".into()));
    }
    let (f_z, lap_z) = analytic_eigenfunction(manifold, f, z)?;
    let target = lap_z / manifold.volume();
    let k = manifold.intrinsic_dim();
    let jobs: Vec<(usize, u64)> = n_schedule.iter().flat_map(|&n| seeds.iter().map(move |&s| (n, s))).collect();
    jobs.par_iter()
        .map(|&(n, seed)| {
            let pts = manifold.sample(n, seed);
            let fv: Vec<f64> =
                pts.iter().map(|p| f.value_at_angles(&manifold.angles_of(p).expect("sampled on manifold"))).collect();
            let t_n = bandwidth_schedule(n, k, a);
            let estimate = laplacian_estimate_at(&pts, &fv, z, f_z, t_n, k)?;
            Ok(ConvergenceReport {
                n,
                t_n,
                seed,
                z: z.to_vec(),
                estimate,
                analytic_target: target,
                abs_error: (estimate - target).abs(),
            })
        })
        .collect()
}

/// Median absolute error per sample size, in schedule order.
pub fn median_errors(reports: &[ConvergenceReport]) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = reports.iter().map(|r| r.n).collect();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let mut e: Vec<f64> = reports.iter().filter(|r| r.n == n).map(|r| r.abs_error).collect();
            e.sort_by(f64::total_cmp);
            let m = e.len();
            let med = if m % 2 == 1 { e[m / 2] } else { 0.5 * (e[m / 2 - 1] + e[m / 2]) };
            (n, med)
        })
        .collect()
}

/// Whether median errors fall along the schedule.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTrend {
    pub medians: Vec<(usize, f64)>,
    pub non_increasing: bool,
    /// First median over last median.
    pub reduction: f64,
}

impl ConvergenceTrend {
    pub fn from_reports(reports: &[ConvergenceReport]) -> Self {
        let medians = median_errors(reports);
        let non_increasing = medians.windows(2).all(|w| w[1].1 <= w[0].1);
        let reduction = match (medians.first(), medians.last()) {
            (Some(f), Some(l)) if l.1 > 0.0 => f.1 / l.1,
            _ => f64::INFINITY,
        };
        ConvergenceTrend { medians, non_increasing, reduction }
    }

    /// Non-increasing medians with at least `factor`-fold total reduction.
    pub fn converges(&self, factor: f64) -> bool {
        self.non_increasing && self.reduction >= factor
    }
}

/// One eigenvalue pair of the cycle graph compared with the circle.
#[derive(Debug, Clone, Serialize)]
pub struct CycleCircleRow {
    pub k: usize,
    /// The pair of cycle eigenvalues scaled by `(n / 2π)²`.
    pub scaled: (f64, f64),
    pub circle_eigenvalue: f64,
    pub max_relative_error: f64,
    /// Norm of the projection of the sampled unit `sin(kθ)` and `cos(kθ)`
    /// onto the computed two-dimensional eigenspace.
    pub alignment: (f64, f64),
}

/// Compares the first `pairs` nonzero eigenvalue pairs of the `n`-cycle
/// with the unit circle's `k²`, and the eigenvectors with sampled
/// `sin(kθ)`, `cos(kθ)`.
pub fn cycle_circle_correspondence(n: usize, pairs: usize) -> Result<Vec<CycleCircleRow>> {
    if n < 3 || 2 * pairs + 1 > n {
        return Err(Error::InvalidParameter(format!("cycle of {n} vertices cannot supply {pairs} pairs")));
    }
    let spec = spectrum(&laplacian(&families::cycle(n), false)?)?;
    let scale = (n as f64 / (2.0 * PI)).powi(2);
    let sampled = |k: usize, trig: fn(f64) -> f64| {
        let v: Vec<f64> = (0..n).map(|i| trig(2.0 * PI * (k * i) as f64 / n as f64)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect::<Vec<_>>()
    };
    let project = |v: &[f64], cols: (usize, usize)| {
        let dot = |c: usize| (0..n).map(|i| spec.eigenvectors[(i, c)] * v[i]).sum::<f64>();
        dot(cols.0).hypot(dot(cols.1))
    };
    Ok((1..=pairs)
        .map(|k| {
            let (i, j) = (2 * k - 1, 2 * k);
            let scaled = (spec.eigenvalues[i] * scale, spec.eigenvalues[j] * scale);
            let target = (k * k) as f64;
            let max_relative_error = ((scaled.0 - target).abs()).max((scaled.1 - target).abs()) / target;
            let alignment = (project(&sampled(k, f64::sin), (i, j)), project(&sampled(k, f64::cos), (i, j)));
            CycleCircleRow { k, scaled, circle_eigenvalue: target, max_relative_error, alignment }
        })
        .collect())
}
