//! Laplacian spectra and the spectral graph theory built on them: classic
//! eigenvalue bounds, the complement lemma, edge-addition interlacing,
//! Cheeger constants, and sweep cuts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{connected_components, laplacian, DataGraph, Laplacian};

/// Largest graph accepted by [`cheeger_constant_bruteforce`].
pub const MAX_BRUTEFORCE_VERTICES: usize = 22;

/// Eigenvalues in ascending order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// Second-smallest eigenvalue (algebraic connectivity for Laplacians).
    pub fn lambda2(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    pub fn eigenvector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).into_owned()
    }

    /// `10⁻⁸ · λ_max`, the cutoff below which an eigenvalue counts as zero.
    pub fn zero_tolerance(&self) -> f64 {
        1e-8 * self.lambda_max().max(0.0)
    }

    pub fn zero_multiplicity(&self) -> usize {
        let tol = self.zero_tolerance();
        self.eigenvalues.iter().filter(|&&l| l <= tol).count()
    }
}

/// Full symmetric eigendecomposition. Rejects input whose asymmetry exceeds
/// `10⁻¹²` (relative to the largest entry, floor 1).
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: matrix.ncols() });
    }
    if n == 0 {
        return Err(Error::EmptyInput("empty matrix"));
    }
    let scale = matrix.amax().max(1.0);
    let asym = (matrix - matrix.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::Asymmetric(asym));
    }
    let eig = SymmetricEigen::new(matrix.clone());
    let mut vectors = eig.eigenvectors;
    let mut projected = vectors.transpose() * matrix * &vectors;
    jacobi_polish(&mut projected, &mut vectors);
    let values: Vec<f64> = projected.diagonal().iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let eigenvalues = order.iter().map(|&k| values[k]).collect();
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        // sign convention: largest-magnitude entry positive
        let pivot = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            col.neg_mut();
        }
        eigenvectors.set_column(dst, &col);
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

/// Cyclic Jacobi sweeps on a nearly diagonal symmetric `a`, accumulating the
/// rotations into `v`. The QR-based solver leaves off-diagonal mass around
/// 1e-7 on some inputs; a sweep or two removes it.
fn jacobi_polish(a: &mut DMatrix<f64>, v: &mut DMatrix<f64>) {
    let n = a.nrows();
    let scale = a.norm().max(f64::MIN_POSITIVE);
    for _ in 0..30 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= 4.0 * f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
}

pub fn spectrum(lap: &Laplacian) -> Result<SpectralDecomposition> {
    symmetric_eigen(&lap.matrix)
}

/// One inequality from the bounds report.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when the bound's hypotheses do not hold for this graph.
    pub holds: Option<bool>,
}

/// Classic Laplacian eigenvalue bounds evaluated against the true spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub n: usize,
    pub connected: bool,
    pub lambda2: f64,
    pub lambda_n: f64,
    /// `n/(n−1) · min_v d_v`, an upper bound on λ₂.
    pub fiedler_upper: f64,
    /// `n/(n−1) · max_v d_v`, a lower bound on λ_n.
    pub fiedler_lambda_n_lower: f64,
    /// `max_i (d_i + m(i))` with `m(i)` the weighted mean neighbor degree.
    pub merris_upper: f64,
    /// `max_{(i,j)∈E} (d_i + d_j)`.
    pub anderson_morley_upper: f64,
    /// `(Σλᵢ, Σ d_v)`; for unweighted graphs `Σ d_v = 2|E|`.
    pub trace_check: (f64, f64),
    /// `λ_n ≤ n`, reported for simple unweighted graphs only.
    pub lambda_n_le_n: Option<bool>,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds != Some(false))
    }
}

pub fn eigenvalue_bounds(graph: &DataGraph) -> Result<BoundsReport> {
    let n = graph.n();
    if n < 2 {
        return Err(Error::InvalidGraph("bounds need at least two vertices".into()));
    }
    let spec = spectrum(&laplacian(graph, false)?)?;
    let lambda2 = spec.eigenvalues[1];
    let lambda_n = spec.lambda_max();
    let slack = 1e-8 * lambda_n.max(1.0);
    let deg = graph.degrees();
    let ratio = n as f64 / (n as f64 - 1.0);
    let dmin = deg.iter().copied().fold(f64::INFINITY, f64::min);
    let dmax = deg.iter().copied().fold(0.0, f64::max);
    let connected = connected_components(graph) == 1;

    let merris_upper = (0..n)
        .map(|i| {
            let m = if deg[i] > 0.0 {
                graph.neighbors(i).map(|j| graph.weight(i, j) * deg[j]).sum::<f64>() / deg[i]
            } else {
                0.0
            };
            deg[i] + m
        })
        .fold(0.0, f64::max);
    let anderson_morley_upper = graph.edges().iter().map(|&(i, j, _)| deg[i] + deg[j]).fold(0.0, f64::max);
    let trace: f64 = spec.eigenvalues.iter().sum();
    let degree_sum: f64 = deg.iter().sum();
    let simple = graph.is_unweighted();
    let lambda_n_le_n = simple.then_some(lambda_n <= n as f64 + slack);

    let le = |lhs: f64, rhs: f64| lhs <= rhs + slack;
    let checks = vec![
        BoundCheck {
            name: "fiedler_lambda2",
            lhs: lambda2,
            rhs: ratio * dmin,
            holds: connected.then(|| le(lambda2, ratio * dmin)),
        },
        BoundCheck {
            name: "fiedler_lambda_n",
            lhs: ratio * dmax,
            rhs: lambda_n,
            holds: Some(le(ratio * dmax, lambda_n)),
        },
        BoundCheck { name: "merris", lhs: lambda_n, rhs: merris_upper, holds: Some(le(lambda_n, merris_upper)) },
        BoundCheck {
            name: "anderson_morley",
            lhs: lambda_n,
            rhs: anderson_morley_upper,
            holds: Some(le(lambda_n, anderson_morley_upper)),
        },
        BoundCheck {
            name: "trace",
            lhs: trace,
            rhs: degree_sum,
            holds: Some((trace - degree_sum).abs() <= 1e-9 * degree_sum.max(1.0)),
        },
        BoundCheck { name: "lambda_n_le_n", lhs: lambda_n, rhs: n as f64, holds: lambda_n_le_n },
    ];
    Ok(BoundsReport {
        n,
        connected,
        lambda2,
        lambda_n,
        fiedler_upper: ratio * dmin,
        fiedler_lambda_n_lower: ratio * dmax,
        merris_upper,
        anderson_morley_upper,
        trace_check: (trace, degree_sum),
        lambda_n_le_n,
        checks,
    })
}

/// Complement eigenvalues from a simple graph's ascending spectrum:
/// `{0} ∪ {n − λᵢ : i ≥ 2}`, sorted ascending.
pub fn complement_eigenvalues(eigenvalues: &[f64]) -> Vec<f64> {
    let n = eigenvalues.len();
    if n == 0 {
        return Vec::new();
    }
    let mut out: Vec<f64> = std::iter::once(0.0).chain(eigenvalues[1..].iter().map(|l| n as f64 - l)).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Spectrum of the complement of `graph` via the complement lemma, without
/// building the complement.
pub fn complement_spectrum(graph: &DataGraph) -> Result<Vec<f64>> {
    if !graph.is_unweighted() {
        return Err(Error::Weighted);
    }
    let spec = spectrum(&laplacian(graph, false)?)?;
    Ok(complement_eigenvalues(&spec.eigenvalues))
}

/// A vertex subset and its conductance `h_G(S)`.
#[derive(Debug, Clone, Serialize)]
pub struct CutResult {
    /// Sorted vertex indices.
    pub subset: Vec<usize>,
    pub conductance: f64,
    /// Number of sorted vertices in the sweep prefix (equals `|S|`).
    pub sweep_threshold: usize,
}

#[derive(Clone, Copy)]
struct Candidate {
    h: f64,
    small_side: usize,
    mask: u32,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        (self.h, self.small_side, self.mask) < (other.h, other.small_side, other.mask)
    }
}

/// Exact Cheeger constant `h(G) = min_S |∂S| / min(|S|, n − |S|)` by
/// enumerating every bipartition. Returns the constant and the smaller side
/// of a minimizing cut.
pub fn cheeger_constant_bruteforce(graph: &DataGraph) -> Result<(f64, Vec<usize>)> {
    let n = graph.n();
    if n > MAX_BRUTEFORCE_VERTICES {
        return Err(Error::TooLarge { n, max: MAX_BRUTEFORCE_VERTICES });
    }
    if n < 2 {
        return Err(Error::InvalidGraph("Cheeger constant needs at least two vertices".into()));
    }
    // S ranges over nonempty subsets of {0, …, n−2}; vertex n−1 always lies
    // in the complement, so each bipartition is visited once.
    let free = n - 1;
    let high_bits = free.min(8);
    let low_bits = free - high_bits;
    let w = graph.weights();
    let deg = graph.degrees();

    let best = (0u32..(1u32 << high_bits))
        .into_par_iter()
        .map(|hi| {
            let base = hi << low_bits;
            let mut inside = vec![false; n];
            let mut size = 0usize;
            for (v, slot) in inside.iter_mut().enumerate().take(free) {
                if base >> v & 1 == 1 {
                    *slot = true;
                    size += 1;
                }
            }
            let mut boundary = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    if inside[i] != inside[j] {
                        boundary += w[(i, j)];
                    }
                }
            }
            let mut mask = base;
            let mut best: Option<Candidate> = None;
            let mut consider = |mask: u32, size: usize, boundary: f64| {
                if size == 0 {
                    return;
                }
                let small = size.min(n - size);
                let c = Candidate { h: boundary / small as f64, small_side: small, mask };
                if best.is_none_or(|b| c.better_than(&b)) {
                    best = Some(c);
                }
            };
            consider(mask, size, boundary);
            for step in 1u32..(1u32 << low_bits) {
                let v = step.trailing_zeros() as usize;
                let to_s: f64 = (0..n).filter(|&u| inside[u]).map(|u| w[(u, v)]).sum();
                if inside[v] {
                    inside[v] = false;
                    size -= 1;
                    boundary -= deg[v] - 2.0 * to_s;
                } else {
                    boundary += deg[v] - 2.0 * to_s;
                    inside[v] = true;
                    size += 1;
                }
                mask ^= 1 << v;
                consider(mask, size, boundary);
            }
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (Some(x), Some(y)) => Some(if y.better_than(&x) { y } else { x }),
                (x, None) => x,
                (None, y) => y,
            },
        )
        .expect("n >= 2 yields at least one cut");

    let s: Vec<usize> = (0..free).filter(|&v| best.mask >> v & 1 == 1).collect();
    let subset = if s.len() * 2 <= n { s } else { (0..n).filter(|&v| best.mask >> v & 1 == 0).collect() };
    let h = graph.conductance(&subset).expect("proper subset");
    Ok((h, subset))
}

/// Sweep cut from the second eigenvector of the normalized Laplacian,
/// rescaled by `D^{-1/2}`: vertices are sorted by that value and the best of
/// the `n − 1` proper prefixes is returned (ties keep the smaller prefix).
pub fn sweep_cut(graph: &DataGraph) -> Result<CutResult> {
    let n = graph.n();
    if n < 2 {
        return Err(Error::InvalidGraph("sweep cut needs at least two vertices".into()));
    }
    let comps = connected_components(graph);
    if comps != 1 {
        return Err(Error::Disconnected(comps));
    }
    let spec = spectrum(&laplacian(graph, true)?)?;
    let f2 = spec.eigenvector(1);
    let deg = graph.degrees();
    let f: Vec<f64> = (0..n).map(|i| f2[i] / deg[i].sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));

    let w = graph.weights();
    let mut inside = vec![false; n];
    let mut boundary = 0.0;
    let mut best: Option<(f64, usize)> = None;
    for (i, &v) in order.iter().enumerate().take(n - 1) {
        let to_s: f64 = (0..n).filter(|&u| inside[u]).map(|u| w[(u, v)]).sum();
        boundary += deg[v] - 2.0 * to_s;
        inside[v] = true;
        let size = i + 1;
        let h = boundary / size.min(n - size) as f64;
        if best.is_none_or(|(bh, _)| h < bh) {
            best = Some((h, size));
        }
    }
    let (_, size) = best.expect("n >= 2");
    let mut subset: Vec<usize> = order[..size].to_vec();
    subset.sort_unstable();
    let conductance = graph.conductance(&subset).expect("proper prefix");
    Ok(CutResult { subset, conductance, sweep_threshold: size })
}

/// Spectra before and after adding one unit edge.
#[derive(Debug, Clone, Serialize)]
pub struct InterlacingReport {
    pub edge: (usize, usize),
    pub before: Vec<f64>,
    pub after: Vec<f64>,
    /// Indices `i` (0-based) where `λᵢ(G) ≤ λᵢ(G′) ≤ λᵢ₊₁(G)` fails.
    pub violations: Vec<usize>,
    pub trace_before: f64,
    pub trace_after: f64,
}

impl InterlacingReport {
    pub fn interlaces(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn trace_difference(&self) -> f64 {
        self.trace_after - self.trace_before
    }
}

pub const INTERLACING_SLACK: f64 = 1e-8;

/// Adds the unit edge `(i, j)` and checks that the new spectrum interlaces
/// the old one.
pub fn check_interlacing(graph: &DataGraph, edge: (usize, usize)) -> Result<InterlacingReport> {
    let (i, j) = edge;
    let bigger = graph.with_edge(i, j, 1.0)?;
    let before = spectrum(&laplacian(graph, false)?)?.eigenvalues;
    let after = spectrum(&laplacian(&bigger, false)?)?.eigenvalues;
    let n = before.len();
    let s = INTERLACING_SLACK;
    let violations = (0..n)
        .filter(|&k| {
            let lower_ok = before[k] <= after[k] + s;
            let upper_ok = k + 1 == n || after[k] <= before[k + 1] + s;
            !(lower_ok && upper_ok)
        })
        .collect();
    Ok(InterlacingReport {
        edge,
        trace_before: laplacian(graph, false)?.matrix.trace(),
        trace_after: laplacian(&bigger, false)?.matrix.trace(),
        before,
        after,
        violations,
    })
}

/// Rayleigh quotient of a trial vector, centered against the constant vector
/// and normalized, alongside the true λ₂ it bounds from above.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RayleighBound {
    pub quotient: f64,
    pub lambda2: f64,
}

impl RayleighBound {
    pub fn holds(&self) -> bool {
        self.quotient >= self.lambda2 - 1e-8
    }
}

pub fn rayleigh_lambda2(lap: &Laplacian, trial: &[f64]) -> Result<RayleighBound> {
    let n = lap.n();
    if lap.normalized {
        return Err(Error::InvalidParameter(
            "Rayleigh bound against the constant vector needs the unnormalized Laplacian".into(),
        ));
    }
    if trial.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: trial.len() });
    }
    let mean = trial.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = trial.iter().map(|v| v - mean).collect();
    let norm = centered.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = trial.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if norm <= 1e-12 * scale.max(f64::MIN_POSITIVE) * (n as f64).sqrt() || norm == 0.0 {
        return Err(Error::ConstantTrial);
    }
    let unit: Vec<f64> = centered.iter().map(|v| v / norm).collect();
    let quotient = lap.quadratic_form(&unit)?;
    let lambda2 = spectrum(lap)?.eigenvalues.get(1).copied().unwrap_or(0.0);
    Ok(RayleighBound { quotient, lambda2 })
}
