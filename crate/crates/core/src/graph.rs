//! Data graphs over point clouds, their Laplacians, and the graph heat kernel.

use std::collections::VecDeque;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::sq_dist;
use crate::spectral::{spectrum, SpectralDecomposition};

/// Undirected graph with a dense symmetric nonnegative weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGraph {
    weights: DMatrix<f64>,
    points: Option<Vec<Vec<f64>>>,
}

impl DataGraph {
    /// Validates symmetry (exact), zero diagonal, and nonnegative finite weights.
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::InvalidGraph(format!("weight matrix is {}x{}", n, weights.ncols())));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            for j in (i + 1)..n {
                let w = weights[(i, j)];
                if !(w.is_finite() && w >= 0.0) {
                    return Err(Error::InvalidGraph(format!("weight ({i}, {j}) = {w} must be >= 0")));
                }
                if w != weights[(j, i)] {
                    return Err(Error::Asymmetric((w - weights[(j, i)]).abs()));
                }
            }
        }
        Ok(DataGraph { weights, points: None })
    }

    /// Builds a graph from `(i, j, w)` triples. Repeated pairs are an error.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut weights = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {i}")));
            }
            if weights[(i, j)] != 0.0 {
                return Err(Error::EdgeExists(i, j));
            }
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        Self::from_weights(weights)
    }

    pub fn with_points(mut self, points: Vec<Vec<f64>>) -> Self {
        self.points = Some(points);
        self
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn points(&self) -> Option<&[Vec<f64>]> {
        self.points.as_deref()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.weights.row(i).sum()
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.degree(i)).collect()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&j| self.weights[(i, j)] > 0.0)
    }

    /// Edges as `(i, j, w)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self.weights[(i, j)];
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().iter().map(|e| e.2).sum()
    }

    /// True when every weight is 0 or 1.
    pub fn is_unweighted(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0 || w == 1.0)
    }

    /// Copy of the graph with one extra edge.
    pub fn with_edge(&self, i: usize, j: usize, w: f64) -> Result<DataGraph> {
        let n = self.n();
        if i >= n || j >= n || i == j {
            return Err(Error::InvalidGraph(format!("cannot add edge ({i}, {j}) on {n} vertices")));
        }
        if self.has_edge(i, j) {
            return Err(Error::EdgeExists(i, j));
        }
        let mut weights = self.weights.clone();
        weights[(i, j)] = w;
        weights[(j, i)] = w;
        let mut g = DataGraph::from_weights(weights)?;
        g.points = self.points.clone();
        Ok(g)
    }

    /// Complement of a simple unweighted graph.
    pub fn complement(&self) -> Result<DataGraph> {
        if !self.is_unweighted() {
            return Err(Error::Weighted);
        }
        let n = self.n();
        let weights = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 - self.weights[(i, j)] });
        DataGraph::from_weights(weights)
    }

    /// `Σ_{(i,j)∈E} w_ij (f(i) − f(j))²`, summed edge by edge.
    pub fn dirichlet_energy(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: f.len() });
        }
        Ok(self.edges().iter().map(|&(i, j, w)| w * (f[i] - f[j]).powi(2)).sum())
    }

    /// Total weight of edges leaving `subset`.
    pub fn boundary(&self, subset: &[usize]) -> f64 {
        let mut inside = vec![false; self.n()];
        for &v in subset {
            inside[v] = true;
        }
        self.edges().iter().filter(|&&(i, j, _)| inside[i] != inside[j]).map(|e| e.2).sum()
    }

    /// `h_G(S) = |∂S| / min(|S|, n − |S|)`; `None` for empty or full `S`.
    pub fn conductance(&self, subset: &[usize]) -> Option<f64> {
        let s = subset.len();
        let n = self.n();
        if s == 0 || s >= n {
            return None;
        }
        Some(self.boundary(subset) / s.min(n - s) as f64)
    }

    /// Writes the edge-list form: a `# vertices N` line then one `i j w`
    /// triple per edge. Weights use the shortest round-trip decimal, so
    /// integer weights print as integers.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# vertices {}", self.n()).unwrap();
        for (i, j, w) in self.edges() {
            writeln!(out, "{i} {j} {w}").unwrap();
        }
        out
    }

    /// Parses the edge-list form. Blank lines and `#` comments are skipped;
    /// the vertex count comes from a `# vertices N` line when present and
    /// otherwise from the largest index.
    pub fn from_edge_list(text: &str) -> std::result::Result<DataGraph, (usize, String)> {
        let mut declared: Option<usize> = None;
        let mut edges = Vec::new();
        let mut max_index = None::<usize>;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("vertices") {
                    let n = it
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or((lineno, "malformed '# vertices' line".to_string()))?;
                    declared = Some(n);
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err((lineno, format!("expected 'i j w', found {} fields", fields.len())));
            }
            let i = fields[0].parse::<usize>().map_err(|e| (lineno, format!("vertex '{}': {e}", fields[0])))?;
            let j = fields[1].parse::<usize>().map_err(|e| (lineno, format!("vertex '{}': {e}", fields[1])))?;
            let w = fields[2].parse::<f64>().map_err(|e| (lineno, format!("weight '{}': {e}", fields[2])))?;
            max_index = Some(max_index.map_or(i.max(j), |m| m.max(i).max(j)));
            edges.push((i, j, w, lineno));
        }
        let n = match (declared, max_index) {
            (Some(d), Some(m)) if m >= d => return Err((0, format!("vertex {m} exceeds declared count {d}"))),
            (Some(d), _) => d,
            (None, Some(m)) => m + 1,
            (None, None) => 0,
        };
        let mut weights = DMatrix::zeros(n, n);
        for (i, j, w, lineno) in edges {
            if i == j {
                return Err((lineno, format!("self-loop at vertex {i}")));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err((lineno, format!("weight {w} must be nonnegative")));
            }
            if weights[(i, j)] != 0.0 {
                return Err((lineno, format!("duplicate edge ({i}, {j})")));
            }
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
        DataGraph::from_weights(weights).map_err(|e| (0, e.to_string()))
    }
}

/// Edge weighting for k-nearest-neighbor graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weighting {
    Unit,
    /// `exp(-‖xᵢ − xⱼ‖² / (4t))`.
    Gaussian {
        t: f64,
    },
}

fn validate_points(points: &[Vec<f64>]) -> Result<usize> {
    let first = points.first().ok_or(Error::EmptyInput("no points"))?;
    let d = first.len();
    for p in points {
        if p.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: p.len() });
        }
    }
    Ok(d)
}

/// Symmetrized k-nearest-neighbor graph: `(i, j)` is an edge when either
/// endpoint lists the other among its `k` nearest. Distance ties go to the
/// lower vertex index.
pub fn build_knn_graph(points: &[Vec<f64>], k: usize, weighting: Weighting) -> Result<DataGraph> {
    validate_points(points)?;
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("k must satisfy 1 <= k < n = {n}, got {k}")));
    }
    if let Weighting::Gaussian { t } = weighting {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidParameter(format!("bandwidth t must be positive, got {t}")));
        }
    }
    let chosen: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (sq_dist(&points[i], &points[j]), j)).collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let mut weights = DMatrix::zeros(n, n);
    for (i, nbrs) in chosen.iter().enumerate() {
        for &j in nbrs {
            let w = match weighting {
                Weighting::Unit => 1.0,
                Weighting::Gaussian { t } => (-sq_dist(&points[i], &points[j]) / (4.0 * t)).exp(),
            };
            weights[(i, j)] = w;
            weights[(j, i)] = w;
        }
    }
    Ok(DataGraph::from_weights(weights)?.with_points(points.to_vec()))
}

/// Unit-weight graph joining points closer than `eps`. May be disconnected.
pub fn build_epsilon_graph(points: &[Vec<f64>], eps: f64) -> Result<DataGraph> {
    validate_points(points)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let n = points.len();
    let eps2 = eps * eps;
    let weights =
        DMatrix::from_fn(n, n, |i, j| if i != j && sq_dist(&points[i], &points[j]) < eps2 { 1.0 } else { 0.0 });
    Ok(DataGraph::from_weights(weights)?.with_points(points.to_vec()))
}

/// Fully connected graph with heat weights `exp(-‖xᵢ − xⱼ‖² / (4t))`.
pub fn build_gaussian_graph(points: &[Vec<f64>], t: f64) -> Result<DataGraph> {
    validate_points(points)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth t must be positive, got {t}")));
    }
    let n = points.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n).map(|j| if i == j { 0.0 } else { (-sq_dist(&points[i], &points[j]) / (4.0 * t)).exp() }).collect()
        })
        .collect();
    Ok(DataGraph::from_weights(DMatrix::from_fn(n, n, |i, j| rows[i][j]))?.with_points(points.to_vec()))
}

/// Graph recipe used by the semi-supervised solvers and the CLI:
/// `knn:<k>`, `eps:<e>`, or `gaussian:<t>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Knn { k: usize },
    Epsilon { eps: f64 },
    Gaussian { t: f64 },
}

impl GraphSpec {
    pub fn parse(s: &str) -> Result<GraphSpec> {
        let bad = || Error::InvalidParameter(format!("unrecognized graph spec '{s}'"));
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "knn" => Ok(GraphSpec::Knn { k: value.parse().map_err(|_| bad())? }),
            "eps" => Ok(GraphSpec::Epsilon { eps: value.parse().map_err(|_| bad())? }),
            "gaussian" => Ok(GraphSpec::Gaussian { t: value.parse().map_err(|_| bad())? }),
            _ => Err(bad()),
        }
    }

    pub fn build(&self, points: &[Vec<f64>]) -> Result<DataGraph> {
        match *self {
            GraphSpec::Knn { k } => build_knn_graph(points, k, Weighting::Unit),
            GraphSpec::Epsilon { eps } => build_epsilon_graph(points, eps),
            GraphSpec::Gaussian { t } => build_gaussian_graph(points, t),
        }
    }
}

/// Number of connected components, by breadth-first search.
pub fn connected_components(graph: &DataGraph) -> usize {
    component_labels(graph).1
}

/// Component index per vertex, plus the component count.
pub fn component_labels(graph: &DataGraph) -> (Vec<usize>, usize) {
    let n = graph.n();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            for u in graph.neighbors(v) {
                if label[u] == usize::MAX {
                    label[u] = count;
                    queue.push_back(u);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// `L = D − W`, or `I − D^{-1/2} W D^{-1/2}` when normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub matrix: DMatrix<f64>,
    pub normalized: bool,
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// `fᵀ L f`.
    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64> {
        if f.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), found: f.len() });
        }
        let v = DVector::from_column_slice(f);
        Ok(v.dot(&(&self.matrix * &v)))
    }
}

pub fn laplacian(graph: &DataGraph, normalized: bool) -> Result<Laplacian> {
    let n = graph.n();
    let deg = graph.degrees();
    let w = graph.weights();
    if !normalized {
        let matrix = DMatrix::from_fn(n, n, |i, j| if i == j { deg[i] } else { -w[(i, j)] });
        return Ok(Laplacian { matrix, normalized });
    }
    if let Some(v) = deg.iter().position(|&d| d <= 0.0) {
        return Err(Error::IsolatedVertex(v));
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut matrix = DMatrix::from_fn(n, n, |i, j| -w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    for i in 0..n {
        matrix[(i, i)] = 1.0;
    }
    // products above are symmetric only up to the order of multiplication
    for i in 0..n {
        for j in (i + 1)..n {
            matrix[(j, i)] = matrix[(i, j)];
        }
    }
    Ok(Laplacian { matrix, normalized })
}

pub fn quadratic_form(lap: &Laplacian, f: &[f64]) -> Result<f64> {
    lap.quadratic_form(f)
}

/// `H_t = Φ e^{-tΛ} Φᵀ`.
#[derive(Debug, Clone)]
pub struct HeatKernel {
    pub t: f64,
    pub matrix: DMatrix<f64>,
}

impl HeatKernel {
    /// Diffuses a signal: `H_t f`.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: self.matrix.ncols(), found: f.len() });
        }
        Ok((&self.matrix * DVector::from_column_slice(f)).iter().copied().collect())
    }
}

pub fn heat_kernel(lap: &Laplacian, t: f64) -> Result<HeatKernel> {
    let spec = spectrum(lap)?;
    heat_kernel_from_spectrum(&spec, t)
}

/// Heat kernel from an existing decomposition, for repeated evaluation at
/// several times.
pub fn heat_kernel_from_spectrum(spec: &SpectralDecomposition, t: f64) -> Result<HeatKernel> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time t must be >= 0, got {t}")));
    }
    let phi = &spec.eigenvectors;
    let n = phi.nrows();
    let mut scaled = phi.clone();
    for (k, lam) in spec.eigenvalues.iter().enumerate() {
        let e = (-t * lam).exp();
        scaled.column_mut(k).scale_mut(e);
    }
    let mut matrix = &scaled * phi.transpose();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = avg;
            matrix[(j, i)] = avg;
        }
    }
    Ok(HeatKernel { t, matrix })
}

/// Standard graphs used throughout the tests and the CLI examples.
pub mod families {
    use super::DataGraph;

    fn unit(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> DataGraph {
        let edges: Vec<_> = pairs.into_iter().map(|(i, j)| (i, j, 1.0)).collect();
        DataGraph::from_edges(n, &edges).expect("family edges are valid")
    }

    pub fn path(n: usize) -> DataGraph {
        unit(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn cycle(n: usize) -> DataGraph {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        unit(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn complete(n: usize) -> DataGraph {
        unit(n, (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))))
    }

    /// Vertex 0 is the hub.
    pub fn star(n: usize) -> DataGraph {
        unit(n, (1..n).map(|i| (0, i)))
    }

    pub fn empty(n: usize) -> DataGraph {
        unit(n, [])
    }

    pub fn complete_bipartite(m: usize, n: usize) -> DataGraph {
        unit(m + n, (0..m).flat_map(|i| (m..m + n).map(move |j| (i, j))))
    }

    /// Disjoint union of `K_m` and `K_n`.
    pub fn two_cliques(m: usize, n: usize) -> DataGraph {
        let left = (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j)));
        let right = (m..m + n).flat_map(move |i| ((i + 1)..m + n).map(move |j| (i, j)));
        unit(m + n, left.chain(right))
    }

    /// Two `K_m` joined by the single edge `(m − 1, m)`.
    pub fn bridged_cliques(m: usize) -> DataGraph {
        let mut g = two_cliques(m, m);
        g = g.with_edge(m - 1, m, 1.0).expect("bridge is absent");
        g
    }
}
