//! Dataset CSV, point-cloud CSV, edge-list and model JSON persistence.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64` exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DataGraph;
use crate::kernels::{Kernel, KernelSpec};
use crate::learn::{FitSummary, KernelModel, SemiSupervisedDataset, SolverConfig};

/// Version of the model JSON layout.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Points with their optional labels.
pub type Rows = (Vec<Vec<f64>>, Vec<Option<f64>>);

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads a whole file, naming the path on failure.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })
}

/// Writes a whole file, naming the path on failure.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::File { path: path.to_path_buf(), source })
}

fn parse_err(path: &Path, line: u64, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(text.as_bytes())
}

fn parse_cell(path: &Path, line: u64, cell: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(path, line, format!("'{cell}' is not a finite number")))
}

/// Dataset CSV text: header `x1,…,xd,label`, empty label for unlabeled rows.
pub fn dataset_to_csv(points: &[Vec<f64>], labels: &[Option<f64>]) -> String {
    let d = points.first().map_or(0, Vec::len);
    let mut out = String::new();
    let header: Vec<String> = (1..=d).map(|i| format!("x{i}")).chain(["label".to_string()]).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for (p, y) in points.iter().zip(labels) {
        for v in p {
            out.push_str(&fmt_f64(*v));
            out.push(',');
        }
        if let Some(y) = y {
            out.push_str(&fmt_f64(*y));
        }
        out.push('\n');
    }
    out
}

/// Rows of a dataset CSV as `(points, optional labels)`, in file order.
pub fn parse_dataset_csv(path: &Path, text: &str) -> Result<Rows> {
    let mut rdr = reader(text);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_err(path, 1, e.to_string()))?,
        None => return Err(parse_err(path, 1, "missing header")),
    };
    let cols = header.len();
    let expected: Vec<String> = (1..cols).map(|i| format!("x{i}")).chain(["label".to_string()]).collect();
    if cols < 2 || header.iter().map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(
            path,
            1,
            format!("header must be x1,...,xd,label; found '{}'", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if rec.len() != cols {
            return Err(parse_err(path, line, format!("expected {cols} columns, found {}", rec.len())));
        }
        let p = (0..cols - 1).map(|i| parse_cell(path, line, &rec[i])).collect::<Result<Vec<_>>>()?;
        let y = match rec[cols - 1].trim() {
            "" => None,
            s => Some(parse_cell(path, line, s)?),
        };
        points.push(p);
        labels.push(y);
    }
    if points.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    Ok((points, labels))
}

/// Labeled rows must form a leading block.
fn to_dataset(path: &Path, points: Vec<Vec<f64>>, labels: Vec<Option<f64>>) -> Result<SemiSupervisedDataset> {
    let n_l = labels.iter().take_while(|y| y.is_some()).count();
    if let Some(i) = labels[n_l..].iter().position(Option::is_some) {
        return Err(parse_err(path, (n_l + i + 2) as u64, "labeled row after the first unlabeled row"));
    }
    let ys: Vec<f64> = labels.into_iter().map_while(|y| y).collect();
    SemiSupervisedDataset::new(points, ys)
}

pub fn load_dataset(path: &Path) -> Result<SemiSupervisedDataset> {
    let text = read_file(path)?;
    let (points, labels) = parse_dataset_csv(path, &text)?;
    to_dataset(path, points, labels)
}

/// Rows with or without labels, for prediction inputs.
pub fn load_unlabeled_rows(path: &Path) -> Result<Rows> {
    let text = read_file(path)?;
    parse_dataset_csv(path, &text)
}

pub fn save_dataset(path: &Path, data: &SemiSupervisedDataset) -> Result<()> {
    let labels: Vec<Option<f64>> = (0..data.len()).map(|i| data.labels().get(i).copied()).collect();
    write_file(path, dataset_to_csv(data.points(), &labels))?;
    Ok(())
}

/// Point cloud CSV: one point per row, optional non-numeric header row.
pub fn load_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_file(path)?;
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader(&text).records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        if i == 0 && rec.iter().any(|c| c.trim().parse::<f64>().is_err()) {
            continue;
        }
        let p = rec.iter().map(|c| parse_cell(path, line, c)).collect::<Result<Vec<_>>>()?;
        if let Some(first) = points.first() {
            if first.len() != p.len() {
                return Err(parse_err(path, line, format!("expected {} columns, found {}", first.len(), p.len())));
            }
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(parse_err(path, 1, "no points"));
    }
    Ok(points)
}

pub fn save_points(path: &Path, points: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for p in points {
        let row: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_file(path, out)?;
    Ok(())
}

pub fn load_edge_list(path: &Path) -> Result<DataGraph> {
    let text = read_file(path)?;
    DataGraph::from_edge_list(&text).map_err(|(line, msg)| parse_err(path, line as u64, msg))
}

pub fn save_edge_list(path: &Path, graph: &DataGraph) -> Result<()> {
    write_file(path, graph.to_edge_list())?;
    Ok(())
}

/// On-disk model layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u32,
    pub tool_version: String,
    pub kernel: KernelSpec,
    pub support_points: Vec<Vec<f64>>,
    pub coefficients: Vec<f64>,
    pub config: SolverConfig,
    pub fit: FitSummary,
}

impl ModelFile {
    pub fn from_model(model: &KernelModel, config: &SolverConfig) -> Result<ModelFile> {
        let kernel = model
            .kernel
            .spec()
            .ok_or_else(|| Error::Format("kernel built from custom functions cannot be serialized".into()))?;
        Ok(ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            kernel,
            support_points: model.support_points.clone(),
            coefficients: model.coefficients.clone(),
            config: config.clone(),
            fit: model.fit.clone(),
        })
    }

    pub fn into_model(self) -> Result<(KernelModel, SolverConfig)> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model format version {}", self.format_version)));
        }
        if self.support_points.len() != self.coefficients.len() {
            return Err(Error::Format(format!(
                "{} support points but {} coefficients",
                self.support_points.len(),
                self.coefficients.len()
            )));
        }
        if let Some(d) = self.support_points.first().map(Vec::len) {
            if let Some(p) = self.support_points.iter().find(|p| p.len() != d) {
                return Err(Error::DimensionMismatch { expected: d, found: p.len() });
            }
        }
        let kernel = Kernel::try_from(&self.kernel)?;
        let model =
            KernelModel { kernel, support_points: self.support_points, coefficients: self.coefficients, fit: self.fit };
        Ok((model, self.config))
    }
}

pub fn model_to_json(model: &KernelModel, config: &SolverConfig) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&ModelFile::from_model(model, config)?)?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json(text: &str) -> Result<(KernelModel, SolverConfig)> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.into_model()
}

pub fn save_model(path: &Path, model: &KernelModel, config: &SolverConfig) -> Result<()> {
    write_file(path, model_to_json(model, config)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(KernelModel, SolverConfig)> {
    model_from_json(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 123456.789, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let p = Path::new("mem.csv");
        let text = dataset_to_csv(&[vec![0.5, 1.0], vec![2.0, -3.0]], &[Some(1.0), None]);
        let (pts, ys) = parse_dataset_csv(p, &text).unwrap();
        assert_eq!(pts, vec![vec![0.5, 1.0], vec![2.0, -3.0]]);
        assert_eq!(ys, vec![Some(1.0), None]);
        assert_eq!(dataset_to_csv(&pts, &ys), text);

        let bad = "x1,x2,label\n1,2,1\n1,2\n";
        match parse_dataset_csv(p, bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad = "x1,x2,label\n1,abc,1\n";
        assert!(matches!(parse_dataset_csv(p, bad), Err(Error::Parse { line: 2, .. })));
        assert!(parse_dataset_csv(p, "a,b\n1,2\n").is_err());
    }

    #[test]
    fn labeled_rows_must_lead() {
        let p = Path::new("mem.csv");
        let (pts, ys) = parse_dataset_csv(p, "x1,label\n1,1\n2,\n3,-1\n").unwrap();
        assert!(matches!(to_dataset(p, pts, ys), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn model_without_kernel_is_rejected() {
        let text = r#"{"format_version":1,"tool_version":"0.1.0","support_points":[[0.0]],"coefficients":[1.0],
            "config":{"gamma_k":0.01,"gamma_i":1.0,"graph":{"kind":"knn","k":8},"max_iters":10,"step_size":null,"grad_tol":1e-6,"seed":0},
            "fit":{"algorithm":"rls","objective":0.0,"gradient_norm":0.0,"iterations":0,"converged":true,"least_squares_fallback":false}}"#;
        let err = model_from_json(text).unwrap_err();
        assert!(err.to_string().contains("kernel"), "{err}");
    }
}
