//! Seeded synthetic two-class datasets.
//!
//! Every generator draws from `ChaCha8Rng::seed_from_u64(seed)`, so a seed
//! reproduces the same points on any platform. Classes are `+1` and `−1`.
//! The labeled block (the first `n_labeled_per_class` points of each class
//! after a seeded shuffle, interleaved `+1, −1, +1, …`) comes first, then the
//! unlabeled points in generation order.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::SemiSupervisedDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ToyKind {
    /// Two interleaved half circles with isotropic Gaussian noise.
    TwoMoons { noise: f64 },
    /// Unit circle (`+1`) inside a circle of radius `1 + gap` (`−1`).
    ConcentricCircles { gap: f64 },
    /// `count` Gaussian blobs per class with standard deviation `spread`,
    /// centers equally spaced on a circle of radius 4 with alternating
    /// classes.
    GaussianBlobs { count: usize, spread: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyDatasetSpec {
    pub kind: ToyKind,
    pub n_per_class: usize,
    pub n_labeled_per_class: usize,
    pub seed: u64,
}

/// A generated dataset together with the true class of every point.
#[derive(Debug, Clone)]
pub struct ToyDataset {
    pub data: SemiSupervisedDataset,
    pub truth: Vec<f64>,
}

impl ToyDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 {
            return Err(Error::InvalidParameter("n_per_class must be >= 1".into()));
        }
        if self.n_labeled_per_class == 0 || self.n_labeled_per_class > self.n_per_class {
            return Err(Error::InvalidParameter(format!(
                "n_labeled_per_class must be in 1..={}, got {}",
                self.n_per_class, self.n_labeled_per_class
            )));
        }
        match self.kind {
            ToyKind::TwoMoons { noise } if !(noise.is_finite() && noise >= 0.0) => {
                Err(Error::InvalidParameter(format!("noise must be >= 0, got {noise}")))
            }
            ToyKind::ConcentricCircles { gap } if !(gap.is_finite() && gap > 0.0) => {
                Err(Error::InvalidParameter(format!("gap must be > 0, got {gap}")))
            }
            ToyKind::GaussianBlobs { count: 0, .. } => Err(Error::InvalidParameter("blob count must be >= 1".into())),
            ToyKind::GaussianBlobs { spread, .. } if !(spread.is_finite() && spread >= 0.0) => {
                Err(Error::InvalidParameter(format!("spread must be >= 0, got {spread}")))
            }
            _ => Ok(()),
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sd).expect("finite sd").sample(rng)
}

/// Points of one class, in generation order.
fn class_points(kind: ToyKind, positive: bool, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| match kind {
            ToyKind::TwoMoons { noise } => {
                let t = rng.random_range(0.0..PI);
                let (x, y) = if positive { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
                vec![x + gaussian(rng, noise), y + gaussian(rng, noise)]
            }
            ToyKind::ConcentricCircles { gap } => {
                let t = rng.random_range(0.0..2.0 * PI);
                let r = if positive { 1.0 } else { 1.0 + gap };
                vec![r * t.cos(), r * t.sin()]
            }
            ToyKind::GaussianBlobs { count, spread } => {
                let blob = 2 * (i % count) + usize::from(!positive);
                let angle = 2.0 * PI * blob as f64 / (2 * count) as f64;
                vec![4.0 * angle.cos() + gaussian(rng, spread), 4.0 * angle.sin() + gaussian(rng, spread)]
            }
        })
        .collect()
}

/// Generates the dataset and its ground truth.
pub fn generate_toy(spec: &ToyDatasetSpec) -> Result<ToyDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos = class_points(spec.kind, true, spec.n_per_class, &mut rng);
    let neg = class_points(spec.kind, false, spec.n_per_class, &mut rng);

    let pick = |rng: &mut ChaCha8Rng| {
        let mut idx: Vec<usize> = (0..spec.n_per_class).collect();
        idx.shuffle(rng);
        idx.truncate(spec.n_labeled_per_class);
        idx
    };
    let pos_lab = pick(&mut rng);
    let neg_lab = pick(&mut rng);

    let mut points = Vec::with_capacity(2 * spec.n_per_class);
    let mut truth = Vec::with_capacity(2 * spec.n_per_class);
    for (&p, &q) in pos_lab.iter().zip(&neg_lab) {
        points.push(pos[p].clone());
        truth.push(1.0);
        points.push(neg[q].clone());
        truth.push(-1.0);
    }
    let labels = truth.clone();
    for (class, lab, y) in [(&pos, &pos_lab, 1.0), (&neg, &neg_lab, -1.0)] {
        for (i, p) in class.iter().enumerate() {
            if !lab.contains(&i) {
                points.push(p.clone());
                truth.push(y);
            }
        }
    }
    Ok(ToyDataset { data: SemiSupervisedDataset::new(points, labels)?, truth })
}

pub fn generate_toy_dataset(spec: &ToyDatasetSpec) -> Result<SemiSupervisedDataset> {
    Ok(generate_toy(spec)?.data)
}
