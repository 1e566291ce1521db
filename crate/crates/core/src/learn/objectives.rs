//! Training objectives in coefficient space, `f = K a`, with analytic
//! gradients. Exposed so callers can audit a fit against finite differences.

use nalgebra::{DMatrix, DVector};

/// A differentiable (or subdifferentiable) function of the coefficients.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, a: &DVector<f64>) -> f64;
    fn gradient(&self, a: &DVector<f64>) -> DVector<f64>;
}

/// `(1/N) ‖K a − y‖² + λ aᵀ K a`.
#[derive(Debug, Clone)]
pub struct RlsObjective {
    pub gram: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
}

impl Objective for RlsObjective {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn value(&self, a: &DVector<f64>) -> f64 {
        let ka = &self.gram * a;
        let n = self.y.len() as f64;
        (&ka - &self.y).norm_squared() / n + self.lambda * a.dot(&ka)
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        let ka = &self.gram * a;
        let n = self.y.len() as f64;
        &self.gram * ((&ka - &self.y) * (2.0 / n) + a * (2.0 * self.lambda))
    }
}

fn softplus(z: f64) -> f64 {
    // log(1 + e^z) without overflow
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(1/N) Σ log(1 + exp(−yᵢ (K a)ᵢ)) + λ aᵀ K a`.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    pub gram: DMatrix<f64>,
    pub y: DVector<f64>,
    pub lambda: f64,
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.y.len()
    }

    fn value(&self, a: &DVector<f64>) -> f64 {
        let ka = &self.gram * a;
        let n = self.y.len() as f64;
        let loss: f64 = ka.iter().zip(self.y.iter()).map(|(f, y)| softplus(-y * f)).sum();
        loss / n + self.lambda * a.dot(&ka)
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        let ka = &self.gram * a;
        let n = self.y.len() as f64;
        let dloss = DVector::from_fn(ka.len(), |i, _| -self.y[i] * sigmoid(-self.y[i] * ka[i]) / n);
        &self.gram * (dloss + a * (2.0 * self.lambda))
    }
}

/// `(1/N_L) Σ_{i<N_L} (1 − yᵢ (K a)ᵢ)₊ + γ_K aᵀ K a + aᵀ M a`, where the
/// optional `M` is the scaled intrinsic term `(γ_I/N²) K L K`.
///
/// The subgradient takes 0 from the hinge at the kink.
#[derive(Debug, Clone)]
pub struct HingeObjective {
    pub gram: DMatrix<f64>,
    pub y: DVector<f64>,
    pub gamma_k: f64,
    pub intrinsic: Option<DMatrix<f64>>,
}

impl HingeObjective {
    pub fn hinge_loss(&self, a: &DVector<f64>) -> f64 {
        let nl = self.y.len();
        let ka = &self.gram * a;
        (0..nl).map(|i| (1.0 - self.y[i] * ka[i]).max(0.0)).sum::<f64>() / nl as f64
    }
}

impl Objective for HingeObjective {
    fn dim(&self) -> usize {
        self.gram.nrows()
    }

    fn value(&self, a: &DVector<f64>) -> f64 {
        let nl = self.y.len();
        let ka = &self.gram * a;
        let hinge = (0..nl).map(|i| (1.0 - self.y[i] * ka[i]).max(0.0)).sum::<f64>() / nl as f64;
        let mut v = hinge + self.gamma_k * a.dot(&ka);
        if let Some(m) = &self.intrinsic {
            v += a.dot(&(m * a));
        }
        v
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        let nl = self.y.len();
        let ka = &self.gram * a;
        let mut coef = a * (2.0 * self.gamma_k);
        for i in 0..nl {
            if self.y[i] * ka[i] < 1.0 {
                coef[i] -= self.y[i] / nl as f64;
            }
        }
        let mut g = &self.gram * coef;
        if let Some(m) = &self.intrinsic {
            g += m * a * 2.0;
        }
        debug_assert_eq!(g.len(), n);
        g
    }
}

/// `(1/N_L) (Y − J K a)ᵀ (Y − J K a) + γ_K aᵀ K a + (γ_I/N²) aᵀ K L K a`,
/// with `Y` zero-padded past the labeled block and `J` selecting it.
#[derive(Debug, Clone)]
pub struct LapRlsObjective {
    pub gram: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    /// Labels of the first `N_L` points.
    pub y: DVector<f64>,
    pub gamma_k: f64,
    pub gamma_i: f64,
}

impl LapRlsObjective {
    fn intrinsic_scale(&self) -> f64 {
        let n = self.gram.nrows() as f64;
        self.gamma_i / (n * n)
    }

    /// `(J K a − Y)` over all points (zero on the unlabeled block).
    fn residual(&self, ka: &DVector<f64>) -> DVector<f64> {
        let nl = self.y.len();
        DVector::from_fn(ka.len(), |i, _| if i < nl { ka[i] - self.y[i] } else { 0.0 })
    }

    /// `fᵀ L f` at `f = K a`.
    pub fn intrinsic_penalty(&self, a: &DVector<f64>) -> f64 {
        let ka = &self.gram * a;
        ka.dot(&(&self.laplacian * &ka))
    }
}

impl Objective for LapRlsObjective {
    fn dim(&self) -> usize {
        self.gram.nrows()
    }

    fn value(&self, a: &DVector<f64>) -> f64 {
        let ka = &self.gram * a;
        let nl = self.y.len() as f64;
        self.residual(&ka).norm_squared() / nl
            + self.gamma_k * a.dot(&ka)
            + self.intrinsic_scale() * ka.dot(&(&self.laplacian * &ka))
    }

    fn gradient(&self, a: &DVector<f64>) -> DVector<f64> {
        let ka = &self.gram * a;
        let nl = self.y.len() as f64;
        let inner = self.residual(&ka) * (2.0 / nl)
            + a * (2.0 * self.gamma_k)
            + (&self.laplacian * &ka) * (2.0 * self.intrinsic_scale());
        &self.gram * inner
    }
}

/// Central-difference gradient, for auditing analytic gradients.
pub fn finite_difference_gradient<O: Objective>(obj: &O, a: &DVector<f64>, h: f64) -> DVector<f64> {
    let mut g = DVector::zeros(a.len());
    let mut probe = a.clone();
    for i in 0..a.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = obj.value(&probe);
        probe[i] = orig - h;
        let down = obj.value(&probe);
        probe[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    g
}
