//! Logistic regression and linear SVM on standardized inputs.
//!
//! Both models standardize columns to zero mean and unit variance before
//! optimizing, which makes their predictions invariant to affine rescaling of
//! the raw features. Columns with zero variance are left unscaled (divisor 1)
//! so constant features cannot produce NaNs; their weights then stay at the
//! mercy of regularization, which drives them to zero.

use crate::error::Result;
use crate::ml::dataset::Dataset;

#[derive(Debug, Clone)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Standardizer {
        let n = x.len() as f64;
        let d = x[0].len();
        let mut means = vec![0.0; d];
        for row in x {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut scales = vec![0.0; d];
        for row in x {
            for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for s in &mut scales {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Standardizer { means, scales }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct LogRegParams {
    pub lambda: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub tolerance: f64,
}

impl Default for LogRegParams {
    fn default() -> Self {
        LogRegParams {
            lambda: 1e-4,
            learning_rate: 0.1,
            max_epochs: 10_000,
            tolerance: 1e-6,
        }
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

impl LogisticRegression {
    /// Full-batch gradient descent on the L2-regularized log-loss, stopping
    /// at gradient norm ≤ tolerance or the epoch cap.
    pub fn fit(dataset: &Dataset, params: LogRegParams) -> Result<LogisticRegression> {
        let standardizer = Standardizer::fit(&dataset.x);
        let x: Vec<Vec<f64>> = dataset.x.iter().map(|r| standardizer.apply_row(r)).collect();
        let n = x.len() as f64;
        let d = dataset.n_cols();

        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        let mut epochs_run = 0;
        let mut converged = false;
        for _ in 0..params.max_epochs {
            epochs_run += 1;
            let mut grad_w = vec![0.0; d];
            let mut grad_b = 0.0;
            for (row, &label) in x.iter().zip(&dataset.y) {
                let z = dot(&weights, row) + bias;
                let err = sigmoid(z) - label as f64;
                for (g, v) in grad_w.iter_mut().zip(row) {
                    *g += err * v;
                }
                grad_b += err;
            }
            let mut norm_sq = 0.0;
            for (g, w) in grad_w.iter_mut().zip(&weights) {
                *g = *g / n + params.lambda * w;
                norm_sq += *g * *g;
            }
            grad_b /= n;
            norm_sq += grad_b * grad_b;

            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= params.learning_rate * g;
            }
            bias -= params.learning_rate * grad_b;

            if norm_sq.sqrt() <= params.tolerance {
                converged = true;
                break;
            }
        }

        Ok(LogisticRegression {
            standardizer,
            weights,
            bias,
            epochs_run,
            converged,
        })
    }

    pub fn decision_value(&self, row: &[f64]) -> f64 {
        dot(&self.weights, &self.standardizer.apply_row(row)) + self.bias
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision_value(row) >= 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct LinearSvm {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 2_000,
            learning_rate: 0.5,
        }
    }
}

impl LinearSvm {
    /// Full-batch subgradient descent on the L2-regularized hinge loss with a
    /// 1/√t learning-rate decay. The bias term is unregularized.
    pub fn fit(dataset: &Dataset, params: SvmParams) -> Result<LinearSvm> {
        let standardizer = Standardizer::fit(&dataset.x);
        let x: Vec<Vec<f64>> = dataset.x.iter().map(|r| standardizer.apply_row(r)).collect();
        let y_signed: Vec<f64> = dataset.y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let n = x.len() as f64;
        let d = dataset.n_cols();

        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        for epoch in 0..params.epochs {
            let lr = params.learning_rate / ((epoch + 1) as f64).sqrt();
            let mut grad_w: Vec<f64> = weights.iter().map(|w| params.lambda * w).collect();
            let mut grad_b = 0.0;
            for (row, &ys) in x.iter().zip(&y_signed) {
                let margin = ys * (dot(&weights, row) + bias);
                if margin < 1.0 {
                    for (g, v) in grad_w.iter_mut().zip(row) {
                        *g -= ys * v / n;
                    }
                    grad_b -= ys / n;
                }
            }
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= lr * g;
            }
            bias -= lr * grad_b;
        }

        Ok(LinearSvm {
            standardizer,
            weights,
            bias,
        })
    }

    pub fn decision_value(&self, row: &[f64]) -> f64 {
        dot(&self.weights, &self.standardizer.apply_row(row)) + self.bias
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.decision_value(row) >= 0.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
