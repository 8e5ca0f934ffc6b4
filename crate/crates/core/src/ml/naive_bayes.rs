//! Gaussian naive Bayes with a per-feature variance floor.

use crate::error::{Error, Result};
use crate::ml::dataset::Dataset;

#[derive(Debug, Clone)]
pub struct GaussianNb {
    pub log_priors: [f64; 2],
    /// Per class, per feature.
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
}

pub const DEFAULT_VARIANCE_FLOOR: f64 = 1e-9;

impl GaussianNb {
    pub fn fit(dataset: &Dataset, variance_floor: f64) -> Result<GaussianNb> {
        if variance_floor <= 0.0 {
            return Err(Error::InvalidConfig("variance floor must be positive".into()));
        }
        let d = dataset.n_cols();
        let mut counts = [0usize; 2];
        let mut means = [vec![0.0; d], vec![0.0; d]];
        for (row, &label) in dataset.x.iter().zip(&dataset.y) {
            let class = label as usize;
            counts[class] += 1;
            for (m, v) in means[class].iter_mut().zip(row) {
                *m += v;
            }
        }
        if counts[0] == 0 || counts[1] == 0 {
            return Err(Error::InvalidInput("both classes required to fit".into()));
        }
        for class in 0..2 {
            for m in &mut means[class] {
                *m /= counts[class] as f64;
            }
        }
        let mut variances = [vec![0.0; d], vec![0.0; d]];
        for (row, &label) in dataset.x.iter().zip(&dataset.y) {
            let class = label as usize;
            for ((s, v), m) in variances[class].iter_mut().zip(row).zip(&means[class]) {
                *s += (v - m) * (v - m);
            }
        }
        for class in 0..2 {
            for s in &mut variances[class] {
                *s = (*s / counts[class] as f64).max(variance_floor);
            }
        }
        let n = dataset.n_rows() as f64;
        Ok(GaussianNb {
            log_priors: [
                (counts[0] as f64 / n).ln(),
                (counts[1] as f64 / n).ln(),
            ],
            means,
            variances,
        })
    }

    fn log_likelihood(&self, class: usize, row: &[f64]) -> f64 {
        let mut score = self.log_priors[class];
        for ((v, m), var) in row.iter().zip(&self.means[class]).zip(&self.variances[class]) {
            score += -0.5 * (2.0 * std::f64::consts::PI * var).ln()
                - (v - m) * (v - m) / (2.0 * var);
        }
        score
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.log_likelihood(1, row) > self.log_likelihood(0, row))
    }
}
