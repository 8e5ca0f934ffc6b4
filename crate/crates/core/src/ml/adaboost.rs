//! AdaBoost over depth-1 decision stumps with SAMME weighting.

use crate::error::{Error, Result};
use crate::ml::dataset::Dataset;
use crate::ml::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone)]
pub struct AdaBoost {
    pub stumps: Vec<(DecisionTree, f64)>,
}

const ERROR_CLAMP: f64 = 1e-12;

impl AdaBoost {
    /// Boost up to `rounds` stumps. A stump with weighted error ≥ 0.5 stops
    /// the loop (it is no better than chance under SAMME with two classes);
    /// a perfect stump is kept with a clamped error and also stops.
    pub fn fit(dataset: &Dataset, rounds: usize) -> Result<AdaBoost> {
        if rounds == 0 {
            return Err(Error::InvalidConfig("adaboost needs ≥1 round".into()));
        }
        let n = dataset.n_rows();
        let mut weights = vec![1.0 / n as f64; n];
        let stump_params = TreeParams {
            max_depth: Some(1),
            ..TreeParams::default()
        };

        let mut stumps = Vec::new();
        for _ in 0..rounds {
            let stump = DecisionTree::fit_weighted(dataset, &weights, stump_params, None)?;
            let misclassified: Vec<bool> = dataset
                .x
                .iter()
                .zip(&dataset.y)
                .map(|(row, &label)| stump.predict_row(row) != label)
                .collect();
            let error: f64 = weights
                .iter()
                .zip(&misclassified)
                .filter(|(_, &wrong)| wrong)
                .map(|(w, _)| w)
                .sum();

            if error >= 0.5 {
                break;
            }
            let clamped = error.max(ERROR_CLAMP);
            let alpha = ((1.0 - clamped) / clamped).ln();
            stumps.push((stump, alpha));
            if error <= ERROR_CLAMP {
                break;
            }

            for (w, &wrong) in weights.iter_mut().zip(&misclassified) {
                if wrong {
                    *w *= alpha.exp();
                }
            }
            let total: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= total;
            }
        }

        if stumps.is_empty() {
            return Err(Error::InvalidInput(
                "no stump beat chance; boosting produced an empty ensemble".into(),
            ));
        }
        Ok(AdaBoost { stumps })
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut score_fake = 0.0;
        let mut score_real = 0.0;
        for (stump, alpha) in &self.stumps {
            if stump.predict_row(row) == 1 {
                score_fake += alpha;
            } else {
                score_real += alpha;
            }
        }
        u8::from(score_fake > score_real)
    }
}
