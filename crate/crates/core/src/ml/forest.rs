//! Random forest: bagged CART trees with per-split feature subsampling.
//!
//! Each tree gets a bootstrap sample of the rows and considers √d features at
//! every split. Tree seeds derive from the forest seed and the tree index, so
//! parallel training in index order reproduces the single-threaded result
//! exactly. Prediction is a majority vote with the 50/50 tie going to fake,
//! keeping the vote rule a pure threshold on the mean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ml::dataset::Dataset;
use crate::ml::tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub n_features: usize,
}

fn tree_seed(forest_seed: u64, tree_index: usize) -> u64 {
    forest_seed.wrapping_add((tree_index as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15))
}

impl RandomForest {
    pub fn fit(dataset: &Dataset, n_trees: usize, seed: u64) -> Result<RandomForest> {
        if n_trees == 0 {
            return Err(Error::InvalidConfig("forest needs ≥1 tree".into()));
        }
        let n = dataset.n_rows();
        let d = dataset.n_cols();
        let max_features = (d as f64).sqrt().floor().max(1.0) as usize;
        let params = TreeParams {
            max_depth: None,
            max_features: Some(max_features),
            min_leaf: 1,
        };

        let trees: Vec<Result<DecisionTree>> = (0..n_trees)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(tree_seed(seed, i));
                let indices: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let sample = dataset.subset_rows(&indices);
                DecisionTree::fit_weighted(
                    &sample,
                    &vec![1.0; sample.n_rows()],
                    params,
                    Some(&mut rng),
                )
            })
            .collect();

        let mut collected = Vec::with_capacity(n_trees);
        for tree in trees {
            collected.push(tree?);
        }
        Ok(RandomForest {
            trees: collected,
            n_features: d,
        })
    }

    /// Fraction of trees voting fake.
    pub fn vote_fraction(&self, row: &[f64]) -> f64 {
        let votes: u32 = self.trees.iter().map(|t| t.predict_row(row) as u32).sum();
        votes as f64 / self.trees.len() as f64
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        u8::from(self.vote_fraction(row) >= 0.5)
    }

    /// Summed per-tree Gini importances, normalized to total 1.
    pub fn gini_importances(&self) -> Result<Vec<f64>> {
        let mut totals = vec![0.0; self.n_features];
        for tree in &self.trees {
            for (acc, v) in totals.iter_mut().zip(tree.importances()) {
                *acc += v;
            }
        }
        let sum: f64 = totals.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidInput(
                "forest made no impurity-reducing splits; importances undefined".into(),
            ));
        }
        for v in &mut totals {
            *v /= sum;
        }
        Ok(totals)
    }
}
