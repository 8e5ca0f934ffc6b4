//! CART decision trees with the Gini split criterion.
//!
//! One tree implementation serves three callers: the standalone classifier
//! (grown to purity), the random forest (random feature subsets per split),
//! and AdaBoost (depth-1 stumps over weighted samples). Split ties break by
//! lowest feature index, then lowest threshold, so training is fully
//! deterministic for a fixed feature order and sample weighting.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ml::dataset::Dataset;

#[derive(Debug, Clone)]
pub enum Node {
    Leaf {
        prediction: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Fraction of the root's sample weight reaching this node.
        weight_fraction: f64,
        /// Gini impurity decrease achieved by this split.
        impurity_decrease: f64,
    },
}

#[derive(Debug, Clone)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Candidate features per split; `None` considers all.
    pub max_features: Option<usize>,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            max_features: None,
            min_leaf: 1,
        }
    }
}

/// Gini impurity of a weighted binary sample: 1 − p₀² − p₁².
pub fn gini(weight_class0: f64, weight_class1: f64) -> f64 {
    let total = weight_class0 + weight_class1;
    if total <= 0.0 {
        return 0.0;
    }
    let p0 = weight_class0 / total;
    let p1 = weight_class1 / total;
    1.0 - p0 * p0 - p1 * p1
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    weighted_impurity: f64,
}

fn find_best_split(
    dataset: &Dataset,
    indices: &[usize],
    weights: &[f64],
    candidate_features: &[usize],
    min_leaf: usize,
) -> Option<BestSplit> {
    let mut best: Option<BestSplit> = None;
    for &feature in candidate_features {
        // Sort node samples by this feature and sweep thresholds between
        // consecutive distinct values.
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| {
            dataset.x[a][feature]
                .partial_cmp(&dataset.x[b][feature])
                .expect("dataset validated finite")
                .then(a.cmp(&b))
        });
        let total_w0: f64 = order
            .iter()
            .filter(|&&i| dataset.y[i] == 0)
            .map(|&i| weights[i])
            .sum();
        let total_w1: f64 = order
            .iter()
            .filter(|&&i| dataset.y[i] == 1)
            .map(|&i| weights[i])
            .sum();
        let total = total_w0 + total_w1;

        let mut left_w0 = 0.0;
        let mut left_w1 = 0.0;
        for pos in 0..order.len() - 1 {
            let i = order[pos];
            if dataset.y[i] == 0 {
                left_w0 += weights[i];
            } else {
                left_w1 += weights[i];
            }
            let here = dataset.x[i][feature];
            let next = dataset.x[order[pos + 1]][feature];
            if here == next {
                continue;
            }
            if pos + 1 < min_leaf || order.len() - pos - 1 < min_leaf {
                continue;
            }
            let threshold = here + (next - here) / 2.0;
            let right_w0 = total_w0 - left_w0;
            let right_w1 = total_w1 - left_w1;
            let left_total = left_w0 + left_w1;
            let right_total = right_w0 + right_w1;
            let weighted = (left_total / total) * gini(left_w0, left_w1)
                + (right_total / total) * gini(right_w0, right_w1);
            let better = match &best {
                None => true,
                Some(b) => {
                    weighted < b.weighted_impurity - 1e-15
                        || ((weighted - b.weighted_impurity).abs() <= 1e-15
                            && (feature, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(BestSplit {
                    feature,
                    threshold,
                    weighted_impurity: weighted,
                });
            }
        }
    }
    best
}

impl DecisionTree {
    /// Train with uniform sample weights.
    pub fn fit(dataset: &Dataset, params: TreeParams) -> Result<DecisionTree> {
        let weights = vec![1.0; dataset.n_rows()];
        Self::fit_weighted(dataset, &weights, params, None)
    }

    /// Train with per-sample weights; `rng` enables per-split random feature
    /// subsets of size `params.max_features`.
    pub fn fit_weighted(
        dataset: &Dataset,
        weights: &[f64],
        params: TreeParams,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<DecisionTree> {
        if dataset.n_rows() == 0 {
            return Err(Error::InvalidInput("cannot fit a tree on zero rows".into()));
        }
        if weights.len() != dataset.n_rows() {
            return Err(Error::InvalidInput("weight/row count mismatch".into()));
        }
        if params.min_leaf == 0 {
            return Err(Error::InvalidConfig("min_leaf must be ≥ 1".into()));
        }

        let root_indices: Vec<usize> = (0..dataset.n_rows()).collect();
        let root_weight: f64 = weights.iter().sum();
        if root_weight <= 0.0 {
            return Err(Error::InvalidInput("total sample weight must be positive".into()));
        }

        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_features: dataset.n_cols(),
        };
        tree.grow(
            dataset,
            weights,
            root_indices,
            root_weight,
            0,
            &params,
            &mut rng,
        );
        Ok(tree)
    }

    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        dataset: &Dataset,
        weights: &[f64],
        indices: Vec<usize>,
        root_weight: f64,
        depth: usize,
        params: &TreeParams,
        rng: &mut Option<&mut ChaCha8Rng>,
    ) -> usize {
        let w0: f64 = indices
            .iter()
            .filter(|&&i| dataset.y[i] == 0)
            .map(|&i| weights[i])
            .sum();
        let w1: f64 = indices
            .iter()
            .filter(|&&i| dataset.y[i] == 1)
            .map(|&i| weights[i])
            .sum();
        let node_impurity = gini(w0, w1);
        let majority = if w1 > w0 { 1 } else { 0 };

        let depth_exhausted = params.max_depth.is_some_and(|d| depth >= d);
        if node_impurity == 0.0 || depth_exhausted || indices.len() < 2 * params.min_leaf {
            return self.push(Node::Leaf { prediction: majority });
        }

        let all_features: Vec<usize> = (0..dataset.n_cols()).collect();
        let candidates: Vec<usize> = match (params.max_features, rng.as_deref_mut()) {
            (Some(k), Some(rng)) if k < dataset.n_cols() => {
                let mut pool = all_features;
                pool.shuffle(rng);
                let mut picked: Vec<usize> = pool.into_iter().take(k).collect();
                picked.sort_unstable();
                picked
            }
            _ => all_features,
        };

        let Some(split) = find_best_split(dataset, &indices, weights, &candidates, params.min_leaf)
        else {
            return self.push(Node::Leaf { prediction: majority });
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| dataset.x[i][split.feature] <= split.threshold);

        let node_weight = w0 + w1;
        let impurity_decrease = node_impurity - split.weighted_impurity;
        let slot = self.push(Node::Leaf { prediction: majority });
        let left = self.grow(dataset, weights, left_idx, root_weight, depth + 1, params, rng);
        let right = self.grow(dataset, weights, right_idx, root_weight, depth + 1, params, rng);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            weight_fraction: node_weight / root_weight,
            impurity_decrease,
        };
        slot
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { prediction } => return *prediction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Unnormalized Gini importance: for each feature, the sum over its split
    /// nodes of (node weight fraction × impurity decrease).
    pub fn importances(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Node::Split {
                feature,
                weight_fraction,
                impurity_decrease,
                ..
            } = node
            {
                out[*feature] += weight_fraction * impurity_decrease;
            }
        }
        out
    }
}
