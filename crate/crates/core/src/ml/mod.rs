//! From-scratch classifiers and the evaluation protocol.
//!
//! Six algorithms share one train/predict interface so the evaluation
//! harness, feature ablation, and baseline comparisons treat them uniformly.
//! Every stochastic step (bootstrap, feature subsets, splits) derives from an
//! explicit seed; given the same dataset, hyperparameters, and seed, training
//! and evaluation are bit-reproducible.

pub mod adaboost;
pub mod dataset;
pub mod eval;
pub mod forest;
pub mod linear;
pub mod naive_bayes;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adaboost::AdaBoost;
pub use dataset::Dataset;
pub use eval::{
    align_external_matrix, evaluate, evaluate_predictions, external_baseline_eval,
    feature_group_ablation, generate_splits, repeated_holdout, run_with_splits, AblationReport,
    EvalResult, HoldoutReport, Metrics, SplitSet,
};
pub use forest::RandomForest;
pub use linear::{LinearSvm, LogRegParams, LogisticRegression, SvmParams};
pub use naive_bayes::GaussianNb;
pub use tree::{DecisionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    DecisionTree,
    RandomForest,
    LogReg,
    NaiveBayes,
    LinearSvm,
    AdaBoost,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::DecisionTree,
        Algorithm::RandomForest,
        Algorithm::LogReg,
        Algorithm::NaiveBayes,
        Algorithm::LinearSvm,
        Algorithm::AdaBoost,
    ];

    /// The CLI spelling of this algorithm.
    pub fn tag(&self) -> &'static str {
        match self {
            Algorithm::DecisionTree => "dt",
            Algorithm::RandomForest => "rf",
            Algorithm::LogReg => "lr",
            Algorithm::NaiveBayes => "nb",
            Algorithm::LinearSvm => "svm",
            Algorithm::AdaBoost => "ada",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Algorithm> {
        Algorithm::ALL
            .iter()
            .find(|a| a.tag() == tag)
            .copied()
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {tag:?}")))
    }
}

/// Every tunable the classifiers expose, with the frozen defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub forest_trees: usize,
    pub logreg_lambda: f64,
    pub logreg_learning_rate: f64,
    pub logreg_max_epochs: usize,
    pub logreg_tolerance: f64,
    pub svm_lambda: f64,
    pub svm_epochs: usize,
    pub svm_learning_rate: f64,
    pub nb_variance_floor: f64,
    pub adaboost_rounds: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            forest_trees: 100,
            logreg_lambda: 1e-4,
            logreg_learning_rate: 0.1,
            logreg_max_epochs: 10_000,
            logreg_tolerance: 1e-6,
            svm_lambda: 1e-4,
            svm_epochs: 2_000,
            svm_learning_rate: 0.5,
            nb_variance_floor: 1e-9,
            adaboost_rounds: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    LogReg(LogisticRegression),
    NaiveBayes(GaussianNb),
    LinearSvm(LinearSvm),
    AdaBoost(AdaBoost),
}

/// A fitted classifier plus the manifest it was trained on; predictions are
/// only valid on matrices with the identical manifest.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub manifest: crate::features::FeatureManifest,
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        match &self.kind {
            ModelKind::DecisionTree(_) => Algorithm::DecisionTree,
            ModelKind::RandomForest(_) => Algorithm::RandomForest,
            ModelKind::LogReg(_) => Algorithm::LogReg,
            ModelKind::NaiveBayes(_) => Algorithm::NaiveBayes,
            ModelKind::LinearSvm(_) => Algorithm::LinearSvm,
            ModelKind::AdaBoost(_) => Algorithm::AdaBoost,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        match &self.kind {
            ModelKind::DecisionTree(m) => m.predict_row(row),
            ModelKind::RandomForest(m) => m.predict_row(row),
            ModelKind::LogReg(m) => m.predict_row(row),
            ModelKind::NaiveBayes(m) => m.predict_row(row),
            ModelKind::LinearSvm(m) => m.predict_row(row),
            ModelKind::AdaBoost(m) => m.predict_row(row),
        }
    }
}

/// Train one algorithm. Requires both classes in `dataset`; `seed` only
/// affects the random forest (the other five are deterministic already).
pub fn train(
    algorithm: Algorithm,
    dataset: &Dataset,
    hyper: &Hyperparameters,
    seed: u64,
) -> Result<TrainedModel> {
    if !dataset.has_both_classes() {
        return Err(Error::InvalidInput(
            "training data contains a single class".into(),
        ));
    }
    let kind = match algorithm {
        Algorithm::DecisionTree => {
            ModelKind::DecisionTree(DecisionTree::fit(dataset, TreeParams::default())?)
        }
        Algorithm::RandomForest => {
            ModelKind::RandomForest(RandomForest::fit(dataset, hyper.forest_trees, seed)?)
        }
        Algorithm::LogReg => ModelKind::LogReg(LogisticRegression::fit(
            dataset,
            LogRegParams {
                lambda: hyper.logreg_lambda,
                learning_rate: hyper.logreg_learning_rate,
                max_epochs: hyper.logreg_max_epochs,
                tolerance: hyper.logreg_tolerance,
            },
        )?),
        Algorithm::NaiveBayes => {
            ModelKind::NaiveBayes(GaussianNb::fit(dataset, hyper.nb_variance_floor)?)
        }
        Algorithm::LinearSvm => ModelKind::LinearSvm(LinearSvm::fit(
            dataset,
            SvmParams {
                lambda: hyper.svm_lambda,
                epochs: hyper.svm_epochs,
                learning_rate: hyper.svm_learning_rate,
            },
        )?),
        Algorithm::AdaBoost => ModelKind::AdaBoost(AdaBoost::fit(dataset, hyper.adaboost_rounds)?),
    };
    Ok(TrainedModel {
        kind,
        manifest: dataset.manifest.clone(),
    })
}

/// Per-feature Gini importances of a trained random forest, manifest order,
/// summing to 1, plus the descending ranking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub names: Vec<String>,
    pub importances: Vec<f64>,
    pub ranked: Vec<(String, f64)>,
}

pub fn gini_importance(model: &TrainedModel) -> Result<ImportanceReport> {
    let ModelKind::RandomForest(forest) = &model.kind else {
        return Err(Error::InvalidInput(format!(
            "gini importance requires a random forest, got {:?}",
            model.algorithm()
        )));
    };
    let importances = forest.gini_importances()?;
    let names = &model.manifest.names;
    let mut ranked: Vec<(String, f64)> = names
        .iter()
        .cloned()
        .zip(importances.iter().copied())
        .collect();
    ranked.sort_by(|(name_a, v_a), (name_b, v_b)| {
        v_b.partial_cmp(v_a).unwrap().then_with(|| name_a.cmp(name_b))
    });
    Ok(ImportanceReport {
        names: names.clone(),
        importances,
        ranked,
    })
}
