//! Holdout evaluation, feature-group ablation, and external baselines.
//!
//! The protocol is repeated random holdout: `reps` independent train/test
//! splits at a fixed fraction, one model per split, metrics averaged across
//! runs. Splits that land a single class in the training side are redrawn
//! (bounded, counted). Ablation arms reuse one shared split set and the same
//! per-run training seeds so their scores are paired, not merely comparable.

use std::collections::BTreeMap;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{DesignMatrix, FeatureGroup, FeatureManifest};
use crate::ml::dataset::Dataset;
use crate::ml::{train, Algorithm, Hyperparameters, TrainedModel};

/// Give up after this many consecutive single-class training draws for one
/// repetition.
const MAX_REDRAWS_PER_REP: usize = 20;

/// Salt separating the per-run training-seed stream from the split stream,
/// so the two never collide for any base seed.
const TRAIN_SEED_SALT: u64 = 0x6A09_E667_F3BC_C909;

/// Confusion counts and derived metrics for one test set. Fake (label 1) is
/// the positive class. A metric whose denominator is zero is reported as 0.0
/// and named in `flags`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub flags: Vec<String>,
}

/// The four averaged metrics of a holdout report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn mean_of(runs: &[EvalResult]) -> Metrics {
        let n = runs.len() as f64;
        Metrics {
            accuracy: runs.iter().map(|r| r.accuracy).sum::<f64>() / n,
            precision: runs.iter().map(|r| r.precision).sum::<f64>() / n,
            recall: runs.iter().map(|r| r.recall).sum::<f64>() / n,
            f1: runs.iter().map(|r| r.f1).sum::<f64>() / n,
        }
    }
}

/// Score predictions against labels.
pub fn evaluate_predictions(predictions: &[u8], labels: &[u8]) -> Result<EvalResult> {
    if predictions.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&pred, &actual) in predictions.iter().zip(labels) {
        match (pred, actual) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fn_ += 1,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "labels must be 0 or 1, got prediction {pred} / label {actual}"
                )))
            }
        }
    }

    let mut flags = Vec::new();
    let accuracy = (tp + tn) as f64 / predictions.len() as f64;
    let precision = if tp + fp == 0 {
        flags.push("precision_zero_denominator".to_string());
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        flags.push("recall_zero_denominator".to_string());
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        flags.push("f1_zero_denominator".to_string());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    Ok(EvalResult {
        true_positives: tp,
        false_positives: fp,
        true_negatives: tn,
        false_negatives: fn_,
        accuracy,
        precision,
        recall,
        f1,
        flags,
    })
}

/// Score a trained model on a held-out set with the same manifest.
pub fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<EvalResult> {
    if model.manifest != test.manifest {
        return Err(Error::InvalidInput(
            "test manifest does not match the model's training manifest".into(),
        ));
    }
    if test.x.is_empty() {
        return Err(Error::InvalidInput("empty test set".into()));
    }
    let predictions: Vec<u8> = test.x.iter().map(|row| model.predict_row(row)).collect();
    evaluate_predictions(&predictions, &test.y)
}

/// A reusable set of train/test index splits. Sharing one `SplitSet` across
/// several evaluations pairs them on identical data partitions.
#[derive(Debug, Clone)]
pub struct SplitSet {
    /// Sorted (train, test) row indices per repetition; disjoint and covering.
    pub splits: Vec<(Vec<usize>, Vec<usize>)>,
    /// Single-class training draws that were rejected and redrawn.
    pub redraws: usize,
    /// Content hash of the splits, for asserting two runs were paired.
    pub signature: u64,
}

fn split_signature(splits: &[(Vec<usize>, Vec<usize>)]) -> u64 {
    let mut hasher = Sha256::new();
    for (train, test) in splits {
        hasher.update((train.len() as u64).to_le_bytes());
        for &i in train {
            hasher.update((i as u64).to_le_bytes());
        }
        hasher.update((test.len() as u64).to_le_bytes());
        for &i in test {
            hasher.update((i as u64).to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    u64::from_be_bytes(digest[..8].try_into().unwrap())
}

/// Draw `reps` random holdout splits over `n_rows` rows. The training side
/// gets `floor(train_frac * n_rows)` rows and must contain both classes;
/// draws violating that are discarded and retried with the next seed in the
/// stream, up to [`MAX_REDRAWS_PER_REP`] times per repetition.
pub fn generate_splits(
    n_rows: usize,
    y: &[u8],
    train_frac: f64,
    reps: usize,
    seed: u64,
) -> Result<SplitSet> {
    if y.len() != n_rows {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} rows",
            y.len(),
            n_rows
        )));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("reps must be at least 1".into()));
    }
    if !train_frac.is_finite() || train_frac <= 0.0 || train_frac >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "train fraction must lie strictly between 0 and 1, got {train_frac}"
        )));
    }
    let n_train = (train_frac * n_rows as f64).floor() as usize;
    if n_train == 0 || n_train >= n_rows {
        return Err(Error::InvalidInput(format!(
            "train fraction {train_frac} leaves an empty side for {n_rows} rows"
        )));
    }
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::InvalidInput(
            "labels contain a single class; no two-class training split exists".into(),
        ));
    }

    let mut seed_stream = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = Vec::with_capacity(reps);
    let mut redraws = 0usize;
    for rep in 0..reps {
        let mut attempts = 0usize;
        loop {
            let sub_seed: u64 = seed_stream.random();
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
            let mut train_idx = rand::seq::index::sample(&mut rng, n_rows, n_train).into_vec();
            train_idx.sort_unstable();
            let has_both = train_idx.iter().any(|&i| y[i] == 0)
                && train_idx.iter().any(|&i| y[i] == 1);
            if has_both {
                let mut in_train = vec![false; n_rows];
                for &i in &train_idx {
                    in_train[i] = true;
                }
                let test_idx: Vec<usize> = (0..n_rows).filter(|&i| !in_train[i]).collect();
                splits.push((train_idx, test_idx));
                break;
            }
            attempts += 1;
            redraws += 1;
            if attempts >= MAX_REDRAWS_PER_REP {
                return Err(Error::InvalidInput(format!(
                    "repetition {rep}: {MAX_REDRAWS_PER_REP} consecutive draws left a \
                     single class in the training side"
                )));
            }
        }
    }
    let signature = split_signature(&splits);
    Ok(SplitSet {
        splits,
        redraws,
        signature,
    })
}

/// One algorithm's repeated-holdout outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub algorithm: Algorithm,
    pub per_run: Vec<EvalResult>,
    pub mean: Metrics,
    pub redraws: usize,
    pub split_signature: u64,
}

/// Train and score one algorithm on an existing split set. Per-run training
/// seeds derive from `seed` alone, so two calls with the same seed and split
/// set differ only in the data columns they see.
pub fn run_with_splits(
    dataset: &Dataset,
    algorithm: Algorithm,
    hyper: &Hyperparameters,
    split_set: &SplitSet,
    seed: u64,
) -> Result<HoldoutReport> {
    if split_set.splits.is_empty() {
        return Err(Error::InvalidInput("empty split set".into()));
    }
    for (train_idx, test_idx) in &split_set.splits {
        let max = train_idx.iter().chain(test_idx).max().copied().unwrap_or(0);
        if max >= dataset.n_rows() {
            return Err(Error::InvalidInput(format!(
                "split references row {max} but the dataset has {} rows",
                dataset.n_rows()
            )));
        }
    }

    let mut seed_stream = ChaCha8Rng::seed_from_u64(seed ^ TRAIN_SEED_SALT);
    let run_seeds: Vec<u64> = (0..split_set.splits.len())
        .map(|_| seed_stream.random())
        .collect();

    let mut per_run = Vec::with_capacity(split_set.splits.len());
    for ((train_idx, test_idx), run_seed) in split_set.splits.iter().zip(run_seeds) {
        let train_ds = dataset.subset_rows(train_idx);
        let test_ds = dataset.subset_rows(test_idx);
        let model = train(algorithm, &train_ds, hyper, run_seed)?;
        per_run.push(evaluate(&model, &test_ds)?);
    }
    let mean = Metrics::mean_of(&per_run);
    Ok(HoldoutReport {
        algorithm,
        per_run,
        mean,
        redraws: split_set.redraws,
        split_signature: split_set.signature,
    })
}

/// Repeated random holdout: draw splits, then train and score on each.
pub fn repeated_holdout(
    dataset: &Dataset,
    algorithm: Algorithm,
    hyper: &Hyperparameters,
    train_frac: f64,
    reps: usize,
    seed: u64,
) -> Result<HoldoutReport> {
    let split_set = generate_splits(dataset.n_rows(), &dataset.y, train_frac, reps, seed)?;
    run_with_splits(dataset, algorithm, hyper, &split_set, seed)
}

/// Paired comparison of the full feature set against its explicit-only and
/// implicit-only slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationReport {
    pub all: HoldoutReport,
    pub explicit: HoldoutReport,
    pub implicit: HoldoutReport,
}

/// Run the ablation on one shared split set. All three arms carry the same
/// `split_signature`.
pub fn feature_group_ablation(
    dataset: &Dataset,
    algorithm: Algorithm,
    hyper: &Hyperparameters,
    train_frac: f64,
    reps: usize,
    seed: u64,
) -> Result<AblationReport> {
    let split_set = generate_splits(dataset.n_rows(), &dataset.y, train_frac, reps, seed)?;
    let all = run_with_splits(dataset, algorithm, hyper, &split_set, seed)?;

    let mut arms = Vec::with_capacity(2);
    for group in [FeatureGroup::Explicit, FeatureGroup::Implicit] {
        let columns = dataset.manifest.group_columns(group);
        if columns.is_empty() {
            return Err(Error::InvalidInput(format!(
                "feature group {group:?} has no columns in this manifest"
            )));
        }
        let sliced = dataset.select_columns(&columns)?;
        arms.push(run_with_splits(&sliced, algorithm, hyper, &split_set, seed)?);
    }
    let implicit = arms.pop().unwrap();
    let explicit = arms.pop().unwrap();
    Ok(AblationReport {
        all,
        explicit,
        implicit,
    })
}

/// Read an external per-news feature matrix and align its rows to the news
/// order of `dm`. The CSV header is `news_id` followed by feature names; one
/// row per news item. With `concat_upf` the aggregate profile columns are
/// prepended to the external ones.
pub fn align_external_matrix(
    dm: &DesignMatrix,
    matrix_path: &Path,
    concat_upf: bool,
) -> Result<Dataset> {
    let file_name = matrix_path.display().to_string();
    let mut reader = csv::Reader::from_path(matrix_path)
        .map_err(|e| Error::InvalidInput(format!("{file_name}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{file_name}: {e}")))?
        .clone();
    if headers.is_empty() || &headers[0] != "news_id" {
        return Err(Error::InvalidInput(format!(
            "{file_name}: header must start with news_id"
        )));
    }
    let external_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if external_names.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{file_name}: no feature columns"
        )));
    }

    let mut rows: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(&file_name, line, e.to_string()))?;
        if record.len() != external_names.len() + 1 {
            return Err(Error::parse(
                &file_name,
                line,
                format!(
                    "expected {} fields, got {}",
                    external_names.len() + 1,
                    record.len()
                ),
            ));
        }
        let news_id = record[0].to_string();
        let mut values = Vec::with_capacity(external_names.len());
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(&file_name, line, format!("bad number {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(&file_name, line, format!("non-finite {v}")));
            }
            values.push(v);
        }
        if rows.insert(news_id.clone(), values).is_some() {
            return Err(Error::parse(
                &file_name,
                line,
                format!("duplicate news_id {news_id:?}"),
            ));
        }
    }

    let missing: Vec<&str> = dm
        .news_ids
        .iter()
        .filter(|id| !rows.contains_key(*id))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{file_name}: missing {} news ids: {}",
            missing.len(),
            missing.join(", ")
        )));
    }

    let (mut names, mut groups) = if concat_upf {
        (dm.manifest.names.clone(), dm.manifest.groups.clone())
    } else {
        (Vec::new(), Vec::new())
    };
    for name in &external_names {
        if names.contains(name) {
            return Err(Error::InvalidInput(format!(
                "{file_name}: column {name:?} collides with a profile feature"
            )));
        }
        names.push(name.clone());
        groups.push(FeatureGroup::Implicit);
    }
    let manifest = FeatureManifest { names, groups };

    let x: Vec<Vec<f64>> = dm
        .news_ids
        .iter()
        .enumerate()
        .map(|(row, id)| {
            let external = &rows[id];
            if concat_upf {
                let mut combined = dm.x[row].clone();
                combined.extend_from_slice(external);
                combined
            } else {
                external.clone()
            }
        })
        .collect();
    Dataset::new(x, dm.y.clone(), manifest)
}

/// Repeated holdout on an external feature matrix, aligned to the profile
/// design matrix by news id.
#[allow(clippy::too_many_arguments)]
pub fn external_baseline_eval(
    dm: &DesignMatrix,
    matrix_path: &Path,
    algorithm: Algorithm,
    hyper: &Hyperparameters,
    train_frac: f64,
    reps: usize,
    seed: u64,
    concat_upf: bool,
) -> Result<HoldoutReport> {
    let dataset = align_external_matrix(dm, matrix_path, concat_upf)?;
    repeated_holdout(&dataset, algorithm, hyper, train_frac, reps, seed)
}
