//! Acceptance gate for the whole pipeline.
//!
//! Nine checks, each printing one `[n/9] PASS` line: grouping equivalence
//! against a brute-force oracle, Welch/quartile agreement with an
//! independent statistics stack, PCA agreement with a Jacobi eigensolver
//! plus hand-counted confusion metrics, planted-signal recovery, cross-
//! classifier stability, paired ablation, importance ranking, t-test
//! sensitivity and calibration, and byte-identical CLI reruns. Every
//! tolerance is pinned as a named constant.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use upfkit::analysis::{quartile_summary, welch_t_test};
use upfkit::config::PipelineConfig;
use upfkit::features::{fit_pca, FeatureManifest};
use upfkit::grouping::{partition_users, select_groups, GroupingConfig};
use upfkit::ml::{
    evaluate_predictions, feature_group_ablation, gini_importance, repeated_holdout, train,
    Algorithm, Dataset, Hyperparameters,
};
use upfkit::pipeline::{self, OutLayout};
use upfkit::synth::SynthConfig;

const GROUPING_CORPORA: usize = 100;
const GROUPING_TIME_BUDGET: Duration = Duration::from_secs(10);
const WELCH_PAIRS: usize = 50;
const WELCH_TOLERANCE: f64 = 1e-6;
const PCA_TOLERANCE: f64 = 1e-8;
const METRIC_TOLERANCE: f64 = 1e-12;
const SIGNAL_TIME_BUDGET: Duration = Duration::from_secs(120);
const RF_MIN_MEAN_F1: f64 = 0.95;
const MAX_F1_SPREAD: f64 = 0.10;
const ABLATION_SLACK: f64 = 0.01;
const IMPORTANCE_SEEDS: usize = 100;
const DOMINANT_MIN_FIRST: usize = 95;
const IMPORTANCE_SUM_TOLERANCE: f64 = 1e-9;
const SENSITIVITY_SEEDS: usize = 100;
const SHIFT_MIN_DETECTIONS: usize = 95;
const SHIFT_ALPHA: f64 = 0.01;
const NULL_ALPHA: f64 = 0.05;
const NULL_RATE_RANGE: (f64, f64) = (0.01, 0.12);

#[test]
fn grouping_matches_brute_force_oracle_on_seeded_corpora() {
    let start = Instant::now();
    let t_values = [0.0, 0.1, 0.2, 0.3, 0.45];
    let mut checked = 0;
    let mut degenerate = 0;
    for seed in 0..GROUPING_CORPORA as u64 {
        let corpus = common::random_share_corpus(seed, 200, 100);
        let partition = partition_users(&corpus);
        if partition.only_fake.is_empty() || partition.only_real.is_empty() {
            degenerate += 1;
            continue;
        }
        let config = GroupingConfig {
            k: 1 + (seed as usize % 15),
            t: t_values[seed as usize % t_values.len()],
            sample_seed: seed * 31 + 7,
        };
        let selection = select_groups(&corpus, &config).unwrap();
        let (oracle_fake, oracle_real) =
            common::grouping_oracle(&corpus, config.k, config.t, config.sample_seed);
        assert_eq!(selection.u_fake, oracle_fake, "u_fake differs at seed {seed}");
        assert_eq!(selection.u_real, oracle_real, "u_real differs at seed {seed}");
        checked += 1;
    }
    let elapsed = start.elapsed();
    assert!(checked >= 90, "only {checked} non-degenerate corpora");
    assert!(
        elapsed < GROUPING_TIME_BUDGET,
        "grouping sweep took {elapsed:?}"
    );
    println!(
        "[1/9] PASS grouping equals the brute-force oracle on {checked}/{GROUPING_CORPORA} \
         corpora ({degenerate} degenerate skipped) in {elapsed:?}"
    );
}

#[test]
fn welch_and_quartiles_match_independent_statistics_stack() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57A7);
    let mut max_err: f64 = 0.0;
    for pair in 0..WELCH_PAIRS {
        let n_a = rng.random_range(2..40);
        let n_b = rng.random_range(2..40);
        let spread_a = Normal::new(rng.random_range(-3.0..3.0), rng.random_range(0.2..4.0)).unwrap();
        let spread_b = Normal::new(rng.random_range(-3.0..3.0), rng.random_range(0.2..4.0)).unwrap();
        let xs: Vec<f64> = (0..n_a).map(|_| rng.sample(spread_a)).collect();
        let ys: Vec<f64> = (0..n_b).map(|_| rng.sample(spread_b)).collect();

        let ours = welch_t_test(&xs, &ys).unwrap();
        let (t_ref, df_ref, p_ref) = common::welch_oracle(&xs, &ys);
        for (label, got, want) in [
            ("t", ours.t_statistic, t_ref),
            ("df", ours.degrees_of_freedom, df_ref),
            ("p", ours.p_value, p_ref),
        ] {
            let err = (got - want).abs();
            assert!(
                err <= WELCH_TOLERANCE,
                "pair {pair}: {label} differs by {err:e} ({got} vs {want})"
            );
            max_err = max_err.max(err);
        }

        for sample in [&xs, &ys] {
            let summary = quartile_summary(sample).unwrap();
            assert_eq!(summary.q1, common::quantile_oracle(sample, 0.25));
            assert_eq!(summary.median, common::quantile_oracle(sample, 0.5));
            assert_eq!(summary.q3, common::quantile_oracle(sample, 0.75));
            assert_eq!(summary.min, common::quantile_oracle(sample, 0.0));
            assert_eq!(summary.max, common::quantile_oracle(sample, 1.0));
        }
    }
    println!(
        "[2/9] PASS Welch matches the independent statistics stack on {WELCH_PAIRS} pairs \
         (max |err| {max_err:.2e} ≤ {WELCH_TOLERANCE:e}) and quartiles match exactly"
    );
}

#[test]
fn pca_matches_jacobi_oracle_and_metrics_match_hand_counts() {
    // PCA against the cyclic Jacobi eigensolver on growing shapes; scaled
    // columns keep the spectrum well separated so eigenvectors are stable.
    let shapes = [(5usize, 3usize, 2usize), (10, 6, 3), (20, 12, 5), (30, 20, 8), (8, 8, 4)];
    let mut rng = ChaCha8Rng::seed_from_u64(0x9CA0);
    let gauss = Normal::new(0.0, 1.0).unwrap();
    for &(rows, cols, dims) in &shapes {
        let matrix: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|j| rng.sample(gauss) * (1.0 + j as f64))
                    .collect()
            })
            .collect();
        let model = fit_pca(&matrix, dims).unwrap();
        let oracle = common::pca_oracle(&matrix, dims);
        for (m, o) in model.mean.iter().zip(&oracle.mean) {
            assert!((m - o).abs() <= PCA_TOLERANCE, "mean differs: {m} vs {o}");
        }
        for (axis, (ours, theirs)) in model
            .components
            .iter()
            .zip(&oracle.components)
            .enumerate()
        {
            for (a, b) in ours.iter().zip(theirs) {
                assert!(
                    (a - b).abs() <= PCA_TOLERANCE,
                    "{rows}x{cols} axis {axis}: component entry {a} vs {b}"
                );
            }
        }
        for (a, b) in model.explained_variance.iter().zip(&oracle.explained_variance) {
            assert!(
                (a - b).abs() <= PCA_TOLERANCE,
                "{rows}x{cols}: eigenvalue {a} vs {b}"
            );
        }
    }

    // Confusion metrics against hand-counted fixtures. Entries:
    // (predictions, labels, tp, fp, tn, fn, accuracy, precision, recall,
    //  f1 flagged?, expected flags).
    struct Fixture {
        pred: &'static [u8],
        truth: &'static [u8],
        tp: usize,
        fp: usize,
        tn: usize,
        fn_: usize,
        accuracy: f64,
        precision: f64,
        recall: f64,
        f1_flagged: bool,
        flags: &'static [&'static str],
    }
    let fx = |pred, truth, tp, fp, tn, fn_, accuracy, precision, recall, f1_flagged, flags| {
        Fixture { pred, truth, tp, fp, tn, fn_, accuracy, precision, recall, f1_flagged, flags }
    };
    #[rustfmt::skip]
    let fixtures: Vec<Fixture> = vec![
        fx(&[1,1,0,1,0,0,0,0,0,0], &[1,1,1,0,0,0,0,0,0,0], 2,1,6,1, 0.8, 2.0/3.0, 2.0/3.0, false, &[]),
        fx(&[1,0,1,0], &[1,0,1,0], 2,0,2,0, 1.0, 1.0, 1.0, false, &[]),
        fx(&[0,1], &[1,0], 0,1,0,1, 0.0, 0.0, 0.0, true, &["f1_zero_denominator"]),
        fx(&[0,0,0,0], &[1,1,0,0], 0,0,2,2, 0.5, 0.0, 0.0, true, &["precision_zero_denominator","f1_zero_denominator"]),
        fx(&[1,1,1,1], &[1,1,0,0], 2,2,0,0, 0.5, 0.5, 1.0, false, &[]),
        fx(&[0,0,0], &[0,0,0], 0,0,3,0, 1.0, 0.0, 0.0, true, &["precision_zero_denominator","recall_zero_denominator","f1_zero_denominator"]),
        fx(&[1,1,1], &[1,1,1], 3,0,0,0, 1.0, 1.0, 1.0, false, &[]),
        fx(&[1,1,1,1,0,0,0,0,1,0], &[1,0,1,0,1,0,1,0,1,0], 3,2,3,2, 0.6, 0.6, 0.6, false, &[]),
        fx(&[1], &[1], 1,0,0,0, 1.0, 1.0, 1.0, false, &[]),
        fx(&[0], &[1], 0,0,0,1, 0.0, 0.0, 0.0, true, &["precision_zero_denominator","f1_zero_denominator"]),
        fx(&[1], &[0], 0,1,0,0, 0.0, 0.0, 0.0, true, &["recall_zero_denominator","f1_zero_denominator"]),
        fx(&[0], &[0], 0,0,1,0, 1.0, 0.0, 0.0, true, &["precision_zero_denominator","recall_zero_denominator","f1_zero_denominator"]),
        fx(&[1,1,1,1], &[1,0,0,0], 1,3,0,0, 0.25, 0.25, 1.0, false, &[]),
        fx(&[1,1,1,0], &[1,1,1,1], 3,0,0,1, 0.75, 1.0, 0.75, false, &[]),
        fx(&[1,1,1,1,0,0,1,0,0,0], &[1,1,1,1,1,1,0,0,0,0], 4,1,3,2, 0.7, 0.8, 2.0/3.0, false, &[]),
        fx(&[0,0,1,1,1,0], &[1,0,1,0,1,0], 2,1,2,1, 2.0/3.0, 2.0/3.0, 2.0/3.0, false, &[]),
        fx(&[0,0,0,1], &[1,1,1,0], 0,1,0,3, 0.0, 0.0, 0.0, true, &["f1_zero_denominator"]),
        fx(&[1,1,1,1,1,0,0,0,0,0], &[1,1,1,1,1,0,0,0,0,0], 5,0,5,0, 1.0, 1.0, 1.0, false, &[]),
        fx(&[1,0,1,0], &[1,1,0,0], 1,1,1,1, 0.5, 0.5, 0.5, false, &[]),
        fx(&[1,1,1,1,1,1,1,1,1,0], &[1,1,1,1,1,1,1,1,1,1], 9,0,0,1, 0.9, 1.0, 0.9, false, &[]),
    ];
    assert_eq!(fixtures.len(), 20);
    for (i, f) in fixtures.iter().enumerate() {
        let got = evaluate_predictions(f.pred, f.truth).unwrap();
        assert_eq!(
            (got.true_positives, got.false_positives, got.true_negatives, got.false_negatives),
            (f.tp, f.fp, f.tn, f.fn_),
            "fixture {i}: confusion counts"
        );
        let f1_expected = if f.f1_flagged {
            0.0
        } else {
            2.0 * f.precision * f.recall / (f.precision + f.recall)
        };
        for (label, got_v, want) in [
            ("accuracy", got.accuracy, f.accuracy),
            ("precision", got.precision, f.precision),
            ("recall", got.recall, f.recall),
            ("f1", got.f1, f1_expected),
        ] {
            assert!(
                (got_v - want).abs() <= METRIC_TOLERANCE,
                "fixture {i}: {label} = {got_v}, want {want}"
            );
        }
        assert_eq!(got.flags, f.flags, "fixture {i}: flags");
    }

    // The canonical worked example: TP=2 FP=1 FN=1 TN=6.
    let canon = evaluate_predictions(
        &[1, 1, 0, 1, 0, 0, 0, 0, 0, 0],
        &[1, 1, 1, 0, 0, 0, 0, 0, 0, 0],
    )
    .unwrap();
    assert!((canon.accuracy - 0.8).abs() <= METRIC_TOLERANCE);
    assert!((canon.precision - 2.0 / 3.0).abs() <= METRIC_TOLERANCE);
    assert!((canon.recall - 2.0 / 3.0).abs() <= METRIC_TOLERANCE);
    assert!((canon.f1 - 2.0 / 3.0).abs() <= METRIC_TOLERANCE);

    println!(
        "[3/9] PASS PCA matches the Jacobi oracle on {} shapes within {PCA_TOLERANCE:e} \
         and all 20 hand-counted confusion fixtures agree",
        shapes.len()
    );
}

/// One high-signal synthetic run shared by the recovery, stability, and
/// ablation checks. Built once; building includes the full artifact path
/// (synth, filter, group, extract, reload from features.csv).
fn signal_dataset() -> &'static Dataset {
    static DATASET: OnceLock<Dataset> = OnceLock::new();
    DATASET.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let config = signal_config(tmp.path());
        pipeline::run_synth(&config).unwrap();
        pipeline::run_filter_bots(&config).unwrap();
        pipeline::run_group(&config).unwrap();
        pipeline::run_extract(&config).unwrap();
        let dm =
            pipeline::read_features_csv(&OutLayout::new(&config.out_dir).features_csv()).unwrap();
        Dataset::from_design_matrix(&dm).unwrap()
    })
}

fn signal_config(out_dir: &Path) -> PipelineConfig {
    let mut config = PipelineConfig::default();
    config.seed = 424_242;
    config.out_dir = out_dir.to_path_buf();
    config.synth = SynthConfig {
        n_users: 2000,
        n_news: 1000,
        n_shares: 8000,
        n_image_classes: 50,
        effect_size: 1.0,
        seed: 424_242,
        ..SynthConfig::default()
    };
    config
}

#[test]
fn random_forest_recovers_planted_signal() {
    let start = Instant::now();
    let dataset = signal_dataset();
    let report = repeated_holdout(
        dataset,
        Algorithm::RandomForest,
        &Hyperparameters::default(),
        0.8,
        5,
        424_242,
    )
    .unwrap();
    let elapsed = start.elapsed();
    assert!(
        report.mean.f1 >= RF_MIN_MEAN_F1,
        "random forest mean F1 {:.4} below {RF_MIN_MEAN_F1}",
        report.mean.f1
    );
    assert!(elapsed < SIGNAL_TIME_BUDGET, "signal recovery took {elapsed:?}");
    println!(
        "[4/9] PASS random forest recovers the planted signal: mean F1 {:.4} ≥ {RF_MIN_MEAN_F1} \
         over 5×80/20 holdouts on {} news profiles in {elapsed:?}",
        report.mean.f1,
        dataset.n_rows()
    );
}

#[test]
fn classifiers_agree_within_f1_spread_budget() {
    let dataset = signal_dataset();
    let algorithms = [
        Algorithm::RandomForest,
        Algorithm::LinearSvm,
        Algorithm::DecisionTree,
        Algorithm::LogReg,
    ];
    let mut scores = Vec::new();
    for algorithm in algorithms {
        let report = repeated_holdout(
            dataset,
            algorithm,
            &Hyperparameters::default(),
            0.8,
            5,
            424_242,
        )
        .unwrap();
        scores.push((algorithm.tag(), report.mean.f1));
    }
    let best = scores.iter().map(|(_, f1)| *f1).fold(f64::MIN, f64::max);
    let worst = scores.iter().map(|(_, f1)| *f1).fold(f64::MAX, f64::min);
    let spread = best - worst;
    assert!(
        spread <= MAX_F1_SPREAD,
        "F1 spread {spread:.4} exceeds {MAX_F1_SPREAD}: {scores:?}"
    );
    println!(
        "[5/9] PASS mean F1 spread across {scores:?} is {spread:.4} ≤ {MAX_F1_SPREAD}"
    );
}

#[test]
fn full_feature_set_never_loses_to_either_group() {
    let dataset = signal_dataset();
    let report = feature_group_ablation(
        dataset,
        Algorithm::RandomForest,
        &Hyperparameters::default(),
        0.8,
        5,
        424_242,
    )
    .unwrap();
    let all = report.all.mean.f1;
    let explicit = report.explicit.mean.f1;
    let implicit = report.implicit.mean.f1;
    assert_eq!(report.all.split_signature, report.explicit.split_signature);
    assert_eq!(report.all.split_signature, report.implicit.split_signature);
    assert!(
        all >= explicit.max(implicit) - ABLATION_SLACK,
        "all-features F1 {all:.4} loses to max(explicit {explicit:.4}, implicit {implicit:.4}) \
         by more than {ABLATION_SLACK}"
    );
    println!(
        "[6/9] PASS paired ablation holds: all {all:.4} ≥ max(explicit {explicit:.4}, \
         implicit {implicit:.4}) − {ABLATION_SLACK}"
    );
}

#[test]
fn dominant_feature_ranks_first_and_importances_normalize() {
    let names: Vec<String> = ["signal", "noise_a", "noise_b", "noise_c", "noise_d", "noise_e"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let mut first = 0;
    for seed in 0..IMPORTANCE_SEEDS as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 120;
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = (i % 2) as u8;
            let mut row = vec![label as f64 + 0.05 * rng.sample(gauss)];
            for _ in 0..5 {
                row.push(rng.sample(gauss));
            }
            x.push(row);
            y.push(label);
        }
        let dataset = Dataset::new(x, y, FeatureManifest::from_names(names.clone())).unwrap();
        let model = train(
            Algorithm::RandomForest,
            &dataset,
            &Hyperparameters::default(),
            seed,
        )
        .unwrap();
        let report = gini_importance(&model).unwrap();
        let total: f64 = report.importances.iter().sum();
        assert!(
            (total - 1.0).abs() <= IMPORTANCE_SUM_TOLERANCE,
            "seed {seed}: importances sum to {total}"
        );
        if report.ranked[0].0 == "signal" {
            first += 1;
        }
    }
    assert!(
        first >= DOMINANT_MIN_FIRST,
        "dominant feature ranked first in only {first}/{IMPORTANCE_SEEDS} runs"
    );
    println!(
        "[7/9] PASS dominant feature ranked first in {first}/{IMPORTANCE_SEEDS} forests and \
         importances sum to 1 within {IMPORTANCE_SUM_TOLERANCE:e}"
    );
}

#[test]
fn welch_detects_three_sigma_shift_and_calibrates_under_null() {
    let gauss = Normal::new(0.0, 1.0).unwrap();
    let shifted = Normal::new(3.0, 1.0).unwrap();
    let mut detections = 0;
    for seed in 0..SENSITIVITY_SEEDS as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xD1F7 ^ seed.wrapping_mul(2654435761));
        let xs: Vec<f64> = (0..100).map(|_| rng.sample(gauss)).collect();
        let ys: Vec<f64> = (0..100).map(|_| rng.sample(shifted)).collect();
        if welch_t_test(&xs, &ys).unwrap().p_value < SHIFT_ALPHA {
            detections += 1;
        }
    }
    assert!(
        detections >= SHIFT_MIN_DETECTIONS,
        "3σ shift detected in only {detections}/{SENSITIVITY_SEEDS} runs"
    );

    let mut false_positives = 0;
    for seed in 0..SENSITIVITY_SEEDS as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x0DD5 ^ seed.wrapping_mul(6364136223846793005));
        let xs: Vec<f64> = (0..100).map(|_| rng.sample(gauss)).collect();
        let ys: Vec<f64> = (0..100).map(|_| rng.sample(gauss)).collect();
        if welch_t_test(&xs, &ys).unwrap().p_value < NULL_ALPHA {
            false_positives += 1;
        }
    }
    let rate = false_positives as f64 / SENSITIVITY_SEEDS as f64;
    assert!(
        rate >= NULL_RATE_RANGE.0 && rate <= NULL_RATE_RANGE.1,
        "null rejection rate {rate} outside [{}, {}]",
        NULL_RATE_RANGE.0,
        NULL_RATE_RANGE.1
    );
    println!(
        "[8/9] PASS 3σ shift detected at p<{SHIFT_ALPHA} in {detections}/{SENSITIVITY_SEEDS} \
         runs and the null rejects at rate {rate:.2} within [{}, {}]",
        NULL_RATE_RANGE.0, NULL_RATE_RANGE.1
    );
}

fn collect_tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                files.push((rel, fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn cli_runs_are_byte_identical() {
    let config_text = concat!(
        "seed: 9\n",
        "out_dir: out\n",
        "synth:\n",
        "  n_users: 300\n",
        "  n_news: 160\n",
        "  n_shares: 1200\n",
        "  tweets_per_user: 4\n",
        "  tokens_per_tweet: 10\n",
        "  n_image_classes: 16\n",
        "  liw_docs_per_city: 8\n",
        "  effect_size: 1.1\n",
        "  seed: 9\n",
        "features:\n",
        "  image_pca_dims: 6\n",
        "eval:\n",
        "  reps: 3\n",
    );
    let tmp = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for run in ["first", "second"] {
        let workdir = tmp.path().join(run);
        fs::create_dir_all(&workdir).unwrap();
        fs::write(workdir.join("pipeline.yaml"), config_text).unwrap();
        let output = Command::new(env!("CARGO_BIN_EXE_upfkit"))
            .args(["all", "--config", "pipeline.yaml"])
            .current_dir(&workdir)
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "{run} run failed: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        trees.push(collect_tree(&workdir.join("out")));
    }
    let (first, second) = (&trees[0], &trees[1]);
    assert_eq!(
        first.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        second.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        "artifact listings differ"
    );
    let mut bytes_total = 0usize;
    for ((name, a), (_, b)) in first.iter().zip(second) {
        assert_eq!(a, b, "artifact {name} differs between identical runs");
        bytes_total += a.len();
    }
    println!(
        "[9/9] PASS two `upfkit all` runs produced byte-identical artifacts \
         ({} files, {bytes_total} bytes)",
        first.len()
    );
}
