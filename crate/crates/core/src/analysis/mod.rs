//! Statistical comparison of the two user groups.
//!
//! For every manifest feature the report holds either a Welch two-tailed
//! t-test with quartile summaries (numeric features) or per-group count
//! tables (the verified flag and the political-bias category). Welch's
//! unequal-variance form is used because the group variances demonstrably
//! differ; the quantile convention is linear interpolation over the sorted
//! sample (inclusive endpoints). Both choices are frozen so reports are
//! comparable across runs.

pub mod tdist;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{bias_category, BiasCategory, FeatureManifest, UserFeatureVector};
use crate::grouping::GroupSelection;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Welch's unequal-variance two-tailed t-test.
///
/// Two all-constant samples with equal values yield t = 0, p = 1; constant
/// samples with different values yield the limit t = ±∞, p = 0. Both cases
/// fall back to the pooled df of n_a + n_b − 2 since the Welch df is 0/0.
pub fn welch_t_test(sample_a: &[f64], sample_b: &[f64]) -> Result<TTestResult> {
    if sample_a.len() < 2 || sample_b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "t-test needs ≥2 values per sample, got {} and {}",
            sample_a.len(),
            sample_b.len()
        )));
    }
    let n_a = sample_a.len();
    let n_b = sample_b.len();
    let mean_a = mean(sample_a);
    let mean_b = mean(sample_b);
    let var_a = sample_variance(sample_a, mean_a);
    let var_b = sample_variance(sample_b, mean_b);

    let (t_statistic, degrees_of_freedom) = if var_a == 0.0 && var_b == 0.0 {
        let df = (n_a + n_b - 2) as f64;
        if mean_a == mean_b {
            (0.0, df)
        } else {
            (
                if mean_a > mean_b {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                },
                df,
            )
        }
    } else {
        let se_a = var_a / n_a as f64;
        let se_b = var_b / n_b as f64;
        let t = (mean_a - mean_b) / (se_a + se_b).sqrt();
        let df = (se_a + se_b).powi(2)
            / (se_a.powi(2) / (n_a as f64 - 1.0) + se_b.powi(2) / (n_b as f64 - 1.0));
        (t, df)
    };

    Ok(TTestResult {
        t_statistic,
        degrees_of_freedom,
        p_value: tdist::two_sided_p(t_statistic, degrees_of_freedom),
        mean_a,
        mean_b,
        n_a,
        n_b,
    })
}

fn mean(sample: &[f64]) -> f64 {
    sample.iter().sum::<f64>() / sample.len() as f64
}

fn sample_variance(sample: &[f64], mean: f64) -> f64 {
    if sample.len() < 2 {
        return 0.0;
    }
    sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (sample.len() as f64 - 1.0)
}

/// Linear-interpolation quantile over a sorted slice, q in [0, 1].
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Min, quartiles, and max of a sample.
pub fn quartile_summary(sample: &[f64]) -> Result<QuartileSummary> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("quartiles of an empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample value"));
    Ok(QuartileSummary {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonDetail {
    Numeric {
        t_test: TTestResult,
        quartiles_fake: QuartileSummary,
        quartiles_real: QuartileSummary,
        significant: bool,
    },
    Categorical {
        counts_fake: BTreeMap<String, usize>,
        counts_real: BTreeMap<String, usize>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureComparison {
    pub name: String,
    #[serde(flatten)]
    pub detail: ComparisonDetail,
}

/// One entry per manifest feature, in manifest order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    /// Number of t-tests run, for multiple-comparison awareness.
    pub n_tests: usize,
    pub group_sizes: (usize, usize),
    pub features: Vec<FeatureComparison>,
}

const ALPHA: f64 = 0.05;

fn category_label(category: BiasCategory) -> &'static str {
    match category {
        BiasCategory::Left => "left",
        BiasCategory::Neutral => "neutral",
        BiasCategory::Right => "right",
    }
}

/// Compare the fake and real groups feature by feature.
///
/// `vectors` must cover every group member. The `verified` slot is reported
/// as verified/unverified counts and the `bias_score` slot as left/neutral/
/// right category counts; every other feature gets a Welch t-test (fake
/// group first) plus per-group quartiles.
pub fn compare_groups(
    selection: &GroupSelection,
    vectors: &BTreeMap<String, UserFeatureVector>,
    manifest: &FeatureManifest,
) -> Result<ComparisonReport> {
    if selection.u_fake.len() < 2 || selection.u_real.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "groups must have ≥2 members, got {} and {}",
            selection.u_fake.len(),
            selection.u_real.len()
        )));
    }

    let column = |ids: &std::collections::BTreeSet<String>, col: usize| -> Result<Vec<f64>> {
        ids.iter()
            .map(|id| {
                let v = vectors.get(id).ok_or_else(|| Error::UnknownId {
                    kind: "user_id",
                    id: id.clone(),
                })?;
                if v.values.len() != manifest.len() {
                    return Err(Error::Invariant(format!(
                        "vector for {id} has {} values, manifest expects {}",
                        v.values.len(),
                        manifest.len()
                    )));
                }
                Ok(v.values[col])
            })
            .collect()
    };

    let features: Vec<FeatureComparison> = manifest
        .names
        .par_iter()
        .enumerate()
        .map(|(col, name)| -> Result<FeatureComparison> {
            let fake = column(&selection.u_fake, col)?;
            let real = column(&selection.u_real, col)?;
            let detail = match name.as_str() {
                "verified" => ComparisonDetail::Categorical {
                    counts_fake: verified_counts(&fake),
                    counts_real: verified_counts(&real),
                },
                "bias_score" => ComparisonDetail::Categorical {
                    counts_fake: bias_counts(&fake),
                    counts_real: bias_counts(&real),
                },
                _ => {
                    let t_test = welch_t_test(&fake, &real)?;
                    let significant = t_test.p_value < ALPHA;
                    ComparisonDetail::Numeric {
                        quartiles_fake: quartile_summary(&fake)?,
                        quartiles_real: quartile_summary(&real)?,
                        t_test,
                        significant,
                    }
                }
            };
            Ok(FeatureComparison {
                name: name.clone(),
                detail,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_tests = features
        .iter()
        .filter(|f| matches!(f.detail, ComparisonDetail::Numeric { .. }))
        .count();

    Ok(ComparisonReport {
        alpha: ALPHA,
        n_tests,
        group_sizes: (selection.u_fake.len(), selection.u_real.len()),
        features,
    })
}

fn verified_counts(values: &[f64]) -> BTreeMap<String, usize> {
    let verified = values.iter().filter(|&&v| v != 0.0).count();
    BTreeMap::from([
        ("verified".to_string(), verified),
        ("unverified".to_string(), values.len() - verified),
    ])
}

fn bias_counts(scores: &[f64]) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::from([
        ("left".to_string(), 0),
        ("neutral".to_string(), 0),
        ("right".to_string(), 0),
    ]);
    for &score in scores {
        *counts
            .get_mut(category_label(bias_category(score)))
            .unwrap() += 1;
    }
    counts
}

impl ComparisonReport {
    /// Human-readable rendering with one section per feature.
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("# Group comparison\n\n");
        out.push_str(&format!(
            "Fake group n = {}, real group n = {}. {} t-tests at alpha = {} (no multiple-comparison correction).\n",
            self.group_sizes.0, self.group_sizes.1, self.n_tests, self.alpha
        ));
        for feature in &self.features {
            out.push_str(&format!("\n## {}\n\n", feature.name));
            match &feature.detail {
                ComparisonDetail::Numeric {
                    t_test,
                    quartiles_fake,
                    quartiles_real,
                    significant,
                } => {
                    out.push_str(&format!(
                        "mean fake = {:.6}, mean real = {:.6}, t = {:.6}, df = {:.3}, p = {:.6e}{}\n\n",
                        t_test.mean_a,
                        t_test.mean_b,
                        t_test.t_statistic,
                        t_test.degrees_of_freedom,
                        t_test.p_value,
                        if *significant { " (significant)" } else { "" },
                    ));
                    out.push_str("| group | min | q1 | median | q3 | max |\n");
                    out.push_str("|---|---|---|---|---|---|\n");
                    for (label, q) in [("fake", quartiles_fake), ("real", quartiles_real)] {
                        out.push_str(&format!(
                            "| {} | {:.6} | {:.6} | {:.6} | {:.6} | {:.6} |\n",
                            label, q.min, q.q1, q.median, q.q3, q.max
                        ));
                    }
                }
                ComparisonDetail::Categorical {
                    counts_fake,
                    counts_real,
                } => {
                    out.push_str("| category | fake group | real group |\n");
                    out.push_str("|---|---|---|\n");
                    for (category, fake_count) in counts_fake {
                        let real_count = counts_real.get(category).copied().unwrap_or(0);
                        out.push_str(&format!(
                            "| {category} | {fake_count} | {real_count} |\n"
                        ));
                    }
                }
            }
        }
        out
    }
}
