//! Political bias score from seed-vocabulary overlap.
//!
//! With L and R the fractions of a user's interest tokens that fall in the
//! left and right seed sets, the score is (L − R)/(L + R): +1 when interests
//! are entirely left-seeded, −1 when entirely right-seeded, 0 when they touch
//! neither set. A score of magnitude ≥ 0.5 is a categorical lean; the band
//! boundaries are closed on the leaning side.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoliticalSeeds {
    pub left_tokens: BTreeSet<String>,
    pub right_tokens: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BiasCategory {
    Left,
    Neutral,
    Right,
}

#[derive(Deserialize)]
struct RawSeeds {
    left: Vec<String>,
    right: Vec<String>,
}

/// Load `seeds.json`: `{"left": [...], "right": [...]}`. The two sets must be
/// nonempty and disjoint after lowercasing.
pub fn load_seeds(path: &Path) -> Result<PoliticalSeeds> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawSeeds =
        serde_json::from_str(&content).map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let left_tokens: BTreeSet<String> = raw.left.iter().map(|s| s.to_lowercase()).collect();
    let right_tokens: BTreeSet<String> = raw.right.iter().map(|s| s.to_lowercase()).collect();
    if left_tokens.is_empty() || right_tokens.is_empty() {
        return Err(Error::parse(path, 1, "seed sets must be nonempty"));
    }
    if let Some(shared) = left_tokens.intersection(&right_tokens).next() {
        return Err(Error::parse(
            path,
            1,
            format!("seed sets overlap on {shared:?}"),
        ));
    }
    Ok(PoliticalSeeds {
        left_tokens,
        right_tokens,
    })
}

/// Score in [−1, 1]; positive leans left. Repeated interest tokens count each
/// time they appear. An empty interest list scores 0.
pub fn political_bias_score(interest_tokens: &[String], seeds: &PoliticalSeeds) -> f64 {
    if interest_tokens.is_empty() {
        return 0.0;
    }
    let total = interest_tokens.len() as f64;
    let left_hits = interest_tokens
        .iter()
        .filter(|t| seeds.left_tokens.contains(*t))
        .count() as f64;
    let right_hits = interest_tokens
        .iter()
        .filter(|t| seeds.right_tokens.contains(*t))
        .count() as f64;
    let l = left_hits / total;
    let r = right_hits / total;
    if l + r == 0.0 {
        0.0
    } else {
        (l - r) / (l + r)
    }
}

/// Band assignment: [0.5, 1] → Left, [−1, −0.5] → Right, otherwise Neutral.
pub fn bias_category(score: f64) -> BiasCategory {
    if score >= 0.5 {
        BiasCategory::Left
    } else if score <= -0.5 {
        BiasCategory::Right
    } else {
        BiasCategory::Neutral
    }
}
