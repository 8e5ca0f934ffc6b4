//! Bot filtering from externally supplied bot-probability scores.
//!
//! Scores come from an external classifier as a CSV; this module only applies
//! the threshold rule. Users scoring strictly above the threshold are dropped
//! together with their shares and tweets. Users with no score at all are kept:
//! absence of evidence is not treated as a bot signal, and the stats struct
//! makes the outcome auditable.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};

/// user_id → bot probability in [0, 1].
#[derive(Debug, Clone, Default)]
pub struct BotScoreTable {
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub removed_count: usize,
    pub kept_count: usize,
    /// Fraction of pre-filter fake-sharers that were removed. A user sharing
    /// both fake and real news counts in both sharer populations.
    pub removed_ratio_fake_sharers: f64,
    pub removed_ratio_real_sharers: f64,
}

/// Read a `user_id,score` CSV, rejecting scores outside [0, 1].
pub fn load_bot_scores(path: &Path) -> Result<BotScoreTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if headers.len() < 2 || &headers[0] != "user_id" || &headers[1] != "score" {
        return Err(Error::parse(
            path,
            1,
            format!("expected header user_id,score, got {:?}", headers),
        ));
    }

    let mut table = BotScoreTable::default();
    for (idx, record) in reader.records().enumerate() {
        let line_no = idx + 2;
        let record = record.map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let user_id = record
            .get(0)
            .ok_or_else(|| Error::parse(path, line_no, "missing user_id"))?
            .to_string();
        let score: f64 = record
            .get(1)
            .ok_or_else(|| Error::parse(path, line_no, "missing score"))?
            .parse()
            .map_err(|e| Error::parse(path, line_no, format!("bad score: {e}")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::parse(
                path,
                line_no,
                format!("score {score} outside [0,1]"),
            ));
        }
        table.scores.insert(user_id, score);
    }
    Ok(table)
}

/// Remove users whose bot score is strictly greater than `threshold`.
///
/// Returns the filtered corpus and removal statistics. The removed ratios are
/// computed over the pre-filter fake-sharer and real-sharer populations.
pub fn filter_bots(
    corpus: &Corpus,
    table: &BotScoreTable,
    threshold: f64,
) -> Result<(Corpus, FilterStats)> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidInput(format!(
            "bot threshold {threshold} outside [0,1]"
        )));
    }

    let is_bot = |user_id: &str| -> bool {
        table
            .scores
            .get(user_id)
            .is_some_and(|&score| score > threshold)
    };

    let mut fake_sharers: BTreeSet<&str> = BTreeSet::new();
    let mut real_sharers: BTreeSet<&str> = BTreeSet::new();
    for share in &corpus.shares {
        match corpus.news[&share.news_id].label {
            Label::Fake => fake_sharers.insert(&share.user_id),
            Label::Real => real_sharers.insert(&share.user_id),
        };
    }
    let ratio = |population: &BTreeSet<&str>| -> f64 {
        if population.is_empty() {
            return 0.0;
        }
        let removed = population.iter().filter(|id| is_bot(id)).count();
        removed as f64 / population.len() as f64
    };
    let removed_ratio_fake_sharers = ratio(&fake_sharers);
    let removed_ratio_real_sharers = ratio(&real_sharers);

    let users: BTreeMap<String, _> = corpus
        .users
        .iter()
        .filter(|(id, _)| !is_bot(id))
        .map(|(id, u)| (id.clone(), u.clone()))
        .collect();
    let removed_count = corpus.users.len() - users.len();

    let filtered = Corpus {
        shares: corpus
            .shares
            .iter()
            .filter(|s| users.contains_key(&s.user_id))
            .cloned()
            .collect(),
        tweets: corpus
            .tweets
            .iter()
            .filter(|t| users.contains_key(&t.user_id))
            .cloned()
            .collect(),
        news: corpus.news.clone(),
        reference_date: corpus.reference_date,
        users,
    };

    let stats = FilterStats {
        removed_count,
        kept_count: filtered.users.len(),
        removed_ratio_fake_sharers,
        removed_ratio_real_sharers,
    };
    Ok((filtered, stats))
}
