//! Location prediction from location-indicative words (LIW).
//!
//! A multinomial naive-Bayes classifier over a fixed LIW vocabulary maps a
//! user's tweet tokens to the most probable training city; the city's
//! gazetteer entry supplies (latitude, longitude) for the feature vector.
//! Add-one smoothing keeps every in-vocabulary word finite in log space, and
//! all scoring happens in log space to avoid underflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone)]
pub struct LIWModel {
    pub vocabulary: BTreeSet<String>,
    /// city → ln P(city).
    pub log_priors: BTreeMap<String, f64>,
    /// city → word → ln P(word | city), smoothed, defined for every
    /// vocabulary word.
    pub log_likelihoods: BTreeMap<String, BTreeMap<String, f64>>,
    /// city → (latitude, longitude) in degrees.
    pub gazetteer: BTreeMap<String, (f64, f64)>,
}

/// Train on (city, text) documents. Every training city must have a gazetteer
/// entry; the vocabulary must be nonempty.
pub fn train_liw(
    docs: &[(String, String)],
    vocabulary: &BTreeSet<String>,
    gazetteer: &BTreeMap<String, (f64, f64)>,
) -> Result<LIWModel> {
    if docs.is_empty() {
        return Err(Error::InvalidInput("no LIW training documents".into()));
    }
    if vocabulary.is_empty() {
        return Err(Error::InvalidInput("LIW vocabulary is empty".into()));
    }

    let mut doc_counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut word_counts: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut token_totals: BTreeMap<&str, usize> = BTreeMap::new();

    for (city, text_body) in docs {
        if !gazetteer.contains_key(city) {
            return Err(Error::UnknownId {
                kind: "city",
                id: city.clone(),
            });
        }
        *doc_counts.entry(city).or_default() += 1;
        let tokens = text::tokenize(text_body);
        for token in &tokens {
            if let Some(word) = vocabulary.get(token) {
                *word_counts
                    .entry(city)
                    .or_default()
                    .entry(word.as_str())
                    .or_default() += 1;
                *token_totals.entry(city).or_default() += 1;
            }
        }
    }

    let total_docs = docs.len() as f64;
    let vocab_size = vocabulary.len() as f64;
    let mut log_priors = BTreeMap::new();
    let mut log_likelihoods = BTreeMap::new();
    for (&city, &count) in &doc_counts {
        log_priors.insert(city.to_string(), (count as f64 / total_docs).ln());
        let in_city = word_counts.get(city);
        let denom = (*token_totals.get(city).unwrap_or(&0)) as f64 + vocab_size;
        let per_word: BTreeMap<String, f64> = vocabulary
            .iter()
            .map(|word| {
                let count = in_city
                    .and_then(|m| m.get(word.as_str()))
                    .copied()
                    .unwrap_or(0) as f64;
                (word.clone(), ((count + 1.0) / denom).ln())
            })
            .collect();
        log_likelihoods.insert(city.to_string(), per_word);
    }

    Ok(LIWModel {
        vocabulary: vocabulary.clone(),
        log_priors,
        log_likelihoods,
        gazetteer: gazetteer.clone(),
    })
}

impl LIWModel {
    /// Log-posterior (up to the shared evidence constant) of every city for
    /// a token stream. Tokens outside the vocabulary are ignored.
    pub fn log_posteriors(&self, tokens: &[String]) -> BTreeMap<&str, f64> {
        self.log_priors
            .iter()
            .map(|(city, &prior)| {
                let likelihoods = &self.log_likelihoods[city];
                let score: f64 = tokens
                    .iter()
                    .filter_map(|t| likelihoods.get(t))
                    .sum::<f64>()
                    + prior;
                (city.as_str(), score)
            })
            .collect()
    }

    /// Most probable city and its coordinates. Posterior ties break by
    /// ascending city name; a document with no in-vocabulary tokens falls
    /// back to the prior argmax.
    pub fn predict_location(&self, docs: &[&str]) -> (String, f64, f64) {
        let tokens: Vec<String> = text::tokenize_all(docs.iter().copied())
            .into_iter()
            .filter(|t| self.vocabulary.contains(t))
            .collect();
        let scores = if tokens.is_empty() {
            self.log_priors
                .iter()
                .map(|(c, &p)| (c.as_str(), p))
                .collect()
        } else {
            self.log_posteriors(&tokens)
        };
        let (city, _) = scores
            .into_iter()
            .fold(None::<(&str, f64)>, |best, (city, score)| match best {
                Some((_, best_score)) if score <= best_score => best,
                _ => Some((city, score)),
            })
            .expect("model has at least one city");
        let (lat, lon) = self.gazetteer[city];
        (city.to_string(), lat, lon)
    }
}

/// Every distinct token across the training texts, for use as the vocabulary
/// when no curated LIW list is supplied.
pub fn vocabulary_from_docs(docs: &[(String, String)]) -> BTreeSet<String> {
    let mut vocab = BTreeSet::new();
    for (_, body) in docs {
        vocab.extend(text::tokenize(body));
    }
    vocab
}

#[derive(Deserialize)]
struct RawLiwDoc {
    city: String,
    text: String,
}

/// Read `liw_training.jsonl`: one `{"city", "text"}` object per line.
pub fn load_liw_training(path: &Path) -> Result<Vec<(String, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawLiwDoc = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        docs.push((raw.city, raw.text));
    }
    Ok(docs)
}

/// Read `gazetteer.csv` with header `city,lat,lon`.
pub fn load_gazetteer(path: &Path) -> Result<BTreeMap<String, (f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;
    let mut out = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line_no = idx + 2;
        let record = record.map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let city = record
            .get(0)
            .ok_or_else(|| Error::parse(path, line_no, "missing city"))?
            .to_string();
        let lat: f64 = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(path, line_no, "bad latitude"))?;
        let lon: f64 = record
            .get(2)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(path, line_no, "bad longitude"))?;
        out.insert(city, (lat, lon));
    }
    Ok(out)
}
