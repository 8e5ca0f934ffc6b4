//! Linear lexicon predictors for age and Big-Five personality.
//!
//! Each lexicon is a word→weight table plus an intercept. A prediction is
//! `intercept + Σ weight(w) · relfreq(w)` over the user's combined tweet
//! tokens, where relfreq is the token's count divided by the total token
//! count. A user with no tweets scores exactly the intercept.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::text;

#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    pub intercept: f64,
    pub weights: BTreeMap<String, f64>,
}

pub const TRAIT_NAMES: [&str; 5] = [
    "extraversion",
    "agreeableness",
    "conscientiousness",
    "neuroticism",
    "openness",
];

/// One lexicon per Big-Five trait, in [`TRAIT_NAMES`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TraitLexica {
    pub lexica: [Lexicon; 5],
}

/// Parse a TSV lexicon: first line `INTERCEPT\t<value>`, then `word\tweight`
/// rows. Words are lowercased; weights must be finite.
pub fn load_lexicon(path: &Path) -> Result<Lexicon> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines().enumerate();

    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty lexicon file"))?;
    let intercept = match first.split_once('\t') {
        Some(("INTERCEPT", v)) => v
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::parse(path, 1, format!("bad intercept: {e}")))?,
        _ => {
            return Err(Error::parse(
                path,
                1,
                "first line must be INTERCEPT\\t<value>",
            ))
        }
    };

    let mut weights = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (word, weight) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, line_no, "expected word\\tweight"))?;
        let weight: f64 = weight
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, line_no, format!("bad weight: {e}")))?;
        if !weight.is_finite() {
            return Err(Error::parse(path, line_no, "non-finite weight"));
        }
        weights.insert(word.to_lowercase(), weight);
    }
    if weights.is_empty() {
        return Err(Error::parse(path, 1, "lexicon has no word rows"));
    }
    if !intercept.is_finite() {
        return Err(Error::parse(path, 1, "non-finite intercept"));
    }
    Ok(Lexicon { intercept, weights })
}

/// Load the five trait lexica from `<dir>/personality_<trait>.tsv`.
pub fn load_trait_lexica(dir: &Path) -> Result<TraitLexica> {
    let mut loaded = Vec::with_capacity(5);
    for name in TRAIT_NAMES {
        loaded.push(load_lexicon(&dir.join(format!("personality_{name}.tsv")))?);
    }
    Ok(TraitLexica {
        lexica: loaded.try_into().expect("exactly five lexica"),
    })
}

impl Lexicon {
    /// Score a token stream: intercept plus the weighted relative frequencies
    /// of lexicon words.
    pub fn apply(&self, tokens: &[String]) -> f64 {
        if tokens.is_empty() {
            return self.intercept;
        }
        let total = tokens.len() as f64;
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for token in tokens {
            *counts.entry(token.as_str()).or_default() += 1;
        }
        let mut score = self.intercept;
        for (token, count) in counts {
            if let Some(weight) = self.weights.get(token) {
                score += weight * (count as f64 / total);
            }
        }
        score
    }
}

/// Predicted age in years from a user's tweets.
pub fn predict_age(docs: &[&str], lexicon: &Lexicon) -> f64 {
    lexicon.apply(&text::tokenize_all(docs.iter().copied()))
}

/// Predicted Big-Five trait scores, in [`TRAIT_NAMES`] order.
pub fn predict_personality(docs: &[&str], lexica: &TraitLexica) -> [f64; 5] {
    let tokens = text::tokenize_all(docs.iter().copied());
    std::array::from_fn(|i| lexica.lexica[i].apply(&tokens))
}
