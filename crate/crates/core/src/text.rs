//! Shared tokenizer for all text-derived features.
//!
//! One tokenization rule is used everywhere (age, personality, location) so
//! the lexicon-based predictors see identical token streams: lowercase the
//! input, split on any non-alphanumeric character, drop empty pieces.

/// Tokenize `text` into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
        .collect()
}

/// Tokenize a set of documents into one combined token stream.
pub fn tokenize_all<'a, I: IntoIterator<Item = &'a str>>(docs: I) -> Vec<String> {
    let mut out = Vec::new();
    for doc in docs {
        out.extend(tokenize(doc));
    }
    out
}
