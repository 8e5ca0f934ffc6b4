//! Corpus data model and JSONL ingestion.
//!
//! A corpus bundles four record kinds loaded from line-delimited JSON files:
//! users, labeled news items, sharing events, and historical tweets. Loading
//! enforces referential integrity (a share or tweet naming an unknown id is a
//! hard error) and collapses duplicate (user, news) share pairs so a user
//! sharing the same story twice counts it once. After construction the corpus
//! is immutable; every downstream stage only reads it.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Fake,
    Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub user_id: String,
    pub verified: bool,
    pub registered_at: NaiveDate,
    pub status_count: u64,
    pub favor_count: u64,
    pub follower_count: u64,
    pub following_count: u64,
    /// Hashtags and interest keywords, lowercased on load. Repeats are kept:
    /// the political-bias score is multiset-aware.
    pub interest_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsItem {
    pub news_id: String,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SharingEvent {
    pub user_id: String,
    pub news_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetDoc {
    pub user_id: String,
    pub text: String,
}

/// Immutable snapshot of one dataset.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub users: BTreeMap<String, User>,
    pub news: BTreeMap<String, NewsItem>,
    /// Deduplicated (user, news) pairs in first-occurrence order.
    pub shares: Vec<SharingEvent>,
    pub tweets: Vec<TweetDoc>,
    /// All register-age arithmetic is relative to this date, never to "now".
    pub reference_date: NaiveDate,
}

/// Per-user counts of distinct fake and real news shared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharingCounts {
    pub n_fake: u64,
    pub n_real: u64,
}

impl SharingCounts {
    pub fn total(&self) -> u64 {
        self.n_fake + self.n_real
    }
}

/// What `load_corpus` saw while reading, for operator visibility.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LoadStats {
    pub user_count: usize,
    pub news_count: usize,
    pub share_count: usize,
    pub tweet_count: usize,
    pub duplicate_shares_dropped: usize,
    pub unknown_key_warnings: usize,
}

#[derive(Deserialize)]
struct RawUser {
    user_id: String,
    verified: bool,
    registered_at: NaiveDate,
    status_count: u64,
    favor_count: u64,
    follower_count: u64,
    following_count: u64,
    #[serde(default)]
    interests: Vec<String>,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawNews {
    news_id: String,
    label: Label,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawShare {
    user_id: String,
    news_id: String,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawTweet {
    user_id: String,
    text: String,
    #[serde(flatten)]
    extra: serde_json::Map<String, serde_json::Value>,
}

fn read_jsonl<T, F>(path: &Path, mut per_line: F) -> Result<()>
where
    T: serde::de::DeserializeOwned,
    F: FnMut(T, usize) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        per_line(record, line_no)?;
    }
    Ok(())
}

/// Load and validate a corpus from four JSONL files.
///
/// Unknown JSON keys are tolerated and tallied in
/// [`LoadStats::unknown_key_warnings`]. Duplicate (user, news) share pairs
/// collapse to the first occurrence. Any share or tweet referencing an id
/// missing from the user or news file fails the whole load.
pub fn load_corpus(
    user_path: &Path,
    news_path: &Path,
    shares_path: &Path,
    tweets_path: &Path,
    reference_date: NaiveDate,
) -> Result<(Corpus, LoadStats)> {
    let mut stats = LoadStats::default();

    let mut users: BTreeMap<String, User> = BTreeMap::new();
    read_jsonl::<RawUser, _>(user_path, |raw, line_no| {
        stats.unknown_key_warnings += raw.extra.len();
        if raw.user_id.is_empty() {
            return Err(Error::parse(user_path, line_no, "empty user_id"));
        }
        if raw.registered_at > reference_date {
            return Err(Error::parse(
                user_path,
                line_no,
                format!(
                    "registered_at {} is after reference_date {}",
                    raw.registered_at, reference_date
                ),
            ));
        }
        let user = User {
            user_id: raw.user_id.clone(),
            verified: raw.verified,
            registered_at: raw.registered_at,
            status_count: raw.status_count,
            favor_count: raw.favor_count,
            follower_count: raw.follower_count,
            following_count: raw.following_count,
            interest_tokens: raw.interests.iter().map(|s| s.to_lowercase()).collect(),
        };
        if users.insert(raw.user_id.clone(), user).is_some() {
            return Err(Error::parse(
                user_path,
                line_no,
                format!("duplicate user_id {}", raw.user_id),
            ));
        }
        Ok(())
    })?;

    let mut news: BTreeMap<String, NewsItem> = BTreeMap::new();
    read_jsonl::<RawNews, _>(news_path, |raw, line_no| {
        stats.unknown_key_warnings += raw.extra.len();
        if raw.news_id.is_empty() {
            return Err(Error::parse(news_path, line_no, "empty news_id"));
        }
        let item = NewsItem {
            news_id: raw.news_id.clone(),
            label: raw.label,
        };
        if news.insert(raw.news_id.clone(), item).is_some() {
            return Err(Error::parse(
                news_path,
                line_no,
                format!("duplicate news_id {}", raw.news_id),
            ));
        }
        Ok(())
    })?;

    let mut shares = Vec::new();
    let mut seen_pairs: HashSet<(String, String)> = HashSet::new();
    read_jsonl::<RawShare, _>(shares_path, |raw, _| {
        stats.unknown_key_warnings += raw.extra.len();
        if !users.contains_key(&raw.user_id) {
            return Err(Error::UnknownId {
                kind: "user_id",
                id: raw.user_id,
            });
        }
        if !news.contains_key(&raw.news_id) {
            return Err(Error::UnknownId {
                kind: "news_id",
                id: raw.news_id,
            });
        }
        if seen_pairs.insert((raw.user_id.clone(), raw.news_id.clone())) {
            shares.push(SharingEvent {
                user_id: raw.user_id,
                news_id: raw.news_id,
            });
        } else {
            stats.duplicate_shares_dropped += 1;
        }
        Ok(())
    })?;

    let mut tweets = Vec::new();
    read_jsonl::<RawTweet, _>(tweets_path, |raw, _| {
        stats.unknown_key_warnings += raw.extra.len();
        if !users.contains_key(&raw.user_id) {
            return Err(Error::UnknownId {
                kind: "user_id",
                id: raw.user_id,
            });
        }
        tweets.push(TweetDoc {
            user_id: raw.user_id,
            text: raw.text,
        });
        Ok(())
    })?;

    stats.user_count = users.len();
    stats.news_count = news.len();
    stats.share_count = shares.len();
    stats.tweet_count = tweets.len();

    Ok((
        Corpus {
            users,
            news,
            shares,
            tweets,
            reference_date,
        },
        stats,
    ))
}

impl Corpus {
    /// Count the distinct fake- and real-labeled news `user_id` shared.
    pub fn sharing_counts(&self, user_id: &str) -> Result<SharingCounts> {
        if !self.users.contains_key(user_id) {
            return Err(Error::UnknownId {
                kind: "user_id",
                id: user_id.to_string(),
            });
        }
        let mut counts = SharingCounts { n_fake: 0, n_real: 0 };
        for share in &self.shares {
            if share.user_id == user_id {
                match self.news[&share.news_id].label {
                    Label::Fake => counts.n_fake += 1,
                    Label::Real => counts.n_real += 1,
                }
            }
        }
        Ok(counts)
    }

    /// Sharing counts for every user that appears in at least one share,
    /// computed in one pass.
    pub fn sharing_counts_all(&self) -> BTreeMap<&str, SharingCounts> {
        let mut out: BTreeMap<&str, SharingCounts> = BTreeMap::new();
        for share in &self.shares {
            let entry = out
                .entry(share.user_id.as_str())
                .or_insert(SharingCounts { n_fake: 0, n_real: 0 });
            match self.news[&share.news_id].label {
                Label::Fake => entry.n_fake += 1,
                Label::Real => entry.n_real += 1,
            }
        }
        out
    }

    /// Tweets grouped by user, preserving file order within each user.
    pub fn tweets_by_user(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut out: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for tweet in &self.tweets {
            out.entry(tweet.user_id.as_str())
                .or_default()
                .push(tweet.text.as_str());
        }
        out
    }

    /// Verify referential integrity, for re-checking after a transform.
    pub fn validate(&self) -> Result<()> {
        for share in &self.shares {
            if !self.users.contains_key(&share.user_id) {
                return Err(Error::UnknownId {
                    kind: "user_id",
                    id: share.user_id.clone(),
                });
            }
            if !self.news.contains_key(&share.news_id) {
                return Err(Error::UnknownId {
                    kind: "news_id",
                    id: share.news_id.clone(),
                });
            }
        }
        for tweet in &self.tweets {
            if !self.users.contains_key(&tweet.user_id) {
                return Err(Error::UnknownId {
                    kind: "user_id",
                    id: tweet.user_id.clone(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn ref_date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 6, 1).unwrap()
    }

    fn user_line(id: &str) -> String {
        format!(
            r#"{{"user_id":"{id}","verified":false,"registered_at":"2019-01-01","status_count":10,"favor_count":5,"follower_count":100,"following_count":50,"interests":["News"]}}"#
        )
    }

    fn load_from(
        dir: &Path,
        users: &str,
        news: &str,
        shares: &str,
        tweets: &str,
    ) -> Result<(Corpus, LoadStats)> {
        let u = write_file(dir, "users.jsonl", users);
        let n = write_file(dir, "news.jsonl", news);
        let s = write_file(dir, "shares.jsonl", shares);
        let t = write_file(dir, "tweets.jsonl", tweets);
        load_corpus(&u, &n, &s, &t, ref_date())
    }

    #[test]
    fn duplicate_share_pairs_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let users = format!("{}\n{}\n", user_line("a"), user_line("b"));
        let news = concat!(
            r#"{"news_id":"n1","label":"fake"}"#, "\n",
            r#"{"news_id":"n2","label":"real"}"#, "\n",
        );
        let shares = concat!(
            r#"{"user_id":"a","news_id":"n1"}"#, "\n",
            r#"{"user_id":"a","news_id":"n1"}"#, "\n",
            r#"{"user_id":"b","news_id":"n2"}"#, "\n",
        );
        let (corpus, stats) = load_from(dir.path(), &users, news, shares, "").unwrap();
        assert_eq!(corpus.shares.len(), 2);
        assert_eq!(stats.duplicate_shares_dropped, 1);
        assert_eq!(stats.share_count, 2);
    }

    #[test]
    fn dangling_news_reference_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let users = user_line("a");
        let news = r#"{"news_id":"n1","label":"fake"}"#;
        let shares = r#"{"user_id":"a","news_id":"x9"}"#;
        let err = load_from(dir.path(), &users, news, shares, "").unwrap_err();
        assert_eq!(err.to_string(), "unknown news_id x9");
    }

    #[test]
    fn malformed_line_names_file_and_line() {
        let dir = tempfile::tempdir().unwrap();
        let users = format!("{}\nnot json\n", user_line("a"));
        let err = load_from(dir.path(), &users, "", "", "").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("users.jsonl:2"), "got: {msg}");
    }

    #[test]
    fn unknown_keys_are_counted_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let users = r#"{"user_id":"a","verified":true,"registered_at":"2019-01-01","status_count":1,"favor_count":1,"follower_count":1,"following_count":1,"interests":[],"mystery":1,"other":2}"#;
        let (_, stats) = load_from(dir.path(), users, "", "", "").unwrap();
        assert_eq!(stats.unknown_key_warnings, 2);
    }

    #[test]
    fn registration_after_reference_date_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let users = r#"{"user_id":"a","verified":false,"registered_at":"2021-01-01","status_count":0,"favor_count":0,"follower_count":0,"following_count":0}"#;
        let err = load_from(dir.path(), users, "", "", "").unwrap_err();
        assert!(err.to_string().contains("after reference_date"));
    }

    #[test]
    fn sharing_counts_direct_case() {
        let dir = tempfile::tempdir().unwrap();
        let users = user_line("a");
        let news = concat!(
            r#"{"news_id":"f1","label":"fake"}"#, "\n",
            r#"{"news_id":"r1","label":"real"}"#, "\n",
            r#"{"news_id":"r2","label":"real"}"#, "\n",
        );
        let shares = concat!(
            r#"{"user_id":"a","news_id":"f1"}"#, "\n",
            r#"{"user_id":"a","news_id":"r1"}"#, "\n",
            r#"{"user_id":"a","news_id":"r2"}"#, "\n",
        );
        let (corpus, _) = load_from(dir.path(), &users, news, shares, "").unwrap();
        let counts = corpus.sharing_counts("a").unwrap();
        assert_eq!(counts, SharingCounts { n_fake: 1, n_real: 2 });
    }

    #[test]
    fn sharing_counts_no_shares_is_zero() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, _) = load_from(dir.path(), &user_line("a"), "", "", "").unwrap();
        let counts = corpus.sharing_counts("a").unwrap();
        assert_eq!(counts, SharingCounts { n_fake: 0, n_real: 0 });
    }

    #[test]
    fn sharing_counts_unknown_user_errors() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, _) = load_from(dir.path(), &user_line("a"), "", "", "").unwrap();
        assert!(corpus.sharing_counts("ghost").is_err());
    }

    #[test]
    fn loading_twice_yields_identical_corpora() {
        let dir = tempfile::tempdir().unwrap();
        let users = format!("{}\n{}\n", user_line("a"), user_line("b"));
        let news = r#"{"news_id":"n1","label":"fake"}"#;
        let shares = r#"{"user_id":"b","news_id":"n1"}"#;
        let tweets = r#"{"user_id":"a","text":"hello world"}"#;
        let (c1, _) = load_from(dir.path(), &users, news, shares, tweets).unwrap();
        let (c2, _) = load_from(dir.path(), &users, news, shares, tweets).unwrap();
        assert_eq!(c1.users, c2.users);
        assert_eq!(c1.news, c2.news);
        assert_eq!(c1.shares, c2.shares);
        assert_eq!(c1.tweets, c2.tweets);
    }

    #[test]
    fn interests_lowercased_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let (corpus, _) = load_from(dir.path(), &user_line("a"), "", "", "").unwrap();
        assert_eq!(corpus.users["a"].interest_tokens, vec!["news"]);
    }
}
