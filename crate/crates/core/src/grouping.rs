//! Representative group construction from sharing behavior.
//!
//! Two measures pick the users most associated with fake or real news: an
//! absolute Top-K over the pure sharers, and the fake news ratio FR over the
//! mixed sharers. The union on each side is then equalized by a seeded
//! uniform downsample of the larger set so both groups have the same size.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, SharingCounts};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroupingConfig {
    /// How many pure sharers each side takes, before the FR bands widen it.
    pub k: usize,
    /// FR band half-width: mixed users with FR ≤ t join the real side and
    /// FR ≥ 1−t the fake side. Must stay below 0.5 so the bands cannot meet.
    pub t: f64,
    pub sample_seed: u64,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            k: 10_000,
            t: 0.2,
            sample_seed: 0,
        }
    }
}

impl GroupingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be ≥ 1".into()));
        }
        if !(0.0..0.5).contains(&self.t) {
            return Err(Error::InvalidConfig(format!(
                "t must lie in [0, 0.5), got {}",
                self.t
            )));
        }
        Ok(())
    }
}

/// Three-way split of all sharers by the labels they shared.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserPartition {
    pub only_fake: BTreeSet<String>,
    pub only_real: BTreeSet<String>,
    pub fake_and_real: BTreeSet<String>,
}

/// Why a user ended up in their group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    TopKOnlyFake,
    TopKOnlyReal,
    /// Mixed sharer with FR ≥ 1−t, assigned to the fake side.
    HighFR,
    /// Mixed sharer with FR ≤ t, assigned to the real side.
    LowFR,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSelection {
    pub u_fake: BTreeSet<String>,
    pub u_real: BTreeSet<String>,
    pub provenance: BTreeMap<String, Provenance>,
}

/// Fraction of a user's shared news that is fake: n_fake / (n_fake + n_real).
pub fn fr_score(counts: SharingCounts) -> Result<f64> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::InvalidInput("FR undefined for non-sharer".into()));
    }
    Ok(counts.n_fake as f64 / total as f64)
}

/// Partition every sharer into only-fake, only-real, or mixed. Users with no
/// shares are excluded.
pub fn partition_users(corpus: &Corpus) -> UserPartition {
    let mut partition = UserPartition::default();
    for (user_id, counts) in corpus.sharing_counts_all() {
        let target = match (counts.n_fake > 0, counts.n_real > 0) {
            (true, false) => &mut partition.only_fake,
            (false, true) => &mut partition.only_real,
            (true, true) => &mut partition.fake_and_real,
            (false, false) => unreachable!("sharing_counts_all only yields sharers"),
        };
        target.insert(user_id.to_string());
    }
    partition
}

/// The `k` users in `subset` sharing the most news of `label`, sorted by that
/// count descending with ties broken by ascending user_id.
pub fn top_k_absolute(
    corpus: &Corpus,
    subset: &BTreeSet<String>,
    label: Label,
    k: usize,
) -> Vec<String> {
    let all_counts = corpus.sharing_counts_all();
    let mut ranked: Vec<(&String, u64)> = subset
        .iter()
        .map(|id| {
            let counts = all_counts
                .get(id.as_str())
                .copied()
                .unwrap_or(SharingCounts { n_fake: 0, n_real: 0 });
            let n = match label {
                Label::Fake => counts.n_fake,
                Label::Real => counts.n_real,
            };
            (id, n)
        })
        .collect();
    ranked.sort_by(|(id_a, n_a), (id_b, n_b)| n_b.cmp(n_a).then_with(|| id_a.cmp(id_b)));
    ranked.truncate(k);
    ranked.into_iter().map(|(id, _)| id.clone()).collect()
}

/// Build U^(f) and U^(r): Top-K pure sharers plus FR-band mixed sharers, then
/// downsample the larger side to the smaller side's size with `sample_seed`.
pub fn select_groups(corpus: &Corpus, config: &GroupingConfig) -> Result<GroupSelection> {
    config.validate()?;
    let partition = partition_users(corpus);
    if partition.only_fake.is_empty() {
        return Err(Error::InvalidInput(
            "no users share only fake news; cannot form groups".into(),
        ));
    }
    if partition.only_real.is_empty() {
        return Err(Error::InvalidInput(
            "no users share only real news; cannot form groups".into(),
        ));
    }

    let mut provenance: BTreeMap<String, Provenance> = BTreeMap::new();
    let mut u_fake: BTreeSet<String> = BTreeSet::new();
    let mut u_real: BTreeSet<String> = BTreeSet::new();

    for id in top_k_absolute(corpus, &partition.only_fake, Label::Fake, config.k) {
        provenance.insert(id.clone(), Provenance::TopKOnlyFake);
        u_fake.insert(id);
    }
    for id in top_k_absolute(corpus, &partition.only_real, Label::Real, config.k) {
        provenance.insert(id.clone(), Provenance::TopKOnlyReal);
        u_real.insert(id);
    }

    let all_counts = corpus.sharing_counts_all();
    for id in &partition.fake_and_real {
        let fr = fr_score(all_counts[id.as_str()])?;
        if fr >= 1.0 - config.t {
            provenance.insert(id.clone(), Provenance::HighFR);
            u_fake.insert(id.clone());
        } else if fr <= config.t {
            provenance.insert(id.clone(), Provenance::LowFR);
            u_real.insert(id.clone());
        }
    }

    let target = u_fake.len().min(u_real.len());
    let u_fake = downsample(u_fake, target, config.sample_seed);
    let u_real = downsample(u_real, target, config.sample_seed.wrapping_add(1));
    provenance.retain(|id, _| u_fake.contains(id) || u_real.contains(id));

    Ok(GroupSelection {
        u_fake,
        u_real,
        provenance,
    })
}

fn downsample(set: BTreeSet<String>, target: usize, seed: u64) -> BTreeSet<String> {
    if set.len() <= target {
        return set;
    }
    let ordered: Vec<String> = set.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, ordered.len(), target)
        .into_iter()
        .map(|i| ordered[i].clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{NewsItem, SharingEvent, User};
    use chrono::NaiveDate;

    fn user(id: &str) -> User {
        User {
            user_id: id.to_string(),
            verified: false,
            registered_at: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            status_count: 0,
            favor_count: 0,
            follower_count: 0,
            following_count: 0,
            interest_tokens: vec![],
        }
    }

    /// Corpus with `n_fake_news` fake and `n_real_news` real items and the
    /// given (user, news_index, label) share triples.
    fn corpus(users: &[&str], shares: &[(&str, usize, Label)]) -> Corpus {
        let mut news = BTreeMap::new();
        for i in 0..50 {
            news.insert(
                format!("f{i}"),
                NewsItem {
                    news_id: format!("f{i}"),
                    label: Label::Fake,
                },
            );
            news.insert(
                format!("r{i}"),
                NewsItem {
                    news_id: format!("r{i}"),
                    label: Label::Real,
                },
            );
        }
        Corpus {
            users: users.iter().map(|id| (id.to_string(), user(id))).collect(),
            news,
            shares: shares
                .iter()
                .map(|(u, i, label)| SharingEvent {
                    user_id: u.to_string(),
                    news_id: match label {
                        Label::Fake => format!("f{i}"),
                        Label::Real => format!("r{i}"),
                    },
                })
                .collect(),
            tweets: vec![],
            reference_date: NaiveDate::from_ymd_opt(2020, 6, 1).unwrap(),
        }
    }

    #[test]
    fn fr_formula() {
        assert_eq!(fr_score(SharingCounts { n_fake: 3, n_real: 1 }).unwrap(), 0.75);
        assert_eq!(fr_score(SharingCounts { n_fake: 0, n_real: 5 }).unwrap(), 0.0);
        assert_eq!(fr_score(SharingCounts { n_fake: 2, n_real: 0 }).unwrap(), 1.0);
    }

    #[test]
    fn fr_of_non_sharer_errors() {
        let err = fr_score(SharingCounts { n_fake: 0, n_real: 0 }).unwrap_err();
        assert_eq!(err.to_string(), "FR undefined for non-sharer");
    }

    #[test]
    fn partition_buckets() {
        let c = corpus(
            &["pure_fake", "pure_real", "mixed", "silent"],
            &[
                ("pure_fake", 0, Label::Fake),
                ("pure_real", 0, Label::Real),
                ("mixed", 1, Label::Fake),
                ("mixed", 1, Label::Real),
            ],
        );
        let p = partition_users(&c);
        assert!(p.only_fake.contains("pure_fake"));
        assert!(p.only_real.contains("pure_real"));
        assert!(p.fake_and_real.contains("mixed"));
        let in_any = |id: &str| {
            p.only_fake.contains(id) || p.only_real.contains(id) || p.fake_and_real.contains(id)
        };
        assert!(!in_any("silent"));
    }

    #[test]
    fn top_k_breaks_ties_by_ascending_id() {
        // a shares 5 fake, b shares 3, c shares 5.
        let mut shares = Vec::new();
        for i in 0..5 {
            shares.push(("a", i, Label::Fake));
            shares.push(("c", i, Label::Fake));
        }
        for i in 0..3 {
            shares.push(("b", i, Label::Fake));
        }
        let c = corpus(&["a", "b", "c"], &shares);
        let subset: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let top = top_k_absolute(&c, &subset, Label::Fake, 2);
        assert_eq!(top, vec!["a".to_string(), "c".to_string()]);
    }

    #[test]
    fn top_k_larger_than_subset_returns_all() {
        let c = corpus(&["a", "b"], &[("a", 0, Label::Fake), ("b", 1, Label::Fake)]);
        let subset: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(top_k_absolute(&c, &subset, Label::Fake, 10).len(), 2);
    }

    #[test]
    fn high_fr_mixed_user_joins_fake_side() {
        // mixed: 9 fake + 1 real → FR 0.9 ≥ 0.8.
        let mut shares = vec![
            ("pf", 0, Label::Fake),
            ("pr", 0, Label::Real),
            ("mixed", 20, Label::Real),
        ];
        for i in 0..9 {
            shares.push(("mixed", i, Label::Fake));
        }
        let c = corpus(&["pf", "pr", "mixed"], &shares);
        let sel = select_groups(
            &c,
            &GroupingConfig {
                k: 10,
                t: 0.2,
                sample_seed: 7,
            },
        )
        .unwrap();
        assert_eq!(sel.provenance.get("mixed"), Some(&Provenance::HighFR));
        assert!(sel.u_fake.contains("mixed"));
    }

    #[test]
    fn groups_are_disjoint_and_equal_sized() {
        let mut shares = Vec::new();
        let users: Vec<String> = (0..20).map(|i| format!("u{i:02}")).collect();
        for (i, u) in users.iter().enumerate() {
            let label = if i < 13 { Label::Fake } else { Label::Real };
            shares.push((u.as_str(), i % 7, label));
        }
        let refs: Vec<&str> = users.iter().map(|s| s.as_str()).collect();
        let c = corpus(&refs, &shares);
        let sel = select_groups(&c, &GroupingConfig::default()).unwrap();
        assert_eq!(sel.u_fake.len(), sel.u_real.len());
        assert!(sel.u_fake.is_disjoint(&sel.u_real));
    }

    #[test]
    fn selection_is_seed_deterministic() {
        let mut shares = Vec::new();
        let users: Vec<String> = (0..30).map(|i| format!("u{i:02}")).collect();
        for (i, u) in users.iter().enumerate() {
            let label = if i % 3 == 0 { Label::Real } else { Label::Fake };
            shares.push((u.as_str(), i % 11, label));
        }
        let refs: Vec<&str> = users.iter().map(|s| s.as_str()).collect();
        let c = corpus(&refs, &shares);
        let cfg = GroupingConfig {
            k: 5,
            t: 0.2,
            sample_seed: 42,
        };
        let a = select_groups(&c, &cfg).unwrap();
        let b = select_groups(&c, &cfg).unwrap();
        assert_eq!(a.u_fake, b.u_fake);
        assert_eq!(a.u_real, b.u_real);
        assert_eq!(a.provenance, b.provenance);
    }

    #[test]
    fn empty_pure_side_errors() {
        let c = corpus(&["a"], &[("a", 0, Label::Fake)]);
        assert!(select_groups(&c, &GroupingConfig::default()).is_err());
    }

    #[test]
    fn invalid_t_rejected() {
        let cfg = GroupingConfig {
            k: 10,
            t: 0.5,
            sample_seed: 0,
        };
        assert!(cfg.validate().is_err());
    }
}
