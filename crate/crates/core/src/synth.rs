//! Synthetic corpus generation with controllable group structure.
//!
//! Two latent user populations (fake-prone and real-prone) differ in their
//! profile statistics, vocabulary, and sharing preferences. One knob,
//! `effect_size`, scales every between-population difference: at 0 the
//! populations are statistically identical and only sharing preference
//! remains, so downstream comparisons should find nothing; at 1 and above
//! every feature channel separates the groups clearly.
//!
//! Output is a complete input set for the pipeline: the four corpus JSONL
//! files, bot scores, image-class distributions, the age and personality
//! lexica, political seed words, location training documents, a gazetteer,
//! and a ground-truth file naming each user's population. Generation is a
//! pure function of the config; two runs produce byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};

const NEUTRAL_TOKENS: &[&str] = &[
    "the", "and", "today", "just", "really", "time", "day", "new", "people", "news",
];
const YOUNG_TOKENS: &[&str] = &["campus", "homework", "gaming", "dorm", "meme", "finals"];
const OLD_TOKENS: &[&str] = &[
    "mortgage",
    "retirement",
    "grandkids",
    "pension",
    "garden",
    "veteran",
];
const LEFT_TOKENS: &[&str] = &[
    "unions",
    "climate",
    "equity",
    "welfare",
    "progressive",
    "solidarity",
];
const RIGHT_TOKENS: &[&str] = &[
    "tariffs", "patriot", "borders", "heritage", "founders", "liberty",
];

/// High and low vocabulary per trait, in the canonical trait order
/// (extraversion, agreeableness, conscientiousness, neuroticism, openness).
const TRAIT_HIGH: [&[&str]; 5] = [
    &["party", "crowd", "friends"],
    &["kindness", "sharing", "thanks"],
    &["schedule", "checklist", "deadline"],
    &["worry", "stress", "panic"],
    &["poetry", "galaxies", "philosophy"],
];
const TRAIT_LOW: [&[&str]; 5] = [
    &["quiet", "solitude", "alone"],
    &["argue", "blunt", "rivals"],
    &["improvise", "whatever", "later"],
    &["calm", "steady", "serene"],
    &["routine", "familiar", "tradition"],
];

/// Which traits run high in the fake-prone population; the real-prone
/// population mirrors them.
const FAKE_HIGH_TRAITS: [bool; 5] = [true, false, false, true, false];

/// (name, latitude, longitude, local vocabulary), alphabetical by name.
const CITIES: [(&str, f64, f64, &[&str]); 4] = [
    ("hillcrest", 39.74, -104.99, &["foothills", "ridgeline", "aspen"]),
    ("lakeside", 41.88, -87.63, &["harbor", "pier", "ferry"]),
    ("rivertown", 29.76, -95.36, &["bayou", "levee", "delta"]),
    ("springfield", 39.78, -89.65, &["statehouse", "cornfield", "prairie"]),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_news: usize,
    /// Distinct (user, news) share pairs to draw.
    pub n_shares: usize,
    pub tweets_per_user: usize,
    pub tokens_per_tweet: usize,
    pub fake_news_fraction: f64,
    pub bot_fraction: f64,
    /// Probability that a user's share lands on their population's news
    /// label rather than the opposite one.
    pub preference_strength: f64,
    /// Scales every between-population difference; 0 is the null corpus.
    pub effect_size: f64,
    pub n_image_classes: usize,
    pub liw_docs_per_city: usize,
    pub reference_date: NaiveDate,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 2000,
            n_news: 1000,
            n_shares: 8000,
            tweets_per_user: 6,
            tokens_per_tweet: 12,
            fake_news_fraction: 0.5,
            bot_fraction: 0.1,
            preference_strength: 0.9,
            effect_size: 1.0,
            n_image_classes: 1000,
            liw_docs_per_city: 30,
            reference_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users < 2 {
            return bad(format!("n_users must be at least 2, got {}", self.n_users));
        }
        if self.n_news < 2 {
            return bad(format!("n_news must be at least 2, got {}", self.n_news));
        }
        if !(self.fake_news_fraction > 0.0 && self.fake_news_fraction < 1.0) {
            return bad(format!(
                "fake_news_fraction must lie strictly between 0 and 1, got {}",
                self.fake_news_fraction
            ));
        }
        if self.n_shares == 0 {
            return bad("n_shares must be positive".into());
        }
        if self.n_shares > self.n_users * self.n_news {
            return bad(format!(
                "n_shares {} exceeds the {} distinct (user, news) pairs available",
                self.n_shares,
                self.n_users * self.n_news
            ));
        }
        if !(0.0..1.0).contains(&self.bot_fraction) {
            return bad(format!(
                "bot_fraction must lie in [0, 1), got {}",
                self.bot_fraction
            ));
        }
        if !(0.5..=1.0).contains(&self.preference_strength) {
            return bad(format!(
                "preference_strength must lie in [0.5, 1], got {}",
                self.preference_strength
            ));
        }
        if !self.effect_size.is_finite() || self.effect_size < 0.0 {
            return bad(format!(
                "effect_size must be finite and non-negative, got {}",
                self.effect_size
            ));
        }
        if self.tweets_per_user == 0 || self.tokens_per_tweet == 0 {
            return bad("tweets_per_user and tokens_per_tweet must be positive".into());
        }
        if self.n_image_classes < 2 {
            return bad(format!(
                "n_image_classes must be at least 2, got {}",
                self.n_image_classes
            ));
        }
        if self.liw_docs_per_city == 0 {
            return bad("liw_docs_per_city must be positive".into());
        }
        Ok(())
    }

    fn n_fake_news(&self) -> usize {
        ((self.fake_news_fraction * self.n_news as f64).round() as usize)
            .clamp(1, self.n_news - 1)
    }
}

/// Paths of everything one generation run wrote.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthArtifacts {
    pub users: PathBuf,
    pub news: PathBuf,
    pub shares: PathBuf,
    pub tweets: PathBuf,
    pub bot_scores: PathBuf,
    pub image_classes: PathBuf,
    pub seeds: PathBuf,
    pub liw_training: PathBuf,
    pub gazetteer: PathBuf,
    pub lexica_dir: PathBuf,
    pub age_lexicon: PathBuf,
    pub ground_truth: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Population {
    FakeProne,
    RealProne,
}

struct UserDraft {
    user_id: String,
    population: Population,
    city: usize,
    verified: bool,
    registered_at: NaiveDate,
    status_count: u64,
    favor_count: u64,
    follower_count: u64,
    following_count: u64,
    interests: Vec<String>,
}

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.random_range(0..pool.len())]
}

/// Rounded log-normal count: exp of a normal sample, clamped to a sane range.
fn lognormal_count(rng: &mut ChaCha8Rng, mu: f64, sigma: f64) -> u64 {
    let normal = Normal::new(mu, sigma).unwrap();
    let v = normal.sample(rng).exp().round();
    v.clamp(0.0, 50_000_000.0) as u64
}

fn id_width(n: usize) -> usize {
    n.max(1).to_string().len()
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, content).map_err(|e| Error::io(path, e))
}

/// Generate a full input set under `out_dir`.
pub fn generate(config: &SynthConfig, out_dir: &Path) -> Result<SynthArtifacts> {
    config.validate()?;
    let e = config.effect_size;
    // Token mixing saturates at effect 1; the count channels keep scaling.
    let e_tok = e.clamp(0.0, 1.0);

    // One sub-stream per section, drawn in fixed order, so adding content to
    // one section never shifts another's randomness.
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut users_rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut tweets_rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut images_rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut shares_rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut bots_rng = ChaCha8Rng::seed_from_u64(master.random());
    let mut liw_rng = ChaCha8Rng::seed_from_u64(master.random());

    let n_fake_prone = config.n_users / 2;
    let uw = id_width(config.n_users);
    let shift = 0.25 * e;

    let mut drafts = Vec::with_capacity(config.n_users);
    for i in 0..config.n_users {
        let population = if i < n_fake_prone {
            Population::FakeProne
        } else {
            Population::RealProne
        };
        let dir = match population {
            Population::FakeProne => 1.0,
            Population::RealProne => -1.0,
        };

        // Fake-prone accounts register earlier, favor more and post less,
        // follow many and are followed by few, and are rarely verified.
        let register_days = lognormal_count(&mut users_rng, 6.7 + dir * shift, 0.5)
            .clamp(30, 5000);
        let status_count = lognormal_count(&mut users_rng, 6.0 - dir * shift, 0.6);
        let favor_count = lognormal_count(&mut users_rng, 5.5 + dir * shift, 0.6);
        let follower_count = lognormal_count(&mut users_rng, 5.0 - dir * 1.2 * shift, 0.6);
        let following_count = lognormal_count(&mut users_rng, 5.8 + dir * 1.2 * shift, 0.6);
        let p_verified = (0.08 - dir * 0.04 * e).clamp(0.002, 0.98);
        let verified = users_rng.random::<f64>() < p_verified;

        let registered_at = config
            .reference_date
            .checked_sub_days(Days::new(register_days))
            .ok_or_else(|| Error::Invariant("registration date underflow".into()))?;

        // City skew: at effect 1 the populations live in disjoint city pairs.
        let skew = (0.25 * e_tok).min(0.25);
        let city_weights = match population {
            Population::FakeProne => [0.25 + skew, 0.25 + skew, 0.25 - skew, 0.25 - skew],
            Population::RealProne => [0.25 - skew, 0.25 - skew, 0.25 + skew, 0.25 + skew],
        };
        let mut city = 0;
        let mut roll = users_rng.random::<f64>();
        for (c, w) in city_weights.iter().enumerate() {
            if roll < *w || c == city_weights.len() - 1 {
                city = c;
                break;
            }
            roll -= w;
        }

        // Interests carry the political signal.
        let bias_pool = match population {
            Population::FakeProne => RIGHT_TOKENS,
            Population::RealProne => LEFT_TOKENS,
        };
        let p_bias = 0.5 * e_tok;
        let interests: Vec<String> = (0..8)
            .map(|_| {
                if users_rng.random::<f64>() < p_bias {
                    pick(&mut users_rng, bias_pool).to_string()
                } else {
                    pick(&mut users_rng, NEUTRAL_TOKENS).to_string()
                }
            })
            .collect();

        drafts.push(UserDraft {
            user_id: format!("u{i:0uw$}"),
            population,
            city,
            verified,
            registered_at,
            status_count,
            favor_count,
            follower_count,
            following_count,
            interests,
        });
    }

    let mut users_jsonl = String::new();
    for d in &drafts {
        let record = json!({
            "user_id": d.user_id,
            "verified": d.verified,
            "registered_at": d.registered_at,
            "status_count": d.status_count,
            "favor_count": d.favor_count,
            "follower_count": d.follower_count,
            "following_count": d.following_count,
            "interests": d.interests,
        });
        writeln!(users_jsonl, "{record}").unwrap();
    }

    // News, first block fake, rest real.
    let n_fake = config.n_fake_news();
    let nw = id_width(config.n_news);
    let news_id = |j: usize| format!("n{j:0nw$}");
    let mut news_jsonl = String::new();
    for j in 0..config.n_news {
        let label = if j < n_fake { "fake" } else { "real" };
        writeln!(news_jsonl, "{}", json!({"news_id": news_id(j), "label": label})).unwrap();
    }

    // Tweets: a mix of neutral, local, age, political, and trait vocabulary.
    let p_city = 0.15;
    let p_age = 0.08 * e_tok;
    let p_bias_tweet = 0.08 * e_tok;
    let p_trait = 0.025 * e_tok;
    let mut tweets_jsonl = String::new();
    for d in &drafts {
        let (city_name, _, _, city_vocab) = CITIES[d.city];
        let age_pool = match d.population {
            Population::FakeProne => YOUNG_TOKENS,
            Population::RealProne => OLD_TOKENS,
        };
        let bias_pool = match d.population {
            Population::FakeProne => RIGHT_TOKENS,
            Population::RealProne => LEFT_TOKENS,
        };
        for _ in 0..config.tweets_per_user {
            let mut words = Vec::with_capacity(config.tokens_per_tweet);
            for _ in 0..config.tokens_per_tweet {
                let mut roll = tweets_rng.random::<f64>();
                if roll < p_city {
                    let local: Vec<&str> = std::iter::once(city_name)
                        .chain(city_vocab.iter().copied())
                        .collect();
                    words.push(pick(&mut tweets_rng, &local));
                    continue;
                }
                roll -= p_city;
                if roll < p_age {
                    words.push(pick(&mut tweets_rng, age_pool));
                    continue;
                }
                roll -= p_age;
                if roll < p_bias_tweet {
                    words.push(pick(&mut tweets_rng, bias_pool));
                    continue;
                }
                roll -= p_bias_tweet;
                let mut chosen = None;
                for t in 0..5 {
                    if roll < p_trait {
                        let high = match d.population {
                            Population::FakeProne => FAKE_HIGH_TRAITS[t],
                            Population::RealProne => !FAKE_HIGH_TRAITS[t],
                        };
                        let pool = if high { TRAIT_HIGH[t] } else { TRAIT_LOW[t] };
                        chosen = Some(pick(&mut tweets_rng, pool));
                        break;
                    }
                    roll -= p_trait;
                }
                words.push(chosen.unwrap_or_else(|| pick(&mut tweets_rng, NEUTRAL_TOKENS)));
            }
            let record = json!({"user_id": d.user_id, "text": words.join(" ")});
            writeln!(tweets_jsonl, "{record}").unwrap();
        }
    }

    // Image-class distributions: exponential noise, population bump on a
    // disjoint block of classes, normalized to sum 1.
    let bump_width = (config.n_image_classes / 2).min(10).max(1);
    let bump = 1.0 + 1.5 * e_tok;
    let mut image_csv = String::from("user_id");
    for c in 0..config.n_image_classes {
        write!(image_csv, ",c{c}").unwrap();
    }
    image_csv.push('\n');
    for d in &drafts {
        let mut v: Vec<f64> = (0..config.n_image_classes)
            .map(|_| {
                let x: f64 = Exp1.sample(&mut images_rng);
                x.max(1e-9)
            })
            .collect();
        let (lo, hi) = match d.population {
            Population::FakeProne => (0, bump_width),
            Population::RealProne => (bump_width, 2 * bump_width),
        };
        for item in v.iter_mut().take(hi).skip(lo) {
            *item *= bump;
        }
        let total: f64 = v.iter().sum();
        write!(image_csv, "{}", d.user_id).unwrap();
        for value in &v {
            write!(image_csv, ",{}", value / total).unwrap();
        }
        image_csv.push('\n');
    }

    // Shares: rejection-sample distinct (user, news) pairs, each user
    // preferring their population's label.
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut shares_jsonl = String::new();
    let mut attempts: u64 = 0;
    let attempt_cap = 50 * config.n_shares as u64 + 10_000;
    while seen.len() < config.n_shares {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::Invariant(format!(
                "share sampling stalled after {attempts} draws for {} pairs",
                config.n_shares
            )));
        }
        let u = shares_rng.random_range(0..config.n_users);
        let prefers_fake = drafts[u].population == Population::FakeProne;
        let on_preferred = shares_rng.random::<f64>() < config.preference_strength;
        let fake_side = prefers_fake == on_preferred;
        let j = if fake_side {
            shares_rng.random_range(0..n_fake)
        } else {
            n_fake + shares_rng.random_range(0..config.n_news - n_fake)
        };
        if seen.insert((u, j)) {
            let record = json!({"user_id": drafts[u].user_id, "news_id": news_id(j)});
            writeln!(shares_jsonl, "{record}").unwrap();
        }
    }

    // Bot scores: bots strictly above 0.5, humans strictly below.
    let mut bot_ids = Vec::new();
    let mut bot_csv = String::from("user_id,score\n");
    for d in &drafts {
        let is_bot = bots_rng.random::<f64>() < config.bot_fraction;
        let score = if is_bot {
            bot_ids.push(d.user_id.clone());
            0.51 + 0.49 * bots_rng.random::<f64>()
        } else {
            0.49 * bots_rng.random::<f64>()
        };
        writeln!(bot_csv, "{},{}", d.user_id, score).unwrap();
    }

    // Location model training documents, half local vocabulary half filler.
    let mut liw_jsonl = String::new();
    for (city_name, _, _, city_vocab) in CITIES {
        for _ in 0..config.liw_docs_per_city {
            let words: Vec<&str> = (0..8)
                .map(|_| {
                    if liw_rng.random::<f64>() < 0.5 {
                        let local: Vec<&str> = std::iter::once(city_name)
                            .chain(city_vocab.iter().copied())
                            .collect();
                        pick(&mut liw_rng, &local)
                    } else {
                        pick(&mut liw_rng, NEUTRAL_TOKENS)
                    }
                })
                .collect();
            let record = json!({"city": city_name, "text": words.join(" ")});
            writeln!(liw_jsonl, "{record}").unwrap();
        }
    }

    let mut gazetteer_csv = String::from("city,lat,lon\n");
    for (city_name, lat, lon, _) in CITIES {
        writeln!(gazetteer_csv, "{city_name},{lat},{lon}").unwrap();
    }

    let seeds_json = serde_json::to_string_pretty(&json!({
        "left": LEFT_TOKENS,
        "right": RIGHT_TOKENS,
    }))
    .unwrap();

    // Age lexicon: young vocabulary pulls the estimate down, old pushes up.
    let mut age_tsv = String::from("INTERCEPT\t30.0\n");
    for t in YOUNG_TOKENS {
        writeln!(age_tsv, "{t}\t-35.0").unwrap();
    }
    for t in OLD_TOKENS {
        writeln!(age_tsv, "{t}\t35.0").unwrap();
    }

    let trait_names = ["extraversion", "agreeableness", "conscientiousness", "neuroticism", "openness"];
    let mut trait_files = Vec::new();
    for (t, name) in trait_names.iter().enumerate() {
        let mut tsv = String::from("INTERCEPT\t0.5\n");
        for tok in TRAIT_HIGH[t] {
            writeln!(tsv, "{tok}\t0.9").unwrap();
        }
        for tok in TRAIT_LOW[t] {
            writeln!(tsv, "{tok}\t-0.9").unwrap();
        }
        trait_files.push((format!("personality_{name}.tsv"), tsv));
    }

    let fake_prone: Vec<&str> = drafts[..n_fake_prone]
        .iter()
        .map(|d| d.user_id.as_str())
        .collect();
    let real_prone: Vec<&str> = drafts[n_fake_prone..]
        .iter()
        .map(|d| d.user_id.as_str())
        .collect();
    let ground_truth = serde_json::to_string_pretty(&json!({
        "config": config,
        "fake_prone_users": fake_prone,
        "real_prone_users": real_prone,
        "bot_users": bot_ids,
    }))
    .unwrap();

    let artifacts = SynthArtifacts {
        users: out_dir.join("users.jsonl"),
        news: out_dir.join("news.jsonl"),
        shares: out_dir.join("shares.jsonl"),
        tweets: out_dir.join("tweets.jsonl"),
        bot_scores: out_dir.join("bot_scores.csv"),
        image_classes: out_dir.join("image_classes.csv"),
        seeds: out_dir.join("seeds.json"),
        liw_training: out_dir.join("liw_training.jsonl"),
        gazetteer: out_dir.join("gazetteer.csv"),
        lexica_dir: out_dir.join("lexica"),
        age_lexicon: out_dir.join("lexica").join("age.tsv"),
        ground_truth: out_dir.join("ground_truth.json"),
    };
    write_text(&artifacts.users, &users_jsonl)?;
    write_text(&artifacts.news, &news_jsonl)?;
    write_text(&artifacts.shares, &shares_jsonl)?;
    write_text(&artifacts.tweets, &tweets_jsonl)?;
    write_text(&artifacts.bot_scores, &bot_csv)?;
    write_text(&artifacts.image_classes, &image_csv)?;
    write_text(&artifacts.seeds, &seeds_json)?;
    write_text(&artifacts.liw_training, &liw_jsonl)?;
    write_text(&artifacts.gazetteer, &gazetteer_csv)?;
    write_text(&artifacts.age_lexicon, &age_tsv)?;
    for (name, tsv) in &trait_files {
        write_text(&artifacts.lexica_dir.join(name), tsv)?;
    }
    write_text(&artifacts.ground_truth, &ground_truth)?;
    Ok(artifacts)
}
