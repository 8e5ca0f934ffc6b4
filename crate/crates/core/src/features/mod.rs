//! Per-user feature extraction and per-news aggregation.
//!
//! A user's feature vector concatenates the six explicit metadata fields with
//! the implicit attributes inferred from content: predicted age, Big-Five
//! personality, political bias, predicted location coordinates, and the
//! PCA-reduced profile-image class distribution. Per-news vectors (UPF) are
//! the element-wise mean over the news item's sharers. The manifest (ordered
//! feature names with an explicit/implicit group tag) is a frozen contract:
//! one config always produces one manifest.

pub mod bias;
pub mod explicit;
pub mod lexicon;
pub mod liw;
pub mod pca;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label};
use crate::error::{Error, Result};

pub use bias::{bias_category, load_seeds, political_bias_score, BiasCategory, PoliticalSeeds};
pub use explicit::{extract_explicit, ExplicitFeatures};
pub use lexicon::{
    load_lexicon, load_trait_lexica, predict_age, predict_personality, Lexicon, TraitLexica,
    TRAIT_NAMES,
};
pub use liw::{load_gazetteer, load_liw_training, LIWModel};
pub use pca::{fit_pca, load_image_classes, PCAModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureGroup {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Include predicted (latitude, longitude) in the vector.
    pub include_location: bool,
    /// Output dimensions for the image-class PCA; 0 disables the channel.
    pub image_pca_dims: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            include_location: true,
            image_pca_dims: 10,
        }
    }
}

/// Ordered feature names and their group tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub names: Vec<String>,
    pub groups: Vec<FeatureGroup>,
}

impl FeatureManifest {
    pub fn for_config(config: &FeatureConfig) -> Self {
        let mut names: Vec<String> = vec![
            "verified".into(),
            "register_age_days".into(),
            "status_count".into(),
            "favor_count".into(),
            "follower_count".into(),
            "following_count".into(),
        ];
        let mut groups = vec![FeatureGroup::Explicit; names.len()];

        names.push("age".into());
        for trait_name in TRAIT_NAMES {
            names.push(format!("personality_{trait_name}"));
        }
        names.push("bias_score".into());
        if config.include_location {
            names.push("location_lat".into());
            names.push("location_lon".into());
        }
        for i in 1..=config.image_pca_dims {
            names.push(format!("image_pca_{i}"));
        }
        groups.resize(names.len(), FeatureGroup::Implicit);

        FeatureManifest { names, groups }
    }

    /// Rebuild a manifest from stored column names, tagging the six known
    /// profile fields explicit and everything else implicit.
    pub fn from_names(names: Vec<String>) -> Self {
        const EXPLICIT: [&str; 6] = [
            "verified",
            "register_age_days",
            "status_count",
            "favor_count",
            "follower_count",
            "following_count",
        ];
        let groups = names
            .iter()
            .map(|n| {
                if EXPLICIT.contains(&n.as_str()) {
                    FeatureGroup::Explicit
                } else {
                    FeatureGroup::Implicit
                }
            })
            .collect();
        FeatureManifest { names, groups }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Column indices belonging to a group.
    pub fn group_columns(&self, group: FeatureGroup) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| **g == group)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatureVector {
    pub user_id: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsFeatureVector {
    pub news_id: String,
    pub values: Vec<f64>,
    pub sharer_count: usize,
}

/// Raw inputs the implicit predictors are built from.
#[derive(Debug, Clone)]
pub struct FeatureSources {
    pub age_lexicon: Lexicon,
    pub trait_lexica: TraitLexica,
    pub seeds: PoliticalSeeds,
    pub liw_training: Vec<(String, String)>,
    pub gazetteer: BTreeMap<String, (f64, f64)>,
    pub image_classes: BTreeMap<String, Vec<f64>>,
}

/// Fitted models plus config, ready to vectorize any user in the corpus.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    pub config: FeatureConfig,
    pub manifest: FeatureManifest,
    pub age_lexicon: Lexicon,
    pub trait_lexica: TraitLexica,
    pub seeds: PoliticalSeeds,
    pub liw: Option<LIWModel>,
    pub pca: Option<PCAModel>,
    pub image_classes: BTreeMap<String, Vec<f64>>,
}

/// Fit the LIW and PCA models and bundle everything needed for extraction.
///
/// `pca_fit_news` restricts the PCA fit to image vectors of users sharing at
/// least one of those news items, so a train/test split can fit on training
/// news only. `None` fits on all sharers.
pub fn build_extractor(
    sources: FeatureSources,
    config: &FeatureConfig,
    corpus: &Corpus,
    pca_fit_news: Option<&BTreeSet<String>>,
) -> Result<FeatureExtractor> {
    let liw = if config.include_location {
        let vocabulary = liw::vocabulary_from_docs(&sources.liw_training);
        Some(liw::train_liw(
            &sources.liw_training,
            &vocabulary,
            &sources.gazetteer,
        )?)
    } else {
        None
    };

    let pca = if config.image_pca_dims > 0 {
        let mut fit_users: BTreeSet<&str> = BTreeSet::new();
        for share in &corpus.shares {
            let in_fit_set = pca_fit_news
                .map(|set| set.contains(&share.news_id))
                .unwrap_or(true);
            if in_fit_set {
                fit_users.insert(&share.user_id);
            }
        }
        let fit_matrix: Vec<Vec<f64>> = fit_users
            .iter()
            .filter_map(|id| sources.image_classes.get(*id))
            .cloned()
            .collect();
        if fit_matrix.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "image PCA needs ≥2 sharer image vectors in the fit set, got {}",
                fit_matrix.len()
            )));
        }
        Some(pca::fit_pca(&fit_matrix, config.image_pca_dims)?)
    } else {
        None
    };

    Ok(FeatureExtractor {
        config: *config,
        manifest: FeatureManifest::for_config(config),
        age_lexicon: sources.age_lexicon,
        trait_lexica: sources.trait_lexica,
        seeds: sources.seeds,
        liw,
        pca,
        image_classes: sources.image_classes,
    })
}

impl FeatureExtractor {
    /// Vectorize one user. `tweets` is the user's historical posts; an empty
    /// slice falls back to the lexicon intercepts and the LIW prior argmax,
    /// and a user missing from the image table projects the all-zeros vector.
    pub fn user_feature_vector(
        &self,
        corpus: &Corpus,
        user_id: &str,
        tweets: &[&str],
    ) -> Result<UserFeatureVector> {
        let user = corpus.users.get(user_id).ok_or_else(|| Error::UnknownId {
            kind: "user_id",
            id: user_id.to_string(),
        })?;
        let mut values = Vec::with_capacity(self.manifest.len());

        let e = explicit::extract_explicit(user, corpus.reference_date)?;
        values.extend([
            e.verified as f64,
            e.register_age_days as f64,
            e.status_count as f64,
            e.favor_count as f64,
            e.follower_count as f64,
            e.following_count as f64,
        ]);

        values.push(lexicon::predict_age(tweets, &self.age_lexicon));
        values.extend(lexicon::predict_personality(tweets, &self.trait_lexica));
        values.push(bias::political_bias_score(
            &user.interest_tokens,
            &self.seeds,
        ));

        if let Some(liw) = &self.liw {
            let (_, lat, lon) = liw.predict_location(tweets);
            values.push(lat);
            values.push(lon);
        }

        if let Some(pca) = &self.pca {
            let zeros;
            let image = match self.image_classes.get(user_id) {
                Some(v) => v.as_slice(),
                None => {
                    zeros = vec![0.0; pca.input_dim()];
                    zeros.as_slice()
                }
            };
            values.extend(pca.project(image)?);
        }

        debug_assert_eq!(values.len(), self.manifest.len());
        Ok(UserFeatureVector {
            user_id: user_id.to_string(),
            values,
        })
    }

    /// Vectorize a set of users in parallel, returned in sorted-id order.
    pub fn user_vectors(
        &self,
        corpus: &Corpus,
        user_ids: &BTreeSet<String>,
    ) -> Result<BTreeMap<String, UserFeatureVector>> {
        let tweets_by_user = corpus.tweets_by_user();
        let ordered: Vec<&String> = user_ids.iter().collect();
        let vectors: Vec<Result<UserFeatureVector>> = ordered
            .par_iter()
            .map(|id| {
                let tweets = tweets_by_user
                    .get(id.as_str())
                    .map(|v| v.as_slice())
                    .unwrap_or(&[]);
                self.user_feature_vector(corpus, id, tweets)
            })
            .collect();
        let mut out = BTreeMap::new();
        for v in vectors {
            let v = v?;
            out.insert(v.user_id.clone(), v);
        }
        Ok(out)
    }
}

/// Element-wise mean of the sharers' vectors.
pub fn aggregate_upf(news_id: &str, sharers: &[&UserFeatureVector]) -> Result<NewsFeatureVector> {
    let first = sharers.first().ok_or_else(|| {
        Error::InvalidInput(format!("news {news_id} has no sharer vectors"))
    })?;
    let width = first.values.len();
    let mut values = vec![0.0; width];
    for vector in sharers {
        if vector.values.len() != width {
            return Err(Error::Invariant(format!(
                "sharer vectors of news {news_id} disagree on width"
            )));
        }
        for (acc, v) in values.iter_mut().zip(&vector.values) {
            *acc += v;
        }
    }
    let n = sharers.len() as f64;
    for v in &mut values {
        *v /= n;
    }
    Ok(NewsFeatureVector {
        news_id: news_id.to_string(),
        values,
        sharer_count: sharers.len(),
    })
}

/// One row per news item with at least one sharer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignMatrix {
    pub news_ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    /// 1 = fake, 0 = real.
    pub y: Vec<u8>,
    pub manifest: FeatureManifest,
    /// News items dropped for having zero sharers.
    pub skipped_news: Vec<String>,
}

/// Aggregate UPF vectors for every labeled news item. News with no sharers
/// land in the skip report; an entirely empty matrix is an error.
pub fn build_design_matrix(
    corpus: &Corpus,
    extractor: &FeatureExtractor,
) -> Result<DesignMatrix> {
    let mut sharers_by_news: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for share in &corpus.shares {
        sharers_by_news
            .entry(&share.news_id)
            .or_default()
            .insert(&share.user_id);
    }

    let all_sharers: BTreeSet<String> = corpus
        .shares
        .iter()
        .map(|s| s.user_id.clone())
        .collect();
    let user_vectors = extractor.user_vectors(corpus, &all_sharers)?;

    let mut news_ids = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut skipped_news = Vec::new();
    for (news_id, item) in &corpus.news {
        match sharers_by_news.get(news_id.as_str()) {
            Some(sharer_ids) if !sharer_ids.is_empty() => {
                let vectors: Vec<&UserFeatureVector> = sharer_ids
                    .iter()
                    .map(|id| &user_vectors[*id])
                    .collect();
                let upf = aggregate_upf(news_id, &vectors)?;
                news_ids.push(news_id.clone());
                x.push(upf.values);
                y.push(match item.label {
                    Label::Fake => 1,
                    Label::Real => 0,
                });
            }
            _ => skipped_news.push(news_id.clone()),
        }
    }

    if x.is_empty() {
        return Err(Error::InvalidInput(
            "every news item was skipped; design matrix is empty".into(),
        ));
    }

    Ok(DesignMatrix {
        news_ids,
        x,
        y,
        manifest: extractor.manifest.clone(),
        skipped_news,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(id: &str, values: &[f64]) -> UserFeatureVector {
        UserFeatureVector {
            user_id: id.to_string(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn default_manifest_has_25_entries() {
        let manifest = FeatureManifest::for_config(&FeatureConfig::default());
        assert_eq!(manifest.len(), 25);
        assert_eq!(manifest.group_columns(FeatureGroup::Explicit).len(), 6);
        assert_eq!(manifest.group_columns(FeatureGroup::Implicit).len(), 19);
        assert_eq!(manifest.names[0], "verified");
        assert_eq!(manifest.names[6], "age");
        assert_eq!(manifest.names[24], "image_pca_10");
    }

    #[test]
    fn manifest_is_stable_for_a_config() {
        let a = FeatureManifest::for_config(&FeatureConfig::default());
        let b = FeatureManifest::for_config(&FeatureConfig::default());
        assert_eq!(a, b);
    }

    #[test]
    fn manifest_shrinks_with_toggles() {
        let no_location = FeatureManifest::for_config(&FeatureConfig {
            include_location: false,
            image_pca_dims: 10,
        });
        assert_eq!(no_location.len(), 23);
        assert!(!no_location.names.iter().any(|n| n.starts_with("location")));

        let no_image = FeatureManifest::for_config(&FeatureConfig {
            include_location: true,
            image_pca_dims: 0,
        });
        assert_eq!(no_image.len(), 15);
    }

    #[test]
    fn upf_is_the_elementwise_mean() {
        let a = vector("a", &[1.0, 2.0]);
        let b = vector("b", &[3.0, 4.0]);
        let upf = aggregate_upf("n1", &[&a, &b]).unwrap();
        assert_eq!(upf.values, vec![2.0, 3.0]);
        assert_eq!(upf.sharer_count, 2);
    }

    #[test]
    fn single_sharer_upf_is_identity() {
        let a = vector("a", &[0.5, -1.5, 7.0]);
        let upf = aggregate_upf("n1", &[&a]).unwrap();
        assert_eq!(upf.values, a.values);
    }

    #[test]
    fn upf_permutation_invariant_and_scale_equivariant() {
        let a = vector("a", &[1.0, 10.0]);
        let b = vector("b", &[2.0, 20.0]);
        let c = vector("c", &[4.0, 40.0]);
        let forward = aggregate_upf("n", &[&a, &b, &c]).unwrap();
        let backward = aggregate_upf("n", &[&c, &a, &b]).unwrap();
        assert_eq!(forward.values, backward.values);

        let scaled: Vec<UserFeatureVector> = [&a, &b, &c]
            .iter()
            .map(|v| vector(&v.user_id, &v.values.iter().map(|x| x * 3.0).collect::<Vec<_>>()))
            .collect();
        let scaled_refs: Vec<&UserFeatureVector> = scaled.iter().collect();
        let scaled_upf = aggregate_upf("n", &scaled_refs).unwrap();
        for (s, f) in scaled_upf.values.iter().zip(&forward.values) {
            assert!((s - 3.0 * f).abs() < 1e-12);
        }
    }

    #[test]
    fn upf_with_no_sharers_errors() {
        assert!(aggregate_upf("n1", &[]).is_err());
    }

    #[test]
    fn upf_matches_compensated_summation_oracle() {
        let vectors: Vec<UserFeatureVector> = (0..50)
            .map(|i| {
                let base = (i as f64) * 0.1 + 0.01;
                vector(&format!("u{i}"), &[base, base * base, 1.0 / (base + 1.0)])
            })
            .collect();
        let refs: Vec<&UserFeatureVector> = vectors.iter().collect();
        let upf = aggregate_upf("n", &refs).unwrap();
        for col in 0..3 {
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for v in &vectors {
                let y = v.values[col] - comp;
                let t = sum + y;
                comp = (t - sum) - y;
                sum = t;
            }
            let oracle = sum / 50.0;
            assert!((upf.values[col] - oracle).abs() < 1e-12);
        }
    }
}
