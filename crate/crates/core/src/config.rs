//! Pipeline configuration: one YAML file drives every stage.
//!
//! Every section has working defaults, so an empty config runs the full
//! synthetic pipeline under `out/`. Input and source paths default to the
//! synth stage's output layout; point them elsewhere to run on real data.
//! Unknown keys are rejected rather than ignored, so a typo fails loudly
//! instead of silently falling back to a default.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::grouping::GroupingConfig;
use crate::ml::Algorithm;
use crate::synth::SynthConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputPaths {
    pub users: Option<PathBuf>,
    pub news: Option<PathBuf>,
    pub shares: Option<PathBuf>,
    pub tweets: Option<PathBuf>,
    pub bot_scores: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourcePaths {
    pub age_lexicon: Option<PathBuf>,
    pub trait_lexica_dir: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub liw_training: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub image_classes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BotFilterSection {
    pub threshold: f64,
}

impl Default for BotFilterSection {
    fn default() -> Self {
        BotFilterSection { threshold: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupingSection {
    pub k: usize,
    pub t: f64,
}

impl Default for GroupingSection {
    fn default() -> Self {
        GroupingSection { k: 10_000, t: 0.2 }
    }
}

/// Which news items the image PCA basis is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaFit {
    /// A seeded random subset of news items (its sharers' image vectors).
    Split,
    /// Every news sharer in the corpus.
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub include_location: bool,
    pub image_pca_dims: usize,
    pub pca_fit: PcaFit,
    /// Fraction of news items whose sharers the PCA is fitted on when
    /// `pca_fit` is `split`.
    pub pca_fit_frac: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        let f = FeatureConfig::default();
        FeatureSection {
            include_location: f.include_location,
            image_pca_dims: f.image_pca_dims,
            pca_fit: PcaFit::Split,
            pca_fit_frac: 0.8,
        }
    }
}

impl FeatureSection {
    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            include_location: self.include_location,
            image_pca_dims: self.image_pca_dims,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Algorithm tag: rf, svm, dt, lr, nb, or ada.
    pub algo: String,
    pub reps: usize,
    pub train_frac: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            algo: "rf".into(),
            reps: 5,
            train_frac: 0.8,
        }
    }
}

impl EvalSection {
    pub fn algorithm(&self) -> Result<Algorithm> {
        Algorithm::from_tag(&self.algo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Where synthetic inputs are written and looked up; `out_dir/synth`
    /// unless overridden.
    pub synth_dir: Option<PathBuf>,
    pub reference_date: NaiveDate,
    pub inputs: InputPaths,
    pub sources: SourcePaths,
    pub bot_filter: BotFilterSection,
    pub grouping: GroupingSection,
    pub features: FeatureSection,
    pub eval: EvalSection,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            out_dir: PathBuf::from("out"),
            synth_dir: None,
            reference_date: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
            inputs: InputPaths::default(),
            sources: SourcePaths::default(),
            bot_filter: BotFilterSection::default(),
            grouping: GroupingSection::default(),
            features: FeatureSection::default(),
            eval: EvalSection::default(),
            synth: SynthConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Parse and validate a YAML config file.
    pub fn load(path: &Path) -> Result<Self> {
        let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let config: PipelineConfig = if contents.trim().is_empty() {
            PipelineConfig::default()
        } else {
            serde_yaml::from_str(&contents).map_err(|e| {
                Error::InvalidConfig(format!("{}: {e}", path.display()))
            })?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.bot_filter.threshold) {
            return Err(Error::InvalidConfig(format!(
                "bot_filter.threshold must lie in [0, 1], got {}",
                self.bot_filter.threshold
            )));
        }
        self.grouping_config().validate()?;
        if !self.features.pca_fit_frac.is_finite()
            || self.features.pca_fit_frac <= 0.0
            || self.features.pca_fit_frac > 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "features.pca_fit_frac must lie in (0, 1], got {}",
                self.features.pca_fit_frac
            )));
        }
        self.eval.algorithm().map_err(|_| {
            Error::InvalidConfig(format!(
                "eval.algo must be one of rf, svm, dt, lr, nb, ada; got {:?}",
                self.eval.algo
            ))
        })?;
        if self.eval.reps == 0 {
            return Err(Error::InvalidConfig("eval.reps must be at least 1".into()));
        }
        if !self.eval.train_frac.is_finite()
            || self.eval.train_frac <= 0.0
            || self.eval.train_frac >= 1.0
        {
            return Err(Error::InvalidConfig(format!(
                "eval.train_frac must lie strictly between 0 and 1, got {}",
                self.eval.train_frac
            )));
        }
        self.synth.validate()?;
        Ok(())
    }

    pub fn grouping_config(&self) -> GroupingConfig {
        GroupingConfig {
            k: self.grouping.k,
            t: self.grouping.t,
            sample_seed: self.seed,
        }
    }

    pub fn synth_dir(&self) -> PathBuf {
        self.synth_dir
            .clone()
            .unwrap_or_else(|| self.out_dir.join("synth"))
    }

    pub fn users_path(&self) -> PathBuf {
        self.inputs
            .users
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("users.jsonl"))
    }

    pub fn news_path(&self) -> PathBuf {
        self.inputs
            .news
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("news.jsonl"))
    }

    pub fn shares_path(&self) -> PathBuf {
        self.inputs
            .shares
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("shares.jsonl"))
    }

    pub fn tweets_path(&self) -> PathBuf {
        self.inputs
            .tweets
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("tweets.jsonl"))
    }

    pub fn bot_scores_path(&self) -> PathBuf {
        self.inputs
            .bot_scores
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("bot_scores.csv"))
    }

    pub fn age_lexicon_path(&self) -> PathBuf {
        self.sources
            .age_lexicon
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("lexica").join("age.tsv"))
    }

    pub fn trait_lexica_dir(&self) -> PathBuf {
        self.sources
            .trait_lexica_dir
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("lexica"))
    }

    pub fn seeds_path(&self) -> PathBuf {
        self.sources
            .seeds
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("seeds.json"))
    }

    pub fn liw_training_path(&self) -> PathBuf {
        self.sources
            .liw_training
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("liw_training.jsonl"))
    }

    pub fn gazetteer_path(&self) -> PathBuf {
        self.sources
            .gazetteer
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("gazetteer.csv"))
    }

    pub fn image_classes_path(&self) -> PathBuf {
        self.sources
            .image_classes
            .clone()
            .unwrap_or_else(|| self.synth_dir().join("image_classes.csv"))
    }
}
