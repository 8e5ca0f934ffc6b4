//! Stage orchestration: runs the pipeline and manages its artifacts.
//!
//! Each stage reads its inputs from disk, writes its outputs under the
//! configured `out_dir`, and records a manifest (content hashes of inputs,
//! list of outputs, config hash) so a run can be audited afterwards. Stages
//! communicate only through files; any stage can be re-run in isolation as
//! long as its upstream artifacts exist. A stage whose upstream artifact is
//! missing fails with the artifact's path rather than guessing.
//!
//! All writes are atomic (temp file plus rename) and no artifact embeds a
//! timestamp, so two runs from the same config and inputs are byte-identical.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{compare_groups, ComparisonDetail, ComparisonReport};
use crate::bot::{filter_bots, load_bot_scores, FilterStats};
use crate::config::{PcaFit, PipelineConfig};
use crate::corpus::{load_corpus, Corpus, Label, LoadStats};
use crate::error::{Error, Result};
use crate::features::{
    build_design_matrix, build_extractor, load_gazetteer, load_image_classes, load_lexicon,
    load_liw_training, load_seeds, load_trait_lexica, DesignMatrix, FeatureExtractor,
    FeatureManifest, FeatureSources, UserFeatureVector,
};
use crate::grouping::{partition_users, select_groups, GroupSelection};
use crate::ml::{
    external_baseline_eval, feature_group_ablation, gini_importance, repeated_holdout, train,
    AblationReport, Algorithm, Dataset, HoldoutReport, Hyperparameters, ImportanceReport,
};
use crate::synth::{self, SynthArtifacts};

/// Salt separating the PCA fit-subset stream from other seeded draws.
const PCA_SPLIT_SALT: u64 = 0xBB67_AE85_84CA_A73B;

/// Resolved artifact paths under one output directory.
#[derive(Debug, Clone)]
pub struct OutLayout {
    pub root: PathBuf,
}

impl OutLayout {
    pub fn new(root: &Path) -> Self {
        OutLayout {
            root: root.to_path_buf(),
        }
    }

    pub fn ingest_report(&self) -> PathBuf {
        self.root.join("ingest").join("load_report.json")
    }
    pub fn filtered_dir(&self) -> PathBuf {
        self.root.join("filtered")
    }
    pub fn filtered_users(&self) -> PathBuf {
        self.filtered_dir().join("users.jsonl")
    }
    pub fn filtered_news(&self) -> PathBuf {
        self.filtered_dir().join("news.jsonl")
    }
    pub fn filtered_shares(&self) -> PathBuf {
        self.filtered_dir().join("shares.jsonl")
    }
    pub fn filtered_tweets(&self) -> PathBuf {
        self.filtered_dir().join("tweets.jsonl")
    }
    pub fn filter_stats(&self) -> PathBuf {
        self.filtered_dir().join("filter_stats.json")
    }
    pub fn groups(&self) -> PathBuf {
        self.root.join("groups.json")
    }
    pub fn features_csv(&self) -> PathBuf {
        self.root.join("features.csv")
    }
    pub fn user_features_csv(&self) -> PathBuf {
        self.root.join("user_features.csv")
    }
    pub fn extract_report(&self) -> PathBuf {
        self.root.join("extract_report.json")
    }
    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn report_md(&self) -> PathBuf {
        self.root.join("report.md")
    }
    pub fn eval_json(&self) -> PathBuf {
        self.root.join("eval.json")
    }
    pub fn importance_json(&self) -> PathBuf {
        self.root.join("importance.json")
    }
    pub fn ablation_json(&self) -> PathBuf {
        self.root.join("ablation.json")
    }
    pub fn baseline_json(&self) -> PathBuf {
        self.root.join("baseline_eval.json")
    }
    pub fn summary_json(&self) -> PathBuf {
        self.root.join("summary.json")
    }
    pub fn final_report_md(&self) -> PathBuf {
        self.root.join("final_report.md")
    }
    pub fn manifest(&self, stage: &str) -> PathBuf {
        self.root.join("manifests").join(format!("{stage}.json"))
    }
}

/// Write bytes to a temp file beside the target, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path
        .parent()
        .ok_or_else(|| Error::Invariant(format!("{} has no parent", path.display())))?;
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Invariant(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let contents = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&contents)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn require_artifact(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(path.to_path_buf()))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Serialize, Deserialize)]
struct StageManifest {
    stage: String,
    crate_version: String,
    config_sha256: String,
    /// Input path to content hash.
    inputs: BTreeMap<String, String>,
    outputs: Vec<String>,
}

fn write_stage_manifest(
    config: &PipelineConfig,
    stage: &str,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<()> {
    let config_bytes = serde_json::to_vec(config)
        .map_err(|e| Error::Invariant(format!("serializing config: {e}")))?;
    let mut input_hashes = BTreeMap::new();
    for path in inputs {
        input_hashes.insert(path.display().to_string(), sha256_file(path)?);
    }
    let manifest = StageManifest {
        stage: stage.to_string(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(&config_bytes),
        inputs: input_hashes,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
    };
    write_json(&OutLayout::new(&config.out_dir).manifest(stage), &manifest)
}

fn label_str(label: Label) -> &'static str {
    match label {
        Label::Fake => "fake",
        Label::Real => "real",
    }
}

/// Serialize a corpus back to the four JSONL files.
fn write_corpus(corpus: &Corpus, dir: &Path) -> Result<[PathBuf; 4]> {
    let mut users = String::new();
    for u in corpus.users.values() {
        let record = serde_json::json!({
            "user_id": u.user_id,
            "verified": u.verified,
            "registered_at": u.registered_at,
            "status_count": u.status_count,
            "favor_count": u.favor_count,
            "follower_count": u.follower_count,
            "following_count": u.following_count,
            "interests": u.interest_tokens,
        });
        writeln!(users, "{record}").unwrap();
    }
    let mut news = String::new();
    for n in corpus.news.values() {
        let record = serde_json::json!({"news_id": n.news_id, "label": label_str(n.label)});
        writeln!(news, "{record}").unwrap();
    }
    let mut shares = String::new();
    for s in &corpus.shares {
        let record = serde_json::json!({"user_id": s.user_id, "news_id": s.news_id});
        writeln!(shares, "{record}").unwrap();
    }
    let mut tweets = String::new();
    for t in &corpus.tweets {
        let record = serde_json::json!({"user_id": t.user_id, "text": t.text});
        writeln!(tweets, "{record}").unwrap();
    }
    let paths = [
        dir.join("users.jsonl"),
        dir.join("news.jsonl"),
        dir.join("shares.jsonl"),
        dir.join("tweets.jsonl"),
    ];
    write_atomic(&paths[0], users.as_bytes())?;
    write_atomic(&paths[1], news.as_bytes())?;
    write_atomic(&paths[2], shares.as_bytes())?;
    write_atomic(&paths[3], tweets.as_bytes())?;
    Ok(paths)
}

fn load_input_corpus(config: &PipelineConfig) -> Result<(Corpus, LoadStats)> {
    for path in [
        config.users_path(),
        config.news_path(),
        config.shares_path(),
        config.tweets_path(),
    ] {
        require_artifact(&path)?;
    }
    load_corpus(
        &config.users_path(),
        &config.news_path(),
        &config.shares_path(),
        &config.tweets_path(),
        config.reference_date,
    )
}

fn load_filtered_corpus(config: &PipelineConfig) -> Result<Corpus> {
    let layout = OutLayout::new(&config.out_dir);
    for path in [
        layout.filtered_users(),
        layout.filtered_news(),
        layout.filtered_shares(),
        layout.filtered_tweets(),
    ] {
        require_artifact(&path)?;
    }
    let (corpus, _) = load_corpus(
        &layout.filtered_users(),
        &layout.filtered_news(),
        &layout.filtered_shares(),
        &layout.filtered_tweets(),
        config.reference_date,
    )?;
    Ok(corpus)
}

/// Generate the synthetic input set under `out_dir/synth`.
///
/// The synth section's own seed pins the corpus identity; the pipeline seed
/// does not alter it. The reference date is forced to the pipeline's so the
/// generated registration dates are always valid for ingestion.
pub fn run_synth(config: &PipelineConfig) -> Result<SynthArtifacts> {
    let mut synth_config = config.synth.clone();
    synth_config.reference_date = config.reference_date;
    let dir = config.synth_dir();
    let artifacts = synth::generate(&synth_config, &dir)?;
    log::info!(
        "synth: {} users, {} news, {} shares under {}",
        synth_config.n_users,
        synth_config.n_news,
        synth_config.n_shares,
        dir.display()
    );
    let outputs = [
        artifacts.users.as_path(),
        artifacts.news.as_path(),
        artifacts.shares.as_path(),
        artifacts.tweets.as_path(),
        artifacts.bot_scores.as_path(),
        artifacts.image_classes.as_path(),
        artifacts.seeds.as_path(),
        artifacts.liw_training.as_path(),
        artifacts.gazetteer.as_path(),
        artifacts.age_lexicon.as_path(),
        artifacts.ground_truth.as_path(),
    ];
    write_stage_manifest(config, "synth", &[], &outputs)?;
    Ok(artifacts)
}

/// Load and validate the input corpus, recording what was read.
pub fn run_ingest(config: &PipelineConfig) -> Result<LoadStats> {
    let (corpus, stats) = load_input_corpus(config)?;
    corpus.validate()?;
    log::info!(
        "ingest: {} users, {} news, {} shares, {} tweets",
        stats.user_count,
        stats.news_count,
        stats.share_count,
        stats.tweet_count
    );
    let layout = OutLayout::new(&config.out_dir);
    write_json(&layout.ingest_report(), &stats)?;
    write_stage_manifest(
        config,
        "ingest",
        &[
            &config.users_path(),
            &config.news_path(),
            &config.shares_path(),
            &config.tweets_path(),
        ],
        &[&layout.ingest_report()],
    )?;
    Ok(stats)
}

/// Remove likely bots and persist the filtered corpus.
pub fn run_filter_bots(config: &PipelineConfig) -> Result<FilterStats> {
    let (corpus, _) = load_input_corpus(config)?;
    require_artifact(&config.bot_scores_path())?;
    let table = load_bot_scores(&config.bot_scores_path())?;
    let (filtered, stats) = filter_bots(&corpus, &table, config.bot_filter.threshold)?;
    log::info!(
        "filter-bots: removed {} of {} users at threshold {}",
        stats.removed_count,
        stats.removed_count + stats.kept_count,
        config.bot_filter.threshold
    );
    let layout = OutLayout::new(&config.out_dir);
    let corpus_paths = write_corpus(&filtered, &layout.filtered_dir())?;
    write_json(&layout.filter_stats(), &stats)?;
    write_stage_manifest(
        config,
        "filter-bots",
        &[
            &config.users_path(),
            &config.news_path(),
            &config.shares_path(),
            &config.tweets_path(),
            &config.bot_scores_path(),
        ],
        &[
            &corpus_paths[0],
            &corpus_paths[1],
            &corpus_paths[2],
            &corpus_paths[3],
            &layout.filter_stats(),
        ],
    )?;
    Ok(stats)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub only_fake: usize,
    pub only_real: usize,
    pub mixed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupsArtifact {
    #[serde(flatten)]
    pub selection: GroupSelection,
    pub partition: PartitionSummary,
}

/// Select the fake-spreader and real-spreader groups from the filtered
/// corpus.
pub fn run_group(config: &PipelineConfig) -> Result<GroupsArtifact> {
    let corpus = load_filtered_corpus(config)?;
    let partition = partition_users(&corpus);
    let selection = select_groups(&corpus, &config.grouping_config())?;
    log::info!(
        "group: |u_fake| = {}, |u_real| = {} (only-fake {}, only-real {}, mixed {})",
        selection.u_fake.len(),
        selection.u_real.len(),
        partition.only_fake.len(),
        partition.only_real.len(),
        partition.fake_and_real.len()
    );
    let artifact = GroupsArtifact {
        selection,
        partition: PartitionSummary {
            only_fake: partition.only_fake.len(),
            only_real: partition.only_real.len(),
            mixed: partition.fake_and_real.len(),
        },
    };
    let layout = OutLayout::new(&config.out_dir);
    write_json(&layout.groups(), &artifact)?;
    write_stage_manifest(
        config,
        "group",
        &[
            &layout.filtered_users(),
            &layout.filtered_news(),
            &layout.filtered_shares(),
            &layout.filtered_tweets(),
        ],
        &[&layout.groups()],
    )?;
    Ok(artifact)
}

fn load_feature_sources(config: &PipelineConfig) -> Result<FeatureSources> {
    for path in [
        config.age_lexicon_path(),
        config.trait_lexica_dir(),
        config.seeds_path(),
        config.image_classes_path(),
    ] {
        require_artifact(&path)?;
    }
    if config.features.include_location {
        require_artifact(&config.liw_training_path())?;
        require_artifact(&config.gazetteer_path())?;
    }
    Ok(FeatureSources {
        age_lexicon: load_lexicon(&config.age_lexicon_path())?,
        trait_lexica: load_trait_lexica(&config.trait_lexica_dir())?,
        seeds: load_seeds(&config.seeds_path())?,
        liw_training: if config.features.include_location {
            load_liw_training(&config.liw_training_path())?
        } else {
            Vec::new()
        },
        gazetteer: if config.features.include_location {
            load_gazetteer(&config.gazetteer_path())?
        } else {
            BTreeMap::new()
        },
        image_classes: load_image_classes(&config.image_classes_path())?,
    })
}

/// The news ids whose sharers the image PCA basis is fitted on.
fn pca_fit_news(config: &PipelineConfig, corpus: &Corpus) -> Option<BTreeSet<String>> {
    match config.features.pca_fit {
        PcaFit::All => None,
        PcaFit::Split => {
            let ids: Vec<&String> = corpus.news.keys().collect();
            let n_fit = ((config.features.pca_fit_frac * ids.len() as f64).floor() as usize)
                .clamp(1, ids.len());
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ PCA_SPLIT_SALT);
            let chosen = rand::seq::index::sample(&mut rng, ids.len(), n_fit);
            Some(chosen.iter().map(|i| ids[i].clone()).collect())
        }
    }
}

fn build_pipeline_extractor(
    config: &PipelineConfig,
    corpus: &Corpus,
) -> Result<(FeatureExtractor, Option<usize>)> {
    let sources = load_feature_sources(config)?;
    let fit_news = pca_fit_news(config, corpus);
    let fit_count = fit_news.as_ref().map(BTreeSet::len);
    let extractor = build_extractor(
        sources,
        &config.features.feature_config(),
        corpus,
        fit_news.as_ref(),
    )?;
    Ok((extractor, fit_count))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractReport {
    pub manifest: FeatureManifest,
    pub news_rows: usize,
    pub skipped_news: Vec<String>,
    pub group_user_rows: usize,
    /// News items whose sharers the PCA was fitted on; absent when fitting
    /// on everyone or when the image channel is disabled.
    pub pca_fit_news_count: Option<usize>,
    pub pca_explained_variance: Option<Vec<f64>>,
}

fn format_float(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{v:.1}")
    } else {
        v.to_string()
    }
}

fn write_features_csv(path: &Path, dm: &DesignMatrix) -> Result<()> {
    let mut out = String::from("news_id");
    for name in &dm.manifest.names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",label\n");
    for (row, news_id) in dm.news_ids.iter().enumerate() {
        out.push_str(news_id);
        for v in &dm.x[row] {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push(',');
        out.push_str(if dm.y[row] == 1 { "fake" } else { "real" });
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read a features.csv back into a design matrix.
pub fn read_features_csv(path: &Path) -> Result<DesignMatrix> {
    require_artifact(path)?;
    let file_name = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{file_name}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{file_name}: {e}")))?
        .clone();
    if headers.len() < 3 || &headers[0] != "news_id" || &headers[headers.len() - 1] != "label" {
        return Err(Error::InvalidInput(format!(
            "{file_name}: header must be news_id,<features...>,label"
        )));
    }
    let names: Vec<String> = headers
        .iter()
        .skip(1)
        .take(headers.len() - 2)
        .map(str::to_string)
        .collect();
    let manifest = FeatureManifest::from_names(names);

    let mut news_ids = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(&file_name, line, e.to_string()))?;
        if record.len() != manifest.len() + 2 {
            return Err(Error::parse(
                &file_name,
                line,
                format!("expected {} fields, got {}", manifest.len() + 2, record.len()),
            ));
        }
        news_ids.push(record[0].to_string());
        let mut row = Vec::with_capacity(manifest.len());
        for field in record.iter().skip(1).take(manifest.len()) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(&file_name, line, format!("bad number {field:?}")))?;
            row.push(v);
        }
        x.push(row);
        y.push(match &record[record.len() - 1] {
            "fake" => 1,
            "real" => 0,
            other => {
                return Err(Error::parse(
                    &file_name,
                    line,
                    format!("label must be fake or real, got {other:?}"),
                ))
            }
        });
    }
    if news_ids.is_empty() {
        return Err(Error::InvalidInput(format!("{file_name}: no rows")));
    }
    Ok(DesignMatrix {
        news_ids,
        x,
        y,
        manifest,
        skipped_news: Vec::new(),
    })
}

fn write_user_features_csv(
    path: &Path,
    vectors: &BTreeMap<String, UserFeatureVector>,
    manifest: &FeatureManifest,
    selection: &GroupSelection,
) -> Result<()> {
    let mut out = String::from("user_id");
    for name in &manifest.names {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",group\n");
    for (user_id, vector) in vectors {
        out.push_str(user_id);
        for v in &vector.values {
            out.push(',');
            out.push_str(&format_float(*v));
        }
        out.push(',');
        out.push_str(if selection.u_fake.contains(user_id) {
            "fake"
        } else {
            "real"
        });
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Read user_features.csv back into per-user vectors plus the manifest.
pub fn read_user_features_csv(
    path: &Path,
) -> Result<(BTreeMap<String, UserFeatureVector>, FeatureManifest)> {
    require_artifact(path)?;
    let file_name = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{file_name}: {e}")))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{file_name}: {e}")))?
        .clone();
    if headers.len() < 3 || &headers[0] != "user_id" || &headers[headers.len() - 1] != "group" {
        return Err(Error::InvalidInput(format!(
            "{file_name}: header must be user_id,<features...>,group"
        )));
    }
    let names: Vec<String> = headers
        .iter()
        .skip(1)
        .take(headers.len() - 2)
        .map(str::to_string)
        .collect();
    let manifest = FeatureManifest::from_names(names);
    let mut vectors = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(&file_name, line, e.to_string()))?;
        if record.len() != manifest.len() + 2 {
            return Err(Error::parse(
                &file_name,
                line,
                format!("expected {} fields, got {}", manifest.len() + 2, record.len()),
            ));
        }
        let user_id = record[0].to_string();
        let mut values = Vec::with_capacity(manifest.len());
        for field in record.iter().skip(1).take(manifest.len()) {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::parse(&file_name, line, format!("bad number {field:?}")))?;
            values.push(v);
        }
        vectors.insert(user_id.clone(), UserFeatureVector { user_id, values });
    }
    if vectors.is_empty() {
        return Err(Error::InvalidInput(format!("{file_name}: no rows")));
    }
    Ok((vectors, manifest))
}

/// Vectorize users, aggregate per-news profiles, and persist both matrices.
pub fn run_extract(config: &PipelineConfig) -> Result<ExtractReport> {
    let corpus = load_filtered_corpus(config)?;
    let layout = OutLayout::new(&config.out_dir);
    require_artifact(&layout.groups())?;
    let groups: GroupsArtifact = read_json(&layout.groups())?;

    let (extractor, pca_fit_count) = build_pipeline_extractor(config, &corpus)?;
    let dm = build_design_matrix(&corpus, &extractor)?;

    let members: BTreeSet<String> = groups
        .selection
        .u_fake
        .union(&groups.selection.u_real)
        .cloned()
        .collect();
    let vectors = extractor.user_vectors(&corpus, &members)?;

    write_features_csv(&layout.features_csv(), &dm)?;
    write_user_features_csv(
        &layout.user_features_csv(),
        &vectors,
        &extractor.manifest,
        &groups.selection,
    )?;
    let report = ExtractReport {
        manifest: extractor.manifest.clone(),
        news_rows: dm.news_ids.len(),
        skipped_news: dm.skipped_news.clone(),
        group_user_rows: vectors.len(),
        pca_fit_news_count: pca_fit_count,
        pca_explained_variance: extractor.pca.as_ref().map(|p| p.explained_variance.clone()),
    };
    log::info!(
        "extract: {} features, {} news rows ({} skipped), {} group users",
        report.manifest.len(),
        report.news_rows,
        report.skipped_news.len(),
        report.group_user_rows
    );
    write_json(&layout.extract_report(), &report)?;
    write_stage_manifest(
        config,
        "extract",
        &[
            &layout.filtered_users(),
            &layout.filtered_news(),
            &layout.filtered_shares(),
            &layout.filtered_tweets(),
            &layout.groups(),
        ],
        &[
            &layout.features_csv(),
            &layout.user_features_csv(),
            &layout.extract_report(),
        ],
    )?;
    Ok(report)
}

/// Feature-by-feature statistical comparison of the two groups.
///
/// `groups_path` substitutes a different groups artifact for the default.
pub fn run_compare(
    config: &PipelineConfig,
    groups_path: Option<&Path>,
) -> Result<ComparisonReport> {
    let layout = OutLayout::new(&config.out_dir);
    let groups_path = groups_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| layout.groups());
    require_artifact(&groups_path)?;
    let groups: GroupsArtifact = read_json(&groups_path)?;
    let (vectors, manifest) = read_user_features_csv(&layout.user_features_csv())?;
    let report = compare_groups(&groups.selection, &vectors, &manifest)?;
    let significant = report
        .features
        .iter()
        .filter(|f| matches!(&f.detail, ComparisonDetail::Numeric { significant: true, .. }))
        .count();
    log::info!(
        "compare: {} features, {significant} of {} tests significant at alpha {}",
        report.features.len(),
        report.n_tests,
        report.alpha
    );
    write_json(&layout.report_json(), &report)?;
    write_atomic(&layout.report_md(), report.to_markdown().as_bytes())?;
    write_stage_manifest(
        config,
        "compare",
        &[&groups_path, &layout.user_features_csv()],
        &[&layout.report_json(), &layout.report_md()],
    )?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub seed: u64,
    pub train_frac: f64,
    pub reps: usize,
    /// Algorithm tag to its holdout report; every entry shares one split set.
    pub algorithms: BTreeMap<String, HoldoutReport>,
}

/// Repeated-holdout evaluation of one or more algorithms on the per-news
/// profile matrix. All algorithms see identical splits.
pub fn run_train_eval(config: &PipelineConfig, algorithms: &[Algorithm]) -> Result<EvalArtifact> {
    let layout = OutLayout::new(&config.out_dir);
    let dm = read_features_csv(&layout.features_csv())?;
    let dataset = Dataset::from_design_matrix(&dm)?;
    let hyper = Hyperparameters::default();
    let mut reports = BTreeMap::new();
    for &algorithm in algorithms {
        let report = repeated_holdout(
            &dataset,
            algorithm,
            &hyper,
            config.eval.train_frac,
            config.eval.reps,
            config.seed,
        )?;
        log::info!(
            "train-eval {}: mean accuracy {:.4}, mean F1 {:.4}",
            algorithm.tag(),
            report.mean.accuracy,
            report.mean.f1
        );
        reports.insert(algorithm.tag().to_string(), report);
    }
    let artifact = EvalArtifact {
        seed: config.seed,
        train_frac: config.eval.train_frac,
        reps: config.eval.reps,
        algorithms: reports,
    };
    write_json(&layout.eval_json(), &artifact)?;
    write_stage_manifest(
        config,
        "train-eval",
        &[&layout.features_csv()],
        &[&layout.eval_json()],
    )?;
    Ok(artifact)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceArtifact {
    pub seed: u64,
    #[serde(flatten)]
    pub report: ImportanceReport,
}

/// Gini importances of a random forest trained on the full matrix.
pub fn run_importance(config: &PipelineConfig) -> Result<ImportanceArtifact> {
    let layout = OutLayout::new(&config.out_dir);
    let dm = read_features_csv(&layout.features_csv())?;
    let dataset = Dataset::from_design_matrix(&dm)?;
    let model = train(
        Algorithm::RandomForest,
        &dataset,
        &Hyperparameters::default(),
        config.seed,
    )?;
    let report = gini_importance(&model)?;
    log::info!(
        "importance: top feature {} ({:.4})",
        report.ranked[0].0,
        report.ranked[0].1
    );
    let artifact = ImportanceArtifact {
        seed: config.seed,
        report,
    };
    write_json(&layout.importance_json(), &artifact)?;
    write_stage_manifest(
        config,
        "importance",
        &[&layout.features_csv()],
        &[&layout.importance_json()],
    )?;
    Ok(artifact)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationArtifact {
    pub algo: String,
    pub seed: u64,
    pub train_frac: f64,
    pub reps: usize,
    #[serde(flatten)]
    pub report: AblationReport,
}

/// Paired all/explicit/implicit ablation with the configured algorithm.
pub fn run_ablate(config: &PipelineConfig) -> Result<AblationArtifact> {
    let layout = OutLayout::new(&config.out_dir);
    let dm = read_features_csv(&layout.features_csv())?;
    let dataset = Dataset::from_design_matrix(&dm)?;
    let algorithm = config.eval.algorithm()?;
    let report = feature_group_ablation(
        &dataset,
        algorithm,
        &Hyperparameters::default(),
        config.eval.train_frac,
        config.eval.reps,
        config.seed,
    )?;
    log::info!(
        "ablate {}: all F1 {:.4}, explicit {:.4}, implicit {:.4}",
        algorithm.tag(),
        report.all.mean.f1,
        report.explicit.mean.f1,
        report.implicit.mean.f1
    );
    let artifact = AblationArtifact {
        algo: algorithm.tag().to_string(),
        seed: config.seed,
        train_frac: config.eval.train_frac,
        reps: config.eval.reps,
        report,
    };
    write_json(&layout.ablation_json(), &artifact)?;
    write_stage_manifest(
        config,
        "ablate",
        &[&layout.features_csv()],
        &[&layout.ablation_json()],
    )?;
    Ok(artifact)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineArtifact {
    pub matrix: String,
    pub concat_upf: bool,
    pub algo: String,
    pub seed: u64,
    pub train_frac: f64,
    pub reps: usize,
    #[serde(flatten)]
    pub report: HoldoutReport,
}

/// Evaluate an external per-news feature matrix, optionally concatenated
/// with the profile features.
pub fn run_baseline(
    config: &PipelineConfig,
    matrix_path: &Path,
    concat_upf: bool,
) -> Result<BaselineArtifact> {
    let layout = OutLayout::new(&config.out_dir);
    let dm = read_features_csv(&layout.features_csv())?;
    require_artifact(matrix_path)?;
    let algorithm = config.eval.algorithm()?;
    let report = external_baseline_eval(
        &dm,
        matrix_path,
        algorithm,
        &Hyperparameters::default(),
        config.eval.train_frac,
        config.eval.reps,
        config.seed,
        concat_upf,
    )?;
    log::info!(
        "baseline {} ({}): mean F1 {:.4}",
        matrix_path.display(),
        if concat_upf { "with profiles" } else { "alone" },
        report.mean.f1
    );
    let artifact = BaselineArtifact {
        matrix: matrix_path.display().to_string(),
        concat_upf,
        algo: algorithm.tag().to_string(),
        seed: config.seed,
        train_frac: config.eval.train_frac,
        reps: config.eval.reps,
        report,
    };
    write_json(&layout.baseline_json(), &artifact)?;
    write_stage_manifest(
        config,
        "baseline",
        &[&layout.features_csv(), matrix_path],
        &[&layout.baseline_json()],
    )?;
    Ok(artifact)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub alpha: f64,
    pub n_tests: usize,
    pub significant_features: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryArtifact {
    pub filter: Option<FilterStats>,
    pub partition: Option<PartitionSummary>,
    pub group_sizes: Option<(usize, usize)>,
    pub comparison: Option<ComparisonSummary>,
    pub evaluation: Option<EvalArtifact>,
    pub importance: Option<ImportanceArtifact>,
    pub ablation: Option<AblationArtifact>,
    pub baseline: Option<BaselineArtifact>,
}

fn read_json_if_present<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if path.exists() {
        Ok(Some(read_json(path)?))
    } else {
        Ok(None)
    }
}

fn metrics_row(label: &str, report: &HoldoutReport) -> String {
    format!(
        "| {label} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
        report.mean.accuracy, report.mean.precision, report.mean.recall, report.mean.f1
    )
}

fn render_final_report(summary: &SummaryArtifact, comparison_md: Option<&str>) -> String {
    let mut md = String::from("# Pipeline report\n");

    md.push_str("\n## Corpus filtering\n\n");
    match &summary.filter {
        Some(f) => {
            let _ = writeln!(
                md,
                "Removed {} likely bots, kept {} users ({:.1}% of fake-news sharers and \
                 {:.1}% of real-news sharers removed).",
                f.removed_count,
                f.kept_count,
                100.0 * f.removed_ratio_fake_sharers,
                100.0 * f.removed_ratio_real_sharers
            );
        }
        None => md.push_str("not run\n"),
    }

    md.push_str("\n## Spreader groups\n\n");
    match (&summary.partition, &summary.group_sizes) {
        (Some(p), Some((n_fake, n_real))) => {
            let _ = writeln!(
                md,
                "Sharers partitioned into {} only-fake, {} only-real, and {} mixed users; \
                 final groups hold {n_fake} fake-news and {n_real} real-news spreaders.",
                p.only_fake, p.only_real, p.mixed
            );
        }
        _ => md.push_str("not run\n"),
    }

    md.push_str("\n## Feature comparison\n\n");
    match comparison_md {
        Some(body) => {
            let body = body.strip_prefix("# Group comparison\n").unwrap_or(body);
            let body = body.trim_start_matches('\n').replace("\n## ", "\n### ");
            md.push_str(&body);
            if !md.ends_with('\n') {
                md.push('\n');
            }
        }
        None => md.push_str("not run\n"),
    }

    md.push_str("\n## Classification\n\n");
    match &summary.evaluation {
        Some(eval) => {
            let _ = writeln!(
                md,
                "Repeated random holdout, {} repetitions at train fraction {}.\n",
                eval.reps, eval.train_frac
            );
            md.push_str("| Algorithm | Accuracy | Precision | Recall | F1 |\n");
            md.push_str("|---|---|---|---|---|\n");
            for (tag, report) in &eval.algorithms {
                md.push_str(&metrics_row(tag, report));
            }
        }
        None => md.push_str("not run\n"),
    }

    md.push_str("\n## Feature importance\n\n");
    match &summary.importance {
        Some(imp) => {
            md.push_str("| Rank | Feature | Importance |\n|---|---|---|\n");
            for (rank, (name, value)) in imp.report.ranked.iter().take(10).enumerate() {
                let _ = writeln!(md, "| {} | {name} | {value:.4} |", rank + 1);
            }
        }
        None => md.push_str("not run\n"),
    }

    md.push_str("\n## Feature-group ablation\n\n");
    match &summary.ablation {
        Some(ab) => {
            let _ = writeln!(md, "Algorithm: {}, paired splits.\n", ab.algo);
            md.push_str("| Feature set | Accuracy | Precision | Recall | F1 |\n");
            md.push_str("|---|---|---|---|---|\n");
            md.push_str(&metrics_row("All", &ab.report.all));
            md.push_str(&metrics_row("Explicit", &ab.report.explicit));
            md.push_str(&metrics_row("Implicit", &ab.report.implicit));
        }
        None => md.push_str("not run\n"),
    }

    md.push_str("\n## External baseline\n\n");
    match &summary.baseline {
        Some(base) => {
            let _ = writeln!(
                md,
                "Matrix `{}`{}, algorithm {}.\n",
                base.matrix,
                if base.concat_upf {
                    " concatenated with profile features"
                } else {
                    ""
                },
                base.algo
            );
            md.push_str("| Feature set | Accuracy | Precision | Recall | F1 |\n");
            md.push_str("|---|---|---|---|---|\n");
            let label = if base.concat_upf {
                "External + profiles"
            } else {
                "External"
            };
            md.push_str(&metrics_row(label, &base.report));
            if let Some(eval) = &summary.evaluation {
                if let Some(upf) = eval.algorithms.get(&base.algo) {
                    md.push_str(&metrics_row("Profiles alone", upf));
                }
            }
        }
        None => md.push_str("not run\n"),
    }

    md
}

/// Aggregate whatever stage artifacts exist into one summary. Requires the
/// evaluation artifact; everything else degrades to "not run".
pub fn run_report(config: &PipelineConfig) -> Result<SummaryArtifact> {
    let layout = OutLayout::new(&config.out_dir);
    require_artifact(&layout.eval_json())?;
    let groups: Option<GroupsArtifact> = read_json_if_present(&layout.groups())?;
    let comparison: Option<ComparisonReport> = read_json_if_present(&layout.report_json())?;
    let summary = SummaryArtifact {
        filter: read_json_if_present(&layout.filter_stats())?,
        partition: groups.as_ref().map(|g| PartitionSummary {
            only_fake: g.partition.only_fake,
            only_real: g.partition.only_real,
            mixed: g.partition.mixed,
        }),
        group_sizes: groups
            .as_ref()
            .map(|g| (g.selection.u_fake.len(), g.selection.u_real.len())),
        comparison: comparison.as_ref().map(|report| ComparisonSummary {
            alpha: report.alpha,
            n_tests: report.n_tests,
            significant_features: report
                .features
                .iter()
                .filter(|f| {
                    matches!(&f.detail, ComparisonDetail::Numeric { significant: true, .. })
                })
                .map(|f| f.name.clone())
                .collect(),
        }),
        evaluation: read_json_if_present(&layout.eval_json())?,
        importance: read_json_if_present(&layout.importance_json())?,
        ablation: read_json_if_present(&layout.ablation_json())?,
        baseline: read_json_if_present(&layout.baseline_json())?,
    };
    let comparison_md = comparison.as_ref().map(|r| r.to_markdown());
    let report_md = render_final_report(&summary, comparison_md.as_deref());
    write_json(&layout.summary_json(), &summary)?;
    write_atomic(&layout.final_report_md(), report_md.as_bytes())?;
    write_stage_manifest(
        config,
        "report",
        &[&layout.eval_json()],
        &[&layout.summary_json(), &layout.final_report_md()],
    )?;
    log::info!("report: wrote {}", layout.final_report_md().display());
    Ok(summary)
}

/// Run the full pipeline in order. The synth stage is skipped when the
/// config points `inputs.users` at existing data.
pub fn run_all(config: &PipelineConfig) -> Result<SummaryArtifact> {
    if config.inputs.users.is_none() {
        run_synth(config)?;
    }
    run_ingest(config)?;
    run_filter_bots(config)?;
    run_group(config)?;
    run_extract(config)?;
    run_compare(config, None)?;
    run_train_eval(config, &Algorithm::ALL)?;
    run_importance(config)?;
    run_ablate(config)?;
    run_report(config)
}
