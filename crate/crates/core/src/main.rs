//! `upfkit`: command-line front end for the profile pipeline.
//!
//! Every subcommand is one pipeline stage; `all` chains them. Flags override
//! the loaded config for this invocation only. Exit codes: 0 success,
//! 2 missing input or artifact, 3 invalid configuration, 4 internal
//! invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use upfkit::config::PipelineConfig;
use upfkit::ml::HoldoutReport;
use upfkit::pipeline::{self, OutLayout};
use upfkit::Result;

#[derive(Parser)]
#[command(name = "upfkit", version, about = "User-profile pipeline for fake news detection")]
struct Cli {
    /// YAML config file; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the global seed (also reseeds the synthetic corpus).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Override the artifact output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus plus every side input the pipeline needs.
    Synth {
        /// Directory for the generated files (default: <out_dir>/synth).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Load and validate the input corpus.
    Ingest,
    /// Drop users whose bot score exceeds the threshold.
    FilterBots {
        /// Bot score above which a user is removed.
        #[arg(long, value_name = "T")]
        bot_threshold: Option<f64>,
    },
    /// Partition sharers and select the fake/real spreader groups.
    Group {
        /// Keep the top k users per side by share count.
        #[arg(long, value_name = "K")]
        k: Option<usize>,
        /// Fake-ratio band half-width for mixed users.
        #[arg(long, value_name = "T")]
        t: Option<f64>,
    },
    /// Build per-user features and per-news profile vectors.
    Extract,
    /// Compare the two groups feature by feature.
    Compare {
        /// Groups artifact to compare (default: <out_dir>/groups.json).
        #[arg(long, value_name = "FILE")]
        groups: Option<PathBuf>,
    },
    /// Train one classifier and evaluate it with repeated random holdout.
    TrainEval {
        /// Algorithm tag: rf, svm, dt, lr, nb, or ada.
        #[arg(long, value_name = "ALGO")]
        algo: Option<String>,
        /// Number of holdout repetitions.
        #[arg(long, value_name = "N")]
        reps: Option<usize>,
        /// Fraction of news items used for training.
        #[arg(long, value_name = "F")]
        train_frac: Option<f64>,
    },
    /// Rank features by random-forest Gini importance.
    Importance,
    /// Paired evaluation of all, explicit-only, and implicit-only features.
    Ablate {
        /// Algorithm tag: rf, svm, dt, lr, nb, or ada.
        #[arg(long, value_name = "ALGO")]
        algo: Option<String>,
    },
    /// Evaluate an external per-news feature matrix on the same task.
    Baseline {
        /// CSV with a news_id column followed by feature columns.
        #[arg(long, value_name = "FILE")]
        matrix: PathBuf,
        /// Concatenate the profile features onto the external matrix.
        #[arg(long)]
        concat_upf: bool,
        /// Algorithm tag: rf, svm, dt, lr, nb, or ada.
        #[arg(long, value_name = "ALGO")]
        algo: Option<String>,
    },
    /// Aggregate stage artifacts into summary.json and final_report.md.
    Report,
    /// Run every stage in order on one config.
    All,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn metrics_line(label: &str, report: &HoldoutReport) -> String {
    format!(
        "{label:<10} accuracy {:.4}  precision {:.4}  recall {:.4}  f1 {:.4}",
        report.mean.accuracy, report.mean.precision, report.mean.recall, report.mean.f1
    )
}

fn execute(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
        config.synth.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        config.out_dir = dir;
    }

    match cli.command {
        Command::Synth { out } => {
            if let Some(dir) = out {
                config.synth_dir = Some(dir);
            }
            pipeline::run_synth(&config)?;
            println!("wrote synthetic inputs under {}", config.synth_dir().display());
        }
        Command::Ingest => {
            let stats = pipeline::run_ingest(&config)?;
            println!(
                "loaded {} users, {} news items, {} shares ({} duplicates dropped), {} tweets",
                stats.user_count,
                stats.news_count,
                stats.share_count,
                stats.duplicate_shares_dropped,
                stats.tweet_count
            );
        }
        Command::FilterBots { bot_threshold } => {
            if let Some(t) = bot_threshold {
                config.bot_filter.threshold = t;
            }
            config.validate()?;
            let stats = pipeline::run_filter_bots(&config)?;
            println!(
                "removed {} of {} users at threshold {}",
                stats.removed_count,
                stats.removed_count + stats.kept_count,
                config.bot_filter.threshold
            );
        }
        Command::Group { k, t } => {
            if let Some(k) = k {
                config.grouping.k = k;
            }
            if let Some(t) = t {
                config.grouping.t = t;
            }
            config.validate()?;
            let artifact = pipeline::run_group(&config)?;
            println!(
                "selected {} fake-news and {} real-news spreaders \
                 (partition: {} only-fake, {} only-real, {} mixed)",
                artifact.selection.u_fake.len(),
                artifact.selection.u_real.len(),
                artifact.partition.only_fake,
                artifact.partition.only_real,
                artifact.partition.mixed
            );
        }
        Command::Extract => {
            let report = pipeline::run_extract(&config)?;
            println!(
                "extracted {} features for {} news items ({} skipped for lacking sharers) \
                 and {} group users",
                report.manifest.len(),
                report.news_rows,
                report.skipped_news.len(),
                report.group_user_rows
            );
        }
        Command::Compare { groups } => {
            let report = pipeline::run_compare(&config, groups.as_deref())?;
            let significant = report
                .features
                .iter()
                .filter(|f| {
                    matches!(
                        &f.detail,
                        upfkit::analysis::ComparisonDetail::Numeric { significant: true, .. }
                    )
                })
                .count();
            println!(
                "{significant} of {} tests significant at alpha {}; wrote {}",
                report.n_tests,
                report.alpha,
                OutLayout::new(&config.out_dir).report_md().display()
            );
        }
        Command::TrainEval { algo, reps, train_frac } => {
            if let Some(algo) = algo {
                config.eval.algo = algo;
            }
            if let Some(reps) = reps {
                config.eval.reps = reps;
            }
            if let Some(frac) = train_frac {
                config.eval.train_frac = frac;
            }
            config.validate()?;
            let algorithm = config.eval.algorithm()?;
            let artifact = pipeline::run_train_eval(&config, &[algorithm])?;
            for (tag, report) in &artifact.algorithms {
                println!("{}", metrics_line(tag, report));
            }
        }
        Command::Importance => {
            let artifact = pipeline::run_importance(&config)?;
            for (rank, (name, value)) in artifact.report.ranked.iter().take(10).enumerate() {
                println!("{:>2}. {name:<24} {value:.4}", rank + 1);
            }
        }
        Command::Ablate { algo } => {
            if let Some(algo) = algo {
                config.eval.algo = algo;
            }
            config.validate()?;
            let artifact = pipeline::run_ablate(&config)?;
            println!("{}", metrics_line("all", &artifact.report.all));
            println!("{}", metrics_line("explicit", &artifact.report.explicit));
            println!("{}", metrics_line("implicit", &artifact.report.implicit));
        }
        Command::Baseline { matrix, concat_upf, algo } => {
            if let Some(algo) = algo {
                config.eval.algo = algo;
            }
            config.validate()?;
            let artifact = pipeline::run_baseline(&config, &matrix, concat_upf)?;
            let label = if concat_upf { "external+upf" } else { "external" };
            println!("{}", metrics_line(label, &artifact.report));
        }
        Command::Report => {
            pipeline::run_report(&config)?;
            let layout = OutLayout::new(&config.out_dir);
            println!(
                "wrote {} and {}",
                layout.summary_json().display(),
                layout.final_report_md().display()
            );
        }
        Command::All => {
            let summary = pipeline::run_all(&config)?;
            if let Some(eval) = &summary.evaluation {
                for (tag, report) in &eval.algorithms {
                    println!("{}", metrics_line(tag, report));
                }
            }
            println!(
                "pipeline complete; artifacts under {}",
                config.out_dir.display()
            );
        }
    }
    Ok(())
}
