//! Command-line entry point binding all modules.
//!
//! One subcommand per workflow step: `ingest` validates/converts dataset
//! files, `challenge` writes a challenge subset, `meta-train` writes a model
//! bundle, `select` ranks demonstrations for a query, `bench` and `ablate`
//! drive the benchmark harness from a JSON run config, and `export-weights`
//! prints the learned feature-weight table. Every command honors `--seed`
//! and is reproducible under it.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::bench::{ablation_sweep, export_weights_across_seeds, run_experiment, RunConfig, Sweep};
use crate::corpus::{challenge_subset, load_dataset, save_dataset, DataFormat};
use crate::error::Result;
use crate::meta_sel::{train_metasel, MetaSelConfig, MetaSelModel, SelectOptions};
use crate::optim::TrainConfig;

#[derive(Parser)]
#[command(
    name = "metasel",
    version,
    about = "Demonstration selection for few-shot intent classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a dataset file and optionally convert between formats.
    Ingest(IngestArgs),
    /// Write the challenge subset of a test split.
    Challenge(ChallengeArgs),
    /// Train a selection model and write it as a bundle.
    MetaTrain(MetaTrainArgs),
    /// Rank the top-k demonstrations for a query.
    Select(SelectArgs),
    /// Run a benchmark from a JSON run config.
    Bench(BenchArgs),
    /// Run an ablation sweep from a JSON run config.
    Ablate(AblateArgs),
    /// Train across seeds and print the feature-weight table.
    ExportWeights(ExportWeightsArgs),
}

#[derive(Args)]
struct IngestArgs {
    /// Input dataset (.jsonl or .csv).
    #[arg(long)]
    input: PathBuf,
    /// Where to write the validated dataset; defaults to validate-only.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ChallengeArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Number of boundary-nearest test queries to keep.
    #[arg(long, default_value_t = 1000)]
    size: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output path (.jsonl or .csv).
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct MetaTrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Meta-query sample size.
    #[arg(long, default_value_t = 60)]
    queries: usize,
    /// Meta-candidate sample size.
    #[arg(long, default_value_t = 300)]
    candidates: usize,
    /// Output bundle path.
    #[arg(long, default_value = "model.msm")]
    output: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    /// Model bundle written by meta-train.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Drop pool candidates whose text equals the query exactly.
    #[arg(long, default_value_t = false)]
    exclude_exact: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON run config (see the repository README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's output directory.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the config's demonstration budget.
    #[arg(long)]
    k: Option<usize>,
    /// Override the config's seed list (comma-separated).
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Override the config's challenge-subset size.
    #[arg(long)]
    challenge_size: Option<usize>,
    /// Override the backend endpoint (also: METASEL_ENDPOINT).
    #[arg(long)]
    endpoint: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Sweep axis: "k" or "meta".
    #[arg(long)]
    sweep: String,
    /// Demonstration budgets for the k sweep (comma-separated).
    #[arg(long, value_delimiter = ',')]
    k_values: Option<Vec<usize>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ExportWeightsArgs {
    #[arg(long)]
    train: PathBuf,
    /// Seeds to train one model each (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "42,43,44")]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 60)]
    queries: usize,
    #[arg(long, default_value_t = 300)]
    candidates: usize,
    /// Write the table as JSON here instead of stdout only.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Parse `argv` and run. Returns the process exit status.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print to stdout and exit 0.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(args) => {
            let format = DataFormat::from_path(&args.input)?;
            let dataset = load_dataset(&args.input, format)?;
            println!(
                "{}: {} examples, {} labels",
                dataset.name,
                dataset.len(),
                dataset.labels.len()
            );
            if let Some(output) = args.output {
                let out_format = DataFormat::from_path(&output)?;
                save_dataset(&dataset, &output, out_format)?;
                println!("wrote {}", output.display());
            }
            Ok(())
        }
        Command::Challenge(args) => {
            let train = load_dataset(&args.train, DataFormat::from_path(&args.train)?)?;
            let test = load_dataset(&args.test, DataFormat::from_path(&args.test)?)?;
            let subset = challenge_subset(&train, &test, args.size, args.seed)?;
            save_dataset(&subset, &args.output, DataFormat::from_path(&args.output)?)?;
            println!(
                "wrote {} ({} queries nearest the decision boundary)",
                args.output.display(),
                subset.len()
            );
            Ok(())
        }
        Command::MetaTrain(args) => {
            let train = load_dataset(&args.train, DataFormat::from_path(&args.train)?)?;
            let meta = MetaSelConfig {
                n_queries: args.queries,
                n_candidates: args.candidates,
            };
            let model = train_metasel(&train, &meta, &TrainConfig::default(), args.seed)?;
            model.save(&args.output)?;
            println!(
                "trained on {} examples in {:.3}s; wrote {}",
                train.len(),
                model.offline_time.as_secs_f64(),
                args.output.display()
            );
            println!("{}", serde_json::to_string_pretty(&model.export_scorer())?);
            Ok(())
        }
        Command::Select(args) => {
            let model = MetaSelModel::load(&args.model)?;
            let result = model.select_with(
                &args.query,
                args.k,
                SelectOptions {
                    exclude_exact_text: args.exclude_exact,
                },
            )?;
            for (id, score) in result.demo_ids.iter().zip(&result.scores) {
                let example = &model.examples[*id];
                println!("{id}\t{score:.6}\t{}\t{}", example.label, example.text);
            }
            Ok(())
        }
        Command::Bench(args) => {
            let mut cfg = load_run_config(&args.config)?;
            apply_overrides(
                &mut cfg,
                args.output_dir,
                args.k,
                args.seeds,
                args.challenge_size,
                args.endpoint,
            );
            let report = run_experiment(&cfg)?;
            println!(
                "{} on {} ({}): accuracy {:.4} +/- {:.4}, agreement@{} {:.4}, {} rejections",
                report.method,
                report.dataset,
                report.model,
                report.mean_accuracy,
                report.std_accuracy,
                report.k,
                report.mean_agreement_at_k,
                report.rejections
            );
            println!("report: {}", cfg.output_dir.join("report.json").display());
            Ok(())
        }
        Command::Ablate(args) => {
            let mut cfg = load_run_config(&args.config)?;
            apply_overrides(&mut cfg, args.output_dir, None, None, None, None);
            let sweep = match args.sweep.as_str() {
                "k" => match args.k_values {
                    Some(values) => Sweep::K { values },
                    None => Sweep::default_k(),
                },
                "meta" => Sweep::default_meta_size(),
                other => {
                    return Err(crate::error::Error::InvalidInput(format!(
                        "unknown sweep axis {other:?} (expected \"k\" or \"meta\")"
                    )))
                }
            };
            let reports = ablation_sweep(&cfg, &sweep)?;
            for report in &reports {
                println!(
                    "{:<14} k={:<3} accuracy {:.4} +/- {:.4}",
                    report.method, report.k, report.mean_accuracy, report.std_accuracy
                );
            }
            println!("table: {}", cfg.output_dir.join("ablation.csv").display());
            Ok(())
        }
        Command::ExportWeights(args) => {
            let train = load_dataset(&args.train, DataFormat::from_path(&args.train)?)?;
            let meta = MetaSelConfig {
                n_queries: args.queries,
                n_candidates: args.candidates,
            };
            let report =
                export_weights_across_seeds(&train, &meta, &TrainConfig::default(), &args.seeds)?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(output) = args.output {
                std::fs::write(&output, json)?;
                println!("wrote {}", output.display());
            }
            Ok(())
        }
    }
}

fn load_run_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: RunConfig = serde_json::from_str(&text)?;
    Ok(cfg)
}

/// Precedence: flag > environment > config file.
fn apply_overrides(
    cfg: &mut RunConfig,
    output_dir: Option<PathBuf>,
    k: Option<usize>,
    seeds: Option<Vec<u64>>,
    challenge_size: Option<usize>,
    endpoint: Option<String>,
) {
    cfg.apply_env_overrides();
    if let Some(dir) = output_dir {
        cfg.output_dir = dir;
    }
    if let Some(k) = k {
        cfg.k = k;
    }
    if let Some(seeds) = seeds {
        cfg.seeds = seeds;
    }
    if let Some(size) = challenge_size {
        cfg.challenge_size = size;
    }
    if let Some(endpoint) = endpoint {
        cfg.backend.endpoint = endpoint;
    }
}
