//! Experiment orchestration: per-query selection, prompt construction,
//! backend prediction, parsing, and scoring, over seeded trials with
//! checkpointing, ablation sweeps, and weight export.
//!
//! A run evaluates one selector on the challenge subset of one dataset, once
//! per seed. Online selectors receive their correctness reward after every
//! query and therefore evaluate strictly in order; offline selectors may
//! overlap their backend calls up to the HTTP in-flight window. Reports are
//! deterministic for a fixed config and seed set; wall-clock facts (latency,
//! timestamps) go to the run manifest instead so reports stay byte-
//! comparable.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{challenge_subset, load_dataset, DataFormat, Dataset, Example};
use crate::error::{Error, Result};
use crate::llm::{http_generate, parse_label, BackendConfig, BackendKind, OracleModel};
use crate::meta_sel::{train_metasel, MetaSelConfig, MetaSelModel};
use crate::optim::{LinearScorer, TrainConfig};
use crate::prompt::{build_prompt, PromptMode};
use crate::selectors::{build_selector, Selector, SelectorContext, SelectorKind};
use crate::synth::{generate_pair, SynthConfig};

/// Where the train/test pair comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Files {
        train: PathBuf,
        test: PathBuf,
        /// Inferred from the extension when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        format: Option<DataFormat>,
    },
    Synthetic {
        #[serde(default)]
        config: SynthConfig,
        #[serde(default = "default_synth_seed")]
        seed: u64,
    },
}

fn default_synth_seed() -> u64 {
    42
}

/// Full experiment description; serializable as the run-config JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataSource,
    pub selector: SelectorKind,
    #[serde(default = "default_k")]
    pub k: usize,
    pub backend: BackendConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_challenge_size")]
    pub challenge_size: usize,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub meta: MetaSelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Record a per-query trace in the report.
    #[serde(default)]
    pub trace: bool,
    /// Queries between checkpoints on the HTTP backend.
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
}

fn default_k() -> usize {
    5
}

fn default_seeds() -> Vec<u64> {
    vec![42, 43, 44]
}

fn default_challenge_size() -> usize {
    1000
}

fn default_checkpoint_every() -> usize {
    50
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInput("need at least one seed".into()));
        }
        if self.challenge_size == 0 {
            return Err(Error::InvalidInput(
                "challenge size must be at least 1".into(),
            ));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidInput(
                "checkpoint interval must be at least 1".into(),
            ));
        }
        self.selector.validate()?;
        self.backend.validate()?;
        if self.backend.kind != BackendKind::Http && self.selector == SelectorKind::ZeroShotCot {
            return Err(Error::InvalidInput(
                "the oracle backend needs demonstrations; zero_shot_cot requires an http backend"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Hash of everything that determines the results (the output directory
    /// does not).
    pub fn config_hash(&self) -> String {
        let mut stripped = self.clone();
        stripped.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&stripped).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..16].to_owned()
    }

    /// Apply the `METASEL_ENDPOINT` environment override to an HTTP backend.
    pub fn apply_env_overrides(&mut self) {
        if self.backend.kind == BackendKind::Http {
            if let Ok(endpoint) = std::env::var("METASEL_ENDPOINT") {
                if !endpoint.is_empty() {
                    self.backend.endpoint = endpoint;
                }
            }
        }
    }

    pub fn load_datasets(&self) -> Result<(Dataset, Dataset)> {
        match &self.data {
            DataSource::Files {
                train,
                test,
                format,
            } => {
                let train_format = match format {
                    Some(f) => *f,
                    None => DataFormat::from_path(train)?,
                };
                let test_format = match format {
                    Some(f) => *f,
                    None => DataFormat::from_path(test)?,
                };
                Ok((
                    load_dataset(train, train_format)?,
                    load_dataset(test, test_format)?,
                ))
            }
            DataSource::Synthetic { config, seed } => generate_pair(config, *seed),
        }
    }
}

/// Per-seed result summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub accuracy: f64,
    pub agreement_at_k: f64,
    pub rejections: usize,
}

/// One evaluated query, for optional tracing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub query_id: usize,
    pub demo_ids: Vec<usize>,
    pub parsed: Option<String>,
    pub correct: bool,
}

/// Wall-clock facts; reported in the run manifest, never in the report.
#[derive(Debug, Clone, Default)]
pub struct Timing {
    pub mean_selection_latency: Duration,
    pub total_wall: Duration,
}

/// Aggregated results of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub method: String,
    pub dataset: String,
    pub model: String,
    pub k: usize,
    pub n_queries: usize,
    pub per_seed: Vec<SeedOutcome>,
    /// Arithmetic mean of the per-seed accuracies.
    pub mean_accuracy: f64,
    /// Population standard deviation over seeds.
    pub std_accuracy: f64,
    pub mean_agreement_at_k: f64,
    pub rejections: usize,
    /// Per-seed selector state exports (scorer weights for the learned
    /// selector), when the selector has state worth recording.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selector_states: Vec<serde_json::Value>,
    pub config: RunConfig,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<Vec<TraceRow>>>,
    #[serde(skip)]
    pub timing: Timing,
}

fn mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    values.sum::<f64>() / n as f64
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// The prediction side of the loop.
enum Backend {
    Oracle(OracleModel),
    Http(BackendConfig),
}

/// What the report's `model` column should say for this backend.
fn model_label(config: &BackendConfig) -> String {
    match config.kind {
        BackendKind::Http => config.model.clone(),
        BackendKind::OracleOneMatch => "oracle".to_owned(),
        BackendKind::OracleNoisy => "oracle_noisy".to_owned(),
    }
}

impl Backend {
    fn from_config(config: &BackendConfig, labels: &[String]) -> Result<Self> {
        Ok(match config.kind {
            BackendKind::Http => Self::Http(config.clone()),
            BackendKind::OracleOneMatch => Self::Oracle(OracleModel::new(labels.to_vec(), 0.0)?),
            BackendKind::OracleNoisy => {
                Self::Oracle(OracleModel::new(labels.to_vec(), config.noise_rate)?)
            }
        })
    }

    /// Raw response for one query. The oracle answers from labels alone; the
    /// prompt is still built (and its length logged) for parity with the
    /// live path.
    fn predict(
        &self,
        prompt: &str,
        query_label: &str,
        demo_labels: &[&str],
        seed: u64,
        query_index: usize,
    ) -> Result<String> {
        match self {
            Self::Http(config) => http_generate(config, prompt),
            Self::Oracle(oracle) => {
                // A stream distinct from the selector's seed ^ query_index.
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
                        .wrapping_add(query_index as u64),
                );
                oracle.predict(query_label, demo_labels, &mut rng)
            }
        }
    }

    fn in_flight_window(&self) -> usize {
        match self {
            Self::Http(config) => config.max_in_flight.max(1),
            Self::Oracle(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CompletedQuery {
    query_id: usize,
    demo_ids: Vec<usize>,
    parsed: Option<String>,
    correct: bool,
    agreement: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    config_hash: String,
    seed: u64,
    completed: Vec<CompletedQuery>,
    selector_state: serde_json::Value,
}

fn checkpoint_path(output_dir: &Path, hash: &str, seed: u64) -> PathBuf {
    output_dir.join(format!("checkpoint_{hash}_{seed}.json"))
}

struct SeedRun {
    outcome: SeedOutcome,
    trace: Vec<TraceRow>,
    selector_state: serde_json::Value,
    selection_time: Duration,
    n_selections: usize,
}

/// Evaluate one seed over the challenge queries in order.
#[allow(clippy::too_many_arguments)]
fn run_seed(
    cfg: &RunConfig,
    hash: &str,
    seed: u64,
    selector: &mut dyn Selector,
    backend: &Backend,
    pool: &Dataset,
    challenge: &Dataset,
    prompt_mode: PromptMode,
) -> Result<SeedRun> {
    let checkpointing = matches!(backend, Backend::Http(_));
    let ckpt_path = checkpoint_path(&cfg.output_dir, hash, seed);
    let mut completed: Vec<CompletedQuery> = Vec::new();
    if checkpointing && ckpt_path.exists() {
        let bytes = std::fs::read(&ckpt_path)?;
        let ckpt: Checkpoint = serde_json::from_slice(&bytes)?;
        if ckpt.config_hash == hash && ckpt.seed == seed {
            selector.import_state(&ckpt.selector_state)?;
            completed = ckpt.completed;
            log::info!(
                "resuming seed {seed} from checkpoint at query {}",
                completed.len()
            );
        }
    }

    let mut selection_time = Duration::ZERO;
    let mut n_selections = 0usize;
    let window = if selector.is_online() {
        1
    } else {
        backend.in_flight_window()
    };
    let mut since_checkpoint = 0usize;

    let queries = &challenge.examples[completed.len()..];
    for chunk in queries.chunks(window.max(1)) {
        // Selection and prompts for the whole chunk first.
        struct Staged<'a> {
            query_index: usize,
            query: &'a Example,
            demo_ids: Vec<usize>,
            demo_labels: Vec<&'a str>,
            prompt: String,
        }
        let mut staged: Vec<Staged> = Vec::new();
        for query in chunk {
            let query_index = completed.len() + staged.len();
            let result = selector.select(&query.text, query_index, cfg.k)?;
            selection_time += result.selection_latency;
            n_selections += 1;
            let demos: Vec<&Example> = result
                .demo_ids
                .iter()
                .map(|&id| &pool.examples[id])
                .collect();
            let demo_labels: Vec<&str> = demos.iter().map(|d| d.label.as_str()).collect();
            let prompt = build_prompt(&query.text, &demos, &pool.labels, prompt_mode)?;
            log::debug!(
                "seed {seed} query {query_index}: prompt {} chars",
                prompt.chars().count()
            );
            staged.push(Staged {
                query_index,
                query,
                demo_ids: result.demo_ids,
                demo_labels,
                prompt,
            });
        }

        // Predictions, overlapped for the HTTP path.
        let responses: Vec<Result<String>> = if staged.len() == 1 {
            let s = &staged[0];
            vec![backend.predict(
                &s.prompt,
                &s.query.label,
                &s.demo_labels,
                seed,
                s.query_index,
            )]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = staged
                    .iter()
                    .map(|s| {
                        scope.spawn(move || {
                            backend.predict(
                                &s.prompt,
                                &s.query.label,
                                &s.demo_labels,
                                seed,
                                s.query_index,
                            )
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("no panic"))
                    .collect()
            })
        };

        for (s, response) in staged.into_iter().zip(responses) {
            let Staged {
                query_index,
                query,
                demo_ids,
                demo_labels,
                ..
            } = s;
            let raw = match response {
                Ok(raw) => raw,
                Err(e) => {
                    if checkpointing {
                        save_checkpoint(&ckpt_path, hash, seed, &completed, selector)?;
                    }
                    return Err(Error::Backend(format!(
                        "seed {seed} query {query_index}: {e} (progress checkpointed)"
                    )));
                }
            };
            let parsed = parse_label(&raw, &pool.labels);
            let correct = parsed.as_deref() == Some(query.label.as_str());
            let matching = demo_labels.iter().filter(|&&l| l == query.label).count();
            let agreement = if demo_ids.is_empty() {
                0.0
            } else {
                matching as f64 / demo_ids.len() as f64
            };
            if selector.is_online() {
                selector.update(&demo_ids, f64::from(u8::from(correct)));
            }
            completed.push(CompletedQuery {
                query_id: query.id,
                demo_ids,
                parsed,
                correct,
                agreement,
            });
            since_checkpoint += 1;
        }

        if checkpointing && since_checkpoint >= cfg.checkpoint_every {
            save_checkpoint(&ckpt_path, hash, seed, &completed, selector)?;
            since_checkpoint = 0;
        }
    }

    if checkpointing && ckpt_path.exists() {
        std::fs::remove_file(&ckpt_path)?;
    }

    let n = completed.len();
    let accuracy = completed.iter().filter(|c| c.correct).count() as f64 / n as f64;
    let agreement = completed.iter().map(|c| c.agreement).sum::<f64>() / n as f64;
    let rejections = completed.iter().filter(|c| c.parsed.is_none()).count();
    let trace = completed
        .iter()
        .map(|c| TraceRow {
            query_id: c.query_id,
            demo_ids: c.demo_ids.clone(),
            parsed: c.parsed.clone(),
            correct: c.correct,
        })
        .collect();
    Ok(SeedRun {
        outcome: SeedOutcome {
            seed,
            accuracy,
            agreement_at_k: agreement,
            rejections,
        },
        trace,
        selector_state: selector.export_state(),
        selection_time,
        n_selections,
    })
}

fn save_checkpoint(
    path: &Path,
    hash: &str,
    seed: u64,
    completed: &[CompletedQuery],
    selector: &dyn Selector,
) -> Result<()> {
    let ckpt = Checkpoint {
        config_hash: hash.to_owned(),
        seed,
        completed: completed.to_vec(),
        selector_state: selector.export_state(),
    };
    std::fs::write(path, serde_json::to_vec(&ckpt)?)?;
    Ok(())
}

type SelectorBuilder<'a> = dyn Fn(Arc<SelectorContext>, u64) -> Result<Box<dyn Selector>> + 'a;

/// The common trial loop behind [`run_experiment`] and the sweeps.
fn run_trials(
    method: &str,
    cfg: &RunConfig,
    train: &Dataset,
    challenge: &Dataset,
    prompt_mode: PromptMode,
    builder: &SelectorBuilder,
) -> Result<Report> {
    let started = Instant::now();
    let started_at = SystemTime::now();
    std::fs::create_dir_all(&cfg.output_dir)?;
    let hash = cfg.config_hash();
    let ctx = SelectorContext::build(train.clone())?;
    let backend = Backend::from_config(&cfg.backend, &train.labels)?;

    let mut per_seed = Vec::new();
    let mut traces = Vec::new();
    let mut selector_states = Vec::new();
    let mut selection_time = Duration::ZERO;
    let mut n_selections = 0usize;
    for &seed in &cfg.seeds {
        let mut selector = builder(ctx.clone(), seed)?;
        let run = run_seed(
            cfg,
            &hash,
            seed,
            selector.as_mut(),
            &backend,
            &ctx.train,
            challenge,
            prompt_mode,
        )?;
        per_seed.push(run.outcome);
        traces.push(run.trace);
        if !run.selector_state.is_null() {
            selector_states.push(run.selector_state);
        }
        selection_time += run.selection_time;
        n_selections += run.n_selections;
    }

    let accuracies: Vec<f64> = per_seed.iter().map(|s| s.accuracy).collect();
    let report = Report {
        method: method.to_owned(),
        dataset: train.name.clone(),
        model: model_label(&cfg.backend),
        k: cfg.k,
        n_queries: challenge.len(),
        mean_accuracy: mean(accuracies.iter().copied()),
        std_accuracy: population_std(&accuracies),
        mean_agreement_at_k: mean(per_seed.iter().map(|s| s.agreement_at_k)),
        rejections: per_seed.iter().map(|s| s.rejections).sum(),
        per_seed,
        selector_states,
        config: cfg.clone(),
        config_hash: hash,
        trace: if cfg.trace { Some(traces) } else { None },
        timing: Timing {
            mean_selection_latency: if n_selections == 0 {
                Duration::ZERO
            } else {
                selection_time / n_selections as u32
            },
            total_wall: started.elapsed(),
        },
    };
    write_run_files(&report, started_at)?;
    Ok(report)
}

/// Run the full protocol: load data, build the challenge subset, evaluate
/// every seed, and write the report, CSV row(s), and manifest.
pub fn run_experiment(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let (train, test) = cfg.load_datasets()?;
    run_experiment_on(cfg, &train, &test)
}

/// [`run_experiment`] over already-loaded datasets.
pub fn run_experiment_on(cfg: &RunConfig, train: &Dataset, test: &Dataset) -> Result<Report> {
    cfg.validate()?;
    let challenge = challenge_subset(train, test, cfg.challenge_size, cfg.seeds[0])?;
    let builder = |ctx: Arc<SelectorContext>, seed: u64| {
        build_selector(&cfg.selector, ctx, &cfg.meta, &cfg.train, seed)
    };
    run_trials(
        cfg.selector.name(),
        cfg,
        train,
        &challenge,
        cfg.selector.prompt_mode(),
        &builder,
    )
}

/// The LLM-free proxy metric: mean over queries of the fraction of selected
/// demonstrations sharing the query's true label. Online selectors receive
/// no rewards here, so their state stays at initialization.
pub fn label_agreement_at_k(
    train: &Dataset,
    queries: &Dataset,
    kind: &SelectorKind,
    k: usize,
    seed: u64,
    meta_cfg: &MetaSelConfig,
    train_cfg: &TrainConfig,
) -> Result<f64> {
    let ctx = SelectorContext::build(train.clone())?;
    let mut selector = build_selector(kind, ctx.clone(), meta_cfg, train_cfg, seed)?;
    let mut total = 0.0;
    for (query_index, query) in queries.examples.iter().enumerate() {
        let result = selector.select(&query.text, query_index, k)?;
        if !result.demo_ids.is_empty() {
            let matching = result
                .demo_ids
                .iter()
                .filter(|&&id| ctx.train.examples[id].label == query.label)
                .count();
            total += matching as f64 / result.demo_ids.len() as f64;
        }
    }
    Ok(total / queries.len() as f64)
}

/// Ablation axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum Sweep {
    /// Demonstration-budget sweep.
    K { values: Vec<usize> },
    /// Meta-training-size sweep for the learned selector.
    MetaSize { variants: Vec<MetaVariant> },
}

impl Sweep {
    pub fn default_k() -> Self {
        Self::K {
            values: vec![3, 5, 10, 20],
        }
    }

    pub fn default_meta_size() -> Self {
        Self::MetaSize {
            variants: vec![
                MetaVariant::NoMeta,
                MetaVariant::Small,
                MetaVariant::Default,
                MetaVariant::Large,
            ],
        }
    }
}

/// Meta-training sizes for the meta-size sweep. `NoMeta` skips training
/// entirely and ranks by raw cosine (fixed scorer `theta = (1, 0), b = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaVariant {
    NoMeta,
    Small,
    Default,
    Large,
}

impl MetaVariant {
    pub fn label(&self) -> &'static str {
        match self {
            Self::NoMeta => "no_meta",
            Self::Small => "meta_small",
            Self::Default => "meta_default",
            Self::Large => "meta_large",
        }
    }

    /// Meta split sizes; `None` for the untrained cosine ranker.
    pub fn meta_config(&self) -> Option<MetaSelConfig> {
        match self {
            Self::NoMeta => None,
            Self::Small => Some(MetaSelConfig {
                n_queries: 30,
                n_candidates: 150,
            }),
            Self::Default => Some(MetaSelConfig::default()),
            Self::Large => Some(MetaSelConfig {
                n_queries: 120,
                n_candidates: 600,
            }),
        }
    }
}

/// Run a sweep and emit one report per point plus a combined
/// `ablation.csv` in the output directory.
pub fn ablation_sweep(cfg: &RunConfig, sweep: &Sweep) -> Result<Vec<Report>> {
    cfg.validate()?;
    let (train, test) = cfg.load_datasets()?;
    let mut reports = Vec::new();
    match sweep {
        Sweep::K { values } => {
            for &k in values {
                let mut point = cfg.clone();
                point.k = k;
                point.output_dir = cfg.output_dir.join(format!("k_{k}"));
                reports.push(run_experiment_on(&point, &train, &test)?);
            }
        }
        Sweep::MetaSize { variants } => {
            let challenge = challenge_subset(&train, &test, cfg.challenge_size, cfg.seeds[0])?;
            for variant in variants {
                let mut point = cfg.clone();
                point.output_dir = cfg.output_dir.join(variant.label());
                point.selector = SelectorKind::MetaSel {
                    exclude_exact_text: false,
                };
                if let Some(meta) = variant.meta_config() {
                    point.meta = meta;
                }
                let meta_cfg = variant.meta_config();
                let train_cfg = point.train.clone();
                let builder = move |ctx: Arc<SelectorContext>, seed: u64| {
                    let model = match meta_cfg {
                        Some(meta) => train_metasel(&ctx.train, &meta, &train_cfg, seed)?,
                        None => MetaSelModel::with_fixed_scorer(
                            &ctx.train,
                            LinearScorer::new(vec![1.0, 0.0], 0.0),
                        )?,
                    };
                    Ok(
                        Box::new(crate::selectors::MetaSelSelector::from_model(model))
                            as Box<dyn Selector>,
                    )
                };
                reports.push(run_trials(
                    variant.label(),
                    &point,
                    &train,
                    &challenge,
                    PromptMode::PlainIcl,
                    &builder,
                )?);
            }
        }
    }
    write_ablation_csv(&cfg.output_dir, sweep, &reports)?;
    Ok(reports)
}

/// Scorer weights in reporting form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub w_sim: f64,
    pub w_len: f64,
    pub intercept: f64,
}

/// The scorer weights of a trained model.
pub fn export_weights(model: &MetaSelModel) -> WeightRecord {
    WeightRecord {
        w_sim: model.scorer.theta[0],
        w_len: model.scorer.theta[1],
        intercept: model.scorer.bias,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedWeights {
    pub seed: u64,
    #[serde(flatten)]
    pub weights: WeightRecord,
}

/// Per-seed weights plus mean and population standard deviation, the data
/// behind the feature-weight table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    pub dataset: String,
    pub per_seed: Vec<SeedWeights>,
    pub mean: WeightRecord,
    pub std: WeightRecord,
}

/// Train one model per seed and collect the weight table.
pub fn export_weights_across_seeds(
    train: &Dataset,
    meta_cfg: &MetaSelConfig,
    train_cfg: &TrainConfig,
    seeds: &[u64],
) -> Result<WeightReport> {
    if seeds.is_empty() {
        return Err(Error::InvalidInput("need at least one seed".into()));
    }
    let mut per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let model = train_metasel(train, meta_cfg, train_cfg, seed)?;
        per_seed.push(SeedWeights {
            seed,
            weights: export_weights(&model),
        });
    }
    let sims: Vec<f64> = per_seed.iter().map(|s| s.weights.w_sim).collect();
    let lens: Vec<f64> = per_seed.iter().map(|s| s.weights.w_len).collect();
    let bias: Vec<f64> = per_seed.iter().map(|s| s.weights.intercept).collect();
    Ok(WeightReport {
        dataset: train.name.clone(),
        per_seed,
        mean: WeightRecord {
            w_sim: mean(sims.iter().copied()),
            w_len: mean(lens.iter().copied()),
            intercept: mean(bias.iter().copied()),
        },
        std: WeightRecord {
            w_sim: population_std(&sims),
            w_len: population_std(&lens),
            intercept: population_std(&bias),
        },
    })
}

/// report.json (deterministic), a results.csv row per seed, the run
/// manifest (timestamps and timing), and weights.json when the selector
/// exported scorer states.
fn write_run_files(report: &Report, started_at: SystemTime) -> Result<()> {
    let dir = &report.config.output_dir;
    std::fs::write(dir.join("report.json"), serde_json::to_vec_pretty(report)?)?;

    let csv_path = dir.join("results.csv");
    let new_file = !csv_path.exists();
    let mut writer = csv::WriterBuilder::new().from_writer(
        std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&csv_path)?,
    );
    if new_file {
        writer.write_record([
            "method",
            "dataset",
            "model",
            "seed",
            "k",
            "n_queries",
            "accuracy",
            "agreement_at_k",
            "rejections",
        ])?;
    }
    for seed in &report.per_seed {
        writer.write_record([
            report.method.as_str(),
            report.dataset.as_str(),
            report.model.as_str(),
            &seed.seed.to_string(),
            &report.k.to_string(),
            &report.n_queries.to_string(),
            &format!("{:.6}", seed.accuracy),
            &format!("{:.6}", seed.agreement_at_k),
            &seed.rejections.to_string(),
        ])?;
    }
    writer.flush()?;

    let unix = |t: SystemTime| {
        t.duration_since(SystemTime::UNIX_EPOCH)
            .unwrap_or(Duration::ZERO)
            .as_secs()
    };
    let manifest = serde_json::json!({
        "config_hash": report.config_hash,
        "started_unix": unix(started_at),
        "finished_unix": unix(SystemTime::now()),
        "git_revision": "unknown",
        "timing": {
            "mean_selection_latency_ms": report.timing.mean_selection_latency.as_secs_f64() * 1e3,
            "total_wall_s": report.timing.total_wall.as_secs_f64(),
        },
    });
    std::fs::write(
        dir.join("run_manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;

    if !report.selector_states.is_empty() {
        std::fs::write(
            dir.join("selector_state.json"),
            serde_json::to_vec_pretty(&report.selector_states)?,
        )?;
    }
    Ok(())
}

fn write_ablation_csv(dir: &Path, sweep: &Sweep, reports: &[Report]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut writer = csv::Writer::from_path(dir.join("ablation.csv"))?;
    writer.write_record([
        "axis",
        "point",
        "method",
        "k",
        "mean_accuracy",
        "std_accuracy",
        "mean_agreement_at_k",
    ])?;
    let axis = match sweep {
        Sweep::K { .. } => "k",
        Sweep::MetaSize { .. } => "meta_size",
    };
    for report in reports {
        let point = match sweep {
            Sweep::K { .. } => report.k.to_string(),
            Sweep::MetaSize { .. } => report.method.clone(),
        };
        writer.write_record([
            axis,
            &point,
            &report.method,
            &report.k.to_string(),
            &format!("{:.6}", report.mean_accuracy),
            &format!("{:.6}", report.std_accuracy),
            &format!("{:.6}", report.mean_agreement_at_k),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
