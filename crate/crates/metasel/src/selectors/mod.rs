//! The baseline selection strategies behind one [`Selector`] trait, so the
//! benchmark drives every method through the same loop.
//!
//! Offline selectors (random, ICL, CoT variants, diversity, uncertainty,
//! influence, the learned scorer) never mutate state during evaluation and
//! are reproducible from `(seed, query_index)` alone. Online selectors
//! (Thompson-sampling bandit, Q-learning, actor-critic) consume a correctness
//! reward after every query via [`Selector::update`] and must be driven
//! sequentially.

mod a2c;
mod bandit;
mod diversity;
mod influence;
mod qlearn;
mod uncertainty;

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::meta_sel::{
    top_k_indices, train_metasel, MetaSelConfig, MetaSelModel, SelectOptions, SelectionResult,
};
use crate::optim::TrainConfig;
use crate::prompt::PromptMode;
use crate::vectorize::{fit_vectorizer, PoolMatrix, Vectorizer};

pub use a2c::{A2cConfig, A2cSelector, ActorCriticState};
pub use bandit::{BanditState, TsBanditSelector};
pub use diversity::DiversitySelector;
pub use influence::InfluenceSelector;
pub use qlearn::{QConfig, QLearningSelector, QState};
pub use uncertainty::UncertaintySelector;

/// Per-query RNG stream: `seed ^ query_index`, so any single trial is
/// reproducible without replaying the ones before it.
pub(crate) fn query_rng(seed: u64, query_index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ query_index as u64)
}

/// Shared, immutable per-dataset precomputation: the candidate pool, its
/// fitted vocabulary and embeddings, and per-candidate label/length tables.
#[derive(Debug)]
pub struct SelectorContext {
    pub train: Dataset,
    pub vectorizer: Vectorizer,
    pub pool: PoolMatrix,
    /// Class index per candidate, into `train.labels`.
    pub label_ids: Vec<usize>,
    /// Candidates per class, aligned with `train.labels`.
    pub class_counts: Vec<usize>,
    /// Character count per candidate text.
    pub text_chars: Vec<usize>,
}

impl SelectorContext {
    pub fn build(train: Dataset) -> Result<Arc<Self>> {
        let vectorizer = fit_vectorizer(&train.texts())?;
        let pool = PoolMatrix::build(&vectorizer, &train.texts());
        let label_ids = train
            .examples
            .iter()
            .map(|e| train.label_index(&e.label).expect("label in vocabulary"))
            .collect();
        let class_counts = train.class_counts();
        let text_chars = train
            .examples
            .iter()
            .map(|e| e.text.chars().count())
            .collect();
        Ok(Arc::new(Self {
            train,
            vectorizer,
            pool,
            label_ids,
            class_counts,
            text_chars,
        }))
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.pool_size() {
            return Err(Error::InvalidInput(format!(
                "k = {k} out of range for pool of {}",
                self.pool_size()
            )));
        }
        Ok(())
    }
}

/// A demonstration selection strategy.
pub trait Selector: Send {
    fn name(&self) -> &'static str;

    /// Whether the strategy learns from rewards during evaluation.
    fn is_online(&self) -> bool {
        false
    }

    /// Pick demonstrations for one query. Offline strategies must not mutate
    /// observable state here; `&mut self` exists for internal caches and for
    /// the online strategies.
    fn select(&mut self, query_text: &str, query_index: usize, k: usize)
        -> Result<SelectionResult>;

    /// Deliver the correctness reward for the most recent selection. No-op
    /// for offline strategies.
    fn update(&mut self, selected: &[usize], reward: f64) {
        let _ = (selected, reward);
    }

    /// Internal state for inspection and checkpointing; `Null` when the
    /// strategy is stateless.
    fn export_state(&self) -> serde_json::Value {
        serde_json::Value::Null
    }

    /// Restore state exported by [`Selector::export_state`].
    fn import_state(&mut self, state: &serde_json::Value) -> Result<()> {
        if state.is_null() {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "{} selector has no importable state",
                self.name()
            )))
        }
    }
}

/// Selection strategy choices with their hyperparameters, as they appear in
/// run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorKind {
    /// Uniform sampling without replacement.
    Random,
    /// Standard in-context learning with randomly chosen labeled examples;
    /// same sampling as `Random`, named separately for reporting.
    Icl,
    /// No demonstrations; the prompt carries a step-by-step cue.
    ZeroShotCot,
    /// Random demonstrations whose stored rationales are passed through.
    FewShotCot,
    /// K-means over pool embeddings; one representative per centroid.
    Diversity,
    /// Highest label-entropy candidates under a similarity-weighted
    /// neighborhood vote.
    Uncertainty {
        #[serde(default = "default_m_neighbors")]
        m_neighbors: usize,
    },
    /// Query similarity weighted by the candidate's class frequency prior.
    Influence,
    /// Thompson sampling over per-candidate Beta(1, 1) arms.
    TsBandit,
    /// Q-learning with epsilon-greedy exploration and a diversity bonus.
    Rdes {
        #[serde(default = "default_lambda")]
        lambda: f64,
        #[serde(default = "default_theta_div")]
        theta_div: f64,
    },
    /// Accuracy-only Q-learning: `Rdes` with `lambda = 0`, `theta_div = 0`.
    Reinforce,
    /// Linear actor-critic over the pair features.
    A2c,
    /// The trained pair scorer.
    MetaSel {
        #[serde(default)]
        exclude_exact_text: bool,
    },
}

fn default_m_neighbors() -> usize {
    20
}

fn default_lambda() -> f64 {
    0.5
}

fn default_theta_div() -> f64 {
    0.5
}

impl SelectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Icl => "icl",
            Self::ZeroShotCot => "zero_shot_cot",
            Self::FewShotCot => "few_shot_cot",
            Self::Diversity => "diversity",
            Self::Uncertainty { .. } => "uncertainty",
            Self::Influence => "influence",
            Self::TsBandit => "ts_bandit",
            Self::Rdes { .. } => "rdes",
            Self::Reinforce => "reinforce",
            Self::A2c => "a2c",
            Self::MetaSel { .. } => "meta_sel",
        }
    }

    /// The prompt layout this strategy evaluates under.
    pub fn prompt_mode(&self) -> PromptMode {
        match self {
            Self::ZeroShotCot => PromptMode::ZeroShotCot,
            Self::FewShotCot => PromptMode::FewShotCotPassthrough,
            _ => PromptMode::PlainIcl,
        }
    }

    pub fn is_online(&self) -> bool {
        matches!(
            self,
            Self::TsBandit | Self::Rdes { .. } | Self::Reinforce | Self::A2c
        )
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Uncertainty { m_neighbors } if *m_neighbors == 0 => Err(Error::InvalidInput(
                "uncertainty needs at least one neighbor".into(),
            )),
            Self::Rdes { lambda, theta_div } => {
                if !lambda.is_finite() || *lambda < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "diversity weight {lambda} must be nonnegative"
                    )));
                }
                if !theta_div.is_finite() {
                    return Err(Error::InvalidInput(
                        "diversity threshold must be finite".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Instantiate a selector for one evaluation trial. Meta-training for the
/// learned scorer happens here, seeded by `seed`.
pub fn build_selector(
    kind: &SelectorKind,
    ctx: Arc<SelectorContext>,
    meta_cfg: &MetaSelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<Box<dyn Selector>> {
    kind.validate()?;
    Ok(match kind {
        SelectorKind::Random => Box::new(RandomSelector::new("random", ctx, seed)),
        SelectorKind::Icl => Box::new(RandomSelector::new("icl", ctx, seed)),
        SelectorKind::ZeroShotCot => Box::new(ZeroShotSelector),
        SelectorKind::FewShotCot => Box::new(RandomSelector::new("few_shot_cot", ctx, seed)),
        SelectorKind::Diversity => Box::new(DiversitySelector::new(ctx, seed)),
        SelectorKind::Uncertainty { m_neighbors } => {
            Box::new(UncertaintySelector::new(ctx, *m_neighbors))
        }
        SelectorKind::Influence => Box::new(InfluenceSelector::new(ctx)),
        SelectorKind::TsBandit => Box::new(TsBanditSelector::new(ctx, seed)),
        SelectorKind::Rdes { lambda, theta_div } => Box::new(QLearningSelector::new(
            "rdes",
            ctx,
            QConfig {
                lambda: *lambda,
                theta_div: *theta_div,
                ..QConfig::default()
            },
            seed,
        )),
        SelectorKind::Reinforce => Box::new(QLearningSelector::new(
            "reinforce",
            ctx,
            QConfig {
                lambda: 0.0,
                theta_div: 0.0,
                ..QConfig::default()
            },
            seed,
        )),
        SelectorKind::A2c => Box::new(A2cSelector::new(ctx, A2cConfig::default(), seed)),
        SelectorKind::MetaSel { exclude_exact_text } => {
            let model = train_metasel(&ctx.train, meta_cfg, train_cfg, seed)?;
            Box::new(MetaSelSelector {
                model,
                options: SelectOptions {
                    exclude_exact_text: *exclude_exact_text,
                },
            })
        }
    })
}

/// Uniform sampling without replacement, reseeded per query so trials are
/// reproducible in isolation. Also serves as the ICL and few-shot CoT
/// sampler.
pub struct RandomSelector {
    name: &'static str,
    ctx: Arc<SelectorContext>,
    seed: u64,
}

impl RandomSelector {
    pub fn new(name: &'static str, ctx: Arc<SelectorContext>, seed: u64) -> Self {
        Self { name, ctx, seed }
    }
}

impl Selector for RandomSelector {
    fn name(&self) -> &'static str {
        self.name
    }

    fn select(&mut self, _query: &str, query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        let started = Instant::now();
        let mut rng = query_rng(self.seed, query_index);
        let demo_ids = rand::seq::index::sample(&mut rng, self.ctx.pool_size(), k).into_vec();
        Ok(SelectionResult {
            scores: vec![0.0; demo_ids.len()],
            demo_ids,
            selection_latency: started.elapsed(),
        })
    }
}

/// The no-demonstration strategy: always returns an empty selection; the
/// prompt mode supplies the reasoning cue.
pub struct ZeroShotSelector;

impl Selector for ZeroShotSelector {
    fn name(&self) -> &'static str {
        "zero_shot_cot"
    }

    fn select(&mut self, _query: &str, _query_index: usize, _k: usize) -> Result<SelectionResult> {
        Ok(SelectionResult {
            demo_ids: Vec::new(),
            scores: Vec::new(),
            selection_latency: std::time::Duration::ZERO,
        })
    }
}

/// The learned scorer behind the common trait.
pub struct MetaSelSelector {
    pub model: MetaSelModel,
    options: SelectOptions,
}

impl MetaSelSelector {
    /// Wrap an already-built model, e.g. the fixed cosine-only scorer used
    /// by the meta-size ablation.
    pub fn from_model(model: MetaSelModel) -> Self {
        Self {
            model,
            options: SelectOptions::default(),
        }
    }
}

impl Selector for MetaSelSelector {
    fn name(&self) -> &'static str {
        "meta_sel"
    }

    fn select(&mut self, query: &str, _query_index: usize, k: usize) -> Result<SelectionResult> {
        self.model.select_with(query, k, self.options)
    }

    fn export_state(&self) -> serde_json::Value {
        self.model.export_scorer()
    }
}

/// Shared by the ranking selectors: cut the top k of a score table and
/// report the winning scores, ties broken by candidate id ascending.
pub(crate) fn ranked_result(scores: &[f64], k: usize, started: Instant) -> SelectionResult {
    let demo_ids = top_k_indices(scores, k);
    SelectionResult {
        scores: demo_ids.iter().map(|&i| scores[i]).collect(),
        demo_ids,
        selection_latency: started.elapsed(),
    }
}
