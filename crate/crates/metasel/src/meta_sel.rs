//! The learned demonstration selector: meta-feature extraction, meta-dataset
//! construction, offline training, and deterministic top-k selection.
//!
//! Training samples (query, candidate) pairs from the labeled pool, labels
//! each pair by class agreement, and fits a balanced logistic scorer on two
//! features per pair: TF-IDF cosine similarity and the candidate/query
//! character-length ratio. Selection is one vectorized cosine pass over the
//! precomputed pool followed by a linear scoring sweep; no model calls, no
//! state.

use std::io::{Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::{sample_meta_split, Dataset, Example, MetaSplit};
use crate::error::{Error, Result};
use crate::optim::{
    balanced_weights, fit_logistic, sigmoid, FeatureMatrix, FitReport, LinearScorer, TrainConfig,
};
use crate::vectorize::{cosine_to_pool, fit_vectorizer, PoolMatrix, SparseVector, Vectorizer};

/// The two pair features the scorer sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// TF-IDF cosine similarity between candidate and query, in [0, 1].
    pub sim: f64,
    /// Candidate length over query length, in characters; 0 for an empty
    /// candidate (degenerate input).
    pub len_ratio: f64,
}

impl FeatureVector {
    pub const DIM: usize = 2;
    pub const NAMES: [&'static str; 2] = ["tfidf_cosine", "length_ratio"];

    pub fn as_array(&self) -> [f64; 2] {
        [self.sim, self.len_ratio]
    }
}

/// Character count of the raw text.
fn text_len(text: &str) -> usize {
    text.chars().count()
}

/// The candidate/query length-compatibility ratio.
pub fn length_ratio(candidate_chars: usize, query_chars: usize) -> f64 {
    candidate_chars as f64 / (query_chars.max(1)) as f64
}

/// Extract the pair features for one (query, candidate) pair.
pub fn meta_features(
    query: &Example,
    candidate: &Example,
    vectorizer: &Vectorizer,
) -> FeatureVector {
    let qv = vectorizer.transform(&query.text);
    let cv = vectorizer.transform(&candidate.text);
    FeatureVector {
        sim: qv.dot(&cv).clamp(0.0, 1.0),
        len_ratio: length_ratio(text_len(&candidate.text), text_len(&query.text)),
    }
}

/// One supervised meta-example: pair features plus the class-agreement label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaPair {
    pub query_id: usize,
    pub candidate_id: usize,
    pub features: FeatureVector,
    /// True exactly when the two referenced examples share a label.
    pub meta_label: bool,
}

/// Build all |Q| x |C| meta-pairs in row-major order (queries outer,
/// candidates inner). The query = candidate pair is retained.
pub fn build_meta_dataset(
    dataset: &Dataset,
    split: &MetaSplit,
    vectorizer: &Vectorizer,
) -> Vec<MetaPair> {
    let query_vecs: Vec<SparseVector> = split
        .query_ids
        .iter()
        .map(|&id| vectorizer.transform(&dataset.examples[id].text))
        .collect();
    let cand_vecs: Vec<SparseVector> = split
        .candidate_ids
        .iter()
        .map(|&id| vectorizer.transform(&dataset.examples[id].text))
        .collect();

    let mut pairs = Vec::with_capacity(split.query_ids.len() * split.candidate_ids.len());
    for (qi, &query_id) in split.query_ids.iter().enumerate() {
        let query = &dataset.examples[query_id];
        let q_len = text_len(&query.text);
        for (ci, &candidate_id) in split.candidate_ids.iter().enumerate() {
            let candidate = &dataset.examples[candidate_id];
            pairs.push(MetaPair {
                query_id,
                candidate_id,
                features: FeatureVector {
                    sim: query_vecs[qi].dot(&cand_vecs[ci]).clamp(0.0, 1.0),
                    len_ratio: length_ratio(text_len(&candidate.text), q_len),
                },
                meta_label: query.label == candidate.label,
            });
        }
    }
    pairs
}

/// Meta-training sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaSelConfig {
    pub n_queries: usize,
    pub n_candidates: usize,
}

impl Default for MetaSelConfig {
    fn default() -> Self {
        Self {
            n_queries: 60,
            n_candidates: 300,
        }
    }
}

/// Snapshot of everything a trained model was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub meta: MetaSelConfig,
    pub train: TrainConfig,
    pub seed: u64,
}

/// Extra facts recorded at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub n_pairs: usize,
    pub n_positive: usize,
    pub fit: FitReport,
}

/// A deployable selector: fitted vocabulary, precomputed pool embeddings,
/// the trained scorer, and the pool snapshot it scores against. Immutable.
#[derive(Debug, Clone)]
pub struct MetaSelModel {
    pub name: String,
    pub vectorizer: Vectorizer,
    pub pool: PoolMatrix,
    pub scorer: LinearScorer,
    pub labels: Vec<String>,
    pub examples: Vec<Example>,
    pub config: ModelConfig,
    pub train_meta: TrainMeta,
    /// Wall time of the offline phase; not persisted.
    pub offline_time: Duration,
    pool_chars: Vec<usize>,
}

/// Ranked demonstration ids with their scores, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Exactly k distinct example ids in descending-score order.
    pub demo_ids: Vec<usize>,
    /// Scores aligned with `demo_ids`, non-increasing.
    pub scores: Vec<f64>,
    /// Wall time of the scoring pass.
    #[serde(skip)]
    pub selection_latency: Duration,
}

/// Options for [`MetaSelModel::select_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SelectOptions {
    /// Drop pool candidates whose text equals the query text exactly.
    pub exclude_exact_text: bool,
}

/// Indices of the k largest scores, ties broken by index ascending.
pub fn top_k_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

/// Train a full model: fit the vectorizer on every pool text, sample the
/// meta-split, build the meta-dataset, fit the balanced scorer, and
/// precompute pool embeddings.
pub fn train_metasel(
    train: &Dataset,
    meta_cfg: &MetaSelConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<MetaSelModel> {
    if train.labels.len() < 2 {
        return Err(Error::SingleClass(format!(
            "dataset {:?} has {} class(es); meta-training needs at least 2",
            train.name,
            train.labels.len()
        )));
    }
    let started = Instant::now();
    let vectorizer = fit_vectorizer(&train.texts())?;
    let split = sample_meta_split(train, meta_cfg.n_queries, meta_cfg.n_candidates, seed)?;
    let pairs = build_meta_dataset(train, &split, &vectorizer);

    let mut features = FeatureMatrix::new(FeatureVector::DIM);
    let mut labels = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        features.push_row(&pair.features.as_array())?;
        labels.push(pair.meta_label);
    }
    let weights = balanced_weights(&labels)?;
    let (scorer, fit) = fit_logistic(&features, &labels, &weights, train_cfg, seed)?;

    let pool = PoolMatrix::build(&vectorizer, &train.texts());
    let n_positive = labels.iter().filter(|&&l| l).count();
    let offline_time = started.elapsed();
    log::info!(
        "meta-training on {:?}: {} pairs, {} iterations, {:.3}s offline",
        train.name,
        pairs.len(),
        fit.iterations,
        offline_time.as_secs_f64()
    );
    Ok(MetaSelModel {
        name: train.name.clone(),
        vectorizer,
        pool,
        scorer,
        labels: train.labels.clone(),
        pool_chars: train.examples.iter().map(|e| text_len(&e.text)).collect(),
        examples: train.examples.clone(),
        config: ModelConfig {
            meta: *meta_cfg,
            train: train_cfg.clone(),
            seed,
        },
        train_meta: TrainMeta {
            n_pairs: pairs.len(),
            n_positive,
            fit,
        },
        offline_time,
    })
}

impl MetaSelModel {
    /// Build a model around a fixed scorer instead of meta-training one.
    /// `theta = (1, 0), bias = 0` gives plain cosine ranking.
    pub fn with_fixed_scorer(train: &Dataset, scorer: LinearScorer) -> Result<Self> {
        if scorer.dim() != FeatureVector::DIM {
            return Err(Error::InvalidInput(format!(
                "fixed scorer has dimension {}, expected {}",
                scorer.dim(),
                FeatureVector::DIM
            )));
        }
        let started = Instant::now();
        let vectorizer = fit_vectorizer(&train.texts())?;
        let pool = PoolMatrix::build(&vectorizer, &train.texts());
        Ok(Self {
            name: train.name.clone(),
            vectorizer,
            pool,
            scorer,
            labels: train.labels.clone(),
            pool_chars: train.examples.iter().map(|e| text_len(&e.text)).collect(),
            examples: train.examples.clone(),
            config: ModelConfig {
                meta: MetaSelConfig {
                    n_queries: 0,
                    n_candidates: 0,
                },
                train: TrainConfig::default(),
                seed: 0,
            },
            train_meta: TrainMeta {
                n_pairs: 0,
                n_positive: 0,
                fit: FitReport {
                    iterations: 0,
                    converged: true,
                    final_grad_norm: 0.0,
                    objective: 0.0,
                },
            },
            offline_time: started.elapsed(),
        })
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    /// Rank the pool for `query_text` and return the top k.
    pub fn select(&self, query_text: &str, k: usize) -> Result<SelectionResult> {
        self.select_with(query_text, k, SelectOptions::default())
    }

    /// One vectorized cosine pass over the pool, a linear scoring sweep, and
    /// a top-k cut with ties broken by candidate id ascending. Candidates are
    /// ranked by the raw linear score (the sigmoid is monotone, so the order
    /// matches ranking by probability); reported scores are probabilities.
    pub fn select_with(
        &self,
        query_text: &str,
        k: usize,
        options: SelectOptions,
    ) -> Result<SelectionResult> {
        let n = self.pool.len();
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "k = {k} out of range for pool of {n}"
            )));
        }
        let started = Instant::now();
        let query_vec = self.vectorizer.transform(query_text);
        let sims = cosine_to_pool(&query_vec, &self.pool);
        let q_len = text_len(query_text);
        let mut linear = Vec::with_capacity(n);
        for (id, &sim) in sims.iter().enumerate() {
            let ratio = length_ratio(self.pool_chars[id], q_len);
            let mut score = self.scorer.linear_score(&[sim, ratio]);
            if options.exclude_exact_text && self.examples[id].text == query_text {
                score = f64::NEG_INFINITY;
            }
            linear.push(score);
        }
        let demo_ids = top_k_indices(&linear, k);
        if options.exclude_exact_text && demo_ids.iter().any(|&id| linear[id] == f64::NEG_INFINITY)
        {
            return Err(Error::InvalidInput(format!(
                "k = {k} exceeds the pool after exact-text exclusion"
            )));
        }
        let scores = demo_ids.iter().map(|&id| sigmoid(linear[id])).collect();
        Ok(SelectionResult {
            demo_ids,
            scores,
            selection_latency: started.elapsed(),
        })
    }

    /// The scorer export record: weights, bias, feature names, and training
    /// metadata.
    pub fn export_scorer(&self) -> serde_json::Value {
        serde_json::json!({
            "theta": self.scorer.theta,
            "bias": self.scorer.bias,
            "feature_names": FeatureVector::NAMES,
            "train_meta": {
                "n_pairs": self.train_meta.n_pairs,
                "n_positive": self.train_meta.n_positive,
                "iterations": self.train_meta.fit.iterations,
                "converged": self.train_meta.fit.converged,
                "final_grad_norm": self.train_meta.fit.final_grad_norm,
                "objective": self.train_meta.fit.objective,
                "seed": self.config.seed,
                "n_queries": self.config.meta.n_queries,
                "n_candidates": self.config.meta.n_candidates,
            },
        })
    }

    /// Persist as a single bundle: a JSON header (scorer, vocabulary, pool
    /// snapshot, config) followed by the binary pool cache. Byte-identical
    /// for identical training inputs.
    pub fn save(&self, path: &Path) -> Result<()> {
        let header = BundleHeader {
            format_version: 1,
            name: self.name.clone(),
            scorer: self.scorer.clone(),
            vectorizer: VectorizerParts {
                tokens: self.vectorizer.tokens().to_vec(),
                idf: self.vectorizer.idf().to_vec(),
                n_docs: self.vectorizer.n_docs(),
            },
            labels: self.labels.clone(),
            examples: self.examples.clone(),
            config: self.config.clone(),
            train_meta: self.train_meta.clone(),
        };
        let header_bytes = serde_json::to_vec(&header)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(b"MSM1")?;
        out.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
        out.write_all(&header_bytes)?;
        out.write_all(&self.pool.to_bytes())?;
        Ok(())
    }

    /// Load a bundle written by [`MetaSelModel::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        if bytes.len() < 12 || &bytes[..4] != b"MSM1" {
            return Err(Error::Bundle("bad model bundle magic".into()));
        }
        let header_len = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        if bytes.len() < 12 + header_len {
            return Err(Error::Bundle("truncated model bundle".into()));
        }
        let header: BundleHeader = serde_json::from_slice(&bytes[12..12 + header_len])?;
        if header.format_version != 1 {
            return Err(Error::Bundle(format!(
                "unknown bundle version {}",
                header.format_version
            )));
        }
        let pool = PoolMatrix::from_bytes(&bytes[12 + header_len..])?;
        let vectorizer = Vectorizer::from_parts(
            header.vectorizer.tokens,
            header.vectorizer.idf,
            header.vectorizer.n_docs,
        )?;
        if pool.len() != header.examples.len() {
            return Err(Error::Bundle(format!(
                "pool has {} rows but bundle lists {} examples",
                pool.len(),
                header.examples.len()
            )));
        }
        Ok(Self {
            name: header.name,
            pool_chars: header.examples.iter().map(|e| text_len(&e.text)).collect(),
            vectorizer,
            pool,
            scorer: header.scorer,
            labels: header.labels,
            examples: header.examples,
            config: header.config,
            train_meta: header.train_meta,
            offline_time: Duration::ZERO,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct VectorizerParts {
    tokens: Vec<String>,
    idf: Vec<f64>,
    n_docs: usize,
}

#[derive(Serialize, Deserialize)]
struct BundleHeader {
    format_version: u32,
    name: String,
    scorer: LinearScorer,
    vectorizer: VectorizerParts,
    labels: Vec<String>,
    examples: Vec<Example>,
    config: ModelConfig,
    train_meta: TrainMeta,
}
