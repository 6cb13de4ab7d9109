//! Dataset ingestion, label vocabulary management, meta-split sampling, and
//! challenge-subset construction.
//!
//! Datasets load from JSONL (one `{"text", "label", "rationale"?}` object per
//! line) or CSV (header `text,label[,rationale]`). Example ids are assigned in
//! file order and the label vocabulary is the sorted set of distinct labels.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorize::{fit_vectorizer, SparseVector};

/// A labeled utterance. `rationale` is carried through only for datasets that
/// ship reasoning traces; selection never looks at it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: usize,
    pub text: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rationale: Option<String>,
}

/// An ordered pool of labeled examples with its label vocabulary.
///
/// Invariants: ids are `0..len()` in order, every label is in `labels`, and
/// `labels` is the sorted set of distinct example labels. Immutable after
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub examples: Vec<Example>,
    pub labels: Vec<String>,
}

/// One raw record before id assignment.
pub type RawRecord = (String, String, Option<String>);

impl Dataset {
    /// Assemble a dataset from raw (text, label, rationale) records,
    /// assigning ids in order and building the sorted label vocabulary.
    pub fn from_records(name: impl Into<String>, records: Vec<RawRecord>) -> Result<Self> {
        let name = name.into();
        if records.is_empty() {
            return Err(Error::InvalidInput(format!("dataset {name:?} is empty")));
        }
        let labels: Vec<String> = records
            .iter()
            .map(|(_, label, _)| label.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut seen: HashSet<(&str, &str)> = HashSet::new();
        let mut duplicates = 0usize;
        for (text, label, _) in &records {
            if !seen.insert((text.as_str(), label.as_str())) {
                duplicates += 1;
            }
        }
        if duplicates > 0 {
            log::warn!("dataset {name:?}: {duplicates} duplicate (text, label) pairs");
        }
        let examples = records
            .into_iter()
            .enumerate()
            .map(|(id, (text, label, rationale))| Example {
                id,
                text,
                label,
                rationale,
            })
            .collect();
        Ok(Self {
            name,
            examples,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.examples.iter().map(|e| e.text.as_str()).collect()
    }

    /// Position of `label` in the sorted vocabulary.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Examples per vocabulary label, aligned with `labels`.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.labels.len()];
        for e in &self.examples {
            if let Some(i) = self.label_index(&e.label) {
                counts[i] += 1;
            }
        }
        counts
    }
}

/// Storage format for [`load_dataset`] / [`save_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Jsonl,
    Csv,
}

impl DataFormat {
    /// Infer the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") => Ok(Self::Jsonl),
            Some("csv") => Ok(Self::Csv),
            other => Err(Error::InvalidInput(format!(
                "cannot infer dataset format from extension {other:?} (expected .jsonl or .csv)"
            ))),
        }
    }
}

#[derive(Deserialize)]
struct JsonlRecord {
    text: String,
    label: String,
    #[serde(default)]
    rationale: Option<String>,
}

/// Load a dataset file. The dataset name is the file stem.
///
/// Record-level problems (missing fields, blank text) are reported with their
/// 1-based line (JSONL) or data-row (CSV) position.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_owned();
    let records = match format {
        DataFormat::Jsonl => load_jsonl(path)?,
        DataFormat::Csv => load_csv(path)?,
    };
    Dataset::from_records(name, records)
}

fn record_error(path: &Path, location: String, message: impl Into<String>) -> Error {
    Error::Record {
        path: path.to_path_buf(),
        location,
        message: message.into(),
    }
}

fn load_jsonl(path: &Path) -> Result<Vec<RawRecord>> {
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line)
            .map_err(|e| record_error(path, format!("line {line_no}"), e.to_string()))?;
        if rec.text.trim().is_empty() {
            return Err(record_error(path, format!("line {line_no}"), "blank text"));
        }
        records.push((rec.text, rec.label, rec.rationale));
    }
    Ok(records)
}

fn load_csv(path: &Path) -> Result<Vec<RawRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let text_col =
        col("text").ok_or_else(|| record_error(path, "header".into(), "missing column `text`"))?;
    let label_col = col("label")
        .ok_or_else(|| record_error(path, "header".into(), "missing column `label`"))?;
    let rationale_col = col("rationale");

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let field = |idx: usize, name: &str| {
            row.get(idx).map(str::to_owned).ok_or_else(|| {
                record_error(
                    path,
                    format!("row {row_no}"),
                    format!("missing field `{name}`"),
                )
            })
        };
        let text = field(text_col, "text")?;
        let label = field(label_col, "label")?;
        if text.trim().is_empty() {
            return Err(record_error(path, format!("row {row_no}"), "blank text"));
        }
        let rationale = rationale_col
            .and_then(|c| row.get(c))
            .filter(|s| !s.is_empty())
            .map(str::to_owned);
        records.push((text, label, rationale));
    }
    Ok(records)
}

/// Write a dataset back out; a `load -> save -> load` round trip yields an
/// identical dataset.
pub fn save_dataset(dataset: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    match format {
        DataFormat::Jsonl => {
            #[derive(Serialize)]
            struct Record<'a> {
                text: &'a str,
                label: &'a str,
                #[serde(skip_serializing_if = "Option::is_none")]
                rationale: Option<&'a str>,
            }
            let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
            for e in &dataset.examples {
                let rec = Record {
                    text: &e.text,
                    label: &e.label,
                    rationale: e.rationale.as_deref(),
                };
                writeln!(out, "{}", serde_json::to_string(&rec)?)?;
            }
            Ok(())
        }
        DataFormat::Csv => {
            let mut writer = csv::Writer::from_path(path)?;
            let has_rationale = dataset.examples.iter().any(|e| e.rationale.is_some());
            if has_rationale {
                writer.write_record(["text", "label", "rationale"])?;
            } else {
                writer.write_record(["text", "label"])?;
            }
            for e in &dataset.examples {
                if has_rationale {
                    writer.write_record([
                        e.text.as_str(),
                        e.label.as_str(),
                        e.rationale.as_deref().unwrap_or(""),
                    ])?;
                } else {
                    writer.write_record([e.text.as_str(), e.label.as_str()])?;
                }
            }
            writer.flush()?;
            Ok(())
        }
    }
}

/// The meta-query set Q and meta-candidate set C drawn from one dataset.
/// Q and C are sampled independently, so overlap is permitted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaSplit {
    pub query_ids: Vec<usize>,
    pub candidate_ids: Vec<usize>,
}

/// Sample `n_queries` query ids and `n_candidates` candidate ids uniformly
/// without replacement (independently of each other), deterministic per seed.
pub fn sample_meta_split(
    dataset: &Dataset,
    n_queries: usize,
    n_candidates: usize,
    seed: u64,
) -> Result<MetaSplit> {
    let n = dataset.len();
    if n_queries > n || n_candidates > n {
        return Err(Error::InvalidInput(format!(
            "meta split ({n_queries} queries, {n_candidates} candidates) exceeds dataset size {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let query_ids = rand::seq::index::sample(&mut rng, n, n_queries).into_vec();
    let candidate_ids = rand::seq::index::sample(&mut rng, n, n_candidates).into_vec();
    Ok(MetaSplit {
        query_ids,
        candidate_ids,
    })
}

/// Cosine of a unit-or-zero query vector against an unnormalized dense
/// centroid. Zero on either side yields 0.
fn cosine_to_centroid(query: &SparseVector, centroid: &[f64], centroid_norm: f64) -> f64 {
    if centroid_norm == 0.0 {
        return 0.0;
    }
    let dot: f64 = query
        .iter()
        .map(|(col, v)| v * centroid[col as usize])
        .sum();
    dot / centroid_norm
}

/// Select the `size` test examples closest to a class decision boundary.
///
/// Fits TF-IDF class centroids on `train`; for each test example the margin
/// is the cosine to its best centroid minus the cosine to the second best.
/// The `size` smallest margins win, ties broken by id ascending, and the
/// result is re-indexed in margin order. `seed` is only consulted when some
/// margins are non-finite and a uniform fill is needed.
pub fn challenge_subset(
    train: &Dataset,
    test: &Dataset,
    size: usize,
    seed: u64,
) -> Result<Dataset> {
    if size > test.len() {
        return Err(Error::InvalidInput(format!(
            "challenge size {size} exceeds test size {}",
            test.len()
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if train.labels.len() < 2 {
        return Err(Error::SingleClass(
            "challenge margins need at least two training classes".into(),
        ));
    }

    let vectorizer = fit_vectorizer(&train.texts())?;
    let dim = vectorizer.vocab_size();
    let mut centroids = vec![vec![0.0f64; dim]; train.labels.len()];
    let counts = train.class_counts();
    for e in &train.examples {
        let class = train.label_index(&e.label).expect("label in vocabulary");
        for (col, v) in vectorizer.transform(&e.text).iter() {
            centroids[class][col as usize] += v;
        }
    }
    for (centroid, &count) in centroids.iter_mut().zip(&counts) {
        if count > 0 {
            for v in centroid.iter_mut() {
                *v /= count as f64;
            }
        }
    }
    let norms: Vec<f64> = centroids
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut finite: Vec<(f64, usize)> = Vec::new();
    let mut other: Vec<usize> = Vec::new();
    for e in &test.examples {
        let q = vectorizer.transform(&e.text);
        let mut best = f64::NEG_INFINITY;
        let mut second = f64::NEG_INFINITY;
        for (centroid, &norm) in centroids.iter().zip(&norms) {
            let cos = cosine_to_centroid(&q, centroid, norm);
            if cos > best {
                second = best;
                best = cos;
            } else if cos > second {
                second = cos;
            }
        }
        let margin = best - second;
        if margin.is_finite() {
            finite.push((margin, e.id));
        } else {
            other.push(e.id);
        }
    }

    finite.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = finite.iter().take(size).map(|&(_, id)| id).collect();
    if chosen.len() < size {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fill = rand::seq::index::sample(&mut rng, other.len(), size - chosen.len());
        chosen.extend(fill.into_iter().map(|i| other[i]));
    }

    let by_id: HashMap<usize, &Example> = test.examples.iter().map(|e| (e.id, e)).collect();
    let records = chosen
        .iter()
        .map(|id| {
            let e = by_id[id];
            (e.text.clone(), e.label.clone(), e.rationale.clone())
        })
        .collect();
    Dataset::from_records(format!("{}-challenge", test.name), records)
}
