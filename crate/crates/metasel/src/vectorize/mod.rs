//! Sparse TF-IDF embeddings and cosine similarity.
//!
//! Texts are lowercased and split into alphanumeric tokens; tokens shorter
//! than two characters and English stop words are dropped. Document vectors
//! are raw term counts scaled by smoothed inverse document frequency,
//!
//! ```text
//! idf(t) = ln((1 + n_docs) / (1 + df(t))) + 1
//! ```
//!
//! then L2-normalized, so the dot product of two vectors is their cosine.
//! [`cosine_to_pool`] scores a query against every row of a [`PoolMatrix`]
//! in one pass over an inverted column index, touching only the nonzero
//! entries that share a term with the query.

mod stopwords;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use stopwords::ENGLISH_STOP_WORDS;

/// Minimum token length kept by [`tokenize`].
const MIN_TOKEN_CHARS: usize = 2;

fn is_stop_word(token: &str) -> bool {
    stopwords::ENGLISH_STOP_WORDS.binary_search(&token).is_ok()
}

/// Lowercase `text` and split it into alphanumeric tokens, dropping tokens
/// shorter than two characters and stop words.
pub fn tokenize(text: &str) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= MIN_TOKEN_CHARS && !is_stop_word(t))
        .map(str::to_owned)
        .collect()
}

/// An L2-normalized sparse vector with strictly increasing indices and
/// strictly positive values. The zero vector is represented as empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// The empty (zero) vector.
    pub fn zero() -> Self {
        Self {
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from (index, weight) pairs, dropping non-positive weights and
    /// normalizing to unit L2 norm. Pairs must have distinct indices.
    fn from_weights(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.retain(|&(_, v)| v > 0.0);
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let norm = pairs.iter().map(|&(_, v)| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self::zero();
        }
        Self {
            indices: pairs.iter().map(|&(i, _)| i).collect(),
            values: pairs.iter().map(|&(_, v)| v / norm).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sparse dot product by merging the two sorted index lists.
    pub fn dot(&self, other: &SparseVector) -> f64 {
        let mut acc = 0.0;
        let (mut i, mut j) = (0, 0);
        while i < self.indices.len() && j < other.indices.len() {
            match self.indices[i].cmp(&other.indices[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[i] * other.values[j];
                    i += 1;
                    j += 1;
                }
            }
        }
        acc
    }
}

/// A fitted TF-IDF vocabulary: token -> column index plus per-column IDF
/// weights. Immutable after [`fit_vectorizer`].
#[derive(Debug, Clone)]
pub struct Vectorizer {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    idf: Vec<f64>,
    n_docs: usize,
}

/// Fit a vectorizer on a corpus of texts.
///
/// Errors if no text yields a token, i.e. the vocabulary would be empty.
pub fn fit_vectorizer<S: AsRef<str>>(texts: &[S]) -> Result<Vectorizer> {
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for text in texts {
        let mut seen: HashSet<String> = HashSet::new();
        for token in tokenize(text.as_ref()) {
            if seen.insert(token.clone()) {
                *df.entry(token).or_insert(0) += 1;
            }
        }
    }
    if df.is_empty() {
        return Err(Error::InvalidInput(
            "cannot fit a vectorizer: every document is empty after tokenization".into(),
        ));
    }
    let n_docs = texts.len();
    let tokens: Vec<String> = df.keys().cloned().collect();
    let idf: Vec<f64> = df
        .values()
        .map(|&d| ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0)
        .collect();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vectorizer {
        tokens,
        index,
        idf,
        n_docs,
    })
}

impl Vectorizer {
    /// Embed a text. Out-of-vocabulary tokens are ignored; a text with no
    /// in-vocabulary tokens maps to the zero vector.
    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<u32, f64> = HashMap::new();
        for token in tokenize(text) {
            if let Some(&col) = self.index.get(&token) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let pairs = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col as usize]))
            .collect();
        SparseVector::from_weights(pairs)
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    /// Vocabulary tokens in column order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Per-column IDF weights, aligned with [`Vectorizer::tokens`].
    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// Reassemble a vectorizer from its serialized parts (tokens in column
    /// order plus aligned IDF weights), as stored in a model bundle.
    pub fn from_parts(tokens: Vec<String>, idf: Vec<f64>, n_docs: usize) -> Result<Self> {
        if tokens.len() != idf.len() {
            return Err(Error::Bundle(format!(
                "vocabulary has {} tokens but {} idf weights",
                tokens.len(),
                idf.len()
            )));
        }
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self {
            tokens,
            index,
            idf,
            n_docs,
        })
    }
}

/// Precomputed embeddings for a candidate pool, one row per example, plus an
/// inverted column index for one-pass scoring. Row id = example id.
#[derive(Debug, Clone)]
pub struct PoolMatrix {
    rows: Vec<SparseVector>,
    /// Per column: (row, value) of every nonzero entry, rows ascending.
    columns: Vec<Vec<(u32, f64)>>,
}

impl PoolMatrix {
    /// Embed every text with `vectorizer` and build the inverted index.
    pub fn build<S: AsRef<str>>(vectorizer: &Vectorizer, texts: &[S]) -> Self {
        let rows: Vec<SparseVector> = texts
            .iter()
            .map(|t| vectorizer.transform(t.as_ref()))
            .collect();
        Self::from_rows(rows, vectorizer.vocab_size())
    }

    pub fn from_rows(rows: Vec<SparseVector>, dim: usize) -> Self {
        let mut columns = vec![Vec::new(); dim];
        for (row_id, row) in rows.iter().enumerate() {
            for (col, value) in row.iter() {
                columns[col as usize].push((row_id as u32, value));
            }
        }
        Self { rows, columns }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, id: usize) -> &SparseVector {
        &self.rows[id]
    }

    pub fn rows(&self) -> &[SparseVector] {
        &self.rows
    }

    /// Serialize as a versioned binary cache (little-endian CSR layout).
    ///
    /// Layout: magic `MSPC`, version u32, n_rows u64, dim u64, nnz u64,
    /// row offsets (n_rows + 1) u64, column indices u32 each, values f64 each.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nnz: usize = self.rows.iter().map(SparseVector::nnz).sum();
        let mut buf = Vec::with_capacity(32 + (self.rows.len() + 1) * 8 + nnz * 12);
        buf.extend_from_slice(b"MSPC");
        buf.extend_from_slice(&1u32.to_le_bytes());
        buf.extend_from_slice(&(self.rows.len() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        buf.extend_from_slice(&(nnz as u64).to_le_bytes());
        let mut offset = 0u64;
        buf.extend_from_slice(&offset.to_le_bytes());
        for row in &self.rows {
            offset += row.nnz() as u64;
            buf.extend_from_slice(&offset.to_le_bytes());
        }
        for row in &self.rows {
            for (col, _) in row.iter() {
                buf.extend_from_slice(&col.to_le_bytes());
            }
        }
        for row in &self.rows {
            for (_, value) in row.iter() {
                buf.extend_from_slice(&value.to_le_bytes());
            }
        }
        buf
    }

    /// Decode a cache produced by [`PoolMatrix::to_bytes`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = Cursor { bytes, pos: 0 };
        if cursor.take(4)? != b"MSPC" {
            return Err(Error::Bundle("bad pool cache magic".into()));
        }
        let version = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap());
        if version != 1 {
            return Err(Error::Bundle(format!(
                "unknown pool cache version {version}"
            )));
        }
        let n_rows = cursor.take_u64()? as usize;
        let dim = cursor.take_u64()? as usize;
        let nnz = cursor.take_u64()? as usize;
        let mut offsets = Vec::with_capacity(n_rows + 1);
        for _ in 0..=n_rows {
            offsets.push(cursor.take_u64()? as usize);
        }
        if offsets.first() != Some(&0) || offsets.last() != Some(&nnz) {
            return Err(Error::Bundle("inconsistent pool cache offsets".into()));
        }
        let mut indices = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            indices.push(u32::from_le_bytes(cursor.take(4)?.try_into().unwrap()));
        }
        let mut values = Vec::with_capacity(nnz);
        for _ in 0..nnz {
            values.push(f64::from_le_bytes(cursor.take(8)?.try_into().unwrap()));
        }
        let mut rows = Vec::with_capacity(n_rows);
        for w in offsets.windows(2) {
            let (start, end) = (w[0], w[1]);
            if end < start || end > nnz {
                return Err(Error::Bundle("inconsistent pool cache offsets".into()));
            }
            rows.push(SparseVector {
                indices: indices[start..end].to_vec(),
                values: values[start..end].to_vec(),
            });
        }
        Ok(Self::from_rows(rows, dim))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Bundle("truncated pool cache".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn take_u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Cosine similarity of `query` to every pool row in one pass.
///
/// Both sides are unit vectors, so the dot product is the cosine; scores are
/// clamped to `[0, 1]` to absorb float round-off. Runtime is linear in the
/// pool nonzeros that share a column with the query.
pub fn cosine_to_pool(query: &SparseVector, pool: &PoolMatrix) -> Vec<f64> {
    let mut scores = vec![0.0; pool.len()];
    for (col, qv) in query.iter() {
        for &(row, value) in &pool.columns[col as usize] {
            scores[row as usize] += qv * value;
        }
    }
    for s in &mut scores {
        *s = s.clamp(0.0, 1.0);
    }
    scores
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent dense oracle: tokenizes with the same rules but computes
    /// tf-idf and cosines over dense `HashMap` vectors, no sharing with the
    /// sparse path.
    pub(crate) mod dense_oracle {
        use std::collections::{BTreeSet, HashMap, HashSet};

        pub fn tokens(text: &str) -> Vec<String> {
            text.to_lowercase()
                .split(|c: char| !c.is_alphanumeric())
                .filter(|t| {
                    t.chars().count() >= 2 && !super::stopwords::ENGLISH_STOP_WORDS.contains(t)
                })
                .map(str::to_owned)
                .collect()
        }

        pub struct DenseTfidf {
            pub idf: HashMap<String, f64>,
        }

        pub fn fit(texts: &[&str]) -> DenseTfidf {
            let n = texts.len() as f64;
            let mut df: HashMap<String, f64> = HashMap::new();
            for t in texts {
                let uniq: HashSet<String> = tokens(t).into_iter().collect();
                for tok in uniq {
                    *df.entry(tok).or_insert(0.0) += 1.0;
                }
            }
            let idf = df
                .into_iter()
                .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d)).ln() + 1.0))
                .collect();
            DenseTfidf { idf }
        }

        pub fn embed(model: &DenseTfidf, text: &str) -> HashMap<String, f64> {
            let mut tf: HashMap<String, f64> = HashMap::new();
            for tok in tokens(text) {
                if model.idf.contains_key(&tok) {
                    *tf.entry(tok).or_insert(0.0) += 1.0;
                }
            }
            let mut vec: HashMap<String, f64> = tf
                .into_iter()
                .map(|(t, c)| {
                    let w = c * model.idf[&t];
                    (t, w)
                })
                .collect();
            let norm = vec.values().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                for v in vec.values_mut() {
                    *v /= norm;
                }
            }
            vec
        }

        pub fn cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
            let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
            let mut dot = 0.0;
            let mut na = 0.0;
            let mut nb = 0.0;
            for k in keys {
                let x = a.get(k).copied().unwrap_or(0.0);
                let y = b.get(k).copied().unwrap_or(0.0);
                dot += x * y;
                na += x * x;
                nb += y * y;
            }
            if na == 0.0 || nb == 0.0 {
                0.0
            } else {
                dot / (na.sqrt() * nb.sqrt())
            }
        }
    }

    #[test]
    fn idf_matches_hand_computation() {
        // Two-document corpus: df(bb) = 2 so idf(bb) = ln(3/3) + 1 = 1.0,
        // df(aa) = 1 so idf(aa) = ln(3/2) + 1.
        let v = fit_vectorizer(&["aa bb", "bb cc"]).unwrap();
        assert_eq!(v.tokens(), &["aa", "bb", "cc"]);
        let expected = (3.0f64 / 2.0).ln() + 1.0;
        assert!((v.idf()[0] - expected).abs() < 1e-12);
        assert!((v.idf()[1] - 1.0).abs() < 1e-12);
        assert!((v.idf()[2] - expected).abs() < 1e-12);
    }

    #[test]
    fn single_document_corpus_has_unit_idf() {
        let v = fit_vectorizer(&["alpha beta gamma"]).unwrap();
        for &w in v.idf() {
            assert!((w - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stop_word_only_text_is_zero_vector() {
        let v = fit_vectorizer(&["the of and", "alpha beta"]).unwrap();
        assert!(v.transform("the of and").is_empty());
    }

    #[test]
    fn all_stop_word_corpus_is_an_error() {
        assert!(matches!(
            fit_vectorizer(&["the of and", "a an"]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn transform_is_unit_norm_and_matches_dense_oracle() {
        let corpus = ["aa bb", "bb cc"];
        let v = fit_vectorizer(&corpus).unwrap();
        let sparse = v.transform("aa bb");
        assert!((sparse.l2_norm() - 1.0).abs() < 1e-12);

        let oracle = dense_oracle::fit(&corpus);
        let dense = dense_oracle::embed(&oracle, "aa bb");
        for (col, value) in sparse.iter() {
            let token = &v.tokens()[col as usize];
            assert!(
                (value - dense[token]).abs() < 1e-12,
                "token {token}: sparse {value} vs dense {}",
                dense[token]
            );
        }
        assert_eq!(sparse.nnz(), dense.len());
    }

    #[test]
    fn oov_text_transforms_to_zero() {
        let v = fit_vectorizer(&["aa bb", "bb cc"]).unwrap();
        assert!(v.transform("zzz unseen token27").is_empty());
    }

    #[test]
    fn idf_weights_at_least_one() {
        let v = fit_vectorizer(&["freeze card", "lost card", "card was frozen"]).unwrap();
        assert!(v.idf().iter().all(|&w| w >= 1.0));
    }

    #[test]
    fn vocabulary_excludes_stop_words_and_short_tokens() {
        let v = fit_vectorizer(&["the cat sat on a mat", "i saw it"]).unwrap();
        for t in v.tokens() {
            assert!(t.chars().count() >= 2);
            assert!(!is_stop_word(t), "stop word {t} in vocabulary");
        }
    }

    #[test]
    fn cosine_to_pool_identity_and_orthogonality() {
        let corpus = ["freeze my card", "lost card abroad", "transfer money now"];
        let v = fit_vectorizer(&corpus).unwrap();
        let pool = PoolMatrix::build(&v, &corpus);
        let q = v.transform("freeze my card");
        let scores = cosine_to_pool(&q, &pool);
        assert!((scores[0] - 1.0).abs() < 1e-12);
        assert_eq!(scores[2], 0.0);
        assert!(scores.iter().all(|&s| (0.0..=1.0).contains(&s)));
    }

    #[test]
    fn cosine_to_pool_matches_dense_oracle_on_toy_pool() {
        let corpus = [
            "freeze my card please",
            "card was frozen abroad",
            "i lost my wallet",
            "replace broken card",
            "statement charge dispute",
        ];
        let v = fit_vectorizer(&corpus).unwrap();
        let pool = PoolMatrix::build(&v, &corpus);
        let oracle = dense_oracle::fit(&corpus);
        let q_text = "card frozen while abroad";
        let scores = cosine_to_pool(&v.transform(q_text), &pool);
        let dq = dense_oracle::embed(&oracle, q_text);
        for (i, doc) in corpus.iter().enumerate() {
            let expected = dense_oracle::cosine(&dq, &dense_oracle::embed(&oracle, doc));
            assert!(
                (scores[i] - expected).abs() < 1e-12,
                "row {i}: {} vs {}",
                scores[i],
                expected
            );
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        /// Small corpora over a fixed token alphabet, with some stop words
        /// and short tokens mixed in.
        fn corpus_strategy() -> impl Strategy<Value = Vec<String>> {
            let token = prop_oneof![
                (0usize..30).prop_map(|i| format!("tok{i}")),
                Just("the".to_owned()),
                Just("of".to_owned()),
                Just("a".to_owned()),
            ];
            let doc = prop::collection::vec(token, 1..12).prop_map(|ts| ts.join(" "));
            prop::collection::vec(doc, 2..10)
        }

        proptest! {
            #[test]
            fn cosine_is_symmetric_and_in_unit_range(corpus in corpus_strategy()) {
                prop_assume!(corpus.iter().any(|d| !tokenize(d).is_empty()));
                let v = fit_vectorizer(&corpus).unwrap();
                let vecs: Vec<SparseVector> = corpus.iter().map(|d| v.transform(d)).collect();
                for a in &vecs {
                    for b in &vecs {
                        let ab = a.dot(b);
                        let ba = b.dot(a);
                        prop_assert!((ab - ba).abs() < 1e-12);
                        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
                    }
                }
            }

            #[test]
            fn doubling_a_document_keeps_its_unit_vector(corpus in corpus_strategy()) {
                prop_assume!(corpus.iter().any(|d| !tokenize(d).is_empty()));
                let v = fit_vectorizer(&corpus).unwrap();
                for doc in &corpus {
                    let single = v.transform(doc);
                    let doubled = v.transform(&format!("{doc} {doc}"));
                    prop_assert_eq!(single.nnz(), doubled.nnz());
                    for ((i, x), (j, y)) in single.iter().zip(doubled.iter()) {
                        prop_assert_eq!(i, j);
                        prop_assert!((x - y).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn pool_cache_round_trip() {
        let corpus = ["freeze my card", "lost card", "transfer money"];
        let v = fit_vectorizer(&corpus).unwrap();
        let pool = PoolMatrix::build(&v, &corpus);
        let bytes = pool.to_bytes();
        let restored = PoolMatrix::from_bytes(&bytes).unwrap();
        assert_eq!(restored.len(), pool.len());
        assert_eq!(restored.dim(), pool.dim());
        for i in 0..pool.len() {
            assert_eq!(restored.row(i), pool.row(i));
        }
        assert_eq!(restored.to_bytes(), bytes);
    }

    #[test]
    fn truncated_cache_is_rejected() {
        let corpus = ["freeze my card", "lost card"];
        let v = fit_vectorizer(&corpus).unwrap();
        let bytes = PoolMatrix::build(&v, &corpus).to_bytes();
        assert!(PoolMatrix::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        assert!(PoolMatrix::from_bytes(b"XXXX").is_err());
    }
}
