//! Diversity selection: k-means over the pool's TF-IDF embeddings, then one
//! representative per centroid.
//!
//! Clustering runs once per trial (the selection is query-independent):
//! k-means++ seeding, Lloyd iterations capped at 100, three restarts keeping
//! the lowest inertia. Each centroid is represented by the nearest unused
//! example under cosine similarity, ties by id ascending. When the pool has
//! fewer distinct vectors than k, the remainder is padded farthest-first.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Selector, SelectorContext};
use crate::error::Result;
use crate::meta_sel::SelectionResult;
use crate::vectorize::SparseVector;

const MAX_ITERS: usize = 100;
const RESTARTS: usize = 3;

pub struct DiversitySelector {
    ctx: Arc<SelectorContext>,
    seed: u64,
    /// Cached (k, result) of the clustering pass.
    cached: Option<(usize, SelectionResult)>,
}

impl DiversitySelector {
    pub fn new(ctx: Arc<SelectorContext>, seed: u64) -> Self {
        Self {
            ctx,
            seed,
            cached: None,
        }
    }

    fn compute(&self, k: usize) -> SelectionResult {
        let started = Instant::now();
        let rows = self.ctx.pool.rows();
        let dim = self.ctx.pool.dim();

        // Distinct embeddings bound the number of separable clusters.
        let mut distinct: HashMap<Vec<(u32, u64)>, usize> = HashMap::new();
        for row in rows {
            let key: Vec<(u32, u64)> = row.iter().map(|(i, v)| (i, v.to_bits())).collect();
            *distinct.entry(key).or_insert(0) += 1;
        }
        let n_clusters = k.min(distinct.len());

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
        for _ in 0..RESTARTS {
            let (inertia, centroids) = lloyd(rows, dim, n_clusters, &mut rng);
            if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
                best = Some((inertia, centroids));
            }
        }
        let (_, centroids) = best.expect("at least one restart");

        // One representative per centroid: nearest unused example by cosine.
        let mut used = vec![false; rows.len()];
        let mut chosen: Vec<(usize, f64)> = Vec::with_capacity(k);
        for centroid in &centroids {
            let norm = centroid.iter().map(|v| v * v).sum::<f64>().sqrt();
            let mut best_id = usize::MAX;
            let mut best_cos = f64::NEG_INFINITY;
            for (id, row) in rows.iter().enumerate() {
                if used[id] {
                    continue;
                }
                let cos = if norm == 0.0 {
                    0.0
                } else {
                    dot_dense(row, centroid) / norm
                };
                if cos > best_cos {
                    best_cos = cos;
                    best_id = id;
                }
            }
            if best_id != usize::MAX {
                used[best_id] = true;
                chosen.push((best_id, best_cos));
            }
        }

        // Pad farthest-first when k exceeds the distinct vector count.
        while chosen.len() < k {
            let mut far_id = usize::MAX;
            let mut far_dist = f64::NEG_INFINITY;
            for (id, row) in rows.iter().enumerate() {
                if used[id] {
                    continue;
                }
                let min_dist = chosen
                    .iter()
                    .map(|&(sel, _)| squared_distance(row, &rows[sel]))
                    .fold(f64::INFINITY, f64::min);
                if min_dist > far_dist {
                    far_dist = min_dist;
                    far_id = id;
                }
            }
            used[far_id] = true;
            chosen.push((far_id, 0.0));
        }

        // Report in descending cosine-to-centroid order, ties by id.
        chosen.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        SelectionResult {
            demo_ids: chosen.iter().map(|&(id, _)| id).collect(),
            scores: chosen.iter().map(|&(_, cos)| cos).collect(),
            selection_latency: started.elapsed(),
        }
    }
}

impl Selector for DiversitySelector {
    fn name(&self) -> &'static str {
        "diversity"
    }

    fn select(&mut self, _query: &str, _query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        if let Some((cached_k, result)) = &self.cached {
            if *cached_k == k {
                let mut result = result.clone();
                result.selection_latency = std::time::Duration::ZERO;
                return Ok(result);
            }
        }
        let result = self.compute(k);
        self.cached = Some((k, result.clone()));
        Ok(result)
    }
}

fn dot_dense(sparse: &SparseVector, dense: &[f64]) -> f64 {
    sparse.iter().map(|(i, v)| v * dense[i as usize]).sum()
}

/// `||x - c||^2` for a unit-or-zero sparse x against a dense centroid.
fn squared_distance_to_centroid(
    row: &SparseVector,
    centroid: &[f64],
    centroid_sq_norm: f64,
) -> f64 {
    let x_sq = if row.is_empty() { 0.0 } else { 1.0 };
    (x_sq - 2.0 * dot_dense(row, centroid) + centroid_sq_norm).max(0.0)
}

/// `||x - y||^2` between two unit-or-zero sparse vectors.
fn squared_distance(x: &SparseVector, y: &SparseVector) -> f64 {
    let x_sq = if x.is_empty() { 0.0 } else { 1.0 };
    let y_sq = if y.is_empty() { 0.0 } else { 1.0 };
    (x_sq + y_sq - 2.0 * x.dot(y)).max(0.0)
}

/// One k-means run: ++ seeding, Lloyd iterations, returns (inertia,
/// centroids).
fn lloyd(
    rows: &[SparseVector],
    dim: usize,
    n_clusters: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<Vec<f64>>) {
    let n = rows.len();
    // k-means++ seeding over the data points.
    let mut center_ids: Vec<usize> = Vec::with_capacity(n_clusters);
    center_ids.push(rng.gen_range(0..n));
    let mut min_dist: Vec<f64> = rows
        .iter()
        .map(|r| squared_distance(r, &rows[center_ids[0]]))
        .collect();
    while center_ids.len() < n_clusters {
        let total: f64 = min_dist.iter().sum();
        let next = if total > 0.0 {
            let weighted = WeightedIndex::new(&min_dist).expect("positive weights");
            weighted.sample(rng)
        } else {
            // All remaining points coincide with a center; pick any unused.
            *(0..n)
                .filter(|i| !center_ids.contains(i))
                .collect::<Vec<_>>()
                .choose(rng)
                .expect("n_clusters <= distinct points")
        };
        center_ids.push(next);
        for (i, row) in rows.iter().enumerate() {
            let d = squared_distance(row, &rows[next]);
            if d < min_dist[i] {
                min_dist[i] = d;
            }
        }
    }

    let mut centroids: Vec<Vec<f64>> = center_ids
        .iter()
        .map(|&id| {
            let mut c = vec![0.0; dim];
            for (i, v) in rows[id].iter() {
                c[i as usize] = v;
            }
            c
        })
        .collect();

    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_ITERS {
        let sq_norms: Vec<f64> = centroids
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect();
        let mut changed = false;
        for (i, row) in rows.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (j, centroid) in centroids.iter().enumerate() {
                let d = squared_distance_to_centroid(row, centroid, sq_norms[j]);
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }

        let mut counts = vec![0usize; centroids.len()];
        let mut sums = vec![vec![0.0; dim]; centroids.len()];
        for (i, row) in rows.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (col, v) in row.iter() {
                sums[assignment[i]][col as usize] += v;
            }
        }
        for (j, centroid) in centroids.iter_mut().enumerate() {
            if counts[j] == 0 {
                continue;
            }
            for (col, sum) in centroid.iter_mut().zip(&sums[j]) {
                *col = sum / counts[j] as f64;
            }
        }
        // Reseed any empty cluster at the point currently farthest from its
        // assigned center, deterministically.
        for j in 0..centroids.len() {
            if counts[j] == 0 {
                let sq: Vec<f64> = centroids
                    .iter()
                    .map(|c| c.iter().map(|v| v * v).sum())
                    .collect();
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = squared_distance_to_centroid(
                            &rows[a],
                            &centroids[assignment[a]],
                            sq[assignment[a]],
                        );
                        let db = squared_distance_to_centroid(
                            &rows[b],
                            &centroids[assignment[b]],
                            sq[assignment[b]],
                        );
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .expect("nonempty pool");
                let mut c = vec![0.0; dim];
                for (col, v) in rows[far].iter() {
                    c[col as usize] = v;
                }
                centroids[j] = c;
                assignment[far] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let sq_norms: Vec<f64> = centroids
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    let inertia = rows
        .iter()
        .zip(&assignment)
        .map(|(row, &j)| squared_distance_to_centroid(row, &centroids[j], sq_norms[j]))
        .sum();
    (inertia, centroids)
}
