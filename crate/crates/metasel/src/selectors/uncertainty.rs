//! Uncertainty selection: rank candidates by the Shannon entropy of a
//! similarity-weighted label distribution over their nearest neighbors.
//!
//! For each candidate, its `m` most similar other pool examples vote for
//! their labels with weight equal to the cosine similarity; candidates whose
//! neighborhoods are most label-mixed (highest entropy) are selected. The
//! ranking is query-independent and computed once per trial.

use std::sync::Arc;
use std::time::Instant;

use super::{ranked_result, Selector, SelectorContext};
use crate::error::Result;
use crate::meta_sel::SelectionResult;
use crate::vectorize::cosine_to_pool;

pub struct UncertaintySelector {
    ctx: Arc<SelectorContext>,
    m_neighbors: usize,
    entropies: Option<Vec<f64>>,
}

impl UncertaintySelector {
    pub fn new(ctx: Arc<SelectorContext>, m_neighbors: usize) -> Self {
        Self {
            ctx,
            m_neighbors,
            entropies: None,
        }
    }

    fn entropy_table(&self) -> Vec<f64> {
        let n = self.ctx.pool_size();
        let n_classes = self.ctx.train.labels.len();
        let mut entropies = Vec::with_capacity(n);
        for candidate in 0..n {
            let sims = cosine_to_pool(self.ctx.pool.row(candidate), &self.ctx.pool);
            // The m most similar *other* examples, ties by id ascending.
            let mut order: Vec<usize> = (0..n).filter(|&i| i != candidate).collect();
            order.sort_unstable_by(|&a, &b| sims[b].total_cmp(&sims[a]).then(a.cmp(&b)));
            order.truncate(self.m_neighbors);

            let mut mass = vec![0.0f64; n_classes];
            for &neighbor in &order {
                mass[self.ctx.label_ids[neighbor]] += sims[neighbor];
            }
            let total: f64 = mass.iter().sum();
            let entropy = if total > 0.0 {
                -mass
                    .iter()
                    .filter(|&&m| m > 0.0)
                    .map(|&m| {
                        let p = m / total;
                        p * p.ln()
                    })
                    .sum::<f64>()
            } else {
                0.0
            };
            entropies.push(entropy);
        }
        entropies
    }
}

impl Selector for UncertaintySelector {
    fn name(&self) -> &'static str {
        "uncertainty"
    }

    fn select(&mut self, _query: &str, _query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        let started = Instant::now();
        if self.entropies.is_none() {
            self.entropies = Some(self.entropy_table());
        }
        Ok(ranked_result(
            self.entropies.as_ref().expect("computed above"),
            k,
            started,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Dataset;
    use crate::selectors::SelectorContext;

    /// Three classes, ten candidates; candidate 9 bridges all vocabularies.
    fn mixed_context() -> Arc<SelectorContext> {
        let records = vec![
            ("apple apple".into(), "fruit".into(), None),
            ("apple pear".into(), "fruit".into(), None),
            ("pear pear".into(), "fruit".into(), None),
            ("engine engine".into(), "car".into(), None),
            ("engine wheel".into(), "car".into(), None),
            ("wheel wheel".into(), "car".into(), None),
            ("piano piano".into(), "music".into(), None),
            ("piano drum".into(), "music".into(), None),
            ("drum drum".into(), "music".into(), None),
            ("apple engine piano".into(), "fruit".into(), None),
        ];
        SelectorContext::build(Dataset::from_records("mixed", records).unwrap()).unwrap()
    }

    #[test]
    fn pure_neighborhood_has_zero_entropy_and_ranks_last() {
        let ctx = mixed_context();
        let mut sel = UncertaintySelector::new(ctx.clone(), 2);
        let all = sel.select("q", 0, ctx.pool_size()).unwrap();
        // Candidate 0's two nearest neighbors are both "fruit": entropy 0.
        let rank_of_0 = all.demo_ids.iter().position(|&id| id == 0).unwrap();
        let rank_of_9 = all.demo_ids.iter().position(|&id| id == 9).unwrap();
        assert!(rank_of_9 < rank_of_0, "bridge candidate should rank higher");
        assert_eq!(*all.scores.last().unwrap(), 0.0);
    }

    #[test]
    fn uniform_three_way_split_reaches_ln3() {
        let ctx = mixed_context();
        let mut sel = UncertaintySelector::new(ctx, 3);
        let result = sel.select("q", 0, 1).unwrap();
        // Candidate 9 ties to one member of each class with equal similarity.
        assert_eq!(result.demo_ids[0], 9);
        assert!((result.scores[0] - 3.0f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn ranking_matches_hand_computed_entropy_table() {
        let ctx = mixed_context();
        let m = 4;
        let mut sel = UncertaintySelector::new(ctx.clone(), m);
        let got = sel.select("q", 0, ctx.pool_size()).unwrap();

        // Recompute entropies by brute force over pairwise dots.
        let n = ctx.pool_size();
        let mut table: Vec<f64> = Vec::new();
        for c in 0..n {
            let mut sims: Vec<(usize, f64)> = (0..n)
                .filter(|&i| i != c)
                .map(|i| (i, ctx.pool.row(c).dot(ctx.pool.row(i))))
                .collect();
            sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            sims.truncate(m);
            let mut mass = std::collections::BTreeMap::new();
            for (i, s) in sims {
                *mass.entry(ctx.label_ids[i]).or_insert(0.0) += s;
            }
            let total: f64 = mass.values().sum();
            let h = if total > 0.0 {
                -mass
                    .values()
                    .filter(|&&v| v > 0.0)
                    .map(|&v| (v / total) * (v / total).ln())
                    .sum::<f64>()
            } else {
                0.0
            };
            table.push(h);
        }
        let mut expected: Vec<usize> = (0..n).collect();
        expected.sort_by(|&a, &b| table[b].total_cmp(&table[a]).then(a.cmp(&b)));
        assert_eq!(got.demo_ids, expected);
    }
}
