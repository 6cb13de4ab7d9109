//! Influence approximation: query-candidate cosine similarity weighted by
//! the candidate's class frequency prior, `n_class / N`.

use std::sync::Arc;
use std::time::Instant;

use super::{ranked_result, Selector, SelectorContext};
use crate::error::Result;
use crate::meta_sel::SelectionResult;
use crate::vectorize::cosine_to_pool;

pub struct InfluenceSelector {
    ctx: Arc<SelectorContext>,
}

impl InfluenceSelector {
    pub fn new(ctx: Arc<SelectorContext>) -> Self {
        Self { ctx }
    }
}

impl Selector for InfluenceSelector {
    fn name(&self) -> &'static str {
        "influence"
    }

    fn select(&mut self, query: &str, _query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        let started = Instant::now();
        let n = self.ctx.pool_size() as f64;
        let query_vec = self.ctx.vectorizer.transform(query);
        let sims = cosine_to_pool(&query_vec, &self.ctx.pool);
        let scores: Vec<f64> = sims
            .iter()
            .enumerate()
            .map(|(id, &sim)| sim * self.ctx.class_counts[self.ctx.label_ids[id]] as f64 / n)
            .collect();
        Ok(ranked_result(&scores, k, started))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Dataset;
    use crate::selectors::SelectorContext;

    fn prior_context() -> Arc<SelectorContext> {
        // "common" has 3 examples, "rare" has 1; two share the query term.
        let records = vec![
            ("target word one".into(), "common".into(), None),
            ("target word two".into(), "rare".into(), None),
            ("filler other stuff".into(), "common".into(), None),
            ("another filler entry".into(), "common".into(), None),
        ];
        SelectorContext::build(Dataset::from_records("prior", records).unwrap()).unwrap()
    }

    #[test]
    fn equal_similarity_breaks_toward_frequent_class() {
        let ctx = prior_context();
        let mut sel = InfluenceSelector::new(ctx);
        let result = sel.select("target word", 0, 2).unwrap();
        assert_eq!(result.demo_ids[0], 0, "frequent class should rank first");
        assert_eq!(result.demo_ids[1], 1);
        assert!(result.scores[0] > result.scores[1]);
    }

    #[test]
    fn zero_similarity_scores_zero_regardless_of_prior() {
        let ctx = prior_context();
        let mut sel = InfluenceSelector::new(ctx.clone());
        let result = sel
            .select("completely unrelated query", 0, ctx.pool_size())
            .unwrap();
        assert!(result.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn full_ranking_matches_brute_force_table() {
        let records = vec![
            ("alpha beta gamma".into(), "x".into(), None),
            ("alpha beta".into(), "y".into(), None),
            ("beta gamma delta".into(), "x".into(), None),
            ("gamma delta".into(), "z".into(), None),
            ("delta alpha".into(), "x".into(), None),
            ("beta beta beta".into(), "y".into(), None),
            ("epsilon zeta".into(), "z".into(), None),
            ("alpha gamma".into(), "x".into(), None),
            ("zeta beta".into(), "y".into(), None),
            ("delta delta".into(), "z".into(), None),
            ("alpha alpha beta".into(), "x".into(), None),
            ("gamma gamma".into(), "y".into(), None),
        ];
        let ctx =
            SelectorContext::build(Dataset::from_records("twelve", records).unwrap()).unwrap();
        let mut sel = InfluenceSelector::new(ctx.clone());
        let query = "alpha beta delta";
        let got = sel.select(query, 0, 12).unwrap();

        let q = ctx.vectorizer.transform(query);
        let mut table: Vec<(usize, f64)> = (0..12)
            .map(|id| {
                let sim = q.dot(ctx.pool.row(id));
                let prior = ctx.class_counts[ctx.label_ids[id]] as f64 / 12.0;
                (id, sim * prior)
            })
            .collect();
        table.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let expected: Vec<usize> = table.iter().map(|&(id, _)| id).collect();
        assert_eq!(got.demo_ids, expected);
    }
}
