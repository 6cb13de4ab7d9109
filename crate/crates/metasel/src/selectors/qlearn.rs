//! Tabular Q-learning over candidates with epsilon-greedy exploration and a
//! pairwise-diversity reward bonus.
//!
//! One Q-value per candidate, initialized to zero. Selection is epsilon-
//! greedy over the table with epsilon decaying per update step; the reward
//! for a query is `accuracy + lambda * d`, where `d` is the fraction of
//! selected pairs whose cosine similarity falls below the diversity
//! threshold. The accuracy-only variant sets `lambda = 0, theta_div = 0`,
//! which zeroes the bonus.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{query_rng, ranked_result, Selector, SelectorContext};
use crate::error::{Error, Result};
use crate::meta_sel::SelectionResult;

/// Q-learning hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QConfig {
    pub learning_rate: f64,
    pub discount: f64,
    /// Diversity bonus weight.
    pub lambda: f64,
    /// Pairwise cosine threshold below which a pair counts as diverse.
    pub theta_div: f64,
    pub eps_max: f64,
    pub eps_min: f64,
    pub eps_decay: f64,
}

impl Default for QConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            discount: 0.9,
            lambda: 0.5,
            theta_div: 0.5,
            eps_max: 0.9,
            eps_min: 0.1,
            eps_decay: 0.001,
        }
    }
}

/// Per-candidate value table and the exploration schedule position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QState {
    pub q: Vec<f64>,
    pub steps: u64,
}

impl QState {
    pub fn new(n_arms: usize) -> Self {
        Self {
            q: vec![0.0; n_arms],
            steps: 0,
        }
    }
}

pub struct QLearningSelector {
    name: &'static str,
    ctx: Arc<SelectorContext>,
    config: QConfig,
    state: QState,
    seed: u64,
}

impl QLearningSelector {
    pub fn new(name: &'static str, ctx: Arc<SelectorContext>, config: QConfig, seed: u64) -> Self {
        let state = QState::new(ctx.pool_size());
        Self {
            name,
            ctx,
            config,
            state,
            seed,
        }
    }

    /// `eps_min + (eps_max - eps_min) * exp(-decay * steps)`; always inside
    /// `[eps_min, eps_max]`.
    pub fn epsilon(&self) -> f64 {
        let c = &self.config;
        c.eps_min + (c.eps_max - c.eps_min) * (-c.eps_decay * self.state.steps as f64).exp()
    }

    pub fn state(&self) -> &QState {
        &self.state
    }

    /// Fraction of selected pairs with cosine below the diversity threshold;
    /// 0 when fewer than two demonstrations are selected.
    fn diversity_fraction(&self, selected: &[usize]) -> f64 {
        if selected.len() < 2 {
            return 0.0;
        }
        let mut diverse = 0usize;
        let mut pairs = 0usize;
        for (i, &a) in selected.iter().enumerate() {
            for &b in &selected[i + 1..] {
                pairs += 1;
                let cos = self.ctx.pool.row(a).dot(self.ctx.pool.row(b));
                if cos < self.config.theta_div {
                    diverse += 1;
                }
            }
        }
        diverse as f64 / pairs as f64
    }
}

impl Selector for QLearningSelector {
    fn name(&self) -> &'static str {
        self.name
    }

    fn is_online(&self) -> bool {
        true
    }

    fn select(&mut self, _query: &str, query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        let started = Instant::now();
        let mut rng = query_rng(self.seed, query_index);
        if rng.gen::<f64>() < self.epsilon() {
            // Explore: k uniform candidates, reported in Q order.
            let ids = rand::seq::index::sample(&mut rng, self.ctx.pool_size(), k).into_vec();
            let mut pairs: Vec<(usize, f64)> =
                ids.into_iter().map(|id| (id, self.state.q[id])).collect();
            pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            Ok(SelectionResult {
                demo_ids: pairs.iter().map(|&(id, _)| id).collect(),
                scores: pairs.iter().map(|&(_, q)| q).collect(),
                selection_latency: started.elapsed(),
            })
        } else {
            Ok(ranked_result(&self.state.q, k, started))
        }
    }

    fn update(&mut self, selected: &[usize], reward: f64) {
        let bonus = self.config.lambda * self.diversity_fraction(selected);
        let r = reward + bonus;
        let max_q = self
            .state
            .q
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let target = r + self.config.discount * max_q;
        for &arm in selected {
            self.state.q[arm] += self.config.learning_rate * (target - self.state.q[arm]);
        }
        self.state.steps += 1;
    }

    fn export_state(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("state serializes")
    }

    fn import_state(&mut self, state: &serde_json::Value) -> Result<()> {
        let restored: QState = serde_json::from_value(state.clone())?;
        if restored.q.len() != self.ctx.pool_size() {
            return Err(Error::InvalidInput(format!(
                "q table has {} entries, pool has {}",
                restored.q.len(),
                self.ctx.pool_size()
            )));
        }
        self.state = restored;
        Ok(())
    }
}
