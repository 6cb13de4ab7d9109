//! Thompson-sampling bandit: one Beta arm per candidate, updated online by
//! prediction success.
//!
//! Every arm starts at Beta(1, 1). Each query draws one sample per arm and
//! selects the k largest draws; after the backend answers, every selected
//! arm's alpha (on success) or beta (on failure) is incremented.

use std::sync::Arc;
use std::time::Instant;

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use super::{query_rng, ranked_result, Selector, SelectorContext};
use crate::error::{Error, Result};
use crate::meta_sel::SelectionResult;

/// Per-candidate Beta posteriors; `alpha` and `beta` stay at least 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

impl BanditState {
    pub fn new(n_arms: usize) -> Self {
        Self {
            alpha: vec![1.0; n_arms],
            beta: vec![1.0; n_arms],
        }
    }
}

pub struct TsBanditSelector {
    ctx: Arc<SelectorContext>,
    state: BanditState,
    seed: u64,
}

impl TsBanditSelector {
    pub fn new(ctx: Arc<SelectorContext>, seed: u64) -> Self {
        let state = BanditState::new(ctx.pool_size());
        Self { ctx, state, seed }
    }

    pub fn state(&self) -> &BanditState {
        &self.state
    }
}

impl Selector for TsBanditSelector {
    fn name(&self) -> &'static str {
        "ts_bandit"
    }

    fn is_online(&self) -> bool {
        true
    }

    fn select(&mut self, _query: &str, query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        let started = Instant::now();
        let mut rng = query_rng(self.seed, query_index);
        let draws: Vec<f64> = self
            .state
            .alpha
            .iter()
            .zip(&self.state.beta)
            .map(|(&a, &b)| Beta::new(a, b).expect("alpha, beta >= 1").sample(&mut rng))
            .collect();
        Ok(ranked_result(&draws, k, started))
    }

    fn update(&mut self, selected: &[usize], reward: f64) {
        for &arm in selected {
            if reward > 0.5 {
                self.state.alpha[arm] += 1.0;
            } else {
                self.state.beta[arm] += 1.0;
            }
        }
    }

    fn export_state(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("state serializes")
    }

    fn import_state(&mut self, state: &serde_json::Value) -> Result<()> {
        let restored: BanditState = serde_json::from_value(state.clone())?;
        if restored.alpha.len() != self.ctx.pool_size() {
            return Err(Error::InvalidInput(format!(
                "bandit state has {} arms, pool has {}",
                restored.alpha.len(),
                self.ctx.pool_size()
            )));
        }
        self.state = restored;
        Ok(())
    }
}
