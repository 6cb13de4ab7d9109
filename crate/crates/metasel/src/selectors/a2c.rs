//! Linear advantage actor-critic over the pair features.
//!
//! The actor's per-candidate logit is linear in (similarity, length ratio)
//! against the current query; k candidates are drawn without replacement
//! from the softmax policy. The critic predicts a scalar value from the mean
//! selected feature vector; the advantage (reward minus value) scales the
//! policy-gradient update, with an entropy bonus on the actor.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{query_rng, Selector, SelectorContext};
use crate::error::{Error, Result};
use crate::meta_sel::{length_ratio, SelectionResult};
use crate::vectorize::cosine_to_pool;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A2cConfig {
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub entropy_coef: f64,
}

impl Default for A2cConfig {
    fn default() -> Self {
        Self {
            actor_lr: 0.01,
            critic_lr: 0.005,
            entropy_coef: 0.01,
        }
    }
}

/// Actor and critic parameters. The actor carries no bias: a shared logit
/// offset cancels in the softmax.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCriticState {
    pub actor_weights: [f64; 2],
    pub critic_weights: [f64; 2],
    pub critic_bias: f64,
}

impl Default for ActorCriticState {
    fn default() -> Self {
        Self {
            actor_weights: [0.0; 2],
            critic_weights: [0.0; 2],
            critic_bias: 0.0,
        }
    }
}

/// Everything the update step needs from the preceding selection.
struct PendingStep {
    probs: Vec<f64>,
    features: Vec<[f64; 2]>,
}

pub struct A2cSelector {
    ctx: Arc<SelectorContext>,
    config: A2cConfig,
    state: ActorCriticState,
    seed: u64,
    pending: Option<PendingStep>,
}

impl A2cSelector {
    pub fn new(ctx: Arc<SelectorContext>, config: A2cConfig, seed: u64) -> Self {
        Self {
            ctx,
            config,
            state: ActorCriticState::default(),
            seed,
            pending: None,
        }
    }

    pub fn state(&self) -> &ActorCriticState {
        &self.state
    }

    fn candidate_features(&self, query: &str) -> Vec<[f64; 2]> {
        let query_vec = self.ctx.vectorizer.transform(query);
        let sims = cosine_to_pool(&query_vec, &self.ctx.pool);
        let q_chars = query.chars().count();
        sims.iter()
            .enumerate()
            .map(|(id, &sim)| [sim, length_ratio(self.ctx.text_chars[id], q_chars)])
            .collect()
    }

    /// Critic value of a selected set: linear in the mean selected features.
    pub fn value(&self, mean_features: [f64; 2]) -> f64 {
        self.state.critic_weights[0] * mean_features[0]
            + self.state.critic_weights[1] * mean_features[1]
            + self.state.critic_bias
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl Selector for A2cSelector {
    fn name(&self) -> &'static str {
        "a2c"
    }

    fn is_online(&self) -> bool {
        true
    }

    fn select(&mut self, query: &str, query_index: usize, k: usize) -> Result<SelectionResult> {
        self.ctx.check_k(k)?;
        let started = Instant::now();
        let features = self.candidate_features(query);
        let logits: Vec<f64> = features
            .iter()
            .map(|f| self.state.actor_weights[0] * f[0] + self.state.actor_weights[1] * f[1])
            .collect();
        let probs = softmax(&logits);

        // Draw k without replacement by renormalizing over the remainder.
        let mut rng = query_rng(self.seed, query_index);
        let mut remaining = probs.clone();
        let mut selected: Vec<usize> = Vec::with_capacity(k);
        for _ in 0..k {
            let total: f64 = remaining.iter().sum();
            let mut target = rng.gen::<f64>() * total;
            let mut pick = remaining
                .iter()
                .position(|&p| p > 0.0)
                .expect("probabilities remain");
            for (i, &p) in remaining.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                target -= p;
                pick = i;
                if target <= 0.0 {
                    break;
                }
            }
            selected.push(pick);
            remaining[pick] = 0.0;
        }

        // Report in descending policy probability, ties by id.
        selected.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        let scores: Vec<f64> = selected.iter().map(|&id| probs[id]).collect();
        self.pending = Some(PendingStep { probs, features });
        Ok(SelectionResult {
            demo_ids: selected,
            scores,
            selection_latency: started.elapsed(),
        })
    }

    fn update(&mut self, selected: &[usize], reward: f64) {
        let Some(step) = self.pending.take() else {
            return;
        };
        if selected.is_empty() {
            return;
        }
        // Mean policy feature, for the log-policy gradient.
        let mut policy_mean = [0.0f64; 2];
        for (p, f) in step.probs.iter().zip(&step.features) {
            policy_mean[0] += p * f[0];
            policy_mean[1] += p * f[1];
        }
        // Mean selected feature, for the critic.
        let mut selected_mean = [0.0f64; 2];
        for &id in selected {
            selected_mean[0] += step.features[id][0];
            selected_mean[1] += step.features[id][1];
        }
        selected_mean[0] /= selected.len() as f64;
        selected_mean[1] /= selected.len() as f64;

        let advantage = reward - self.value(selected_mean);

        // Policy gradient, treating each pick as an independent draw:
        // grad log pi(c) = f_c - E_pi[f].
        let mut actor_grad = [0.0f64; 2];
        for &id in selected {
            actor_grad[0] += advantage * (step.features[id][0] - policy_mean[0]);
            actor_grad[1] += advantage * (step.features[id][1] - policy_mean[1]);
        }
        // Entropy bonus: grad H = -sum_j pi_j (1 + ln pi_j) (f_j - E_pi[f]).
        let mut entropy_grad = [0.0f64; 2];
        for (p, f) in step.probs.iter().zip(&step.features) {
            if *p > 0.0 {
                let scale = -p * (1.0 + p.ln());
                entropy_grad[0] += scale * (f[0] - policy_mean[0]);
                entropy_grad[1] += scale * (f[1] - policy_mean[1]);
            }
        }
        for j in 0..2 {
            self.state.actor_weights[j] +=
                self.config.actor_lr * (actor_grad[j] + self.config.entropy_coef * entropy_grad[j]);
        }
        self.state.critic_weights[0] += self.config.critic_lr * advantage * selected_mean[0];
        self.state.critic_weights[1] += self.config.critic_lr * advantage * selected_mean[1];
        self.state.critic_bias += self.config.critic_lr * advantage;
    }

    fn export_state(&self) -> serde_json::Value {
        serde_json::to_value(&self.state).expect("state serializes")
    }

    fn import_state(&mut self, state: &serde_json::Value) -> Result<()> {
        self.state = serde_json::from_value(state.clone()).map_err(Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_support::small_context;
    use super::*;

    #[test]
    fn zero_actor_selects_uniformly() {
        // Softmax of zero logits is uniform; chi-square over k = 1 draws.
        let ctx = small_context();
        let n = ctx.pool_size();
        let mut sel = A2cSelector::new(ctx, A2cConfig::default(), 5);
        let trials = 20_000usize;
        let mut counts = vec![0usize; n];
        for qi in 0..trials {
            counts[sel.select("freeze my card", qi, 1).unwrap().demo_ids[0]] += 1;
        }
        let expected = trials as f64 / n as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 9 degrees of freedom: critical value 27.9 at p = 0.001.
        assert!(chi2 < 27.9, "chi-square {chi2}");
    }

    #[test]
    fn critic_value_rises_monotonically_toward_constant_reward() {
        // Zero-initialized critic, constant reward 1, fixed features: the
        // value estimate is a scalar recursion v' = v + lr (1 - v)(|f|^2 + 1)
        // that climbs monotonically toward 1.
        let ctx = small_context();
        let mut sel = A2cSelector::new(ctx, A2cConfig::default(), 1);
        let features = [0.6f64, 1.2];
        let mut last_value = sel.value(features);
        assert_eq!(last_value, 0.0);
        for step in 0..800 {
            sel.pending = Some(PendingStep {
                probs: vec![1.0],
                features: vec![features],
            });
            sel.update(&[0], 1.0);
            let v = sel.value(features);
            assert!(v >= last_value - 1e-12, "step {step}: {v} < {last_value}");
            assert!(v <= 1.0 + 1e-9, "step {step}: overshoot {v}");
            last_value = v;
        }
        assert!(last_value > 0.9, "critic value {last_value}");
    }

    #[test]
    fn rewarding_similar_candidates_grows_their_probability() {
        // Entropy off, reward 1 whenever the most similar candidate is
        // selected: its selection probability must not decrease.
        let ctx = small_context();
        let mut sel = A2cSelector::new(
            ctx,
            A2cConfig {
                entropy_coef: 0.0,
                ..A2cConfig::default()
            },
            2,
        );
        let query = "freeze my card now";
        let features = sel.candidate_features(query);
        let best: usize = (0..features.len())
            .max_by(|&a, &b| features[a][0].total_cmp(&features[b][0]))
            .unwrap();
        let prob_of_best = |sel: &A2cSelector| {
            let logits: Vec<f64> = features
                .iter()
                .map(|f| sel.state.actor_weights[0] * f[0] + sel.state.actor_weights[1] * f[1])
                .collect();
            softmax(&logits)[best]
        };
        let before = prob_of_best(&sel);
        let mut prev = before;
        for qi in 0..500 {
            let result = sel.select(query, qi, 1).unwrap();
            let reward = f64::from(result.demo_ids[0] == best);
            sel.update(&result.demo_ids, reward);
            let now = prob_of_best(&sel);
            if reward == 1.0 {
                assert!(now >= prev - 1e-9, "query {qi}: {now} < {prev}");
            }
            prev = now;
        }
        assert!(
            prev > before,
            "probability did not grow: {prev} vs {before}"
        );
    }

    #[test]
    fn state_round_trips_through_json() {
        let ctx = small_context();
        let mut sel = A2cSelector::new(ctx.clone(), A2cConfig::default(), 0);
        let result = sel.select("freeze my card", 0, 2).unwrap();
        sel.update(&result.demo_ids, 1.0);
        let exported = sel.export_state();
        let mut fresh = A2cSelector::new(ctx, A2cConfig::default(), 0);
        fresh.import_state(&exported).unwrap();
        assert_eq!(fresh.state, sel.state);
    }
}
