//! Prediction backends: an HTTP client for an Ollama-compatible generate
//! endpoint, a deterministic oracle that succeeds whenever a selected
//! demonstration shares the query's label, and response-to-label parsing.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which backend a run talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    /// POST to `{endpoint}/api/generate`.
    Http,
    /// Correct iff at least one demonstration matches the query label.
    OracleOneMatch,
    /// One-match oracle that flips to a wrong label with probability
    /// `noise_rate` even when a match is present.
    OracleNoisy,
}

/// Backend settings. Temperature is pinned to 0 so generations are
/// deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default = "default_endpoint")]
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    /// Maximum request attempts per query.
    #[serde(default = "default_retries")]
    pub retries: u32,
    /// Base delay for exponential backoff between attempts.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
    /// Oracle flip probability in [0, 1]; ignored by the HTTP backend.
    #[serde(default)]
    pub noise_rate: f64,
    /// Upper bound on concurrent in-flight HTTP requests.
    #[serde(default = "default_max_in_flight")]
    pub max_in_flight: usize,
}

fn default_endpoint() -> String {
    "http://127.0.0.1:11434".to_owned()
}

fn default_model() -> String {
    "qwen3:8b".to_owned()
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

fn default_max_in_flight() -> usize {
    4
}

impl BackendConfig {
    pub fn oracle(noise_rate: f64) -> Self {
        Self {
            kind: if noise_rate > 0.0 {
                BackendKind::OracleNoisy
            } else {
                BackendKind::OracleOneMatch
            },
            endpoint: String::new(),
            model: "oracle".to_owned(),
            temperature: 0.0,
            timeout_secs: 0,
            retries: 1,
            backoff_ms: 0,
            noise_rate,
            max_in_flight: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temperature != 0.0 {
            return Err(Error::InvalidInput(
                "temperature must be 0 for deterministic outputs".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::InvalidInput(format!(
                "noise rate {} outside [0, 1]",
                self.noise_rate
            )));
        }
        if self.kind == BackendKind::Http {
            if self.retries == 0 {
                return Err(Error::InvalidInput("retries must be at least 1".into()));
            }
            if self.endpoint.is_empty() {
                return Err(Error::InvalidInput("http backend needs an endpoint".into()));
            }
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
    options: GenerateOptions,
}

#[derive(Serialize)]
struct GenerateOptions {
    temperature: i64,
}

/// The exact request body sent by [`http_generate`].
pub fn generate_request_body(model: &str, prompt: &str) -> String {
    serde_json::to_string(&GenerateRequest {
        model,
        prompt,
        stream: false,
        options: GenerateOptions { temperature: 0 },
    })
    .expect("request serialization cannot fail")
}

#[derive(Deserialize)]
struct GenerateResponse {
    response: String,
}

/// POST the prompt to `{endpoint}/api/generate` and return the `response`
/// field. Non-2xx statuses and transport failures are retried with
/// exponential backoff up to `retries` total attempts.
pub fn http_generate(config: &BackendConfig, prompt: &str) -> Result<String> {
    config.validate()?;
    let agent = ureq::AgentBuilder::new()
        .timeout(Duration::from_secs(config.timeout_secs))
        .build();
    let url = format!("{}/api/generate", config.endpoint.trim_end_matches('/'));
    let body = generate_request_body(&config.model, prompt);

    let mut last_error = String::new();
    for attempt in 0..config.retries {
        if attempt > 0 {
            let delay = config.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
            std::thread::sleep(Duration::from_millis(delay));
        }
        match agent
            .post(&url)
            .set("Content-Type", "application/json")
            .send_string(&body)
        {
            Ok(response) => {
                let text = response
                    .into_string()
                    .map_err(|e| Error::Backend(format!("unreadable response body: {e}")))?;
                let parsed: GenerateResponse = serde_json::from_str(&text)
                    .map_err(|e| Error::Backend(format!("malformed response body: {e}")))?;
                return Ok(parsed.response);
            }
            Err(ureq::Error::Status(code, _)) => {
                last_error = format!("status {code}");
            }
            Err(ureq::Error::Transport(t)) => {
                last_error = format!("transport: {t}");
            }
        }
    }
    Err(Error::Backend(format!(
        "{url} failed after {} attempts: {last_error}",
        config.retries
    )))
}

/// The one-match oracle: given the demonstration labels shown for a query,
/// it answers the query label whenever any demonstration matches (except
/// with probability `noise_rate`, when it answers a uniformly random wrong
/// label); with no match it copies the majority demonstration label.
#[derive(Debug, Clone)]
pub struct OracleModel {
    labels: Vec<String>,
    noise_rate: f64,
}

impl OracleModel {
    pub fn new(labels: Vec<String>, noise_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise_rate) {
            return Err(Error::InvalidInput(format!(
                "noise rate {noise_rate} outside [0, 1]"
            )));
        }
        Ok(Self { labels, noise_rate })
    }

    /// Predict a label for a query whose true label is `query_label`, shown
    /// demonstrations with `demo_labels`. Deterministic when `noise_rate`
    /// is 0.
    pub fn predict<R: Rng>(
        &self,
        query_label: &str,
        demo_labels: &[&str],
        rng: &mut R,
    ) -> Result<String> {
        if demo_labels.is_empty() {
            return Err(Error::InvalidInput(
                "the oracle needs at least one demonstration".into(),
            ));
        }
        if demo_labels.contains(&query_label) {
            if self.noise_rate > 0.0 && rng.gen::<f64>() < self.noise_rate {
                let wrong: Vec<&String> =
                    self.labels.iter().filter(|l| *l != query_label).collect();
                if !wrong.is_empty() {
                    return Ok(wrong[rng.gen_range(0..wrong.len())].clone());
                }
            }
            return Ok(query_label.to_owned());
        }
        // No matching demonstration: copy the majority label, breaking ties
        // toward the lexicographically smallest.
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &l in demo_labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        let (mut best, mut best_count) = ("", 0usize);
        for (label, count) in counts {
            if count > best_count {
                best = label;
                best_count = count;
            }
        }
        Ok(best.to_owned())
    }
}

/// Probability that at least one of the independent per-demonstration match
/// events fires: `1 - prod(1 - p_c)`.
pub fn success_probability(match_probs: &[f64]) -> f64 {
    1.0 - match_probs.iter().map(|p| 1.0 - p).product::<f64>()
}

fn normalize(s: &str) -> String {
    s.to_lowercase()
        .chars()
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Map a raw model response to a vocabulary label, or `None` for a
/// rejection (counted as incorrect by the harness).
///
/// Pipeline: take the text after the last `Intent:` when present, strip
/// everything but alphanumerics, lowercase; try an exact match against the
/// identically-normalized vocabulary; then a unique-substring match.
pub fn parse_label(raw: &str, labels: &[String]) -> Option<String> {
    let tail = match raw.rfind("Intent:") {
        Some(pos) => &raw[pos + "Intent:".len()..],
        None => raw,
    };
    let needle = normalize(tail);
    if needle.is_empty() {
        return None;
    }
    let normalized: Vec<String> = labels.iter().map(|l| normalize(l)).collect();
    for (label, norm) in labels.iter().zip(&normalized) {
        if *norm == needle {
            return Some(label.clone());
        }
    }
    let mut matches = labels
        .iter()
        .zip(&normalized)
        .filter(|(_, norm)| !norm.is_empty() && needle.contains(norm.as_str()));
    match (matches.next(), matches.next()) {
        (Some((label, _)), None) => Some(label.clone()),
        _ => None,
    }
}
