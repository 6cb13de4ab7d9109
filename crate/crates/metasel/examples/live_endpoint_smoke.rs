//! Smoke-test a live Ollama-compatible endpoint with a 20-query benchmark
//! run. Skips politely when no endpoint is configured.
//!
//! ```bash
//! METASEL_ENDPOINT=http://127.0.0.1:11434 METASEL_MODEL=qwen3:8b \
//!     cargo run --release --example live_endpoint_smoke
//! ```

use metasel::bench::{run_experiment, DataSource, RunConfig};
use metasel::llm::{BackendConfig, BackendKind};
use metasel::meta_sel::MetaSelConfig;
use metasel::optim::TrainConfig;
use metasel::selectors::SelectorKind;
use metasel::synth::SynthConfig;

fn main() -> anyhow::Result<()> {
    let Ok(endpoint) = std::env::var("METASEL_ENDPOINT") else {
        println!("METASEL_ENDPOINT is not set; nothing to do.");
        println!("Point it at an Ollama-compatible server to run the smoke test.");
        return Ok(());
    };
    let model = std::env::var("METASEL_MODEL").unwrap_or_else(|_| "qwen3:8b".to_owned());
    let out = std::env::temp_dir().join("metasel-live-smoke");

    let cfg = RunConfig {
        data: DataSource::Synthetic {
            config: SynthConfig {
                n_classes: 5,
                per_class: 40,
                ..SynthConfig::default()
            },
            seed: 42,
        },
        selector: SelectorKind::MetaSel {
            exclude_exact_text: false,
        },
        k: 5,
        backend: BackendConfig {
            kind: BackendKind::Http,
            endpoint,
            model,
            temperature: 0.0,
            timeout_secs: 120,
            retries: 3,
            backoff_ms: 500,
            noise_rate: 0.0,
            max_in_flight: 4,
        },
        seeds: vec![42],
        challenge_size: 20,
        output_dir: out.clone(),
        meta: MetaSelConfig {
            n_queries: 40,
            n_candidates: 150,
        },
        train: TrainConfig::default(),
        trace: true,
        checkpoint_every: 10,
    };

    println!("running 20 queries against {} ...", cfg.backend.endpoint);
    let report = run_experiment(&cfg)?;
    let parse_rate = 1.0 - report.rejections as f64 / report.n_queries as f64;
    println!(
        "accuracy {:.3}, parse rate {:.2}, report at {}",
        report.mean_accuracy,
        parse_rate,
        out.join("report.json").display()
    );
    Ok(())
}
