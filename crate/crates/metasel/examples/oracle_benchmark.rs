//! Benchmark the learned selector against random selection on the
//! deterministic one-match oracle: the backend answers correctly exactly
//! when a selected demonstration shares the query's label.
//!
//! ```bash
//! cargo run --release --example oracle_benchmark
//! ```

use metasel::bench::{run_experiment_on, DataSource, RunConfig};
use metasel::llm::BackendConfig;
use metasel::meta_sel::MetaSelConfig;
use metasel::optim::TrainConfig;
use metasel::selectors::SelectorKind;
use metasel::synth::{generate_pair, SynthConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("metasel-oracle-benchmark");
    let (train, test) = generate_pair(&SynthConfig::default(), 42)?;

    let base = RunConfig {
        data: DataSource::Synthetic {
            config: SynthConfig::default(),
            seed: 42,
        },
        selector: SelectorKind::Random,
        k: 5,
        backend: BackendConfig::oracle(0.0),
        seeds: vec![42, 43, 44],
        challenge_size: 1000,
        output_dir: out.clone(),
        meta: MetaSelConfig::default(),
        train: TrainConfig::default(),
        trace: false,
        checkpoint_every: 50,
    };

    println!(
        "{:<10} {:>9} {:>7} {:>13}",
        "selector", "accuracy", "std", "agreement@5"
    );
    for selector in [
        SelectorKind::Random,
        SelectorKind::MetaSel {
            exclude_exact_text: false,
        },
    ] {
        let mut cfg = base.clone();
        cfg.output_dir = out.join(selector.name());
        cfg.selector = selector;
        let report = run_experiment_on(&cfg, &train, &test)?;
        println!(
            "{:<10} {:>9.4} {:>7.4} {:>13.4}",
            report.method, report.mean_accuracy, report.std_accuracy, report.mean_agreement_at_k
        );
    }
    println!("\nreports under {}", out.display());
    Ok(())
}
