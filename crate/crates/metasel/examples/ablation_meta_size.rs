//! Compare meta-training sizes: raw cosine ranking (no meta-training at
//! all) against small, default, and large meta-datasets.
//!
//! ```bash
//! cargo run --release --example ablation_meta_size
//! ```

use metasel::bench::{ablation_sweep, DataSource, RunConfig, Sweep};
use metasel::llm::BackendConfig;
use metasel::meta_sel::MetaSelConfig;
use metasel::optim::TrainConfig;
use metasel::selectors::SelectorKind;
use metasel::synth::SynthConfig;

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("metasel-meta-size");
    let cfg = RunConfig {
        data: DataSource::Synthetic {
            config: SynthConfig::default(),
            seed: 42,
        },
        selector: SelectorKind::MetaSel {
            exclude_exact_text: false,
        },
        k: 5,
        backend: BackendConfig::oracle(0.0),
        seeds: vec![42, 43, 44],
        challenge_size: 500,
        output_dir: out.clone(),
        meta: MetaSelConfig::default(),
        train: TrainConfig::default(),
        trace: false,
        checkpoint_every: 50,
    };

    let reports = ablation_sweep(&cfg, &Sweep::default_meta_size())?;
    println!(
        "{:<13} {:>9} {:>8} {:>13}",
        "variant", "accuracy", "std", "agreement@5"
    );
    for report in &reports {
        println!(
            "{:<13} {:>9.4} {:>8.4} {:>13.4}",
            report.method, report.mean_accuracy, report.std_accuracy, report.mean_agreement_at_k
        );
    }
    println!("\ncombined table: {}", out.join("ablation.csv").display());
    Ok(())
}
