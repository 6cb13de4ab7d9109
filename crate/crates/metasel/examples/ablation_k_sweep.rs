//! Sweep the demonstration budget k over {3, 5, 10, 20} and watch oracle
//! accuracy saturate.
//!
//! ```bash
//! cargo run --release --example ablation_k_sweep
//! ```

use metasel::bench::{ablation_sweep, DataSource, RunConfig, Sweep};
use metasel::llm::BackendConfig;
use metasel::meta_sel::MetaSelConfig;
use metasel::optim::TrainConfig;
use metasel::selectors::SelectorKind;
use metasel::synth::SynthConfig;

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("metasel-k-sweep");
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

    let reports = ablation_sweep(&cfg, &Sweep::default_k())?;
    println!(
        "{:>4} {:>9} {:>8} {:>13}",
        "k", "accuracy", "std", "agreement@k"
    );
    for report in &reports {
        println!(
            "{:>4} {:>9.4} {:>8.4} {:>13.4}",
            report.k, report.mean_accuracy, report.std_accuracy, report.mean_agreement_at_k
        );
    }
    println!("\ncombined table: {}", out.join("ablation.csv").display());
    Ok(())
}
