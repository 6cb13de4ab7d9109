//! Run every selection strategy on one synthetic benchmark and print a
//! Table-2-style comparison, best accuracy first.
//!
//! The online strategies (ts_bandit, rdes, reinforce, a2c) learn from the
//! oracle's correctness feedback as the evaluation stream progresses; the
//! others are offline. zero_shot_cot is skipped because the oracle backend
//! has no reasoning path, only demonstration matching.
//!
//! ```bash
//! cargo run --release --example compare_selectors
//! ```

use metasel::bench::{run_experiment_on, DataSource, RunConfig};
use metasel::llm::BackendConfig;
use metasel::meta_sel::MetaSelConfig;
use metasel::optim::TrainConfig;
use metasel::selectors::SelectorKind;
use metasel::synth::{generate_pair, SynthConfig};

fn main() -> anyhow::Result<()> {
    let out = std::env::temp_dir().join("metasel-compare-selectors");
    let config = SynthConfig {
        per_class: 60,
        ..SynthConfig::default()
    };
    let (train, test) = generate_pair(&config, 42)?;

    let selectors = vec![
        SelectorKind::Random,
        SelectorKind::Icl,
        SelectorKind::FewShotCot,
        SelectorKind::Diversity,
        SelectorKind::Uncertainty { m_neighbors: 20 },
        SelectorKind::Influence,
        SelectorKind::TsBandit,
        SelectorKind::Rdes {
            lambda: 0.5,
            theta_div: 0.5,
        },
        SelectorKind::Reinforce,
        SelectorKind::A2c,
        SelectorKind::MetaSel {
            exclude_exact_text: false,
        },
    ];

    let mut rows = Vec::new();
    for selector in selectors {
        let cfg = RunConfig {
            data: DataSource::Synthetic { config, seed: 42 },
            output_dir: out.join(selector.name()),
            selector: selector.clone(),
            k: 5,
            backend: BackendConfig::oracle(0.0),
            seeds: vec![42, 43, 44],
            challenge_size: 300,
            meta: MetaSelConfig::default(),
            train: TrainConfig::default(),
            trace: false,
            checkpoint_every: 50,
        };
        eprint!("running {} ...\r", selector.name());
        let report = run_experiment_on(&cfg, &train, &test)?;
        rows.push((
            report.method.clone(),
            report.mean_accuracy,
            report.std_accuracy,
            report.mean_agreement_at_k,
        ));
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1));

    println!(
        "{:<13} {:>9} {:>8} {:>13}",
        "selector", "accuracy", "std", "agreement@5"
    );
    for (name, acc, std, agg) in rows {
        println!("{name:<13} {acc:>9.4} {std:>8.4} {agg:>13.4}");
    }
    println!("\nreports under {}", out.display());
    Ok(())
}
