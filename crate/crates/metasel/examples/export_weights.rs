//! Train one model per seed and print the learned feature-weight table:
//! similarity dominates while the length-ratio weight stays near zero.
//!
//! ```bash
//! cargo run --example export_weights
//! ```

use metasel::bench::export_weights_across_seeds;
use metasel::meta_sel::MetaSelConfig;
use metasel::optim::TrainConfig;
use metasel::synth::{generate, SynthConfig};

fn main() -> anyhow::Result<()> {
    let train = generate(&SynthConfig::default(), 42, "synthetic-train")?;
    let report = export_weights_across_seeds(
        &train,
        &MetaSelConfig::default(),
        &TrainConfig::default(),
        &[42, 43, 44],
    )?;

    println!("dataset: {}\n", report.dataset);
    println!(
        "{:>6} {:>9} {:>9} {:>10}",
        "seed", "w_sim", "w_len", "intercept"
    );
    for row in &report.per_seed {
        println!(
            "{:>6} {:>9.3} {:>9.3} {:>10.3}",
            row.seed, row.weights.w_sim, row.weights.w_len, row.weights.intercept
        );
    }
    println!(
        "{:>6} {:>9.3} {:>9.3} {:>10.3}",
        "mean", report.mean.w_sim, report.mean.w_len, report.mean.intercept
    );
    println!(
        "{:>6} {:>9.3} {:>9.3} {:>10.3}",
        "std", report.std.w_sim, report.std.w_len, report.std.intercept
    );
    println!("\nas JSON:\n{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
