//! Build a challenge subset: the test queries nearest a class decision
//! boundary under a TF-IDF centroid classifier, hardest first.
//!
//! ```bash
//! cargo run --example challenge_subset
//! ```

use metasel::corpus::challenge_subset;
use metasel::synth::{generate_pair, SynthConfig};

fn main() -> anyhow::Result<()> {
    let config = SynthConfig {
        n_classes: 4,
        per_class: 50,
        noise_rate: 0.5,
        ..SynthConfig::default()
    };
    let (train, test) = generate_pair(&config, 42)?;
    println!(
        "train {} examples, test {} examples, {} intents",
        train.len(),
        test.len(),
        train.labels.len()
    );

    let subset = challenge_subset(&train, &test, 20, 42)?;
    println!("\n20 boundary-nearest queries (hardest first):");
    for e in &subset.examples {
        println!("  [{}] {}", e.label, e.text);
    }

    // The subset is ordered by margin, so its head is harder than a random
    // draw: noisy texts with little class vocabulary surface first.
    let noise_heavy = subset
        .examples
        .iter()
        .take(10)
        .filter(|e| {
            let noise = e.text.split(' ').filter(|t| t.starts_with("nz")).count();
            noise * 2 >= e.text.split(' ').count()
        })
        .count();
    println!("\n{noise_heavy}/10 of the hardest queries are majority-noise");
    Ok(())
}
