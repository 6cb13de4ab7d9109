//! Train a selection model on a synthetic intent corpus and rank
//! demonstrations for one query.
//!
//! ```bash
//! cargo run --example quickstart
//! ```

use metasel::meta_sel::{train_metasel, MetaSelConfig};
use metasel::optim::TrainConfig;
use metasel::prompt::{build_prompt, PromptMode};
use metasel::synth::{generate_pair, SynthConfig};

fn main() -> anyhow::Result<()> {
    let (train, test) = generate_pair(&SynthConfig::default(), 42)?;
    println!(
        "pool: {} examples, {} intents\n",
        train.len(),
        train.labels.len()
    );

    let model = train_metasel(
        &train,
        &MetaSelConfig::default(),
        &TrainConfig::default(),
        42,
    )?;
    println!(
        "trained in {:.3}s on {} meta-pairs",
        model.offline_time.as_secs_f64(),
        model.train_meta.n_pairs
    );
    println!(
        "scorer: w_sim = {:+.3}, w_len = {:+.3}, bias = {:+.3}\n",
        model.scorer.theta[0], model.scorer.theta[1], model.scorer.bias
    );

    let query = &test.examples[0];
    let result = model.select(&query.text, 5)?;
    println!("query ({}): {}\n", query.label, query.text);
    println!("top-5 demonstrations (score, label, text):");
    for (id, score) in result.demo_ids.iter().zip(&result.scores) {
        let demo = &model.examples[*id];
        println!("  {score:.4}  {:<10}  {}", demo.label, demo.text);
    }
    println!(
        "\nselection took {:.3} ms over {} candidates",
        result.selection_latency.as_secs_f64() * 1e3,
        model.pool_size()
    );

    let demos: Vec<_> = result
        .demo_ids
        .iter()
        .map(|&id| &model.examples[id])
        .collect();
    let prompt = build_prompt(&query.text, &demos, &model.labels, PromptMode::PlainIcl)?;
    println!("\n--- prompt ---\n{prompt}");
    Ok(())
}
