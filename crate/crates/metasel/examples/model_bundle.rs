//! Persist a trained model as a single bundle file and load it back:
//! identical training inputs produce byte-identical bundles, and a loaded
//! model reproduces the original's selections exactly.
//!
//! ```bash
//! cargo run --example model_bundle
//! ```

use metasel::meta_sel::{train_metasel, MetaSelConfig, MetaSelModel};
use metasel::optim::TrainConfig;
use metasel::synth::{generate, SynthConfig};

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("metasel-bundles");
    std::fs::create_dir_all(&dir)?;
    let train = generate(&SynthConfig::default(), 42, "synthetic-train")?;

    let path_a = dir.join("model_a.msm");
    let path_b = dir.join("model_b.msm");
    for path in [&path_a, &path_b] {
        let model = train_metasel(
            &train,
            &MetaSelConfig::default(),
            &TrainConfig::default(),
            42,
        )?;
        model.save(path)?;
    }
    let bytes_a = std::fs::read(&path_a)?;
    let bytes_b = std::fs::read(&path_b)?;
    println!(
        "bundle: {} bytes, two runs byte-identical: {}",
        bytes_a.len(),
        bytes_a == bytes_b
    );

    let restored = MetaSelModel::load(&path_a)?;
    let fresh = train_metasel(
        &train,
        &MetaSelConfig::default(),
        &TrainConfig::default(),
        42,
    )?;
    let query = "c3w1 c3w4 nz7 c3w0";
    let a = fresh.select(query, 5)?;
    let b = restored.select(query, 5)?;
    println!(
        "loaded model reproduces selections: {}",
        a.demo_ids == b.demo_ids && a.scores == b.scores
    );
    println!("top demo ids for {query:?}: {:?}", b.demo_ids);
    Ok(())
}
