//! Render the three prompt layouts for the same query.
//!
//! ```bash
//! cargo run --example prompt_modes
//! ```

use metasel::corpus::Example;
use metasel::prompt::{build_prompt, PromptMode};

fn main() -> anyhow::Result<()> {
    let labels = vec![
        "card_freeze".to_owned(),
        "card_lost".to_owned(),
        "transfer".to_owned(),
    ];
    let demos = [
        Example {
            id: 0,
            text: "freeze my card please".into(),
            label: "card_freeze".into(),
            rationale: Some("the user asks to block the card".into()),
        },
        Example {
            id: 1,
            text: "i cannot find my card anywhere".into(),
            label: "card_lost".into(),
            rationale: None,
        },
    ];
    let demo_refs: Vec<&Example> = demos.iter().collect();
    let query = "my card disappeared yesterday";

    println!("=== plain ICL ===");
    println!(
        "{}\n",
        build_prompt(query, &demo_refs, &labels, PromptMode::PlainIcl)?
    );

    println!("=== few-shot CoT (rationales passed through when present) ===");
    println!(
        "{}\n",
        build_prompt(
            query,
            &demo_refs,
            &labels,
            PromptMode::FewShotCotPassthrough
        )?
    );

    println!("=== zero-shot CoT (no demonstrations) ===");
    println!(
        "{}",
        build_prompt(query, &[], &labels, PromptMode::ZeroShotCot)?
    );
    Ok(())
}
