//! Deterministic prompt construction from a query, selected demonstrations,
//! and the label vocabulary.
//!
//! All selectors share one template so prompt wording never confounds a
//! comparison. The valid-label list is prepended as a comma-separated line,
//! demonstrations appear in the given order (callers pass them in
//! descending selection score), and the prompt ends mid-line at `Intent:`
//! for the model to complete.

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::error::{Error, Result};

/// Prompt layout variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    /// Labeled demonstrations followed by the query.
    PlainIcl,
    /// No demonstrations; a step-by-step cue after the query.
    ZeroShotCot,
    /// Like plain ICL but each demonstration's stored rationale, when
    /// present, is inserted between its utterance and its intent.
    FewShotCotPassthrough,
}

const INSTRUCTION: &str = "Classify the following utterance into one of the intent categories.";
const COT_CUE: &str = "Let's think step by step.";

/// Render the prompt for one query.
///
/// `demos` must be non-empty for the demonstration modes and empty for
/// [`PromptMode::ZeroShotCot`].
pub fn build_prompt(
    query: &str,
    demos: &[&Example],
    labels: &[String],
    mode: PromptMode,
) -> Result<String> {
    match mode {
        PromptMode::PlainIcl | PromptMode::FewShotCotPassthrough if demos.is_empty() => {
            return Err(Error::InvalidInput(format!(
                "{mode:?} needs at least one demonstration"
            )));
        }
        PromptMode::ZeroShotCot if !demos.is_empty() => {
            return Err(Error::InvalidInput(
                "zero-shot mode takes no demonstrations".into(),
            ));
        }
        _ => {}
    }

    let mut prompt = String::new();
    prompt.push_str(&labels.join(", "));
    prompt.push('\n');
    prompt.push_str(INSTRUCTION);
    prompt.push('\n');

    if !demos.is_empty() {
        prompt.push('\n');
        for (i, demo) in demos.iter().enumerate() {
            match (mode, &demo.rationale) {
                (PromptMode::FewShotCotPassthrough, Some(rationale)) => {
                    prompt.push_str(&format!(
                        "[Demo {}] Utterance: {} -> Reasoning: {} -> Intent: {}\n",
                        i + 1,
                        demo.text,
                        rationale,
                        demo.label
                    ));
                }
                _ => {
                    prompt.push_str(&format!(
                        "[Demo {}] Utterance: {} -> Intent: {}\n",
                        i + 1,
                        demo.text,
                        demo.label
                    ));
                }
            }
        }
    }

    prompt.push('\n');
    prompt.push_str(&format!("Utterance: {query} -> Intent:"));
    if mode == PromptMode::ZeroShotCot {
        prompt.push('\n');
        prompt.push_str(COT_CUE);
    }
    Ok(prompt)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo(text: &str, label: &str, rationale: Option<&str>) -> Example {
        Example {
            id: 0,
            text: text.into(),
            label: label.into(),
            rationale: rationale.map(str::to_owned),
        }
    }

    fn labels() -> Vec<String> {
        vec!["card_freeze".into(), "card_lost".into(), "transfer".into()]
    }

    #[test]
    fn plain_icl_golden_snapshot() {
        let d1 = demo("freeze my card", "card_freeze", None);
        let d2 = demo("i lost my card", "card_lost", None);
        let prompt = build_prompt(
            "card is missing",
            &[&d1, &d2],
            &labels(),
            PromptMode::PlainIcl,
        )
        .unwrap();
        let expected = "card_freeze, card_lost, transfer\n\
Classify the following utterance into one of the intent categories.\n\
\n\
[Demo 1] Utterance: freeze my card -> Intent: card_freeze\n\
[Demo 2] Utterance: i lost my card -> Intent: card_lost\n\
\n\
Utterance: card is missing -> Intent:";
        assert_eq!(prompt, expected);
    }

    #[test]
    fn zero_shot_cot_golden_snapshot() {
        let prompt =
            build_prompt("card is missing", &[], &labels(), PromptMode::ZeroShotCot).unwrap();
        let expected = "card_freeze, card_lost, transfer\n\
Classify the following utterance into one of the intent categories.\n\
\n\
Utterance: card is missing -> Intent:\n\
Let's think step by step.";
        assert_eq!(prompt, expected);
        assert!(!prompt.contains("[Demo"));
    }

    #[test]
    fn few_shot_cot_inserts_rationale_and_degrades_without_one() {
        let d1 = demo(
            "freeze my card",
            "card_freeze",
            Some("the user wants a freeze"),
        );
        let d2 = demo("i lost my card", "card_lost", None);
        let prompt = build_prompt(
            "card is missing",
            &[&d1, &d2],
            &labels(),
            PromptMode::FewShotCotPassthrough,
        )
        .unwrap();
        assert!(prompt.contains(
            "[Demo 1] Utterance: freeze my card -> Reasoning: the user wants a freeze -> Intent: card_freeze"
        ));
        assert!(prompt.contains("[Demo 2] Utterance: i lost my card -> Intent: card_lost"));
    }

    #[test]
    fn demo_order_changes_only_demo_lines() {
        let d1 = demo("first", "card_freeze", None);
        let d2 = demo("second", "card_lost", None);
        let a = build_prompt("q", &[&d1, &d2], &labels(), PromptMode::PlainIcl).unwrap();
        let b = build_prompt("q", &[&d2, &d1], &labels(), PromptMode::PlainIcl).unwrap();
        assert_ne!(a, b);
        let diff_lines = a
            .lines()
            .zip(b.lines())
            .filter(|(x, y)| x != y)
            .collect::<Vec<_>>();
        assert!(diff_lines.iter().all(|(x, _)| x.starts_with("[Demo")));
    }

    #[test]
    fn mode_demo_count_mismatch_errors() {
        let d = demo("x", "card_lost", None);
        assert!(build_prompt("q", &[], &labels(), PromptMode::PlainIcl).is_err());
        assert!(build_prompt("q", &[&d], &labels(), PromptMode::ZeroShotCot).is_err());
        assert!(build_prompt("q", &[], &labels(), PromptMode::FewShotCotPassthrough).is_err());
    }

    #[test]
    fn prompt_length_is_deterministic() {
        let d = demo("freeze my card", "card_freeze", None);
        let a = build_prompt("q", &[&d], &labels(), PromptMode::PlainIcl).unwrap();
        let b = build_prompt("q", &[&d], &labels(), PromptMode::PlainIcl).unwrap();
        assert_eq!(a.len(), b.len());
        assert_eq!(a, b);
    }
}
