use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use super::{extract_json, prompts, CallKind, ChatMessage, Gateway};
use crate::pddl::{parse_predicates, PddlError, PredicateSet};
use crate::rules::{
    complementary_from_value, complementary_to_json, dedup, dedup_complementary, filter_unknown,
    filter_unknown_complementary, relaxation_from_value, relaxation_to_json, rule_stats,
    validate_rules, ComplementaryRule, RelaxationRule, RuleKind, RuleStats, ValidationReport,
};

#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub kind: RuleKind,
    /// System, prompt, then reply and correction turns.
    pub messages: Vec<ChatMessage>,
    pub attempts: u32,
    pub final_raw: Option<String>,
}

/// The outcome for one rule type.
#[derive(Debug, Clone, Serialize)]
pub struct KindOutcome<R> {
    pub rules: Vec<R>,
    pub transcript: Transcript,
    /// One entry per attempt.
    pub stats: Vec<RuleStats>,
    pub after_dedup: usize,
    pub after_filter: usize,
    /// Validation of the last attempt.
    pub report: ValidationReport,
    /// No attempt produced a well-formed document.
    pub exhausted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratedRules {
    pub relaxation: KindOutcome<RelaxationRule>,
    pub complementary: KindOutcome<ComplementaryRule>,
}

impl GeneratedRules {
    /// Writes `relaxation.json` and `complementary.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("relaxation.json"),
            relaxation_to_json(&self.relaxation.rules) + "\n",
        )?;
        std::fs::write(
            dir.join("complementary.json"),
            complementary_to_json(&self.complementary.rules) + "\n",
        )?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RuleGenError {
    #[error("reading domain predicates: {0}")]
    Domain(#[from] PddlError),
    /// Carries the best-effort rules salvaged from the last attempt.
    #[error("no well-formed reply within {attempts} attempts for {kinds}")]
    Exhausted {
        attempts: u32,
        kinds: String,
        partial: Box<GeneratedRules>,
    },
}

/// Asks the model for both rule types, feeding validation errors back as
/// correction turns for up to `max_attempts` tries each, then deduplicates
/// and drops rules naming unknown predicates.
pub fn generate_rules(
    gateway: &Gateway,
    domain_text: &str,
) -> Result<GeneratedRules, RuleGenError> {
    let known = parse_predicates(domain_text)?;
    let k = gateway.config().max_attempts.max(1);

    let (raw, relax_base) = correction_loop(gateway, domain_text, RuleKind::Relaxation, &known, k);
    let relax_rules = raw
        .as_ref()
        .map_or_else(Vec::new, |v| salvage_relaxation(v, &known));
    let deduped = dedup(&relax_rules);
    let filtered = filter_unknown(&deduped, &known);
    let relaxation = KindOutcome {
        after_dedup: deduped.len(),
        after_filter: filtered.len(),
        rules: filtered,
        ..relax_base
    };

    let (raw, cmpl_base) =
        correction_loop(gateway, domain_text, RuleKind::Complementary, &known, k);
    let cmpl_rules = raw
        .as_ref()
        .map_or_else(Vec::new, |v| salvage_complementary(v, &known));
    let deduped = dedup_complementary(&cmpl_rules);
    let filtered = filter_unknown_complementary(&deduped, &known);
    let complementary = KindOutcome {
        after_dedup: deduped.len(),
        after_filter: filtered.len(),
        rules: filtered,
        ..cmpl_base
    };

    let out = GeneratedRules {
        relaxation,
        complementary,
    };
    let failed: Vec<&str> = [
        (out.relaxation.exhausted, "relaxation"),
        (out.complementary.exhausted, "complementary"),
    ]
    .iter()
    .filter(|(e, _)| *e)
    .map(|(_, n)| *n)
    .collect();
    if failed.is_empty() {
        Ok(out)
    } else {
        Err(RuleGenError::Exhausted {
            attempts: k,
            kinds: failed.join(" and "),
            partial: Box::new(out),
        })
    }
}

/// Runs the attempts. Returns the last parsed JSON document (if any) and
/// the outcome skeleton with empty rules.
fn correction_loop<R>(
    gateway: &Gateway,
    domain_text: &str,
    kind: RuleKind,
    known: &PredicateSet,
    k: u32,
) -> (Option<Value>, KindOutcome<R>) {
    let call_kind = match kind {
        RuleKind::Relaxation => CallKind::Relaxation,
        RuleKind::Complementary => CallKind::Complementary,
    };
    let mut messages = prompts::build_rule_prompt(domain_text, kind);
    let mut stats = Vec::new();
    let mut last_value = None;
    let mut last_raw = None;
    let mut report = ValidationReport::default();
    let mut ok = false;
    let mut attempts = 0;
    for attempt in 1..=k {
        attempts = attempt;
        let raw = match gateway.chat(call_kind, attempt, &messages) {
            Ok(r) => r.text,
            Err(e) => {
                log::warn!("{kind} attempt {attempt}: {e}");
                stats.push(RuleStats {
                    format_ok: false,
                    rules: 0,
                    typos: 0,
                    duplicates: 0,
                });
                continue;
            }
        };
        messages.push(ChatMessage::assistant(raw.clone()));
        last_raw = Some(raw.clone());
        let value = match extract_json(&raw) {
            Ok(v) => v,
            Err(e) => {
                stats.push(RuleStats {
                    format_ok: false,
                    rules: 0,
                    typos: 0,
                    duplicates: 0,
                });
                report = ValidationReport::default();
                if attempt < k {
                    messages.push(prompts::correction(None, Some(&e.to_string())));
                }
                continue;
            }
        };
        report = validate_rules(&value, known, kind);
        stats.push(rule_stats(&value, known, kind));
        last_value = Some(value);
        // duplicates and unknown predicates are repaired by post-processing
        if report.format_ok() {
            ok = true;
            break;
        }
        if attempt < k {
            messages.push(prompts::correction(Some(&report), None));
        }
    }
    let outcome = KindOutcome {
        rules: Vec::new(),
        transcript: Transcript {
            kind,
            messages,
            attempts,
            final_raw: last_raw,
        },
        stats,
        after_dedup: 0,
        after_filter: 0,
        report,
        exhausted: !ok,
    };
    (last_value, outcome)
}

/// Rules of `doc` that are well formed on their own.
fn salvage_relaxation(doc: &Value, known: &PredicateSet) -> Vec<RelaxationRule> {
    each_entry(doc)
        .filter_map(|single| relaxation_from_value(&single, known).ok())
        .flatten()
        .collect()
}

fn salvage_complementary(doc: &Value, known: &PredicateSet) -> Vec<ComplementaryRule> {
    each_entry(doc)
        .filter_map(|single| complementary_from_value(&single, known).ok())
        .flatten()
        .collect()
}

fn each_entry(doc: &Value) -> impl Iterator<Item = Value> + '_ {
    doc.as_object().into_iter().flatten().map(|(k, v)| {
        let mut m = Map::new();
        m.insert(k.clone(), v.clone());
        Value::Object(m)
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::llm::{MockEntry, MockFixture, MockLlm};
    use crate::mazenamo::domain_text;
    use crate::rules::manual;

    fn gw(fixture: MockFixture) -> (Arc<MockLlm>, Gateway) {
        let mock = Arc::new(MockLlm::new(fixture));
        (mock.clone(), Gateway::mock(mock))
    }

    #[test]
    fn first_attempt_success() {
        let (mock, g) = gw(MockFixture::default()
            .with(
                CallKind::Relaxation,
                [MockEntry::Reply(manual::RELAXATION_JSON.into())],
            )
            .with(
                CallKind::Complementary,
                [MockEntry::Reply(manual::COMPLEMENTARY_JSON.into())],
            ));
        let out = generate_rules(&g, &domain_text()).unwrap();
        assert_eq!(out.relaxation.transcript.messages.len(), 3);
        assert_eq!(out.relaxation.transcript.attempts, 1);
        assert_eq!(out.relaxation.rules.len(), 1);
        assert_eq!(out.complementary.rules.len(), 1);
        assert_eq!(mock.total_calls(), 2);
    }

    #[test]
    fn prose_only_exhausts() {
        let (mock, g) = gw(MockFixture::default()
            .with(
                CallKind::Relaxation,
                [MockEntry::Reply("I am not sure.".into())],
            )
            .with(
                CallKind::Complementary,
                [MockEntry::Reply(manual::COMPLEMENTARY_JSON.into())],
            ));
        match generate_rules(&g, &domain_text()) {
            Err(RuleGenError::Exhausted {
                attempts, partial, ..
            }) => {
                assert_eq!(attempts, 3);
                assert!(partial.relaxation.rules.is_empty());
                assert_eq!(partial.complementary.rules.len(), 1);
                // 2 prompt messages, 3 replies, 2 corrections
                assert_eq!(partial.relaxation.transcript.messages.len(), 7);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(mock.calls(CallKind::Relaxation), 3);
    }

    #[test]
    fn correction_turn_repeats_reply_and_errors() {
        let bad = manual::RELAXATION_JSON.replace(r#"{"islight":[0]}"#, r#"{"islight":["0"]}"#);
        let (_, g) = gw(MockFixture::default()
            .with(
                CallKind::Relaxation,
                [
                    MockEntry::Reply(bad.clone()),
                    MockEntry::Reply(manual::RELAXATION_JSON.into()),
                ],
            )
            .with(
                CallKind::Complementary,
                [MockEntry::Reply(manual::COMPLEMENTARY_JSON.into())],
            ));
        let out = generate_rules(&g, &domain_text()).unwrap();
        let m = &out.relaxation.transcript.messages;
        assert_eq!(m.len(), 5);
        assert_eq!(m[2].content, bad);
        assert!(m[3].content.contains("index values must be integers"));
        assert_eq!(out.relaxation.stats.len(), 2);
        assert!(!out.relaxation.stats[0].format_ok);
    }
}
