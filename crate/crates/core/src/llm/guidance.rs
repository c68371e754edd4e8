use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use serde_json::Value;

use super::{extract_json, prompts, CallKind, Gateway, LlmError};
use crate::pddl::GroundAtom;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReply {
    /// Suggested objects, all members of the excluded set.
    pub objects: Vec<String>,
    pub latency: Duration,
    pub simulated_latency: Duration,
    pub error: Option<LlmError>,
}

/// Asks which excluded objects block the plan. Unknown names are dropped;
/// any failure yields an empty list.
pub fn recovery_guidance(
    gateway: &Gateway,
    state: &BTreeSet<GroundAtom>,
    goal: &BTreeSet<GroundAtom>,
    included: &BTreeSet<String>,
    excluded: &BTreeSet<String>,
) -> RecoveryReply {
    let messages = prompts::recovery_prompt(state, goal, included, excluded);
    let reply = match gateway.chat(CallKind::Recovery, 1, &messages) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("recovery call failed: {e}");
            return RecoveryReply {
                objects: Vec::new(),
                latency: Duration::ZERO,
                simulated_latency: Duration::ZERO,
                error: Some(e),
            };
        }
    };
    let mut out = RecoveryReply {
        objects: Vec::new(),
        latency: reply.latency,
        simulated_latency: reply.simulated_latency,
        error: None,
    };
    match extract_json(&reply.text) {
        Ok(Value::Array(items)) => {
            for item in items {
                match item.as_str() {
                    Some(name) if excluded.contains(name) => {
                        if !out.objects.iter().any(|o| o == name) {
                            out.objects.push(name.to_string());
                        }
                    }
                    _ => log::info!("recovery: ignoring suggestion {item}"),
                }
            }
        }
        Ok(other) => out.error = Some(LlmError::BadReply(format!("expected a list, got {other}"))),
        Err(e) => out.error = Some(e),
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReply {
    /// Every object of the request, clamped into `[0, 1]`.
    pub scores: BTreeMap<String, f64>,
    pub latency: Duration,
    pub simulated_latency: Duration,
    /// Set when the call failed and every score is 0.5.
    pub error: Option<LlmError>,
}

pub const DEFAULT_SCORE: f64 = 0.5;

/// Asks for a score per object. Missing objects get 0.5; on failure every
/// object gets 0.5.
pub fn score_objects(
    gateway: &Gateway,
    goal: &BTreeSet<GroundAtom>,
    objects: &BTreeMap<String, String>,
    facts: &[GroundAtom],
) -> ScoreReply {
    let uniform = || objects.keys().map(|o| (o.clone(), DEFAULT_SCORE)).collect();
    let messages = prompts::scoring_prompt(goal, objects, facts);
    let reply = match gateway.chat(CallKind::Scoring, 1, &messages) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("scoring call failed: {e}");
            return ScoreReply {
                scores: uniform(),
                latency: Duration::ZERO,
                simulated_latency: Duration::ZERO,
                error: Some(e),
            };
        }
    };
    let parsed = match extract_json(&reply.text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(other) => Err(LlmError::BadReply(format!(
            "expected an object, got {other}"
        ))),
        Err(e) => Err(e),
    };
    let (scores, error) = match parsed {
        Ok(m) => {
            let scores = objects
                .keys()
                .map(|o| {
                    let s = m.get(o).and_then(Value::as_f64).unwrap_or(DEFAULT_SCORE);
                    (
                        o.clone(),
                        if s.is_nan() {
                            DEFAULT_SCORE
                        } else {
                            s.clamp(0.0, 1.0)
                        },
                    )
                })
                .collect();
            (scores, None)
        }
        Err(e) => (uniform(), Some(e)),
    };
    ScoreReply {
        scores,
        latency: reply.latency,
        simulated_latency: reply.simulated_latency,
        error,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::llm::{MockEntry, MockFixture, MockLlm};

    fn gw(kind: CallKind, entry: MockEntry) -> Gateway {
        Gateway::mock(Arc::new(MockLlm::new(
            MockFixture::default().with(kind, [entry]),
        )))
    }

    fn names(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn recovery_filters_to_excluded() {
        let g = gw(
            CallKind::Recovery,
            MockEntry::Reply(r#"["b7", "p12", "zz"]"#.into()),
        );
        let r = recovery_guidance(
            &g,
            &BTreeSet::new(),
            &BTreeSet::new(),
            &names(&["r1"]),
            &names(&["b7", "p12"]),
        );
        assert_eq!(r.objects, ["b7", "p12"]);
        let g = gw(
            CallKind::Recovery,
            MockEntry::Error {
                error: "network".into(),
            },
        );
        let r = recovery_guidance(
            &g,
            &BTreeSet::new(),
            &BTreeSet::new(),
            &names(&[]),
            &names(&["b7"]),
        );
        assert!(r.objects.is_empty());
        assert!(matches!(r.error, Some(LlmError::Network(_))));
    }

    #[test]
    fn scores_fill_and_clamp() {
        let objects: BTreeMap<String, String> =
            [("p9", "position"), ("b1", "obstacle"), ("r1", "robot")]
                .iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
        let g = gw(
            CallKind::Scoring,
            MockEntry::Reply(r#"{"p9": 1.3, "b1": 0.7}"#.into()),
        );
        let r = score_objects(&g, &BTreeSet::new(), &objects, &[]);
        assert_eq!(r.scores["p9"], 1.0);
        assert_eq!(r.scores["b1"], 0.7);
        assert_eq!(r.scores["r1"], 0.5);
        let g = gw(
            CallKind::Scoring,
            MockEntry::Error {
                error: "timeout".into(),
            },
        );
        let r = score_objects(&g, &BTreeSet::new(), &objects, &[]);
        assert!(r.scores.values().all(|&s| s == 0.5));
        assert_eq!(r.error, Some(LlmError::Timeout));
    }
}
