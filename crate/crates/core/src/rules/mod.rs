//! Relaxation and complementary rules: JSON format, validation,
//! post-processing, and their application to problems.

mod apply;
mod validate;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::pddl::PredicateSet;

pub use apply::{
    apply_relaxation, complementary_closure, relax_with_report, restrict_problem, RelaxReport,
};
pub use validate::{
    rule_stats, validate_rules, IssueKind, RuleIssue, RuleKind, RuleStats, ValidationReport,
};

pub type IndexSpec = BTreeMap<String, Vec<usize>>;

/// One relaxation rule. Indices refer to the argument tuple of the single
/// `pre_compute` atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelaxationRule {
    #[serde(skip)]
    pub id: String,
    pub pre_compute: IndexSpec,
    pub precond: IndexSpec,
    pub delete_objects: Vec<usize>,
    pub delete_effects: IndexSpec,
    pub add_effects: IndexSpec,
}

impl RelaxationRule {
    /// True when both rules do the same thing, whatever their ids.
    pub fn same_content(&self, other: &RelaxationRule) -> bool {
        self.pre_compute == other.pre_compute
            && self.precond == other.precond
            && self.delete_objects == other.delete_objects
            && self.delete_effects == other.delete_effects
            && self.add_effects == other.add_effects
    }

    pub fn predicates(&self) -> impl Iterator<Item = &str> {
        self.pre_compute
            .keys()
            .chain(self.precond.keys())
            .chain(self.delete_effects.keys())
            .chain(self.add_effects.keys())
            .map(String::as_str)
    }

    /// The `(predicate, indices)` entry of `pre_compute`.
    pub fn lookup(&self) -> Option<(&str, &[usize])> {
        self.pre_compute
            .iter()
            .next()
            .map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// For every atom of `predicate`: when the objects at `cond[i]` are all
/// included, the objects at `cmpl[i]` are included too.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ComplementaryRule {
    pub predicate: String,
    pub cond: Vec<Vec<usize>>,
    pub cmpl: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct CmplBody {
    cond: Vec<Vec<usize>>,
    cmpl: Vec<Vec<usize>>,
}

impl ComplementaryRule {
    pub fn pairs(&self) -> impl Iterator<Item = (&[usize], &[usize])> {
        self.cond
            .iter()
            .map(Vec::as_slice)
            .zip(self.cmpl.iter().map(Vec::as_slice))
    }
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("rules failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("reading rules: {0}")]
    Io(#[from] std::io::Error),
}

/// Orders `rule2` before `rule10`.
pub fn key_order(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        let (head, tail) = s.split_at(s.len() - digits);
        (head, tail.parse().ok())
    }
    split(a).cmp(&split(b)).then_with(|| a.cmp(b))
}

/// Reads a relaxation rule document. Only format problems are fatal;
/// unknown predicates and duplicates survive for [`dedup`] and
/// [`filter_unknown`].
pub fn relaxation_from_value(
    v: &Value,
    known: &PredicateSet,
) -> Result<Vec<RelaxationRule>, RuleError> {
    let report = validate_rules(v, known, RuleKind::Relaxation);
    if !report.format_ok() {
        return Err(RuleError::Invalid(report));
    }
    let map: IndexMap<String, RelaxationRule> = serde_json::from_value(v.clone())?;
    let mut rules: Vec<RelaxationRule> = map
        .into_iter()
        .map(|(id, mut r)| {
            r.id = id;
            r
        })
        .collect();
    rules.sort_by(|a, b| key_order(&a.id, &b.id));
    Ok(rules)
}

pub fn complementary_from_value(
    v: &Value,
    known: &PredicateSet,
) -> Result<Vec<ComplementaryRule>, RuleError> {
    let report = validate_rules(v, known, RuleKind::Complementary);
    if !report.format_ok() {
        return Err(RuleError::Invalid(report));
    }
    let map: IndexMap<String, CmplBody> = serde_json::from_value(v.clone())?;
    Ok(map
        .into_iter()
        .map(|(predicate, b)| ComplementaryRule {
            predicate,
            cond: b.cond,
            cmpl: b.cmpl,
        })
        .collect())
}

pub fn parse_relaxation(
    text: &str,
    known: &PredicateSet,
) -> Result<Vec<RelaxationRule>, RuleError> {
    relaxation_from_value(&serde_json::from_str(text)?, known)
}

pub fn parse_complementary(
    text: &str,
    known: &PredicateSet,
) -> Result<Vec<ComplementaryRule>, RuleError> {
    complementary_from_value(&serde_json::from_str(text)?, known)
}

pub fn relaxation_to_value(rules: &[RelaxationRule]) -> Value {
    let mut map = serde_json::Map::new();
    for r in rules {
        map.insert(
            r.id.clone(),
            serde_json::to_value(r).expect("rule serializes"),
        );
    }
    Value::Object(map)
}

pub fn complementary_to_value(rules: &[ComplementaryRule]) -> Value {
    let mut map = serde_json::Map::new();
    for r in rules {
        let body = CmplBody {
            cond: r.cond.clone(),
            cmpl: r.cmpl.clone(),
        };
        map.insert(
            r.predicate.clone(),
            serde_json::to_value(body).expect("rule serializes"),
        );
    }
    Value::Object(map)
}

pub fn relaxation_to_json(rules: &[RelaxationRule]) -> String {
    serde_json::to_string_pretty(&relaxation_to_value(rules)).unwrap()
}

pub fn complementary_to_json(rules: &[ComplementaryRule]) -> String {
    serde_json::to_string_pretty(&complementary_to_value(rules)).unwrap()
}

pub fn load_relaxation(
    path: &Path,
    known: &PredicateSet,
) -> Result<Vec<RelaxationRule>, RuleError> {
    parse_relaxation(&std::fs::read_to_string(path)?, known)
}

pub fn load_complementary(
    path: &Path,
    known: &PredicateSet,
) -> Result<Vec<ComplementaryRule>, RuleError> {
    parse_complementary(&std::fs::read_to_string(path)?, known)
}

/// Collapses content-identical relaxation rules, keeping the lowest key.
pub fn dedup(rules: &[RelaxationRule]) -> Vec<RelaxationRule> {
    let mut sorted: Vec<&RelaxationRule> = rules.iter().collect();
    sorted.sort_by(|a, b| key_order(&a.id, &b.id));
    let mut out: Vec<RelaxationRule> = Vec::new();
    for r in sorted {
        if !out.iter().any(|k| k.same_content(r)) {
            out.push(r.clone());
        }
    }
    out
}

/// Drops repeated `(cond, cmpl)` pairs within each entry and merges
/// entries naming the same predicate.
pub fn dedup_complementary(rules: &[ComplementaryRule]) -> Vec<ComplementaryRule> {
    let mut out: Vec<ComplementaryRule> = Vec::new();
    for r in rules {
        let idx = match out.iter().position(|o| o.predicate == r.predicate) {
            Some(i) => i,
            None => {
                out.push(ComplementaryRule {
                    predicate: r.predicate.clone(),
                    cond: Vec::new(),
                    cmpl: Vec::new(),
                });
                out.len() - 1
            }
        };
        for (c, m) in r.pairs() {
            let entry = &mut out[idx];
            if !entry.pairs().any(|(c2, m2)| c2 == c && m2 == m) {
                entry.cond.push(c.to_vec());
                entry.cmpl.push(m.to_vec());
            }
        }
    }
    out
}

/// Drops rules that mention a predicate outside `known`.
pub fn filter_unknown(rules: &[RelaxationRule], known: &PredicateSet) -> Vec<RelaxationRule> {
    let kept: Vec<RelaxationRule> = rules
        .iter()
        .filter(|r| {
            let unknown: Vec<&str> = r.predicates().filter(|p| !known.contains(p)).collect();
            if !unknown.is_empty() {
                log::info!("dropping rule {}: unknown predicates {:?}", r.id, unknown);
            }
            unknown.is_empty()
        })
        .cloned()
        .collect();
    if kept.is_empty() && !rules.is_empty() {
        log::warn!("every relaxation rule referenced an unknown predicate");
    }
    kept
}

pub fn filter_unknown_complementary(
    rules: &[ComplementaryRule],
    known: &PredicateSet,
) -> Vec<ComplementaryRule> {
    let kept: Vec<ComplementaryRule> = rules
        .iter()
        .filter(|r| {
            let ok = known.contains(&r.predicate);
            if !ok {
                log::info!(
                    "dropping complementary rule on unknown predicate {}",
                    r.predicate
                );
            }
            ok
        })
        .cloned()
        .collect();
    if kept.is_empty() && !rules.is_empty() {
        log::warn!("every complementary rule referenced an unknown predicate");
    }
    kept
}

/// The hand-written MazeNamo rules.
pub mod manual {
    pub const RELAXATION_JSON: &str = r#"{"rule0": {"pre_compute": {"oat":[0,1]},
  "precond": {"islight":[0]},
  "delete_objects": [0],
  "delete_effects": {"islight":[0],
    "ismoveable":[0], "oat":[0,1]},
  "add_effects": {"posempty":[1]}}}"#;

    pub const COMPLEMENTARY_JSON: &str = r#"{"oat": {"cond":[[0],[1]], "cmpl":[[1],[0]]}}"#;

    /// Seven entries covering stacking, robot position and adjacency.
    pub const COMPLEMENTARY_WIDE_JSON: &str = include_str!("../../data/complementary_wide.json");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::author_domain;

    fn known() -> PredicateSet {
        author_domain().predicate_set()
    }

    #[test]
    fn manual_relaxation_parses() {
        let rules = parse_relaxation(manual::RELAXATION_JSON, &known()).unwrap();
        assert_eq!(rules.len(), 1);
        assert_eq!(rules[0].id, "rule0");
        assert_eq!(rules[0].lookup(), Some(("oat", &[0, 1][..])));
        assert_eq!(rules[0].delete_effects.len(), 3);
    }

    #[test]
    fn canonical_round_trip() {
        let k = known();
        let rules = parse_relaxation(manual::RELAXATION_JSON, &k).unwrap();
        let v: Value = serde_json::from_str(manual::RELAXATION_JSON).unwrap();
        assert_eq!(relaxation_to_value(&rules), v);
        let again = parse_relaxation(&relaxation_to_json(&rules), &k).unwrap();
        assert_eq!(again, rules);

        let c = parse_complementary(manual::COMPLEMENTARY_JSON, &k).unwrap();
        let v: Value = serde_json::from_str(manual::COMPLEMENTARY_JSON).unwrap();
        assert_eq!(complementary_to_value(&c), v);
    }

    #[test]
    fn string_index_is_not_coerced() {
        let bad = manual::RELAXATION_JSON.replace(r#""islight":[0]}"#, r#""islight":["0"]}"#);
        assert!(matches!(
            parse_relaxation(&bad, &known()),
            Err(RuleError::Invalid(_))
        ));
    }

    #[test]
    fn key_order_is_numeric() {
        let mut keys = vec!["rule10", "rule2", "rule0"];
        keys.sort_by(|a, b| key_order(a, b));
        assert_eq!(keys, ["rule0", "rule2", "rule10"]);
    }

    #[test]
    fn dedup_keeps_lowest_key() {
        let base = parse_relaxation(manual::RELAXATION_JSON, &known())
            .unwrap()
            .remove(0);
        let mut b = base.clone();
        b.id = "rule3".into();
        let mut c = base.clone();
        c.id = "rule1".into();
        let out = dedup(&[b, c]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].id, "rule1");
        assert!(dedup(&[]).is_empty());
    }

    #[test]
    fn wide_complementary_set() {
        let c = parse_complementary(manual::COMPLEMENTARY_WIDE_JSON, &known()).unwrap();
        let preds: Vec<&str> = c.iter().map(|r| r.predicate.as_str()).collect();
        assert_eq!(
            preds,
            ["upon", "oat", "rat", "upto", "downto", "leftto", "rightto"]
        );
    }
}
