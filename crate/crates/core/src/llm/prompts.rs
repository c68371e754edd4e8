//! Prompt text. The wording is ours; the layout follows the structure the
//! rule generator needs (purpose, schema, integer rule, good and bad
//! examples, then the domain verbatim).

use std::collections::{BTreeMap, BTreeSet};

use super::ChatMessage;
use crate::pddl::GroundAtom;
use crate::rules::{manual, RuleKind, ValidationReport};

pub const SYSTEM: &str = "You are an expert in PDDL task planning. You answer with a single JSON document and nothing else.";

const RELAXATION_PURPOSE: &str = "\
A relaxation rule simplifies a planning problem by deleting objects that are easy to get rid of \
(for example obstacles the robot could carry away) and patching the initial state so the problem \
stays consistent, such as marking the cell the object occupied as empty. The planner solves the \
simplified problem quickly and uses the objects in that rough plan as a hint for the real one.";

const RELAXATION_SCHEMA: &str = r#"Schema (one entry per rule, keys "rule0", "rule1", ...):
{
  "ruleN": {
    "pre_compute":    {"<binary predicate>": [0, 1]},      // looks up the tuple (x0, x1), e.g. an obstacle and its position
    "precond":        {"<predicate>": [<index>, ...]},     // atoms over the tuple that must hold for the object to be removable
    "delete_objects": [<index>, ...],                      // tuple positions of the objects to delete
    "delete_effects": {"<predicate>": [<index>, ...]},     // atoms over the tuple to retract
    "add_effects":    {"<predicate>": [<index>, ...]}      // atoms over the tuple to assert afterwards
  }
}
Every index refers to a position in the pre_compute tuple and every index list has one entry per predicate argument."#;

const COMPLEMENTARY_PURPOSE: &str = "\
A complementary rule keeps structurally linked objects together when the planner works on a subset \
of the objects. For a binary predicate p, whenever the objects at the cond positions of a true p atom \
are included, the objects at the matching cmpl positions must be included too (for example an \
obstacle and the cell it stands on).";

const COMPLEMENTARY_SCHEMA: &str = r#"Schema (one entry per predicate name):
{
  "<predicate>": {
    "cond": [[<index>, ...], ...],   // argument positions that trigger the rule
    "cmpl": [[<index>, ...], ...]    // argument positions pulled in, paired with cond by list position
  }
}
cond and cmpl have the same length and every index is smaller than the predicate's arity."#;

const INTEGER_RULE: &str = "IMPORTANT: every index value is a JSON integer such as 0 or 1. Never write indices as strings such as \"0\". Use only predicate names that appear in the :predicates block of the domain below.";

/// System and user messages for one rule type.
pub fn build_rule_prompt(domain_text: &str, kind: RuleKind) -> Vec<ChatMessage> {
    let (purpose, schema, good, bad) = match kind {
        RuleKind::Relaxation => (
            RELAXATION_PURPOSE,
            RELAXATION_SCHEMA,
            manual::RELAXATION_JSON.to_string(),
            r#"{"rule0": {"pre_compute": {"oat":["0","1"]}, "precond": {"islight":["0"]}, "delete_objects": ["0"], "delete_effects": {"oat":["0","1"]}, "add_effects": {"posempty":["1"]}}}"#.to_string(),
        ),
        RuleKind::Complementary => (
            COMPLEMENTARY_PURPOSE,
            COMPLEMENTARY_SCHEMA,
            manual::COMPLEMENTARY_JSON.to_string(),
            r#"{"oat": {"cond":[["0"],["1"]], "cmpl":[["1"],["0"]]}}"#.to_string(),
        ),
    };
    let user = format!(
        "Task: write {kind} rules for the planning domain below.\n\n\
         Purpose:\n{purpose}\n\n\
         {schema}\n\n\
         {INTEGER_RULE}\n\n\
         Correct example:\n{good}\n\n\
         Wrong example (indices written as strings, rejected):\n{bad}\n\n\
         Domain:\n{domain_text}\n\n\
         Answer with the JSON document only."
    );
    vec![ChatMessage::system(SYSTEM), ChatMessage::user(user)]
}

/// The user turn sent after a reply failed validation.
pub fn correction(report: Option<&ValidationReport>, parse_error: Option<&str>) -> ChatMessage {
    let mut s = String::from("Your reply did not pass validation:\n");
    if let Some(e) = parse_error {
        s.push_str(&format!("- {e}\n"));
    }
    if let Some(r) = report {
        s.push_str(&r.to_string());
    }
    s.push_str("Fix every problem listed and answer with the corrected JSON document only.");
    ChatMessage::user(s)
}

pub fn recovery_prompt(
    state: &BTreeSet<GroundAtom>,
    goal: &BTreeSet<GroundAtom>,
    included: &BTreeSet<String>,
    excluded: &BTreeSet<String>,
) -> Vec<ChatMessage> {
    let join_atoms = |s: &BTreeSet<GroundAtom>| {
        s.iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join("\n")
    };
    let join = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>().join(", ");
    let user = format!(
        "A planner working on a subset of the objects of this problem failed to find a plan in time.\n\n\
         Goal:\n{}\n\nState:\n{}\n\nIncluded objects: {}\n\nExcluded objects: {}\n\n\
         Which excluded objects most likely block the plan and must be added back? \
         Answer with a JSON list of object names taken from the excluded objects, e.g. [\"o3\", \"p2_4\"].",
        join_atoms(goal),
        join_atoms(state),
        join(included),
        join(excluded),
    );
    vec![ChatMessage::system(SYSTEM), ChatMessage::user(user)]
}

/// Objects as `name: type` lines, facts in the order given.
pub fn scoring_prompt(
    goal: &BTreeSet<GroundAtom>,
    objects: &BTreeMap<String, String>,
    facts: &[GroundAtom],
) -> Vec<ChatMessage> {
    let goal_text = goal
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    let objects_text = objects
        .iter()
        .map(|(n, t)| format!("{n}: {t}"))
        .collect::<Vec<_>>()
        .join("\n");
    let facts_text = facts
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    let user = format!(
        "Rate how important each object is for reaching the goal of this planning problem.\n\n\
         Goal:\n{goal_text}\n\nObjects:\n{objects_text}\n\nState facts:\n{facts_text}\n\n\
         Answer with a JSON object mapping every object name to a score between 0 and 1, \
         where 1 means the object is certainly needed."
    );
    vec![ChatMessage::system(SYSTEM), ChatMessage::user(user)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::domain_text;

    #[test]
    fn rule_prompt_has_all_parts() {
        let d = domain_text();
        for kind in [RuleKind::Relaxation, RuleKind::Complementary] {
            let m = build_rule_prompt(&d, kind);
            assert_eq!(m.len(), 2);
            let u = &m[1].content;
            assert!(u.contains(&d));
            assert!(u.contains("Purpose:"));
            assert!(u.contains("Schema"));
            assert!(u.contains("Never write indices as strings"));
            assert!(u.contains("Wrong example"));
        }
        assert!(build_rule_prompt(&d, RuleKind::Relaxation)[1]
            .content
            .contains(manual::RELAXATION_JSON));
        assert!(build_rule_prompt(&d, RuleKind::Complementary)[1]
            .content
            .contains(manual::COMPLEMENTARY_JSON));
    }
}
