//! Validates the manual rule listings and a few corrupted variants.

use pruneplan::mazenamo::author_domain;
use pruneplan::rules::{manual, validate_rules, RuleKind};
use serde_json::Value;

fn main() {
    let known = author_domain().predicate_set();
    let cases = [
        (
            "manual relaxation",
            manual::RELAXATION_JSON.to_string(),
            RuleKind::Relaxation,
        ),
        (
            "manual complementary",
            manual::COMPLEMENTARY_JSON.to_string(),
            RuleKind::Complementary,
        ),
        (
            "string index",
            manual::RELAXATION_JSON
                .replace("[0],\n    \"ismoveable\"", "[\"0\"],\n    \"ismoveable\""),
            RuleKind::Relaxation,
        ),
        (
            "typo",
            manual::RELAXATION_JSON.replace("islight\":[0]}", "ismoveempty\":[0]}"),
            RuleKind::Relaxation,
        ),
        (
            "missing key",
            manual::RELAXATION_JSON.replace("\"delete_objects\": [0],", ""),
            RuleKind::Relaxation,
        ),
        (
            "unequal lengths",
            manual::COMPLEMENTARY_JSON.replace("\"cmpl\":[[1],[0]]", "\"cmpl\":[[1]]"),
            RuleKind::Complementary,
        ),
    ];
    for (name, text, kind) in cases {
        let v: Value = serde_json::from_str(&text).expect("json");
        let report = validate_rules(&v, &known, kind);
        println!(
            "{name}: {}",
            if report.is_valid() {
                "valid"
            } else {
                "invalid"
            }
        );
        for e in &report.errors {
            println!("  {e}");
        }
    }
}
