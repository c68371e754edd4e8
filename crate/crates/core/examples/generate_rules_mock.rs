//! Rule generation against a scripted model: the first reply uses string
//! indices, the retry is well-formed but repeats one rule and misspells a
//! predicate. Post-processing leaves the single light-obstacle rule.

use std::path::Path;
use std::sync::Arc;

use pruneplan::llm::{generate_rules, Gateway, MockFixture, MockLlm};
use pruneplan::mazenamo::domain_text;
use pruneplan::rules::relaxation_to_json;

fn main() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mock_table_iv.json");
    let mock = Arc::new(MockLlm::new(MockFixture::load(&fixture).expect("fixture")));
    let out = generate_rules(&Gateway::mock(mock), &domain_text()).expect("rules");

    let r = &out.relaxation;
    println!(
        "{:<12} {:>6} {:>6} {:>6} {:>6}",
        "stage", "format", "rules", "typos", "dups"
    );
    for (i, s) in r.stats.iter().enumerate() {
        println!(
            "{:<12} {:>6} {:>6} {:>6} {:>6}",
            format!("attempt {}", i + 1),
            s.format_ok,
            s.rules,
            s.typos,
            s.duplicates
        );
    }
    println!("{:<12} {:>6} {:>6}", "dedup", "", r.after_dedup);
    println!("{:<12} {:>6} {:>6}", "filter", "", r.after_filter);
    println!("\n{}", relaxation_to_json(&r.rules));
}
