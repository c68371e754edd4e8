//! Applies the manual relaxation rule to an instance and closes a small
//! object set under the manual complementary rule.

use std::collections::BTreeSet;

use pruneplan::mazenamo::{author_domain, generate, Difficulty, GridSpec};
use pruneplan::rules::{
    complementary_closure, manual, parse_complementary, parse_relaxation, relax_with_report,
};

fn main() {
    let known = author_domain().predicate_set();
    let relax = parse_relaxation(manual::RELAXATION_JSON, &known).unwrap();
    let cmpl = parse_complementary(manual::COMPLEMENTARY_JSON, &known).unwrap();
    let p = generate(&GridSpec::square(8, Difficulty::Hard, 5))
        .unwrap()
        .problem;

    let (relaxed, report) = relax_with_report(&p, &relax);
    println!(
        "objects {} -> {}",
        p.objects().len(),
        relaxed.objects().len()
    );
    for (rule, o) in &report.removed {
        println!("  {rule} removed {o}");
    }

    let seed: BTreeSet<String> = p
        .objects()
        .iter()
        .filter(|(_, t)| *t == "obstacle")
        .map(|(o, _)| o.clone())
        .take(2)
        .collect();
    let closed = complementary_closure(&seed, p.init(), &cmpl);
    println!("closure of {seed:?}: {closed:?}");
}
