//! Grounds a generated instance, runs satisficing and optimal search, and
//! checks both plans with the validator.

use pruneplan::mazenamo::{author_domain, generate, Difficulty, GridSpec};
use pruneplan::planner::{ground, search_with, validate, Deadline, SearchMode};

fn main() {
    let domain = author_domain();
    let inst = generate(&GridSpec::square(6, Difficulty::Hard, 11)).expect("instance");
    let p = &inst.problem;
    println!("{}: {} ground actions", p.name(), ground(p, &domain).len());
    for mode in [SearchMode::Satisficing, SearchMode::Optimal] {
        let out = search_with(p, &domain, Deadline::after_secs(10.0), mode);
        let stats = out.stats();
        match out.plan() {
            Some(plan) => {
                validate(&plan.actions, p, &domain).expect("search plans validate");
                println!(
                    "{mode:?}: {} steps, {} expanded",
                    plan.len(),
                    stats.expansions
                );
            }
            None => println!("{mode:?}: {}", out.label()),
        }
    }
}
