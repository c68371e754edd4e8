mod common;

use std::collections::BTreeSet;

use pruneplan::mazenamo::{author_domain, generate, Difficulty, GridSpec};
use pruneplan::planner::{ground, search, search_with, validate, Deadline, SearchMode};
use pruneplan::rules::{
    apply_relaxation, complementary_closure, manual, parse_complementary, parse_relaxation,
};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn grounding_matches_enumeration() {
    let d = author_domain();
    for inst in common::instances(&[3, 4], 12, 0) {
        let p = &inst.problem;
        let got: Vec<(String, Vec<String>)> = ground(p, &d)
            .into_iter()
            .map(|a| (a.schema, a.args))
            .collect();
        assert_eq!(got, common::ground_reference(p, &d), "{}", p.name());
    }
}

#[test]
fn optimal_search_matches_bfs() {
    let d = author_domain();
    for inst in common::instances(&[3, 4, 5], 40, 100) {
        let p = &inst.problem;
        let plan = search_with(p, &d, Deadline::after_secs(30.0), SearchMode::Optimal)
            .into_plan()
            .unwrap();
        assert!(validate(&plan.actions, p, &d).is_ok());
        assert_eq!(
            Some(plan.len()),
            common::bfs_length(p, &d, 2_000_000),
            "{}",
            p.name()
        );
    }
}

#[test]
fn satisficing_plans_reach_the_goal() {
    let d = author_domain();
    for inst in common::instances(&[4, 6, 8], 30, 7) {
        let p = &inst.problem;
        let plan = search(p, &d, Deadline::after_secs(30.0))
            .into_plan()
            .unwrap();
        let end = common::simulate(p.init(), &plan.actions).expect("applicable");
        assert!(p.goal().is_subset(&end));
        assert!(plan.len() >= inst.meta.witness_length.min(plan.len()));
    }
}

#[test]
fn witnesses_validate() {
    let d = author_domain();
    for inst in common::instances(&[5, 7, 10], 24, 40) {
        validate(&inst.witness.actions, &inst.problem, &d).unwrap();
    }
}

#[test]
fn relaxation_matches_reference() {
    let known = author_domain().predicate_set();
    let rules = parse_relaxation(manual::RELAXATION_JSON, &known).unwrap();
    for inst in common::instances(&[4, 5, 6], 60, 300) {
        let p = &inst.problem;
        let relaxed = apply_relaxation(p, &rules);
        let (objects, init) = common::relax_light_reference(p);
        assert_eq!(relaxed.objects(), &objects);
        assert_eq!(relaxed.init(), &init);
        assert_eq!(relaxed.goal(), p.goal());
    }
}

#[test]
fn closure_matches_reference() {
    let known = author_domain().predicate_set();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for listing in [manual::COMPLEMENTARY_JSON, manual::COMPLEMENTARY_WIDE_JSON] {
        let rules = parse_complementary(listing, &known).unwrap();
        for inst in common::instances(&[4, 6], 20, 500) {
            let p = &inst.problem;
            for _ in 0..5 {
                let k = rng.gen_range(0..=6);
                let seed: BTreeSet<String> = p
                    .objects()
                    .keys()
                    .cloned()
                    .choose_multiple(&mut rng, k)
                    .into_iter()
                    .collect();
                assert_eq!(
                    complementary_closure(&seed, p.init(), &rules),
                    common::closure_reference(&seed, p.init(), &rules)
                );
            }
        }
    }
}

#[test]
fn hand_sized_corridor() {
    let d = author_domain();
    let p = generate(&GridSpec::new(4, 2, Difficulty::Easy, 1))
        .unwrap()
        .problem;
    let bfs = common::bfs_length(&p, &d, 100_000).unwrap();
    let opt = search_with(&p, &d, Deadline::after_secs(5.0), SearchMode::Optimal)
        .into_plan()
        .unwrap();
    assert_eq!(opt.len(), bfs);
}
