use std::collections::{BTreeMap, BTreeSet};

use super::{ComplementaryRule, RelaxationRule};
use crate::pddl::{GroundAtom, Problem};

/// What a relaxation pass did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelaxReport {
    /// `(rule id, object)` in removal order.
    pub removed: Vec<(String, String)>,
    /// Bindings skipped because they would remove a goal object.
    pub protected: Vec<(String, String)>,
}

/// Applies `rules` in order to a copy of `problem`.
pub fn apply_relaxation(problem: &Problem, rules: &[RelaxationRule]) -> Problem {
    relax_with_report(problem, rules).0
}

pub fn relax_with_report(problem: &Problem, rules: &[RelaxationRule]) -> (Problem, RelaxReport) {
    let goal_objects = problem.goal_objects();
    let mut objects = problem.objects().clone();
    let mut init = problem.init().clone();
    let mut report = RelaxReport::default();

    for rule in rules {
        let Some((lookup, order)) = rule.lookup() else {
            continue;
        };
        // snapshot; atoms removed by earlier bindings are skipped
        let candidates: Vec<GroundAtom> = init
            .iter()
            .filter(|a| a.predicate == lookup)
            .cloned()
            .collect();
        for atom in candidates {
            if !init.contains(&atom) {
                continue;
            }
            let Some(tuple) = order
                .iter()
                .map(|&i| atom.args.get(i).cloned())
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let bind = |spec_args: &[usize]| -> Option<Vec<String>> {
                spec_args.iter().map(|&i| tuple.get(i).cloned()).collect()
            };
            let holds = rule.precond.iter().all(|(p, idx)| {
                bind(idx).is_some_and(|args| init.contains(&GroundAtom::new(p.clone(), args)))
            });
            if !holds {
                continue;
            }
            let Some(doomed) = bind(&rule.delete_objects) else {
                continue;
            };
            if let Some(g) = doomed.iter().find(|o| goal_objects.contains(*o)) {
                log::warn!("rule {} would remove goal object {g}; skipped", rule.id);
                report.protected.push((rule.id.clone(), g.clone()));
                continue;
            }
            for (p, idx) in &rule.delete_effects {
                if let Some(args) = bind(idx) {
                    init.remove(&GroundAtom::new(p.clone(), args));
                }
            }
            for (p, idx) in &rule.add_effects {
                if let Some(args) = bind(idx) {
                    if args
                        .iter()
                        .all(|a| !doomed.contains(a) && objects.contains_key(a))
                    {
                        init.insert(GroundAtom::new(p.clone(), args));
                    }
                }
            }
            for o in &doomed {
                if objects.remove(o).is_some() {
                    report.removed.push((rule.id.clone(), o.clone()));
                }
            }
            init.retain(|a| !doomed.iter().any(|o| a.mentions(o)));
        }
    }
    let relaxed = Problem::from_parts(
        problem.name().to_string(),
        problem.domain_name().to_string(),
        objects,
        init,
        problem.goal().clone(),
    );
    (relaxed, report)
}

/// Least superset of `included` closed under `rules` over the atoms of
/// `init`.
pub fn complementary_closure(
    included: &BTreeSet<String>,
    init: &BTreeSet<GroundAtom>,
    rules: &[ComplementaryRule],
) -> BTreeSet<String> {
    let mut by_pred: BTreeMap<&str, Vec<&GroundAtom>> = BTreeMap::new();
    for a in init {
        by_pred.entry(a.predicate.as_str()).or_default().push(a);
    }
    let mut out = included.clone();
    loop {
        let before = out.len();
        for rule in rules {
            let Some(atoms) = by_pred.get(rule.predicate.as_str()) else {
                continue;
            };
            for atom in atoms {
                for (cond, cmpl) in rule.pairs() {
                    let fires = cond
                        .iter()
                        .all(|&i| atom.args.get(i).is_some_and(|o| out.contains(o)));
                    if fires {
                        for &i in cmpl {
                            if let Some(o) = atom.args.get(i) {
                                if !out.contains(o) {
                                    out.insert(o.clone());
                                }
                            }
                        }
                    }
                }
            }
        }
        if out.len() == before {
            return out;
        }
    }
}

/// The sub-problem over `included` plus the goal objects. Init keeps the
/// atoms whose arguments all survive; the goal is unchanged.
pub fn restrict_problem(problem: &Problem, included: &BTreeSet<String>) -> Problem {
    let mut keep = problem.goal_objects();
    keep.extend(
        included
            .iter()
            .filter(|o| problem.objects().contains_key(*o))
            .cloned(),
    );
    let objects = problem
        .objects()
        .iter()
        .filter(|(k, _)| keep.contains(*k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let init = problem
        .init()
        .iter()
        .filter(|a| a.args.iter().all(|x| keep.contains(x)))
        .cloned()
        .collect();
    Problem::from_parts(
        problem.name().to_string(),
        problem.domain_name().to_string(),
        objects,
        init,
        problem.goal().clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::author_domain;
    use crate::pddl::parse_problem;
    use crate::rules::{manual, parse_complementary, parse_relaxation};

    fn problem(objects: &str, init: &str) -> Problem {
        parse_problem(
            &format!(
                "(define (problem t) (:domain mazenamo) (:objects {objects}) (:init {init}) (:goal (rat r1 p1)))"
            ),
            &author_domain(),
        )
        .unwrap()
    }

    fn manual_rules() -> (Vec<RelaxationRule>, Vec<ComplementaryRule>) {
        let k = author_domain().predicate_set();
        (
            parse_relaxation(manual::RELAXATION_JSON, &k).unwrap(),
            parse_complementary(manual::COMPLEMENTARY_JSON, &k).unwrap(),
        )
    }

    #[test]
    fn light_box_removed_and_cell_emptied() {
        let p = problem(
            "r1 - robot b1 - obstacle p1 p3 - position",
            "(islight b1) (ismoveable b1) (oat b1 p3)",
        );
        let (relax, _) = manual_rules();
        let out = apply_relaxation(&p, &relax);
        assert!(!out.objects().contains_key("b1"));
        let init: Vec<String> = out.init().iter().map(|a| a.to_string()).collect();
        assert_eq!(init, ["(posempty p3)"]);
    }

    #[test]
    fn heavy_box_untouched() {
        let p = problem(
            "r1 - robot b1 - obstacle p1 p3 - position",
            "(ismoveable b1) (oat b1 p3)",
        );
        let (relax, _) = manual_rules();
        assert_eq!(apply_relaxation(&p, &relax), p);
    }

    #[test]
    fn closure_adds_position() {
        let p = problem("r1 - robot b1 - obstacle p1 p3 - position", "(oat b1 p3)");
        let (_, cmpl) = manual_rules();
        let inc = BTreeSet::from(["b1".to_string()]);
        let out = complementary_closure(&inc, p.init(), &cmpl);
        assert_eq!(out, BTreeSet::from(["b1".to_string(), "p3".to_string()]));
        assert_eq!(complementary_closure(&inc, p.init(), &[]), inc);
    }

    #[test]
    fn restrict_to_nothing_keeps_goal_objects() {
        let p = problem(
            "r1 - robot b1 - obstacle p1 p3 - position",
            "(oat b1 p3) (rat r1 p3) (posempty p1)",
        );
        let r = restrict_problem(&p, &BTreeSet::new());
        assert_eq!(r.objects().keys().collect::<Vec<_>>(), ["p1", "r1"]);
        assert_eq!(r.init().len(), 1);
        let all: BTreeSet<String> = p.objects().keys().cloned().collect();
        assert_eq!(restrict_problem(&p, &all), p);
    }
}
