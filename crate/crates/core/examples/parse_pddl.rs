//! Parses the bundled domain and a small hand-written problem, then prints
//! the problem back in PDDL.

use pruneplan::mazenamo::author_domain;
use pruneplan::pddl::parse_problem;

const PROBLEM: &str = "
(define (problem corridor)
  (:domain mazenamo)
  (:objects r1 - robot b1 - obstacle p0_0 p0_1 p0_2 - position)
  (:init (rAt r1 p0_0) (handEmpty r1)
         (oAt b1 p0_1) (isLight b1) (isMoveable b1) (clear b1)
         (posEmpty p0_2)
         (rightTo p0_0 p0_1) (rightTo p0_1 p0_2)
         (leftTo p0_1 p0_0) (leftTo p0_2 p0_1))
  (:goal (and (rAt r1 p0_2))))
";

fn main() {
    let domain = author_domain();
    println!(
        "domain {}: {} predicates, {} actions",
        domain.name,
        domain.predicates.len(),
        domain.actions.len()
    );
    let problem = parse_problem(PROBLEM, &domain).expect("problem parses");
    println!(
        "{} objects, {} init atoms, goal objects {:?}\n",
        problem.objects().len(),
        problem.init().len(),
        problem.goal_objects()
    );
    print!("{problem}");
}
