//! Solves a small instance and draws the grid after every action, with
//! baseline score buckets alongside.

use pruneplan::mazenamo::{author_domain, generate, render, Difficulty, GridSpec};
use pruneplan::planner::{search, Deadline};
use pruneplan::scoring::{BaselineScorer, ObjectScorer};

fn main() {
    let p = generate(&GridSpec::square(5, Difficulty::Hard, 3))
        .unwrap()
        .problem;
    let plan = search(&p, &author_domain(), Deadline::after_secs(10.0))
        .into_plan()
        .expect("solvable");
    let scores = BaselineScorer.score_problem(&p).map;
    print!("{}", render(&p, &plan.actions, Some(&scores)));
}
