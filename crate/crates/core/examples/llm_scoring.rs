//! Scores objects with the baseline and with a scripted model, shows the
//! per-problem cache and the uniform fallback on a failed call.

use std::sync::Arc;

use pruneplan::llm::{CallKind, Gateway, MockEntry, MockFixture, MockLlm};
use pruneplan::mazenamo::{generate, Difficulty, GridSpec};
use pruneplan::scoring::{BaselineScorer, LlmScorer, ObjectScorer};

fn main() {
    let p = generate(&GridSpec::square(6, Difficulty::Easy, 2))
        .unwrap()
        .problem;

    let base = BaselineScorer.score_problem(&p).map;
    let mut top: Vec<(&str, f64)> = base.iter().collect();
    top.sort_by(|a, b| b.1.total_cmp(&a.1));
    println!("baseline top 5: {:?}", &top[..5]);

    let mock = Arc::new(MockLlm::always(
        CallKind::Scoring,
        r#"{"r1": 1.0, "o1": 0.2}"#,
    ));
    let llm = LlmScorer::new(Gateway::mock(mock.clone()));
    let a = llm.score_problem(&p).map;
    llm.score_problem(&p);
    println!(
        "llm: r1={:?} o1={:?} p0_0={:?}, {} call(s)",
        a.get("r1"),
        a.get("o1"),
        a.get("p0_0"),
        mock.calls(CallKind::Scoring)
    );

    let down = Arc::new(MockLlm::new(MockFixture::default().with(
        CallKind::Scoring,
        [MockEntry::Error {
            error: "network".into(),
        }],
    )));
    let f = LlmScorer::new(Gateway::mock(down)).score_problem(&p).map;
    println!(
        "fallback: provenance {}, every score 0.5: {}",
        f.provenance(),
        f.iter().all(|(_, v)| v == 0.5)
    );
}
