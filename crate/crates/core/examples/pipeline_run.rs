//! Runs one instance through every pipeline mode and prints the outcome
//! and the trace of the full mode.

use pruneplan::mazenamo::{author_domain, generate, Difficulty, GridSpec};
use pruneplan::pipeline::{Mode, Pipeline, PipelineConfig};
use pruneplan::rules::{manual, parse_complementary, parse_relaxation};
use pruneplan::scoring::BaselineScorer;

fn main() {
    let domain = author_domain();
    let known = domain.predicate_set();
    let p = generate(&GridSpec::square(10, Difficulty::Hard, 4))
        .unwrap()
        .problem;
    let mut last = None;
    for mode in Mode::ALL {
        let config = PipelineConfig::for_mode(mode, 10.0).with_rules(
            parse_relaxation(manual::RELAXATION_JSON, &known).unwrap(),
            parse_complementary(manual::COMPLEMENTARY_JSON, &known).unwrap(),
        );
        let r = Pipeline::new(&domain, &config, &BaselineScorer).run(&p);
        println!(
            "{:<13} {:<10} stage {:<8} len {:>3} o1 {:?} searches {} {:.3}s",
            mode.as_str(),
            r.outcome.to_string(),
            r.stage.to_string(),
            r.plan_len().map_or("-".into(), |l| l.to_string()),
            r.o1,
            r.searches,
            r.timings.total
        );
        last = Some(r);
    }
    println!();
    last.unwrap().write_trace(&mut std::io::stdout()).unwrap();
}
