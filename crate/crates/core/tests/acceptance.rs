//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::ExitCode;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use pruneplan::bench::{run_bench, RunSpec};
use pruneplan::llm::{generate_rules, CallKind, Gateway, MockEntry, MockFixture, MockLlm};
use pruneplan::mazenamo::{author_domain, domain_text, generate, Difficulty, GridSpec};
use pruneplan::pipeline::{
    attempt_recovery, BudgetLedger, Mode, Pipeline, PipelineConfig, Policy, RunState,
    FEASIBILITY_THRESHOLD, T_LLM, T_REPLAN_MIN, T_STEP2_MIN,
};
use pruneplan::planner::{search_with, validate, Deadline, SearchMode};
use pruneplan::rules::{
    apply_relaxation, complementary_closure, complementary_to_value, manual, parse_complementary,
    parse_relaxation, relaxation_to_value, validate_rules, RuleKind,
};
use pruneplan::scoring::{LlmScorer, ObjectScorer, Provenance, FACT_CAP};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn within(started: Instant, limit: f64) -> Result<f64, String> {
    let t = started.elapsed().as_secs_f64();
    ensure(t < limit, format!("took {t:.2}s, limit {limit}s"))?;
    Ok(t)
}

fn manual_rules() -> PipelineConfig {
    let known = author_domain().predicate_set();
    PipelineConfig::default().with_rules(
        parse_relaxation(manual::RELAXATION_JSON, &known).unwrap(),
        parse_complementary(manual::COMPLEMENTARY_JSON, &known).unwrap(),
    )
}

fn config(mode: Mode, timeout: f64) -> PipelineConfig {
    let base = manual_rules();
    PipelineConfig {
        relaxation: base.relaxation,
        complementary: base.complementary,
        ..PipelineConfig::for_mode(mode, timeout)
    }
}

/// Twelve documents, each differing from a valid listing in one field.
fn corruptions() -> Vec<(&'static str, Value, RuleKind)> {
    let relax: Value = serde_json::from_str(manual::RELAXATION_JSON).unwrap();
    let cmpl: Value = serde_json::from_str(manual::COMPLEMENTARY_JSON).unwrap();
    let r = |name, f: &dyn Fn(&mut Value)| {
        let mut v = relax.clone();
        f(&mut v);
        (name, v, RuleKind::Relaxation)
    };
    let c = |name, f: &dyn Fn(&mut Value)| {
        let mut v = cmpl.clone();
        f(&mut v);
        (name, v, RuleKind::Complementary)
    };
    vec![
        r("string index in pre_compute", &|v| {
            v["rule0"]["pre_compute"]["oat"][1] = json!("1")
        }),
        r("string index in delete_objects", &|v| {
            v["rule0"]["delete_objects"][0] = json!("0")
        }),
        r("string index in add_effects", &|v| {
            v["rule0"]["add_effects"]["posempty"][0] = json!("1")
        }),
        r("unknown predicate in precond", &|v| {
            v["rule0"]["precond"] = json!({"ismoveempty": [0]});
        }),
        r("unknown predicate in delete_effects", &|v| {
            let m = v["rule0"]["delete_effects"].as_object_mut().unwrap();
            let x = m.remove("ismoveable").unwrap();
            m.insert("ismoveempty".into(), x);
        }),
        r("missing precond", &|v| {
            v["rule0"].as_object_mut().unwrap().remove("precond");
        }),
        r("missing add_effects", &|v| {
            v["rule0"].as_object_mut().unwrap().remove("add_effects");
        }),
        r("duplicate rule", &|v| {
            let copy = v["rule0"].clone();
            v.as_object_mut().unwrap().insert("rule1".into(), copy);
        }),
        c("string index in cond", &|v| {
            v["oat"]["cond"][0][0] = json!("0")
        }),
        c("unknown predicate", &|v| {
            let m = v.as_object_mut().unwrap();
            let x = m.remove("oat").unwrap();
            m.insert("oatt".into(), x);
        }),
        c("missing cmpl", &|v| {
            v["oat"].as_object_mut().unwrap().remove("cmpl");
        }),
        c("duplicate pair", &|v| {
            v["oat"]["cond"].as_array_mut().unwrap().push(json!([0]));
            v["oat"]["cmpl"].as_array_mut().unwrap().push(json!([1]));
        }),
    ]
}

fn criterion_1() -> Check {
    let started = Instant::now();
    let known = author_domain().predicate_set();
    let relax = parse_relaxation(manual::RELAXATION_JSON, &known).map_err(|e| e.to_string())?;
    let cmpl =
        parse_complementary(manual::COMPLEMENTARY_JSON, &known).map_err(|e| e.to_string())?;
    let rv: Value = serde_json::from_str(manual::RELAXATION_JSON).unwrap();
    let cv: Value = serde_json::from_str(manual::COMPLEMENTARY_JSON).unwrap();
    ensure(
        relaxation_to_value(&relax) == rv,
        "relaxation listing does not round-trip",
    )?;
    ensure(
        complementary_to_value(&cmpl) == cv,
        "complementary listing does not round-trip",
    )?;
    ensure(
        validate_rules(&rv, &known, RuleKind::Relaxation).is_valid(),
        "relaxation listing rejected",
    )?;
    ensure(
        validate_rules(&cv, &known, RuleKind::Complementary).is_valid(),
        "complementary listing rejected",
    )?;
    let cases = corruptions();
    for (name, v, kind) in &cases {
        ensure(
            !validate_rules(v, &known, *kind).is_valid(),
            format!("accepted corruption: {name}"),
        )?;
    }
    let t = within(started, 1.0)?;
    Ok(format!(
        "round trip ok, {}/12 corruptions rejected, {t:.3}s",
        cases.len()
    ))
}

fn criterion_2() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/mock_table_iv.json");
    let mock = Arc::new(MockLlm::new(
        MockFixture::load(&path).map_err(|e| e.to_string())?,
    ));
    let out =
        generate_rules(&Gateway::mock(mock.clone()), &domain_text()).map_err(|e| e.to_string())?;
    let r = &out.relaxation;
    let rows: Vec<(bool, usize, usize, usize)> = r
        .stats
        .iter()
        .map(|s| (s.format_ok, s.rules, s.typos, s.duplicates))
        .collect();
    ensure(
        rows == [(false, 8, 1, 6), (true, 8, 1, 6)],
        format!("attempt rows {rows:?}"),
    )?;
    ensure(
        r.transcript.attempts <= 3,
        format!("{} attempts", r.transcript.attempts),
    )?;
    ensure(
        mock.calls(CallKind::Relaxation) == 2,
        "expected two relaxation calls",
    )?;
    ensure(r.after_dedup == 2, format!("after dedup {}", r.after_dedup))?;
    ensure(
        r.after_filter == 1,
        format!("after filter {}", r.after_filter),
    )?;
    ensure(r.rules[0].id == "rule0", "surviving rule is not rule0")?;
    Ok(format!(
        "attempts {rows:?}, dedup {}, filter {}",
        r.after_dedup, r.after_filter
    ))
}

fn criterion_3() -> Check {
    ensure(
        FEASIBILITY_THRESHOLD == T_LLM + T_REPLAN_MIN + T_STEP2_MIN,
        "threshold is not the sum",
    )?;
    ensure(FEASIBILITY_THRESHOLD == 11.0, "threshold is not 11 s")?;

    let d = author_domain();
    let p = generate(&GridSpec::square(5, Difficulty::Easy, 5))
        .unwrap()
        .problem;
    let mut calls = Vec::new();
    for t in [30.0, 40.0] {
        let mock = Arc::new(MockLlm::always(CallKind::Recovery, "[]"));
        let gw = Gateway::mock(mock.clone());
        let mut st = RunState::new(&p, t, Policy::FeasibilityGated);
        st.clock.charge(Duration::from_secs(5));
        let mut o1 = p.goal_objects();
        attempt_recovery(&p, &d, &mut o1, &gw, &mut st);
        calls.push(mock.calls(CallKind::Recovery));
    }
    ensure(calls == [0, 1], format!("calls at T=30/40: {calls:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let total = rng.gen_range(20.0..120.0);
        let ledger = BudgetLedger::new(total, Policy::FeasibilityGated);
        let step1_end = rng.gen_range(0.0..=ledger.step1_end());
        let latency = rng.gen_range(0.0..=2.0 * T_LLM);
        let (budget, _) = ledger.worst_case_step2(step1_end, latency);
        worst = worst.min(budget);
    }
    ensure(
        worst >= T_STEP2_MIN,
        format!("policy III step 2 budget fell to {worst:.3}s"),
    )?;

    let two = BudgetLedger::new(30.0, Policy::CappedLatencyUnaware);
    let (starved, called) = two.worst_case_step2(5.0, T_LLM);
    ensure(
        called && starved < 1.0,
        format!("policy II step 2 budget {starved:.3}s"),
    )?;
    Ok(format!(
        "calls {calls:?}, policy III min step 2 {worst:.2}s over 1000 draws, policy II {starved:.2}s"
    ))
}

fn criterion_4() -> Check {
    let generating = Instant::now();
    let insts = common::instances(&[3, 4, 5, 6], 500, 10_000);
    let gen_time = generating.elapsed().as_secs_f64();
    let started = Instant::now();
    let known = author_domain().predicate_set();
    let relax = parse_relaxation(manual::RELAXATION_JSON, &known).unwrap();
    let narrow = parse_complementary(manual::COMPLEMENTARY_JSON, &known).unwrap();
    let wide = parse_complementary(manual::COMPLEMENTARY_WIDE_JSON, &known).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for inst in &insts {
        let p = &inst.problem;
        let got = apply_relaxation(p, &relax);
        let (objects, init) = common::relax_light_reference(p);
        ensure(
            got.objects() == &objects && got.init() == &init,
            format!("relaxation differs on {}", p.name()),
        )?;
        let k = rng.gen_range(0..=5);
        let seed: BTreeSet<String> = p
            .objects()
            .keys()
            .cloned()
            .choose_multiple(&mut rng, k)
            .into_iter()
            .collect();
        for rules in [&narrow, &wide] {
            ensure(
                complementary_closure(&seed, p.init(), rules)
                    == common::closure_reference(&seed, p.init(), rules),
                format!("closure differs on {}", p.name()),
            )?;
        }
    }
    for i in 0..1000 {
        let p = &insts[i % insts.len()].problem;
        let rules = if i % 2 == 0 { &narrow } else { &wide };
        let k = rng.gen_range(0..=6);
        let s: BTreeSet<String> = p
            .objects()
            .keys()
            .cloned()
            .choose_multiple(&mut rng, k)
            .into_iter()
            .collect();
        let mut t = s.clone();
        t.extend(p.objects().keys().cloned().choose_multiple(&mut rng, 3));
        let cs = complementary_closure(&s, p.init(), rules);
        let ct = complementary_closure(&t, p.init(), rules);
        ensure(s.is_subset(&cs), "closure not extensive")?;
        ensure(cs.is_subset(&ct), "closure not monotone")?;
        ensure(
            complementary_closure(&cs, p.init(), rules) == cs,
            "closure not idempotent",
        )?;
    }
    let t = within(started, 30.0)?;
    Ok(format!(
        "500 instances, 1000 subsets, checks {t:.2}s, generation {gen_time:.2}s"
    ))
}

fn criterion_5() -> Check {
    let generating = Instant::now();
    let insts = common::instances(&[3, 4, 5], 200, 20_000);
    let gen_time = generating.elapsed().as_secs_f64();
    let started = Instant::now();
    let d = author_domain();
    let mut successes = 0;
    for inst in &insts {
        let p = &inst.problem;
        for mode in [SearchMode::Satisficing, SearchMode::Optimal] {
            let Some(plan) = search_with(p, &d, Deadline::after_secs(10.0), mode).into_plan()
            else {
                continue;
            };
            successes += 1;
            ensure(
                validate(&plan.actions, p, &d).is_ok(),
                format!("{mode:?} plan invalid on {}", p.name()),
            )?;
            let end = common::simulate(p.init(), &plan.actions);
            ensure(
                end.is_some_and(|s| p.goal().is_subset(&s)),
                format!("{mode:?} plan fails replay on {}", p.name()),
            )?;
            if mode == SearchMode::Optimal {
                let bfs = common::bfs_length(p, &d, usize::MAX);
                ensure(
                    bfs == Some(plan.len()),
                    format!("{}: optimal {} vs bfs {bfs:?}", p.name(), plan.len()),
                )?;
            }
        }
    }
    let t = within(started, 60.0)?;
    Ok(format!("{successes} plans validated, 200 optimal lengths match, checks {t:.2}s, generation {gen_time:.2}s"))
}

fn criterion_6() -> Check {
    let started = Instant::now();
    let d = author_domain();
    let sr = |mode: Mode, difficulty: Difficulty| {
        let c = config(mode, 10.0);
        let scorer = pruneplan::scoring::BaselineScorer;
        let ok = (0..20)
            .filter(|&seed| {
                let p = generate(&GridSpec::square(10, difficulty, seed))
                    .unwrap()
                    .problem;
                Pipeline::new(&d, &c, &scorer).run(&p).is_success()
            })
            .count();
        ok as f64 / 20.0
    };
    let easy = sr(Mode::ManualRules, Difficulty::Easy);
    ensure(easy >= 0.9, format!("manual rules SR {easy:.2} on easy"))?;
    let ploi = sr(Mode::ScorerOnly, Difficulty::Hard);
    let rules = sr(Mode::ManualRules, Difficulty::Hard);
    ensure(
        ploi <= rules,
        format!("scorer-only SR {ploi:.2} above rule SR {rules:.2}"),
    )?;
    let t = within(started, 600.0)?;
    Ok(format!(
        "easy SR {easy:.2}, hard scorer-only {ploi:.2} <= rules {rules:.2}, {t:.1}s"
    ))
}

fn criterion_7() -> Check {
    let d = author_domain();
    let failing = || {
        Arc::new(MockLlm::new(
            MockFixture::default()
                .with(
                    CallKind::Scoring,
                    [MockEntry::Error {
                        error: "network".into(),
                    }],
                )
                .with(
                    CallKind::Recovery,
                    [MockEntry::Error {
                        error: "timeout".into(),
                    }],
                ),
        ))
    };
    let gw = Gateway::mock(failing());
    let scorer = LlmScorer::new(gw.clone());
    let timeout = 10.0;
    let c = config(Mode::Full, timeout);
    let mut slowest: f64 = 0.0;
    for seed in 0..20 {
        let p = generate(&GridSpec::square(10, Difficulty::Hard, seed))
            .unwrap()
            .problem;
        let m = scorer.score_problem(&p).map;
        ensure(
            m.provenance() == Provenance::Fallback
                && m.covers(&p)
                && m.iter().all(|(_, v)| v == 0.5),
            format!("fallback scores not uniform on {}", p.name()),
        )?;
        let started = Instant::now();
        Pipeline::new(&d, &c, &scorer).with_gateway(&gw).run(&p);
        slowest = slowest.max(started.elapsed().as_secs_f64());
    }
    ensure(slowest <= timeout, format!("a run took {slowest:.2}s"))?;

    let mock = Arc::new(MockLlm::always(CallKind::Scoring, r#"{"r1": 1.0}"#));
    let cached = LlmScorer::new(Gateway::mock(mock.clone()));
    for seed in 0..20 {
        let p = generate(&GridSpec::square(6, Difficulty::Medium, seed))
            .unwrap()
            .problem;
        cached.score_problem(&p);
        cached.score_problem(&p);
        Pipeline::new(&d, &config(Mode::ScorerOnly, 5.0), &cached).run(&p);
        ensure(
            mock.calls(CallKind::Scoring) == seed as u32 + 1,
            format!(
                "{} calls after {} problems",
                mock.calls(CallKind::Scoring),
                seed + 1
            ),
        )?;
    }

    let big = generate(&GridSpec::square(15, Difficulty::Hard, 1).with_counts(6, 4, 2))
        .map_err(|e| e.to_string())?;
    let p = &big.problem;
    ensure(
        p.objects().len() == 240,
        format!("{} objects", p.objects().len()),
    )?;
    let seen = Arc::new(Mutex::new(String::new()));
    let sink = seen.clone();
    let spy = MockLlm::new(MockFixture::default()).with_responder(move |req| {
        *sink.lock().unwrap() = req.messages.last().unwrap().content.clone();
        Some(Ok("{}".into()))
    });
    LlmScorer::new(Gateway::mock(Arc::new(spy))).score_problem(p);
    let prompt = seen.lock().unwrap().clone();
    let facts: Vec<&str> = prompt
        .split("State facts:\n")
        .nth(1)
        .and_then(|s| s.split("\n\n").next())
        .map(|s| s.lines().collect())
        .unwrap_or_default();
    let mut expect: Vec<String> = p.init().iter().map(|a| a.to_string()).collect();
    expect.sort();
    expect.truncate(80);
    ensure(
        FACT_CAP == 80 && facts.len() == 80,
        format!("{} facts in prompt", facts.len()),
    )?;
    ensure(
        facts == expect,
        "prompt facts are not the first 80 in order",
    )?;
    Ok(format!("fallback uniform, slowest run {slowest:.2}s of {timeout}s, 20 calls for 20 problems, 80 of {} facts sent", p.init().len()))
}

fn criterion_8() -> Check {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bench_mock.toml");
    let mut csvs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let mut spec = RunSpec::load(&path).map_err(|e| e.to_string())?;
        spec.out_dir = dir.path().to_path_buf();
        run_bench(&spec).map_err(|e| e.to_string())?;
        csvs.push(std::fs::read(dir.path().join("report.csv")).map_err(|e| e.to_string())?);
    }
    ensure(!csvs[0].is_empty(), "empty report")?;
    ensure(csvs[0] == csvs[1], "reports differ")?;
    let rows = csvs[0].iter().filter(|&&b| b == b'\n').count() - 1;
    Ok(format!("{rows} rows, {} bytes identical", csvs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("rule format fidelity", criterion_1),
        ("generation trajectory", criterion_2),
        ("budget policy gates", criterion_3),
        ("rule engine oracles", criterion_4),
        ("planner soundness and optimality", criterion_5),
        ("pipeline end to end", criterion_6),
        ("scoring contract", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
