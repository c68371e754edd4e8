use std::collections::BTreeSet;

use super::{
    plan_objects, BudgetLedger, Clock, Mode, Outcome, Pipeline, PipelineConfig, PipelineResult,
    Policy, RecoveryStatus, Stage, Timings, TraceRecord, T_REPLAN_MIN,
};
use crate::llm::{recovery_guidance, Gateway};
use crate::pddl::{Domain, Problem};
use crate::planner::{search, validate, Plan, SearchOutcome};
use crate::rules::{
    apply_relaxation, complementary_closure, restrict_problem, ComplementaryRule, RelaxationRule,
};
use crate::scoring::ScoreMap;

/// Smallest search slice of one Step-1 iteration, seconds.
const MIN_SLICE: f64 = 0.5;

/// Clock, budget and trace of one run.
#[derive(Debug, Clone)]
pub struct RunState {
    pub clock: Clock,
    pub ledger: BudgetLedger,
    pub problem: String,
    pub trace: Vec<TraceRecord>,
}

impl RunState {
    pub fn new(problem: &Problem, timeout: f64, policy: Policy) -> Self {
        RunState {
            clock: Clock::start(),
            ledger: BudgetLedger::new(timeout, policy),
            problem: problem.name().to_string(),
            trace: Vec::new(),
        }
    }

    pub fn now(&self) -> f64 {
        self.clock.elapsed()
    }

    fn record(
        &mut self,
        step: &str,
        start: f64,
        outcome: &str,
        objects: usize,
        q: Option<f64>,
        detail: Option<String>,
    ) {
        let now = self.now();
        self.trace.push(TraceRecord {
            problem: self.problem.clone(),
            step: step.to_string(),
            start,
            duration: now - start,
            outcome: outcome.to_string(),
            objects,
            q,
            detail,
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Step1Result {
    /// Validated on the full problem.
    pub plan: Option<Plan>,
    /// Object set of the last iteration; goal objects if none ran.
    pub o1: BTreeSet<String>,
    pub thresholds: Vec<f64>,
    pub searches: u32,
    /// Stopped by the clock rather than by `q_min`.
    pub timed_out: bool,
}

/// Threshold-decay loop over score-pruned sub-problems until `end`
/// seconds into the run.
pub fn step1_pruned_search(
    problem: &Problem,
    domain: &Domain,
    scores: &ScoreMap,
    config: &PipelineConfig,
    state: &mut RunState,
    end: f64,
) -> Step1Result {
    let goal = problem.goal_objects();
    let n_all = problem.objects().len();
    let mut out = Step1Result {
        plan: None,
        o1: goal.clone(),
        thresholds: Vec::new(),
        searches: 0,
        timed_out: false,
    };
    let mut previous: Option<BTreeSet<String>> = None;
    for k in 0.. {
        let q = config.q0 * config.gamma.powi(k);
        if q < config.q_min {
            break;
        }
        let now = state.now();
        if now >= end {
            out.timed_out = true;
            break;
        }
        out.thresholds.push(q);
        let mut set: BTreeSet<String> = scores
            .iter()
            .filter(|(o, s)| *s >= q && problem.objects().contains_key(*o))
            .map(|(o, _)| o.to_string())
            .collect();
        set.extend(goal.iter().cloned());
        if previous.as_ref() == Some(&set) {
            state.record("step1", now, "skipped", set.len(), Some(q), None);
            continue;
        }
        let remaining = end - now;
        let slice = if set.len() == n_all {
            remaining
        } else {
            (remaining / 3.0).max(MIN_SLICE).min(remaining)
        };
        let sub = restrict_problem(problem, &set);
        let result = search(&sub, domain, state.clock.deadline_at(now + slice));
        out.searches += 1;
        out.o1 = set.clone();
        match result {
            SearchOutcome::Solved(plan) => match validate(&plan.actions, problem, domain) {
                Ok(()) => {
                    state.record(
                        "step1",
                        now,
                        "solved",
                        set.len(),
                        Some(q),
                        Some(format!("length {}", plan.len())),
                    );
                    out.plan = Some(plan);
                    return out;
                }
                Err(e) => state.record(
                    "step1",
                    now,
                    "invalid",
                    set.len(),
                    Some(q),
                    Some(e.to_string()),
                ),
            },
            other => state.record("step1", now, other.label(), set.len(), Some(q), None),
        }
        previous = Some(set);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryAttempt {
    pub status: RecoveryStatus,
    pub plan: Option<Plan>,
    pub calls: u32,
    /// Objects added to the Step-1 set.
    pub added: Vec<String>,
    pub replan_budget: Option<f64>,
}

/// Asks the model for missing objects and replans once on the enlarged
/// set. Suggested objects stay in `o1` even when the replan fails.
pub fn attempt_recovery(
    problem: &Problem,
    domain: &Domain,
    o1: &mut BTreeSet<String>,
    gateway: &Gateway,
    state: &mut RunState,
) -> RecoveryAttempt {
    let before = state.now();
    let mut out = RecoveryAttempt {
        status: RecoveryStatus::Declined,
        plan: None,
        calls: 0,
        added: Vec::new(),
        replan_budget: None,
    };
    if !state.ledger.gate(before) {
        let left = state.ledger.step2_deadline() - before;
        state.record(
            "recovery",
            before,
            "declined",
            o1.len(),
            None,
            Some(format!("{left:.2}s before step 2")),
        );
        return out;
    }
    let excluded: BTreeSet<String> = problem
        .objects()
        .keys()
        .filter(|o| !o1.contains(*o))
        .cloned()
        .collect();
    let reply = recovery_guidance(gateway, problem.init(), problem.goal(), o1, &excluded);
    state.clock.charge(reply.simulated_latency);
    out.calls = 1;
    out.status = RecoveryStatus::Failed;
    let after = state.now();
    for o in &reply.objects {
        if o1.insert(o.clone()) {
            out.added.push(o.clone());
        }
    }
    if out.added.is_empty() {
        let detail = reply
            .error
            .map_or_else(|| "no new objects".to_string(), |e| e.to_string());
        state.record("recovery", before, "failed", o1.len(), None, Some(detail));
        return out;
    }
    let budget = state.ledger.replan_budget(before, after);
    out.replan_budget = Some(budget);
    let floor = if state.ledger.policy == Policy::FeasibilityGated {
        T_REPLAN_MIN
    } else {
        f64::MIN_POSITIVE
    };
    if budget < floor {
        state.record(
            "recovery",
            before,
            "failed",
            o1.len(),
            None,
            Some(format!("replan budget {budget:.2}s")),
        );
        return out;
    }
    let sub = restrict_problem(problem, o1);
    match search(&sub, domain, state.clock.deadline_at(after + budget)) {
        SearchOutcome::Solved(plan) if validate(&plan.actions, problem, domain).is_ok() => {
            out.status = RecoveryStatus::Succeeded;
            out.plan = Some(plan);
            state.record("recovery", before, "solved", o1.len(), None, None);
        }
        other => {
            let label = if other.plan().is_some() {
                "invalid"
            } else {
                other.label()
            };
            state.record(
                "recovery",
                before,
                label,
                o1.len(),
                None,
                Some(format!("added {}", out.added.join(" "))),
            );
        }
    }
    out
}

/// Why a step ended the run.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFailure {
    pub outcome: Outcome,
    pub detail: String,
}

fn failure(result: &SearchOutcome) -> StepFailure {
    StepFailure {
        outcome: match result {
            SearchOutcome::Timeout { .. } => Outcome::Timeout,
            _ => Outcome::Unsolvable,
        },
        detail: result.label().to_string(),
    }
}

/// Relaxes the full problem and merges the rough plan's objects into
/// `o1`. Returns the new set and the search budget used.
pub fn step2_relaxation(
    problem: &Problem,
    domain: &Domain,
    o1: &BTreeSet<String>,
    rules: &[RelaxationRule],
    state: &mut RunState,
) -> Result<(BTreeSet<String>, f64), StepFailure> {
    let now = state.now();
    let budget = state.ledger.step2_budget(now);
    let relaxed = apply_relaxation(problem, rules);
    let removed = problem.objects().len() - relaxed.objects().len();
    let result = search(&relaxed, domain, state.clock.deadline_at(now + budget));
    match result {
        SearchOutcome::Solved(rough) => {
            let mut o2 = o1.clone();
            o2.extend(plan_objects(&rough));
            state.record(
                "step2",
                now,
                "solved",
                o2.len(),
                None,
                Some(format!(
                    "budget {budget:.2}s, removed {removed}, rough length {}",
                    rough.len()
                )),
            );
            Ok((o2, budget))
        }
        other => {
            state.record(
                "step2",
                now,
                other.label(),
                o1.len(),
                None,
                Some(format!("budget {budget:.2}s")),
            );
            Err(failure(&other))
        }
    }
}

/// Closes `o2` under the complementary rules and searches the result with
/// whatever time is left.
pub fn step3_final(
    problem: &Problem,
    domain: &Domain,
    o2: &BTreeSet<String>,
    rules: &[ComplementaryRule],
    state: &mut RunState,
) -> Result<(Plan, usize), (StepFailure, usize)> {
    let now = state.now();
    let o3 = complementary_closure(o2, problem.init(), rules);
    let sub = restrict_problem(problem, &o3);
    let n = sub.objects().len();
    let result = search(&sub, domain, state.clock.deadline_at(state.ledger.total));
    match result {
        SearchOutcome::Solved(plan) => match validate(&plan.actions, problem, domain) {
            Ok(()) => {
                state.record(
                    "step3",
                    now,
                    "solved",
                    n,
                    None,
                    Some(format!("length {}", plan.len())),
                );
                Ok((plan, n))
            }
            Err(e) => {
                state.record("step3", now, "invalid", n, None, Some(e.to_string()));
                Err((
                    StepFailure {
                        outcome: Outcome::Unsolvable,
                        detail: e.to_string(),
                    },
                    n,
                ))
            }
        },
        other => {
            state.record("step3", now, other.label(), n, None, None);
            Err((failure(&other), n))
        }
    }
}

pub(super) fn run(p: &Pipeline<'_>, problem: &Problem) -> PipelineResult {
    let config = p.config;
    let mut state = RunState::new(problem, config.timeout, config.policy);
    let mut res = PipelineResult {
        problem: problem.name().to_string(),
        mode: config.mode,
        outcome: Outcome::Timeout,
        plan: None,
        stage: Stage::Search,
        recovery: RecoveryStatus::None,
        recovery_calls: 0,
        o1: None,
        o2: None,
        o3: None,
        thresholds: Vec::new(),
        searches: 0,
        step2_budget: None,
        timings: Timings::default(),
        trace: Vec::new(),
    };
    let finish = |mut res: PipelineResult, state: RunState| {
        res.timings.total = state.now();
        res.trace = state.trace;
        res
    };

    if config.mode == Mode::PureSearch {
        let result = search(problem, p.domain, state.clock.deadline_at(config.timeout));
        let n = problem.objects().len();
        match result {
            SearchOutcome::Solved(plan) if validate(&plan.actions, problem, p.domain).is_ok() => {
                state.record(
                    "search",
                    0.0,
                    "solved",
                    n,
                    None,
                    Some(format!("length {}", plan.len())),
                );
                res.outcome = Outcome::Success;
                res.plan = Some(plan);
            }
            other => {
                state.record("search", 0.0, other.label(), n, None, None);
                res.outcome = failure(&other).outcome;
            }
        }
        return finish(res, state);
    }

    let t = state.now();
    let scored = p.scorer.score_problem(problem);
    state.clock.charge(scored.charged);
    state.record(
        "scoring",
        t,
        &scored.map.provenance().to_string(),
        scored.map.len(),
        None,
        Some(p.scorer.name().to_string()),
    );
    res.timings.scoring = state.now() - t;

    let t = state.now();
    let end = if config.mode == Mode::ScorerOnly {
        config.timeout
    } else {
        state.ledger.step1_end()
    };
    let s1 = step1_pruned_search(problem, p.domain, &scored.map, config, &mut state, end);
    res.timings.step1 = state.now() - t;
    res.stage = Stage::Step1;
    res.o1 = Some(s1.o1.len());
    res.thresholds = s1.thresholds;
    res.searches = s1.searches;
    if let Some(plan) = s1.plan {
        res.outcome = Outcome::Success;
        res.plan = Some(plan);
        return finish(res, state);
    }
    if config.mode == Mode::ScorerOnly {
        res.outcome = if s1.timed_out {
            Outcome::Timeout
        } else {
            Outcome::Unsolvable
        };
        return finish(res, state);
    }

    let mut o1 = s1.o1;
    if let (true, Some(gw)) = (config.recovery, p.gateway) {
        let t = state.now();
        let r = attempt_recovery(problem, p.domain, &mut o1, gw, &mut state);
        res.timings.recovery = state.now() - t;
        res.recovery = r.status;
        res.recovery_calls = r.calls;
        res.o1 = Some(o1.len());
        if let Some(plan) = r.plan {
            res.stage = Stage::Recovery;
            res.outcome = Outcome::Success;
            res.plan = Some(plan);
            return finish(res, state);
        }
    }

    let t = state.now();
    res.stage = Stage::Step2;
    let step2 = step2_relaxation(problem, p.domain, &o1, &config.relaxation, &mut state);
    res.timings.step2 = state.now() - t;
    let o2 = match step2 {
        Ok((o2, budget)) => {
            res.step2_budget = Some(budget);
            o2
        }
        Err(f) => {
            res.step2_budget = Some(state.ledger.step2_budget(t));
            res.outcome = f.outcome;
            return finish(res, state);
        }
    };
    res.o2 = Some(o2.len());

    let t = state.now();
    res.stage = Stage::Step3;
    let step3 = step3_final(problem, p.domain, &o2, &config.complementary, &mut state);
    res.timings.step3 = state.now() - t;
    match step3 {
        Ok((plan, n)) => {
            res.o3 = Some(n);
            res.outcome = Outcome::Success;
            res.plan = Some(plan);
        }
        Err((f, n)) => {
            res.o3 = Some(n);
            res.outcome = f.outcome;
        }
    }
    finish(res, state)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;
    use std::time::Duration;

    use super::*;
    use crate::llm::{CallKind, MockLlm};
    use crate::mazenamo::{author_domain, generate, Difficulty, GridSpec};
    use crate::pddl::parse_problem;
    use crate::pipeline::T_STEP2_MIN;
    use crate::rules::manual;
    use crate::scoring::{BaselineScorer, Provenance};

    fn manual_config(mode: Mode, timeout: f64) -> PipelineConfig {
        let known = author_domain().predicate_set();
        PipelineConfig::for_mode(mode, timeout).with_rules(
            crate::rules::parse_relaxation(manual::RELAXATION_JSON, &known).unwrap(),
            crate::rules::parse_complementary(manual::COMPLEMENTARY_JSON, &known).unwrap(),
        )
    }

    #[test]
    fn goal_already_true() {
        let d = author_domain();
        let p = parse_problem(
            "(define (problem t) (:domain mazenamo) (:objects r1 - robot p0_0 - position)
               (:init (rat r1 p0_0) (handempty r1)) (:goal (rat r1 p0_0)))",
            &d,
        )
        .unwrap();
        for mode in Mode::ALL {
            let c = manual_config(mode, 5.0);
            let r = Pipeline::new(&d, &c, &BaselineScorer).run(&p);
            assert!(r.is_success(), "{mode}");
            assert_eq!(r.plan_len(), Some(0));
            if mode != Mode::PureSearch {
                assert_eq!(r.stage, Stage::Step1);
                assert_eq!(r.thresholds, [0.81]);
            }
        }
    }

    #[test]
    fn thresholds_are_geometric() {
        let d = author_domain();
        let p = generate(&GridSpec::square(5, Difficulty::Easy, 4))
            .unwrap()
            .problem;
        let scores = ScoreMap::uniform(&p, 0.02, Provenance::Baseline);
        let c = PipelineConfig::for_mode(Mode::ScorerOnly, 30.0);
        let mut st = RunState::new(&p, 30.0, Policy::FeasibilityGated);
        let r = step1_pruned_search(&p, &d, &scores, &c, &mut st, 30.0);
        for (k, q) in r.thresholds.iter().enumerate() {
            assert_eq!(*q, 0.81 * 0.9f64.powi(k as i32));
        }
        // one search with goal objects only, then skips until 0.02 passes
        assert!(r.plan.is_some());
        assert_eq!(r.searches, 2);
    }

    #[test]
    fn recovery_gate_counts_calls() {
        let d = author_domain();
        let p = generate(&GridSpec::square(5, Difficulty::Easy, 5))
            .unwrap()
            .problem;
        for (t, calls) in [(30.0, 0), (40.0, 1)] {
            let mock = Arc::new(MockLlm::always(CallKind::Recovery, "[]"));
            let gw = Gateway::mock(mock.clone());
            let mut st = RunState::new(&p, t, Policy::FeasibilityGated);
            st.clock.charge(Duration::from_secs(5));
            let mut o1 = p.goal_objects();
            let r = attempt_recovery(&p, &d, &mut o1, &gw, &mut st);
            assert_eq!(mock.calls(CallKind::Recovery), calls);
            assert_eq!(r.calls, calls);
        }
    }

    #[test]
    fn manual_rules_solve_small_instances() {
        let d = author_domain();
        let c = manual_config(Mode::ManualRules, 10.0);
        for seed in 0..3 {
            let p = generate(&GridSpec::square(6, Difficulty::Hard, seed))
                .unwrap()
                .problem;
            let r = Pipeline::new(&d, &c, &BaselineScorer).run(&p);
            assert!(r.is_success());
            validate(&r.plan.unwrap().actions, &p, &d).unwrap();
        }
    }

    struct Zero;

    impl crate::scoring::ObjectScorer for Zero {
        fn name(&self) -> &'static str {
            "zero"
        }

        fn score_problem(&self, problem: &Problem) -> crate::scoring::Scored {
            crate::scoring::Scored {
                map: ScoreMap::uniform(problem, 0.0, Provenance::Baseline),
                charged: Duration::ZERO,
            }
        }
    }

    #[test]
    fn zero_scores_reach_step_three() {
        let d = author_domain();
        let c = manual_config(Mode::ManualRules, 20.0);
        let p = generate(&GridSpec::square(6, Difficulty::Medium, 1))
            .unwrap()
            .problem;
        let r = Pipeline::new(&d, &c, &Zero).run(&p);
        assert_eq!(r.stage, Stage::Step3);
        assert!(r.is_success());
        let (o1, o2, o3) = (r.o1.unwrap(), r.o2.unwrap(), r.o3.unwrap());
        assert!(o1 <= o2 && o2 <= o3, "{o1} {o2} {o3}");
        assert!(r.step2_budget.unwrap() >= T_STEP2_MIN);
        let steps: Vec<&str> = r.trace.iter().map(|t| t.step.as_str()).collect();
        assert_eq!(steps.first(), Some(&"scoring"));
        assert_eq!(&steps[steps.len() - 2..], ["step2", "step3"]);
    }
}
