//! Plan simulation straight from the lifted schemas. Deliberately shares no
//! code with grounding or search.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::GroundAction;
use crate::pddl::{sexpr, ActionSchema, Domain, GroundAtom, LiftedAtom, PddlError, Problem};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanFailureKind {
    UnknownAction(String),
    WrongArity { expected: usize, found: usize },
    UnknownObject(String),
    TypeMismatch { object: String, expected: String },
    PreconditionFalse(GroundAtom),
    NegativePreconditionTrue(GroundAtom),
    GoalUnmet(GroundAtom),
}

impl fmt::Display for PlanFailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanFailureKind::UnknownAction(a) => write!(f, "unknown action `{a}`"),
            PlanFailureKind::WrongArity { expected, found } => {
                write!(f, "expected {expected} arguments, found {found}")
            }
            PlanFailureKind::UnknownObject(o) => write!(f, "unknown object `{o}`"),
            PlanFailureKind::TypeMismatch { object, expected } => {
                write!(f, "object `{object}` is not of type `{expected}`")
            }
            PlanFailureKind::PreconditionFalse(a) => write!(f, "precondition {a} does not hold"),
            PlanFailureKind::NegativePreconditionTrue(a) => {
                write!(f, "negative precondition {a} is violated")
            }
            PlanFailureKind::GoalUnmet(a) => write!(f, "goal atom {a} unmet"),
        }
    }
}

/// `step` is the index of the offending action, or the plan length when
/// every action applied but the goal does not hold.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {kind}")]
pub struct PlanFailure {
    pub step: usize,
    pub kind: PlanFailureKind,
}

/// Builds the ground action for `schema` applied to `args`, checking object
/// existence and types against `problem`.
pub fn instantiate(
    domain: &Domain,
    problem: &Problem,
    schema: &str,
    args: &[String],
) -> Result<GroundAction, PlanFailureKind> {
    let action = domain
        .action(schema)
        .ok_or_else(|| PlanFailureKind::UnknownAction(schema.to_string()))?;
    if action.params.len() != args.len() {
        return Err(PlanFailureKind::WrongArity {
            expected: action.params.len(),
            found: args.len(),
        });
    }
    for (param, arg) in action.params.iter().zip(args) {
        let ty = problem
            .objects()
            .get(arg)
            .ok_or_else(|| PlanFailureKind::UnknownObject(arg.clone()))?;
        if !domain.is_subtype(ty, &param.ty) {
            return Err(PlanFailureKind::TypeMismatch {
                object: arg.clone(),
                expected: param.ty.clone(),
            });
        }
    }
    Ok(bind(action, args))
}

fn bind(action: &ActionSchema, args: &[String]) -> GroundAction {
    let sub = |atoms: &[LiftedAtom]| -> Vec<GroundAtom> {
        atoms
            .iter()
            .map(|a| {
                GroundAtom::new(
                    a.predicate.clone(),
                    a.args.iter().map(|v| {
                        let i = action.params.iter().position(|p| &p.name == v).unwrap();
                        args[i].clone()
                    }),
                )
            })
            .collect()
    };
    GroundAction {
        schema: action.name.clone(),
        args: args.to_vec(),
        pre_pos: sub(&action.pre_pos),
        pre_neg: sub(&action.pre_neg),
        add: sub(&action.add),
        del: sub(&action.del),
    }
}

/// Simulates `plan` from the initial state. Only the action names and
/// arguments of `plan` are trusted; conditions come from the domain.
pub fn validate(
    plan: &[GroundAction],
    problem: &Problem,
    domain: &Domain,
) -> Result<(), PlanFailure> {
    let mut state: BTreeSet<GroundAtom> = problem.init().clone();
    for (step, step_action) in plan.iter().enumerate() {
        let a = instantiate(domain, problem, &step_action.schema, &step_action.args)
            .map_err(|kind| PlanFailure { step, kind })?;
        if let Some(missing) = a.pre_pos.iter().find(|p| !state.contains(*p)) {
            return Err(PlanFailure {
                step,
                kind: PlanFailureKind::PreconditionFalse(missing.clone()),
            });
        }
        if let Some(present) = a.pre_neg.iter().find(|p| state.contains(*p)) {
            return Err(PlanFailure {
                step,
                kind: PlanFailureKind::NegativePreconditionTrue(present.clone()),
            });
        }
        for d in &a.del {
            state.remove(d);
        }
        for x in &a.add {
            state.insert(x.clone());
        }
    }
    if let Some(unmet) = problem.goal().iter().find(|g| !state.contains(*g)) {
        return Err(PlanFailure {
            step: plan.len(),
            kind: PlanFailureKind::GoalUnmet(unmet.clone()),
        });
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum PlanParseError {
    #[error(transparent)]
    Syntax(#[from] PddlError),
    #[error("line {line}: {kind}")]
    Action { line: usize, kind: PlanFailureKind },
}

/// Reads a plan written as one `(action arg ...)` per line.
pub fn parse_plan(
    text: &str,
    domain: &Domain,
    problem: &Problem,
) -> Result<Vec<GroundAction>, PlanParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let e = sexpr::read(line)?;
        let items = e
            .as_list()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| PddlError::syntax(e.pos(), "expected `(action args...)`"))?;
        let names: Vec<String> = items
            .iter()
            .map(|x| {
                x.as_symbol()
                    .map(str::to_string)
                    .ok_or_else(|| PddlError::syntax(x.pos(), "expected a symbol"))
            })
            .collect::<Result<_, _>>()?;
        let a = instantiate(domain, problem, &names[0], &names[1..])
            .map_err(|kind| PlanParseError::Action { line: i + 1, kind })?;
        out.push(a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const DOM: &str = r#"(define (domain tok)
      (:predicates (have ?x) (used ?x))
      (:action spend :parameters (?x) :precondition (and (have ?x)) :effect (and (used ?x) (not (have ?x)))))"#;

    fn problem(goal: &str) -> (Domain, Problem) {
        let d = parse_domain(DOM).unwrap();
        let p = parse_problem(
            &format!(
                "(define (problem t) (:domain tok) (:objects a) (:init (have a)) (:goal {goal}))"
            ),
            &d,
        )
        .unwrap();
        (d, p)
    }

    #[test]
    fn empty_plan_with_satisfied_goal() {
        let (d, p) = problem("(have a)");
        assert!(validate(&[], &p, &d).is_ok());
    }

    #[test]
    fn second_action_precondition_deleted_by_first() {
        let (d, p) = problem("(used a)");
        let a = instantiate(&d, &p, "spend", &["a".to_string()]).unwrap();
        let err = validate(&[a.clone(), a], &p, &d).unwrap_err();
        assert_eq!(err.step, 1);
        assert!(matches!(err.kind, PlanFailureKind::PreconditionFalse(_)));
    }

    #[test]
    fn unmet_goal_reports_plan_length() {
        let (d, p) = problem("(used a)");
        let err = validate(&[], &p, &d).unwrap_err();
        assert_eq!(err.step, 0);
        assert!(matches!(err.kind, PlanFailureKind::GoalUnmet(_)));
    }

    #[test]
    fn plan_text_round_trip() {
        let (d, p) = problem("(used a)");
        let plan = parse_plan("(spend a)\n", &d, &p).unwrap();
        assert_eq!(plan.len(), 1);
        assert!(validate(&plan, &p, &d).is_ok());
        assert!(parse_plan("(fly a)", &d, &p).is_err());
    }
}
