//! STRIPS-subset PDDL: typed objects, positive goals, positive and negative
//! preconditions, add/delete effects.
//!
//! Identifiers are folded to lowercase while parsing, so `oAt` in a domain
//! file and `oat` in a rule file name the same predicate.

mod parse;
pub mod sexpr;
mod write;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use parse::{parse_domain, parse_predicates, parse_problem};

/// Root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PddlError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("undeclared predicate `{predicate}` used in {context}")]
    UndeclaredPredicate { predicate: String, context: String },
    #[error("arity mismatch for `{predicate}` in {context}: expected {expected}, found {found}")]
    ArityMismatch {
        predicate: String,
        context: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate predicate declaration `{0}`")]
    DuplicatePredicate(String),
    #[error("unknown type `{ty}` for `{name}`")]
    UnknownType { name: String, ty: String },
    #[error("unknown object `{object}` in {context}")]
    UnknownObject { object: String, context: String },
    #[error("variable `{variable}` is not a parameter of action `{action}`")]
    UnboundVariable { variable: String, action: String },
    #[error("action `{action}` both adds and deletes {atom}")]
    ConflictingEffects { action: String, atom: String },
    #[error("missing {0}")]
    MissingSection(&'static str),
    #[error("problem is for domain `{found}` but domain is `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

impl PddlError {
    pub(crate) fn syntax(pos: sexpr::Pos, message: impl Into<String>) -> Self {
        PddlError::Syntax {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

/// A ground literal over problem objects, e.g. `(oat b1 p3_4)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: Into<String>>(
        predicate: impl Into<String>,
        args: impl IntoIterator<Item = S>,
    ) -> Self {
        GroundAtom {
            predicate: predicate.into(),
            args: args.into_iter().map(Into::into).collect(),
        }
    }

    pub fn mentions(&self, object: &str) -> bool {
        self.args.iter().any(|a| a == object)
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedParam {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub param_types: Vec<String>,
}

impl PredicateDef {
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        param_types: impl IntoIterator<Item = S>,
    ) -> Self {
        PredicateDef {
            name: name.into(),
            param_types: param_types.into_iter().map(Into::into).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.param_types.len()
    }
}

/// Predicates declared by a domain, keyed by name.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredicateSet(BTreeMap<String, PredicateDef>);

impl PredicateSet {
    pub fn from_defs(defs: impl IntoIterator<Item = PredicateDef>) -> Result<Self, PddlError> {
        let mut map = BTreeMap::new();
        for d in defs {
            if map.contains_key(&d.name) {
                return Err(PddlError::DuplicatePredicate(d.name));
            }
            map.insert(d.name.clone(), d);
        }
        Ok(PredicateSet(map))
    }

    pub fn get(&self, name: &str) -> Option<&PredicateDef> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.0.get(name).map(PredicateDef::arity)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An atom whose arguments are action parameters (`?x`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub pre_pos: Vec<LiftedAtom>,
    pub pre_neg: Vec<LiftedAtom>,
    pub add: Vec<LiftedAtom>,
    pub del: Vec<LiftedAtom>,
}

impl ActionSchema {
    pub fn param_index(&self, var: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == var)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// child type -> parent type
    pub types: BTreeMap<String, String>,
    pub predicates: Vec<PredicateDef>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn predicate(&self, name: &str) -> Option<&PredicateDef> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn predicate_set(&self) -> PredicateSet {
        PredicateSet(
            self.predicates
                .iter()
                .map(|p| (p.name.clone(), p.clone()))
                .collect(),
        )
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.contains_key(ty)
    }

    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        // bounded walk guards against cyclic :types declarations
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.types.get(cur) {
                Some(parent) => cur = parent,
                None => return false,
            }
        }
        false
    }
}

/// A validated task instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Problem {
    name: String,
    domain_name: String,
    objects: BTreeMap<String, String>,
    init: BTreeSet<GroundAtom>,
    goal: BTreeSet<GroundAtom>,
}

impl Problem {
    /// Builds a problem, checking every atom against the domain's predicates
    /// and the declared objects.
    pub fn new(
        name: impl Into<String>,
        domain: &Domain,
        objects: BTreeMap<String, String>,
        init: BTreeSet<GroundAtom>,
        goal: BTreeSet<GroundAtom>,
    ) -> Result<Self, PddlError> {
        for (obj, ty) in &objects {
            if !domain.has_type(ty) {
                return Err(PddlError::UnknownType {
                    name: obj.clone(),
                    ty: ty.clone(),
                });
            }
        }
        let preds = domain.predicate_set();
        for (section, atoms) in [("init", &init), ("goal", &goal)] {
            for atom in atoms {
                check_atom(atom, &preds, &objects, section)?;
            }
        }
        Ok(Problem {
            name: name.into(),
            domain_name: domain.name.clone(),
            objects,
            init,
            goal,
        })
    }

    /// Crate-internal constructor for transformations that only remove
    /// objects or add atoms already checked by the caller.
    pub(crate) fn from_parts(
        name: String,
        domain_name: String,
        objects: BTreeMap<String, String>,
        init: BTreeSet<GroundAtom>,
        goal: BTreeSet<GroundAtom>,
    ) -> Self {
        Problem {
            name,
            domain_name,
            objects,
            init,
            goal,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain_name(&self) -> &str {
        &self.domain_name
    }

    pub fn objects(&self) -> &BTreeMap<String, String> {
        &self.objects
    }

    pub fn init(&self) -> &BTreeSet<GroundAtom> {
        &self.init
    }

    pub fn goal(&self) -> &BTreeSet<GroundAtom> {
        &self.goal
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// All object names appearing in some goal atom.
    pub fn goal_objects(&self) -> BTreeSet<String> {
        goal_objects(self)
    }
}

pub fn goal_objects(problem: &Problem) -> BTreeSet<String> {
    problem
        .goal
        .iter()
        .flat_map(|a| a.args.iter().cloned())
        .collect()
}

fn check_atom(
    atom: &GroundAtom,
    preds: &PredicateSet,
    objects: &BTreeMap<String, String>,
    section: &str,
) -> Result<(), PddlError> {
    let Some(arity) = preds.arity(&atom.predicate) else {
        return Err(PddlError::UndeclaredPredicate {
            predicate: atom.predicate.clone(),
            context: section.to_string(),
        });
    };
    if arity != atom.args.len() {
        return Err(PddlError::ArityMismatch {
            predicate: atom.predicate.clone(),
            context: section.to_string(),
            expected: arity,
            found: atom.args.len(),
        });
    }
    for a in &atom.args {
        if !objects.contains_key(a) {
            return Err(PddlError::UnknownObject {
                object: a.clone(),
                context: format!("{section} atom {atom}"),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_objects_uses_set_semantics() {
        let dom =
            parse_domain("(define (domain d) (:predicates (rat ?r ?p) (same ?a ?b)))").unwrap();
        let objects = [("r1", "object"), ("p9", "object")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let goal = [
            GroundAtom::new("rat", ["r1", "p9"]),
            GroundAtom::new("same", ["p9", "p9"]),
        ]
        .into_iter()
        .collect();
        let p = Problem::new("t", &dom, objects, BTreeSet::new(), goal).unwrap();
        let expected: BTreeSet<String> = ["p9", "r1"].iter().map(|s| s.to_string()).collect();
        assert_eq!(p.goal_objects(), expected);
    }

    #[test]
    fn empty_goal_has_no_goal_objects() {
        let dom = parse_domain("(define (domain d) (:predicates (a ?x)))").unwrap();
        let p = Problem::new("t", &dom, BTreeMap::new(), BTreeSet::new(), BTreeSet::new()).unwrap();
        assert!(p.goal_objects().is_empty());
    }

    #[test]
    fn subtype_walk() {
        let dom = parse_domain(
            "(define (domain d) (:types box - obstacle obstacle cell) (:predicates (a ?x)))",
        )
        .unwrap();
        assert!(dom.is_subtype("box", "obstacle"));
        assert!(dom.is_subtype("box", "object"));
        assert!(!dom.is_subtype("cell", "obstacle"));
    }
}
