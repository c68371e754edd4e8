use std::fmt;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::pddl::PredicateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Relaxation,
    Complementary,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Relaxation => "relaxation",
            RuleKind::Complementary => "complementary",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    MissingKey,
    NotInteger,
    /// Wrong JSON shape, index out of range, arity mismatch.
    Structure,
    UnknownPredicate,
    Duplicate,
}

impl IssueKind {
    /// Format problems make a document unusable. Unknown predicates and
    /// duplicates are repaired by post-processing instead.
    pub fn is_format(self) -> bool {
        !matches!(self, IssueKind::UnknownPredicate | IssueKind::Duplicate)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RuleIssue {
    pub rule: String,
    pub path: String,
    pub kind: IssueKind,
    pub message: String,
}

impl fmt::Display for RuleIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<RuleIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn format_ok(&self) -> bool {
        self.errors.iter().all(|e| !e.kind.is_format())
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.errors.iter().filter(|e| e.kind == kind).count()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "- {e}")?;
        }
        Ok(())
    }
}

/// Checks a parsed rule document: required keys, integer index lists,
/// known predicates, duplicate rules. Index ranges, arities and the single
/// binary `pre_compute` entry are checked as well. Never fails; every
/// problem found is reported.
pub fn validate_rules(candidate: &Value, known: &PredicateSet, kind: RuleKind) -> ValidationReport {
    let mut v = Validator {
        known,
        errors: Vec::new(),
        rule: String::new(),
    };
    match candidate.as_object() {
        None => v.push(
            "$",
            IssueKind::Structure,
            "expected a JSON object of rules".into(),
        ),
        Some(map) => match kind {
            RuleKind::Relaxation => v.relaxation(map),
            RuleKind::Complementary => v.complementary(map),
        },
    }
    ValidationReport { errors: v.errors }
}

struct Validator<'a> {
    known: &'a PredicateSet,
    errors: Vec<RuleIssue>,
    rule: String,
}

const RELAXATION_KEYS: [&str; 5] = [
    "pre_compute",
    "precond",
    "delete_objects",
    "delete_effects",
    "add_effects",
];

impl Validator<'_> {
    fn push(&mut self, path: &str, kind: IssueKind, message: String) {
        self.errors.push(RuleIssue {
            rule: self.rule.clone(),
            path: path.to_string(),
            kind,
            message,
        });
    }

    /// Returns the indices when `v` is a list of non-negative integers.
    fn index_list(&mut self, path: &str, v: &Value) -> Option<Vec<usize>> {
        let Some(items) = v.as_array() else {
            self.push(
                path,
                IssueKind::Structure,
                "expected a list of integer indices".into(),
            );
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, x) in items.iter().enumerate() {
            match x.as_u64() {
                Some(n) => out.push(n as usize),
                None => {
                    ok = false;
                    let message = if x.is_string() {
                        format!("index values must be integers, found string {x}")
                    } else {
                        format!("index values must be non-negative integers, found {x}")
                    };
                    self.push(&format!("{path}[{i}]"), IssueKind::NotInteger, message);
                }
            }
        }
        ok.then_some(out)
    }

    fn predicate(&mut self, path: &str, name: &str) -> Option<usize> {
        let arity = self.known.arity(name);
        if arity.is_none() {
            self.push(
                path,
                IssueKind::UnknownPredicate,
                format!("unknown predicate `{name}`"),
            );
        }
        arity
    }

    fn in_range(&mut self, path: &str, indices: &[usize], bound: usize) {
        if let Some(&bad) = indices.iter().find(|&&i| i >= bound) {
            self.push(
                path,
                IssueKind::Structure,
                format!("index {bad} out of range; the pre_compute tuple has {bound} positions"),
            );
        }
    }

    /// A predicate → index-list map. Returns the entries that parsed.
    fn index_spec(&mut self, path: &str, v: &Value, bound: usize) {
        let Some(map) = v.as_object() else {
            self.push(
                path,
                IssueKind::Structure,
                "expected an object mapping predicates to index lists".into(),
            );
            return;
        };
        for (pred, list) in map {
            let p = format!("{path}.{pred}");
            let arity = self.predicate(&p, pred);
            if let Some(idx) = self.index_list(&p, list) {
                if let Some(a) = arity {
                    if idx.len() != a {
                        self.push(
                            &p,
                            IssueKind::Structure,
                            format!("`{pred}` takes {a} arguments, got {} indices", idx.len()),
                        );
                    }
                }
                self.in_range(&p, &idx, bound);
            }
        }
    }

    fn relaxation(&mut self, map: &Map<String, Value>) {
        let mut seen: Vec<(&str, &Value)> = Vec::new();
        for (id, body) in map {
            self.rule = id.clone();
            let Some(obj) = body.as_object() else {
                self.push(
                    id,
                    IssueKind::Structure,
                    "rule must be a JSON object".into(),
                );
                continue;
            };
            for key in RELAXATION_KEYS {
                if !obj.contains_key(key) {
                    self.push(
                        &format!("{id}.{key}"),
                        IssueKind::MissingKey,
                        format!("missing required key `{key}`"),
                    );
                }
            }
            let mut bound = 2;
            if let Some(pc) = obj.get("pre_compute") {
                let path = format!("{id}.pre_compute");
                match pc.as_object() {
                    Some(m) if m.len() == 1 => {
                        let (pred, list) = m.iter().next().unwrap();
                        let p = format!("{path}.{pred}");
                        let arity = self.predicate(&p, pred);
                        if let Some(idx) = self.index_list(&p, list) {
                            bound = idx.len();
                            if arity.is_some_and(|a| a != 2) || idx.len() != 2 {
                                self.push(
                                    &p,
                                    IssueKind::Structure,
                                    "pre_compute must be a binary predicate with indices [0,1]"
                                        .into(),
                                );
                            }
                            self.in_range(&p, &idx, 2);
                        }
                    }
                    Some(_) => self.push(
                        &path,
                        IssueKind::Structure,
                        "pre_compute must have exactly one entry".into(),
                    ),
                    None => self.push(
                        &path,
                        IssueKind::Structure,
                        "expected an object mapping predicates to index lists".into(),
                    ),
                }
            }
            for key in ["precond", "delete_effects", "add_effects"] {
                if let Some(v) = obj.get(key) {
                    self.index_spec(&format!("{id}.{key}"), v, bound);
                }
            }
            if let Some(v) = obj.get("delete_objects") {
                let path = format!("{id}.delete_objects");
                if let Some(idx) = self.index_list(&path, v) {
                    self.in_range(&path, &idx, bound);
                }
            }
            if let Some((first, _)) = seen.iter().find(|(_, b)| *b == body) {
                let msg = format!("duplicate of `{first}`");
                self.push(id, IssueKind::Duplicate, msg);
            } else {
                seen.push((id, body));
            }
        }
    }

    fn complementary(&mut self, map: &Map<String, Value>) {
        for (pred, body) in map {
            self.rule = pred.clone();
            let arity = self.predicate(pred, pred);
            let Some(obj) = body.as_object() else {
                self.push(
                    pred,
                    IssueKind::Structure,
                    "entry must be a JSON object".into(),
                );
                continue;
            };
            let mut lists = Vec::new();
            for key in ["cond", "cmpl"] {
                let path = format!("{pred}.{key}");
                let Some(v) = obj.get(key) else {
                    self.push(
                        &path,
                        IssueKind::MissingKey,
                        format!("missing required key `{key}`"),
                    );
                    continue;
                };
                let Some(items) = v.as_array() else {
                    self.push(
                        &path,
                        IssueKind::Structure,
                        "expected a list of index lists".into(),
                    );
                    continue;
                };
                let mut parsed = Vec::new();
                for (i, item) in items.iter().enumerate() {
                    let p = format!("{path}[{i}]");
                    if let Some(idx) = self.index_list(&p, item) {
                        if let Some(a) = arity {
                            if let Some(&bad) = idx.iter().find(|&&x| x >= a) {
                                self.push(
                                    &p,
                                    IssueKind::Structure,
                                    format!("index {bad} out of range for `{pred}` of arity {a}"),
                                );
                            }
                        }
                        parsed.push(idx);
                    }
                }
                if parsed.len() == items.len() {
                    lists.push(parsed);
                }
            }
            if let [cond, cmpl] = lists.as_slice() {
                if cond.len() != cmpl.len() {
                    self.push(
                        pred,
                        IssueKind::Structure,
                        format!(
                            "cond has {} entries but cmpl has {}",
                            cond.len(),
                            cmpl.len()
                        ),
                    );
                } else {
                    let pairs: Vec<_> = cond.iter().zip(cmpl).collect();
                    for (i, p) in pairs.iter().enumerate() {
                        if pairs[..i].contains(p) {
                            self.push(
                                &format!("{pred}.cond[{i}]"),
                                IssueKind::Duplicate,
                                "duplicate cond/cmpl pair".into(),
                            );
                        }
                    }
                }
            }
        }
    }
}

/// Per-attempt counts of a rule document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleStats {
    pub format_ok: bool,
    pub rules: usize,
    /// Rules naming at least one unknown predicate.
    pub typos: usize,
    /// Rules repeating an earlier one.
    pub duplicates: usize,
}

pub fn rule_stats(candidate: &Value, known: &PredicateSet, kind: RuleKind) -> RuleStats {
    let report = validate_rules(candidate, known, kind);
    let rules_with = |k: IssueKind| {
        let mut ids: Vec<&str> = report
            .errors
            .iter()
            .filter(|e| e.kind == k)
            .map(|e| e.rule.as_str())
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };
    RuleStats {
        format_ok: report.format_ok(),
        rules: candidate.as_object().map_or(0, Map::len),
        typos: rules_with(IssueKind::UnknownPredicate),
        duplicates: match kind {
            RuleKind::Relaxation => rules_with(IssueKind::Duplicate),
            RuleKind::Complementary => report.count(IssueKind::Duplicate),
        },
    }
}
