//! Canonical PDDL rendering. Output reparses to a structurally equal value.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use super::{ActionSchema, Domain, LiftedAtom, Problem, OBJECT_TYPE};

fn lifted(atom: &LiftedAtom) -> String {
    let mut s = format!("({}", atom.predicate);
    for a in &atom.args {
        s.push(' ');
        s.push_str(a);
    }
    s.push(')');
    s
}

/// Groups consecutive names sharing a type: `a b - t c - u`.
fn typed_names<'a>(items: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut out = String::new();
    let mut run: Vec<&str> = Vec::new();
    let mut run_ty: Option<&str> = None;
    let flush = |out: &mut String, run: &mut Vec<&str>, ty: Option<&str>| {
        if run.is_empty() {
            return;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&run.join(" "));
        if let Some(t) = ty {
            let _ = write!(out, " - {t}");
        }
        run.clear();
    };
    for (name, ty) in items {
        if run_ty != Some(ty) {
            flush(&mut out, &mut run, run_ty);
            run_ty = Some(ty);
        }
        run.push(name);
    }
    flush(&mut out, &mut run, run_ty);
    out
}

fn write_action(f: &mut fmt::Formatter<'_>, a: &ActionSchema) -> fmt::Result {
    writeln!(f, "  (:action {}", a.name)?;
    let params = typed_names(a.params.iter().map(|p| (p.name.as_str(), p.ty.as_str())));
    writeln!(f, "    :parameters ({params})")?;
    let pre: Vec<String> = a
        .pre_pos
        .iter()
        .map(lifted)
        .chain(a.pre_neg.iter().map(|x| format!("(not {})", lifted(x))))
        .collect();
    writeln!(f, "    :precondition (and {})", pre.join(" "))?;
    let eff: Vec<String> = a
        .add
        .iter()
        .map(lifted)
        .chain(a.del.iter().map(|x| format!("(not {})", lifted(x))))
        .collect();
    writeln!(f, "    :effect (and {}))", eff.join(" "))
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            // group by parent for a stable, compact layout
            let mut by_parent: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
            for (child, parent) in &self.types {
                by_parent.entry(parent).or_default().push(child);
            }
            let mut parts = Vec::new();
            for (parent, children) in by_parent {
                parts.push(format!("{} - {}", children.join(" "), parent));
            }
            writeln!(f, "  (:types {})", parts.join(" "))?;
        }
        writeln!(f, "  (:predicates")?;
        for p in &self.predicates {
            let vars: Vec<String> = (0..p.arity()).map(|i| format!("?x{i}")).collect();
            let typed = typed_names(
                vars.iter()
                    .map(String::as_str)
                    .zip(p.param_types.iter().map(String::as_str)),
            );
            if typed.is_empty() {
                writeln!(f, "    ({})", p.name)?;
            } else {
                writeln!(f, "    ({} {})", p.name, typed)?;
            }
        }
        writeln!(f, "  )")?;
        for a in &self.actions {
            write_action(f, a)?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name())?;
        writeln!(f, "  (:domain {})", self.domain_name())?;
        // objects grouped by type so the file stays readable for big grids
        let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (o, t) in self.objects() {
            by_type.entry(t).or_default().push(o);
        }
        writeln!(f, "  (:objects")?;
        for (t, objs) in by_type {
            if t == OBJECT_TYPE {
                writeln!(f, "    {}", objs.join(" "))?;
            } else {
                writeln!(f, "    {} - {}", objs.join(" "), t)?;
            }
        }
        writeln!(f, "  )")?;
        writeln!(f, "  (:init")?;
        for a in self.init() {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  )")?;
        writeln!(f, "  (:goal (and")?;
        for a in self.goal() {
            writeln!(f, "    {a}")?;
        }
        writeln!(f, "  ))")?;
        writeln!(f, ")")
    }
}
