use std::collections::{BTreeMap, BTreeSet};

use super::sexpr::{self, Pos, SExpr};
use super::{
    ActionSchema, Domain, GroundAtom, LiftedAtom, PddlError, PredicateDef, PredicateSet, Problem,
    TypedParam, OBJECT_TYPE,
};

/// Parses a domain file and checks that every action literal refers to a
/// declared predicate with matching arity.
pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let root = sexpr::read(text)?;
    let sections = define_body(&root, "domain")?;
    let name = sections.name;

    let mut requirements = Vec::new();
    let mut types = BTreeMap::new();
    let mut predicates = Vec::new();
    let mut actions = Vec::new();

    for section in sections.rest {
        let items = section
            .as_list()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected a section list"))?;
        match section.head() {
            Some(":requirements") => {
                for r in &items[1..] {
                    requirements.push(symbol(r)?.to_string());
                }
            }
            Some(":types") => {
                for (child, parent) in typed_list(&items[1..])? {
                    types.insert(child, parent);
                }
            }
            Some(":predicates") => predicates = predicate_defs(&items[1..])?,
            Some(":action") => actions.push(action(items)?),
            Some(other) => {
                return Err(PddlError::syntax(
                    section.pos(),
                    format!("unsupported domain section `{other}`"),
                ))
            }
            None => {
                return Err(PddlError::syntax(
                    section.pos(),
                    "expected a section keyword",
                ))
            }
        }
    }
    types.remove(OBJECT_TYPE);

    let known = PredicateSet::from_defs(predicates.iter().cloned())?;
    for a in &actions {
        check_action(a, &known)?;
    }
    Ok(Domain {
        name,
        requirements,
        types,
        predicates,
        actions,
    })
}

/// Reads only the `:predicates` block of a domain file.
pub fn parse_predicates(domain_text: &str) -> Result<PredicateSet, PddlError> {
    let root = sexpr::read(domain_text)?;
    let sections = define_body(&root, "domain")?;
    let block = sections
        .rest
        .iter()
        .find(|s| s.head() == Some(":predicates"))
        .ok_or(PddlError::MissingSection(":predicates block"))?;
    PredicateSet::from_defs(predicate_defs(&block.as_list().unwrap()[1..])?)
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let root = sexpr::read(text)?;
    let sections = define_body(&root, "problem")?;
    let mut domain_name = None;
    let mut objects = BTreeMap::new();
    let mut init = BTreeSet::new();
    let mut goal = BTreeSet::new();

    for section in sections.rest {
        let items = section
            .as_list()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected a section list"))?;
        match section.head() {
            Some(":domain") => {
                domain_name = Some(symbol(at(items, 1, section.pos())?)?.to_string())
            }
            Some(":objects") => {
                for (obj, ty) in typed_list(&items[1..])? {
                    objects.insert(obj, ty);
                }
            }
            Some(":init") => {
                for a in &items[1..] {
                    init.insert(ground_atom(a)?);
                }
            }
            Some(":goal") => {
                let body = at(items, 1, section.pos())?;
                for a in conjunction(body)? {
                    if a.head() == Some("not") {
                        return Err(PddlError::syntax(
                            a.pos(),
                            "negative goals are not supported",
                        ));
                    }
                    goal.insert(ground_atom(a)?);
                }
            }
            Some(other) => {
                return Err(PddlError::syntax(
                    section.pos(),
                    format!("unsupported problem section `{other}`"),
                ))
            }
            None => {
                return Err(PddlError::syntax(
                    section.pos(),
                    "expected a section keyword",
                ))
            }
        }
    }
    let domain_name = domain_name.ok_or(PddlError::MissingSection(":domain declaration"))?;
    if domain_name != domain.name {
        return Err(PddlError::DomainMismatch {
            expected: domain.name.clone(),
            found: domain_name,
        });
    }
    Problem::new(sections.name, domain, objects, init, goal)
}

struct DefineBody<'a> {
    name: String,
    rest: Vec<&'a SExpr>,
}

fn define_body<'a>(root: &'a SExpr, kind: &str) -> Result<DefineBody<'a>, PddlError> {
    let items = root
        .as_list()
        .ok_or_else(|| PddlError::syntax(root.pos(), "expected `(define ...)`"))?;
    if root.head() != Some("define") {
        return Err(PddlError::syntax(root.pos(), "expected `(define ...)`"));
    }
    let header = at(items, 1, root.pos())?;
    let hdr = header
        .as_list()
        .filter(|h| h.len() == 2 && h[0].as_symbol() == Some(kind))
        .ok_or_else(|| PddlError::syntax(header.pos(), format!("expected `({kind} <name>)`")))?;
    Ok(DefineBody {
        name: symbol(&hdr[1])?.to_string(),
        rest: items[2..].iter().collect(),
    })
}

fn at(items: &[SExpr], idx: usize, pos: Pos) -> Result<&SExpr, PddlError> {
    items
        .get(idx)
        .ok_or_else(|| PddlError::syntax(pos, "list is too short"))
}

fn symbol(e: &SExpr) -> Result<&str, PddlError> {
    e.as_symbol()
        .ok_or_else(|| PddlError::syntax(e.pos(), "expected a symbol"))
}

/// `a b - t1 c - t2 d` -> [(a,t1),(b,t1),(c,t2),(d,object)]
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = symbol(&items[i])?;
        if s == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(items[i].pos(), "missing type after `-`"))?;
            let ty = symbol(ty)?.to_string();
            if pending.is_empty() {
                return Err(PddlError::syntax(
                    items[i].pos(),
                    "type annotation without names",
                ));
            }
            out.extend(pending.drain(..).map(|n| (n, ty.clone())));
            i += 2;
        } else {
            pending.push(s.to_string());
            i += 1;
        }
    }
    out.extend(pending.into_iter().map(|n| (n, OBJECT_TYPE.to_string())));
    Ok(out)
}

fn predicate_defs(items: &[SExpr]) -> Result<Vec<PredicateDef>, PddlError> {
    let mut defs = Vec::new();
    let mut seen = BTreeSet::new();
    for item in items {
        let list = item
            .as_list()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| PddlError::syntax(item.pos(), "expected a predicate declaration"))?;
        let name = symbol(&list[0])?.to_string();
        if !seen.insert(name.clone()) {
            return Err(PddlError::DuplicatePredicate(name));
        }
        let params = typed_list(&list[1..])?;
        defs.push(PredicateDef {
            name,
            param_types: params.into_iter().map(|(_, t)| t).collect(),
        });
    }
    Ok(defs)
}

fn action(items: &[SExpr]) -> Result<ActionSchema, PddlError> {
    let head_pos = items[0].pos();
    let name = symbol(at(items, 1, head_pos)?)?.to_string();
    let mut params = Vec::new();
    let mut pre_pos = Vec::new();
    let mut pre_neg = Vec::new();
    let mut add = Vec::new();
    let mut del = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = symbol(&items[i])?;
        let value = at(items, i + 1, items[i].pos())?;
        match key {
            ":parameters" => {
                let list = value
                    .as_list()
                    .ok_or_else(|| PddlError::syntax(value.pos(), "expected parameter list"))?;
                params = typed_list(list)?
                    .into_iter()
                    .map(|(name, ty)| TypedParam { name, ty })
                    .collect();
            }
            ":precondition" => {
                for lit in conjunction(value)? {
                    let (atom, positive) = literal(lit)?;
                    push_unique(if positive { &mut pre_pos } else { &mut pre_neg }, atom);
                }
            }
            ":effect" => {
                for lit in conjunction(value)? {
                    let (atom, positive) = literal(lit)?;
                    push_unique(if positive { &mut add } else { &mut del }, atom);
                }
            }
            other => {
                return Err(PddlError::syntax(
                    items[i].pos(),
                    format!("unsupported action key `{other}`"),
                ))
            }
        }
        i += 2;
    }
    Ok(ActionSchema {
        name,
        params,
        pre_pos,
        pre_neg,
        add,
        del,
    })
}

fn push_unique(v: &mut Vec<LiftedAtom>, atom: LiftedAtom) {
    if !v.contains(&atom) {
        v.push(atom);
    }
}

/// Flattens `(and l1 l2 ...)`, a single literal, or `()` into literals.
fn conjunction(e: &SExpr) -> Result<Vec<&SExpr>, PddlError> {
    match e.as_list() {
        Some([]) => Ok(Vec::new()),
        Some(items) if e.head() == Some("and") => {
            let mut out = Vec::new();
            for it in &items[1..] {
                out.extend(conjunction(it)?);
            }
            Ok(out)
        }
        Some(_) => Ok(vec![e]),
        None => Err(PddlError::syntax(
            e.pos(),
            "expected a literal or conjunction",
        )),
    }
}

fn literal(e: &SExpr) -> Result<(LiftedAtom, bool), PddlError> {
    if e.head() == Some("not") {
        let items = e.as_list().unwrap();
        if items.len() != 2 {
            return Err(PddlError::syntax(e.pos(), "`not` takes exactly one atom"));
        }
        Ok((lifted_atom(&items[1])?, false))
    } else {
        Ok((lifted_atom(e)?, true))
    }
}

fn lifted_atom(e: &SExpr) -> Result<LiftedAtom, PddlError> {
    let items = e
        .as_list()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| PddlError::syntax(e.pos(), "expected an atom"))?;
    let predicate = symbol(&items[0])?.to_string();
    if matches!(
        predicate.as_str(),
        "and" | "or" | "not" | "imply" | "forall" | "exists" | "when"
    ) {
        return Err(PddlError::syntax(
            e.pos(),
            format!("`{predicate}` is outside the STRIPS subset"),
        ));
    }
    let args = items[1..]
        .iter()
        .map(|a| symbol(a).map(str::to_string))
        .collect::<Result<_, _>>()?;
    Ok(LiftedAtom { predicate, args })
}

fn ground_atom(e: &SExpr) -> Result<GroundAtom, PddlError> {
    let a = lifted_atom(e)?;
    if let Some(v) = a.args.iter().find(|x| x.starts_with('?')) {
        return Err(PddlError::syntax(
            e.pos(),
            format!("variable `{v}` in ground atom"),
        ));
    }
    Ok(GroundAtom {
        predicate: a.predicate,
        args: a.args,
    })
}

fn check_action(a: &ActionSchema, known: &PredicateSet) -> Result<(), PddlError> {
    let context = format!("action `{}`", a.name);
    for atom in a
        .pre_pos
        .iter()
        .chain(&a.pre_neg)
        .chain(&a.add)
        .chain(&a.del)
    {
        let arity = known
            .arity(&atom.predicate)
            .ok_or_else(|| PddlError::UndeclaredPredicate {
                predicate: atom.predicate.clone(),
                context: context.clone(),
            })?;
        if arity != atom.args.len() {
            return Err(PddlError::ArityMismatch {
                predicate: atom.predicate.clone(),
                context: context.clone(),
                expected: arity,
                found: atom.args.len(),
            });
        }
        for v in &atom.args {
            if a.param_index(v).is_none() {
                return Err(PddlError::UnboundVariable {
                    variable: v.clone(),
                    action: a.name.clone(),
                });
            }
        }
    }
    if let Some(clash) = a.add.iter().find(|x| a.del.contains(x)) {
        return Err(PddlError::ConflictingEffects {
            action: a.name.clone(),
            atom: format!("({} {})", clash.predicate, clash.args.join(" ")),
        });
    }
    Ok(())
}
