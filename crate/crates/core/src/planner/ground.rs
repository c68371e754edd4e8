use std::collections::{HashMap, HashSet};

use super::{Deadline, GroundAction};
use crate::pddl::{ActionSchema, Domain, GroundAtom, LiftedAtom, Problem};

/// Instantiates every action schema with type-consistent objects whose
/// static preconditions can hold.
///
/// A predicate no action adds can only be true if it is true initially, so
/// positive preconditions over such predicates are joined against `init`.
/// Negative preconditions over predicates no action touches are checked
/// against `init` as well. Output is sorted by (schema, args).
pub fn ground(problem: &Problem, domain: &Domain) -> Vec<GroundAction> {
    ground_until(problem, domain, None).expect("no deadline")
}

/// Like [`ground`], but gives up with `None` once `deadline` passes.
pub fn ground_until(
    problem: &Problem,
    domain: &Domain,
    deadline: Option<Deadline>,
) -> Option<Vec<GroundAction>> {
    let expired = || deadline.is_some_and(|d| d.expired());
    let ctx = Context::new(problem, domain);
    let mut out = Vec::new();
    for schema in &domain.actions {
        if expired() {
            return None;
        }
        for (i, binding) in ctx.bindings(schema).into_iter().enumerate() {
            if i % 256 == 255 && expired() {
                return None;
            }
            out.push(instantiate_binding(schema, &binding, &ctx.names));
        }
    }
    out.sort();
    Some(out)
}

struct Context<'a> {
    domain: &'a Domain,
    names: Vec<&'a str>,
    obj_types: Vec<&'a str>,
    init_by_pred: HashMap<&'a str, Vec<Vec<u32>>>,
    init_set: HashSet<(&'a str, Vec<u32>)>,
    added: HashSet<&'a str>,
    deleted: HashSet<&'a str>,
}

impl<'a> Context<'a> {
    fn new(problem: &'a Problem, domain: &'a Domain) -> Self {
        let names: Vec<&str> = problem.objects().keys().map(String::as_str).collect();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (*n, i as u32))
            .collect::<HashMap<_, _>>();
        let obj_types = problem.objects().values().map(String::as_str).collect();
        let mut init_by_pred: HashMap<&str, Vec<Vec<u32>>> = HashMap::new();
        let mut init_set = HashSet::new();
        for atom in problem.init() {
            let args: Option<Vec<u32>> = atom
                .args
                .iter()
                .map(|a| ids.get(a.as_str()).copied())
                .collect();
            if let Some(args) = args {
                init_by_pred
                    .entry(atom.predicate.as_str())
                    .or_default()
                    .push(args.clone());
                init_set.insert((atom.predicate.as_str(), args));
            }
        }
        let mut added = HashSet::new();
        let mut deleted = HashSet::new();
        for a in &domain.actions {
            added.extend(a.add.iter().map(|x| x.predicate.as_str()));
            deleted.extend(a.del.iter().map(|x| x.predicate.as_str()));
        }
        Context {
            domain,
            names,
            obj_types,
            init_by_pred,
            init_set,
            added,
            deleted,
        }
    }

    fn type_ok(&self, obj: u32, ty: &str) -> bool {
        self.domain.is_subtype(self.obj_types[obj as usize], ty)
    }

    fn bindings(&self, schema: &'a ActionSchema) -> Vec<Vec<u32>> {
        let n = schema.params.len();
        let vars = |atom: &LiftedAtom| -> Vec<usize> {
            atom.args
                .iter()
                .map(|v| schema.param_index(v).expect("validated at parse time"))
                .collect()
        };
        let mut joins: Vec<(&str, Vec<usize>)> = schema
            .pre_pos
            .iter()
            .filter(|a| !self.added.contains(a.predicate.as_str()))
            .map(|a| (a.predicate.as_str(), vars(a)))
            .collect();
        // greedy join order: most already-bound variables first, then fewest facts
        let mut ordered = Vec::with_capacity(joins.len());
        let mut bound = vec![false; n];
        while !joins.is_empty() {
            let best = (0..joins.len())
                .max_by_key(|&i| {
                    let (p, vs) = &joins[i];
                    let nbound = vs.iter().filter(|&&v| bound[v]).count();
                    let size = self.init_by_pred.get(p).map_or(0, Vec::len);
                    (nbound, std::cmp::Reverse(size), std::cmp::Reverse(i))
                })
                .unwrap();
            let j = joins.remove(best);
            for &v in &j.1 {
                bound[v] = true;
            }
            ordered.push(j);
        }
        let static_neg: Vec<(&str, Vec<usize>)> = schema
            .pre_neg
            .iter()
            .filter(|a| {
                !self.added.contains(a.predicate.as_str())
                    && !self.deleted.contains(a.predicate.as_str())
            })
            .map(|a| (a.predicate.as_str(), vars(a)))
            .collect();

        let mut results = Vec::new();
        let mut binding: Vec<Option<u32>> = vec![None; n];
        self.join(schema, &ordered, 0, &mut binding, &static_neg, &mut results);
        results
    }

    fn join(
        &self,
        schema: &ActionSchema,
        joins: &[(&str, Vec<usize>)],
        depth: usize,
        binding: &mut Vec<Option<u32>>,
        static_neg: &[(&str, Vec<usize>)],
        out: &mut Vec<Vec<u32>>,
    ) {
        if depth == joins.len() {
            self.enumerate_free(schema, 0, binding, static_neg, out);
            return;
        }
        let (pred, vars) = &joins[depth];
        let Some(facts) = self.init_by_pred.get(pred) else {
            return;
        };
        let mut newly = Vec::with_capacity(vars.len());
        'facts: for fact in facts {
            newly.clear();
            for (&v, &obj) in vars.iter().zip(fact) {
                match binding[v] {
                    Some(b) if b != obj => {
                        for &u in &newly {
                            binding[u] = None;
                        }
                        continue 'facts;
                    }
                    Some(_) => {}
                    None => {
                        if !self.type_ok(obj, &schema.params[v].ty) {
                            for &u in &newly {
                                binding[u] = None;
                            }
                            continue 'facts;
                        }
                        binding[v] = Some(obj);
                        newly.push(v);
                    }
                }
            }
            let saved = newly.clone();
            self.join(schema, joins, depth + 1, binding, static_neg, out);
            for &u in &saved {
                binding[u] = None;
            }
        }
    }

    fn enumerate_free(
        &self,
        schema: &ActionSchema,
        from: usize,
        binding: &mut Vec<Option<u32>>,
        static_neg: &[(&str, Vec<usize>)],
        out: &mut Vec<Vec<u32>>,
    ) {
        let Some(v) = (from..binding.len()).find(|&i| binding[i].is_none()) else {
            let full: Vec<u32> = binding.iter().map(|b| b.unwrap()).collect();
            let blocked = static_neg.iter().any(|(p, vars)| {
                let args: Vec<u32> = vars.iter().map(|&i| full[i]).collect();
                self.init_set.contains(&(*p, args))
            });
            if !blocked {
                out.push(full);
            }
            return;
        };
        for obj in 0..self.names.len() as u32 {
            if self.type_ok(obj, &schema.params[v].ty) {
                binding[v] = Some(obj);
                self.enumerate_free(schema, v + 1, binding, static_neg, out);
            }
        }
        binding[v] = None;
    }
}

fn instantiate_binding(schema: &ActionSchema, binding: &[u32], names: &[&str]) -> GroundAction {
    let sub = |atoms: &[LiftedAtom]| -> Vec<GroundAtom> {
        let mut v: Vec<GroundAtom> = atoms
            .iter()
            .map(|a| GroundAtom {
                predicate: a.predicate.clone(),
                args: a
                    .args
                    .iter()
                    .map(|x| names[binding[schema.param_index(x).unwrap()] as usize].to_string())
                    .collect(),
            })
            .collect();
        v.dedup();
        v
    };
    let add = sub(&schema.add);
    // delete-then-add: an atom both deleted and added stays true
    let del = sub(&schema.del)
        .into_iter()
        .filter(|d| !add.contains(d))
        .collect();
    GroundAction {
        schema: schema.name.clone(),
        args: binding
            .iter()
            .map(|&o| names[o as usize].to_string())
            .collect(),
        pre_pos: sub(&schema.pre_pos),
        pre_neg: sub(&schema.pre_neg),
        add,
        del,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem};

    const LINE: &str = r#"(define (domain line)
      (:types position robot)
      (:predicates (rat ?r - robot ?p - position) (upto ?a - position ?b - position) (free ?p - position))
      (:action move
        :parameters (?r - robot ?from - position ?to - position)
        :precondition (and (rat ?r ?from) (upto ?from ?to) (free ?to))
        :effect (and (rat ?r ?to) (not (rat ?r ?from)))))"#;

    #[test]
    fn zero_objects_of_required_type() {
        let d = parse_domain(LINE).unwrap();
        let p = parse_problem(
            "(define (problem t) (:domain line) (:objects p0 p1 - position) (:init (upto p0 p1)) (:goal (and)))",
            &d,
        )
        .unwrap();
        assert!(ground(&p, &d).is_empty());
    }

    #[test]
    fn adjacency_restricts_moves() {
        let d = parse_domain(LINE).unwrap();
        let p = parse_problem(
            "(define (problem t) (:domain line) (:objects r1 - robot p0 p1 - position) (:init (upto p0 p1) (rat r1 p0) (free p1)) (:goal (and)))",
            &d,
        )
        .unwrap();
        let acts = ground(&p, &d);
        assert_eq!(acts.len(), 1);
        assert_eq!(acts[0].to_string(), "(move r1 p0 p1)");
    }
}
