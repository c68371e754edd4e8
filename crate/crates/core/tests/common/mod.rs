#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use pruneplan::mazenamo::{generate, Difficulty, GridSpec, Instance};
use pruneplan::pddl::{Domain, GroundAtom, LiftedAtom, Problem};
use pruneplan::planner::{ground, GroundAction};
use pruneplan::rules::ComplementaryRule;

pub type State = BTreeSet<GroundAtom>;

/// The first `count` instances that generate, cycling sizes and
/// difficulties over increasing seeds.
pub fn instances(sizes: &[usize], count: usize, seed0: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    let mut seed = seed0;
    while out.len() < count {
        let size = sizes[seed as usize % sizes.len()];
        let d = Difficulty::ALL[(seed as usize / sizes.len()) % Difficulty::ALL.len()];
        if let Ok(i) = generate(&GridSpec::square(size, d, seed)) {
            out.push(i);
        }
        seed += 1;
    }
    out
}

pub fn simulate(init: &State, plan: &[GroundAction]) -> Option<State> {
    let mut s = init.clone();
    for a in plan {
        if !a.pre_pos.iter().all(|p| s.contains(p)) || a.pre_neg.iter().any(|p| s.contains(p)) {
            return None;
        }
        for d in &a.del {
            s.remove(d);
        }
        s.extend(a.add.iter().cloned());
    }
    Some(s)
}

/// Shortest plan length by plain breadth-first search over full states,
/// with states packed into bitsets over the atoms that can occur.
pub fn bfs_length(problem: &Problem, domain: &Domain, max_states: usize) -> Option<usize> {
    let actions = ground(problem, domain);
    let mut ids: HashMap<&GroundAtom, usize> = HashMap::new();
    for a in problem.init().iter().chain(problem.goal()) {
        let n = ids.len();
        ids.entry(a).or_insert(n);
    }
    for a in &actions {
        for x in a
            .pre_pos
            .iter()
            .chain(&a.pre_neg)
            .chain(&a.add)
            .chain(&a.del)
        {
            let n = ids.len();
            ids.entry(x).or_insert(n);
        }
    }
    let words = ids.len().div_ceil(64);
    let pack = |atoms: &mut dyn Iterator<Item = &GroundAtom>| {
        let mut v = vec![0u64; words];
        for a in atoms {
            let i = ids[a];
            v[i / 64] |= 1 << (i % 64);
        }
        v
    };
    let compiled: Vec<[Vec<u64>; 4]> = actions
        .iter()
        .map(|a| {
            [
                pack(&mut a.pre_pos.iter()),
                pack(&mut a.pre_neg.iter()),
                pack(&mut a.add.iter()),
                pack(&mut a.del.iter()),
            ]
        })
        .collect();
    let goal = pack(&mut problem.goal().iter());
    let holds = |s: &[u64], g: &[u64]| s.iter().zip(g).all(|(x, y)| x & y == *y);
    let start = pack(&mut problem.init().iter());
    if holds(&start, &goal) {
        return Some(0);
    }
    let mut seen: HashSet<Vec<u64>> = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0usize)]);
    while let Some((s, d)) = queue.pop_front() {
        for [pos, neg, add, del] in &compiled {
            if !holds(&s, pos) || s.iter().zip(neg).any(|(x, y)| x & y != 0) {
                continue;
            }
            let next: Vec<u64> = (0..words).map(|w| (s[w] & !del[w]) | add[w]).collect();
            if holds(&next, &goal) {
                return Some(d + 1);
            }
            if seen.len() < max_states && seen.insert(next.clone()) {
                queue.push_back((next, d + 1));
            }
        }
    }
    None
}

/// Light obstacles vanish, their cells become empty. Goal objects stay.
pub fn relax_light_reference(problem: &Problem) -> (BTreeMap<String, String>, State) {
    let goal_objects = problem.goal_objects();
    let init = problem.init();
    let gone: Vec<(String, String)> = init
        .iter()
        .filter(|a| a.predicate == "oat")
        .filter(|a| init.contains(&GroundAtom::new("islight", [a.args[0].as_str()])))
        .filter(|a| !goal_objects.contains(&a.args[0]))
        .map(|a| (a.args[0].clone(), a.args[1].clone()))
        .collect();
    let removed: BTreeSet<&str> = gone.iter().map(|(o, _)| o.as_str()).collect();
    let objects = problem
        .objects()
        .iter()
        .filter(|(o, _)| !removed.contains(o.as_str()))
        .map(|(o, t)| (o.clone(), t.clone()))
        .collect();
    let mut out: State = init
        .iter()
        .filter(|a| a.args.iter().all(|x| !removed.contains(x.as_str())))
        .cloned()
        .collect();
    for (_, p) in &gone {
        out.insert(GroundAtom::new("posempty", [p.as_str()]));
    }
    (objects, out)
}

/// Adds one round of co-included objects at a time until nothing changes.
pub fn closure_reference(
    included: &BTreeSet<String>,
    init: &State,
    rules: &[ComplementaryRule],
) -> BTreeSet<String> {
    let mut cur = included.clone();
    loop {
        let mut next = cur.clone();
        for atom in init {
            for rule in rules.iter().filter(|r| r.predicate == atom.predicate) {
                for (cond, cmpl) in rule.cond.iter().zip(&rule.cmpl) {
                    if cond.iter().all(|&i| cur.contains(&atom.args[i])) {
                        next.extend(cmpl.iter().map(|&i| atom.args[i].clone()));
                    }
                }
            }
        }
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Every type-consistent binding whose static preconditions hold.
pub fn ground_reference(problem: &Problem, domain: &Domain) -> Vec<(String, Vec<String>)> {
    // positive conditions are static unless some action adds them,
    // negative ones unless some action adds or deletes them
    let mut added: BTreeSet<&str> = BTreeSet::new();
    let mut touched: BTreeSet<&str> = BTreeSet::new();
    for a in &domain.actions {
        added.extend(a.add.iter().map(|l| l.predicate.as_str()));
        touched.extend(a.add.iter().chain(&a.del).map(|l| l.predicate.as_str()));
    }
    let mut out = Vec::new();
    for schema in &domain.actions {
        let pools: Vec<Vec<String>> = schema
            .params
            .iter()
            .map(|p| {
                problem
                    .objects()
                    .iter()
                    .filter(|(_, t)| domain.is_subtype(t, &p.ty))
                    .map(|(o, _)| o.clone())
                    .collect()
            })
            .collect();
        let mut tuples: Vec<Vec<String>> = vec![Vec::new()];
        for pool in &pools {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    pool.iter().map(move |o| {
                        let mut t = t.clone();
                        t.push(o.clone());
                        t
                    })
                })
                .collect();
        }
        for args in tuples {
            let bind = |l: &LiftedAtom| {
                GroundAtom::new(
                    l.predicate.clone(),
                    l.args.iter().map(|v| match schema.param_index(v) {
                        Some(i) => args[i].clone(),
                        None => v.clone(),
                    }),
                )
            };
            let statics_hold = schema
                .pre_pos
                .iter()
                .filter(|l| !added.contains(l.predicate.as_str()))
                .all(|l| problem.init().contains(&bind(l)))
                && schema
                    .pre_neg
                    .iter()
                    .filter(|l| !touched.contains(l.predicate.as_str()))
                    .all(|l| !problem.init().contains(&bind(l)));
            if statics_hold {
                out.push((schema.name.clone(), args));
            }
        }
    }
    out.sort();
    out
}
