use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};
use std::time::Instant;

use super::{ground_until, Deadline, GroundAction, Plan, SearchOutcome, SearchStats};
use crate::pddl::{Domain, GroundAtom, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Greedy best-first search on the additive delete-relaxation heuristic.
    #[default]
    Satisficing,
    /// Breadth-first search; returns a shortest plan.
    Optimal,
}

/// Satisficing search bounded by `deadline`.
pub fn search(problem: &Problem, domain: &Domain, deadline: Deadline) -> SearchOutcome {
    search_with(problem, domain, deadline, SearchMode::Satisficing)
}

pub fn search_with(
    problem: &Problem,
    domain: &Domain,
    deadline: Deadline,
    mode: SearchMode,
) -> SearchOutcome {
    let started = Instant::now();
    let mut stats = SearchStats::default();
    if deadline.expired() {
        stats.wall_time = started.elapsed();
        return SearchOutcome::Timeout { stats };
    }
    let Some(actions) = ground_until(problem, domain, Some(deadline)) else {
        stats.wall_time = started.elapsed();
        return SearchOutcome::Timeout { stats };
    };
    stats.ground_actions = actions.len();
    let task = match Task::compile(problem, &actions, deadline) {
        Ok(Some(t)) => t,
        Err(TimedOut) => {
            stats.wall_time = started.elapsed();
            return SearchOutcome::Timeout { stats };
        }
        Ok(None) => {
            stats.wall_time = started.elapsed();
            return SearchOutcome::Unsolvable { stats };
        }
    };
    let result = match mode {
        SearchMode::Satisficing => task.gbfs(deadline, &mut stats),
        SearchMode::Optimal => task.bfs(deadline, &mut stats),
    };
    stats.wall_time = started.elapsed();
    match result {
        Ok(Some(indices)) => SearchOutcome::Solved(Plan {
            actions: indices
                .into_iter()
                .map(|i| actions[task.actions[i as usize].source].clone())
                .collect(),
            stats,
        }),
        Ok(None) => SearchOutcome::Unsolvable { stats },
        Err(TimedOut) => SearchOutcome::Timeout { stats },
    }
}

struct TimedOut;

#[derive(Debug)]
struct CompiledAction {
    source: usize,
    pre: Vec<u32>,
    neg: Vec<u32>,
    add: Vec<u32>,
    del: Vec<u32>,
}

type Bits = Box<[u64]>;

/// Integer-encoded task over fluent facts only. Facts that are true
/// initially and never deleted are folded away.
struct Task {
    actions: Vec<CompiledAction>,
    init: Bits,
    goal: Vec<u32>,
    n_facts: usize,
    /// actions with a given fluent trigger precondition
    triggered: Vec<Vec<u32>>,
    /// actions without any fluent positive precondition
    untriggered: Vec<u32>,
    /// for the heuristic: actions having fact as positive precondition
    pre_of: Vec<Vec<u32>>,
    always_applicable: Vec<u32>,
}

impl Task {
    fn compile(
        problem: &Problem,
        actions: &[GroundAction],
        deadline: Deadline,
    ) -> Result<Option<Task>, TimedOut> {
        let init: HashSet<&GroundAtom> = problem.init().iter().collect();
        let mut added: HashSet<&GroundAtom> = HashSet::new();
        let mut deleted: HashSet<&GroundAtom> = HashSet::new();
        for a in actions {
            added.extend(a.add.iter());
            deleted.extend(a.del.iter());
        }
        let rigid_true = |x: &GroundAtom| init.contains(x) && !deleted.contains(x);
        let never_true = |x: &GroundAtom| !init.contains(x) && !added.contains(x);

        let mut table: HashMap<GroundAtom, u32> = HashMap::new();
        let mut id_of = |x: &GroundAtom| -> u32 {
            if let Some(&i) = table.get(x) {
                return i;
            }
            let n = table.len() as u32;
            table.insert(x.clone(), n);
            n
        };

        let mut goal = Vec::new();
        for g in problem.goal() {
            if rigid_true(g) {
                continue;
            }
            if never_true(g) {
                return Ok(None);
            }
            goal.push(id_of(g));
        }

        let mut compiled = Vec::new();
        'acts: for (idx, a) in actions.iter().enumerate() {
            if idx % 1024 == 1023 && deadline.expired() {
                return Err(TimedOut);
            }
            let mut pre = Vec::new();
            for p in &a.pre_pos {
                if rigid_true(p) {
                    continue;
                }
                if never_true(p) {
                    continue 'acts;
                }
                pre.push(id_of(p));
            }
            let mut neg = Vec::new();
            for p in &a.pre_neg {
                if rigid_true(p) {
                    continue 'acts;
                }
                if never_true(p) {
                    continue;
                }
                neg.push(id_of(p));
            }
            let add = a
                .add
                .iter()
                .filter(|x| !rigid_true(x))
                .map(&mut id_of)
                .collect();
            let del = a.del.iter().map(&mut id_of).collect();
            pre.sort_unstable();
            pre.dedup();
            compiled.push(CompiledAction {
                source: idx,
                pre,
                neg,
                add,
                del,
            });
        }
        let mut init_ids = Vec::new();
        for x in problem.init() {
            if !rigid_true(x) {
                init_ids.push(id_of(x));
            }
        }
        let n_facts = table.len();
        let words = n_facts.div_ceil(64).max(1);
        let mut init_bits = vec![0u64; words].into_boxed_slice();
        for f in init_ids {
            set(&mut init_bits, f);
        }

        // relaxed reachability prunes actions that can never fire
        let reachable = relaxed_reachable(&compiled, &init_bits, n_facts);
        compiled.retain(|a| a.pre.iter().all(|&p| reachable[p as usize]));

        let mut occurrences = vec![0usize; n_facts];
        for a in &compiled {
            for &p in &a.pre {
                occurrences[p as usize] += 1;
            }
        }
        let mut triggered = vec![Vec::new(); n_facts];
        let mut untriggered = Vec::new();
        let mut pre_of = vec![Vec::new(); n_facts];
        let mut always_applicable = Vec::new();
        for (i, a) in compiled.iter().enumerate() {
            match a.pre.iter().min_by_key(|&&p| occurrences[p as usize]) {
                Some(&t) => triggered[t as usize].push(i as u32),
                None => untriggered.push(i as u32),
            }
            for &p in &a.pre {
                pre_of[p as usize].push(i as u32);
            }
            if a.pre.is_empty() {
                always_applicable.push(i as u32);
            }
        }
        Ok(Some(Task {
            actions: compiled,
            init: init_bits,
            goal,
            n_facts,
            triggered,
            untriggered,
            pre_of,
            always_applicable,
        }))
    }

    fn is_goal(&self, s: &[u64]) -> bool {
        self.goal.iter().all(|&g| get(s, g))
    }

    fn applicable(&self, s: &[u64], out: &mut Vec<u32>) {
        out.clear();
        let mut check = |ai: u32| {
            let a = &self.actions[ai as usize];
            if a.pre.iter().all(|&p| get(s, p)) && a.neg.iter().all(|&p| !get(s, p)) {
                out.push(ai);
            }
        };
        for &ai in &self.untriggered {
            check(ai);
        }
        for (w, &word) in s.iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let b = bits.trailing_zeros();
                bits &= bits - 1;
                let f = w * 64 + b as usize;
                for &ai in &self.triggered[f] {
                    check(ai);
                }
            }
        }
        // lexicographic action order keeps tie-breaking deterministic
        out.sort_unstable();
    }

    fn successor(&self, s: &[u64], ai: u32) -> Bits {
        let a = &self.actions[ai as usize];
        let mut next: Bits = s.into();
        for &d in &a.del {
            clear(&mut next, d);
        }
        for &x in &a.add {
            set(&mut next, x);
        }
        next
    }

    /// Additive heuristic; `None` when the goal is relaxed-unreachable.
    fn h_add(&self, s: &[u64], scratch: &mut HaddScratch) -> Option<u64> {
        if self.goal.is_empty() {
            return Some(0);
        }
        const INF: u64 = u64::MAX;
        let cost = &mut scratch.cost;
        cost.clear();
        cost.resize(self.n_facts, INF);
        let unsat = &mut scratch.unsat;
        unsat.clear();
        unsat.extend(self.actions.iter().map(|a| a.pre.len() as u32));
        let acc = &mut scratch.acc;
        acc.clear();
        acc.resize(self.actions.len(), 0);
        let heap = &mut scratch.heap;
        heap.clear();

        for f in 0..self.n_facts as u32 {
            if get(s, f) {
                cost[f as usize] = 0;
                heap.push(Reverse((0, f)));
            }
        }
        for &ai in &self.always_applicable {
            for &g in &self.actions[ai as usize].add {
                if 1 < cost[g as usize] {
                    cost[g as usize] = 1;
                    heap.push(Reverse((1, g)));
                }
            }
        }
        let is_goal = &mut scratch.is_goal;
        is_goal.clear();
        is_goal.resize(self.n_facts, false);
        for &g in &self.goal {
            is_goal[g as usize] = true;
        }
        let mut goals_left = self.goal.len();
        let mut total = 0u64;
        while let Some(Reverse((c, f))) = heap.pop() {
            if c > cost[f as usize] {
                continue;
            }
            if is_goal[f as usize] {
                is_goal[f as usize] = false;
                total = total.saturating_add(c);
                goals_left -= 1;
                if goals_left == 0 {
                    return Some(total);
                }
            }
            for &ai in &self.pre_of[f as usize] {
                let ai = ai as usize;
                unsat[ai] -= 1;
                acc[ai] = acc[ai].saturating_add(c);
                if unsat[ai] == 0 {
                    let nc = acc[ai].saturating_add(1);
                    for &g in &self.actions[ai].add {
                        if nc < cost[g as usize] {
                            cost[g as usize] = nc;
                            heap.push(Reverse((nc, g)));
                        }
                    }
                }
            }
        }
        None
    }

    fn gbfs(
        &self,
        deadline: Deadline,
        stats: &mut SearchStats,
    ) -> Result<Option<Vec<u32>>, TimedOut> {
        if self.is_goal(&self.init) {
            return Ok(Some(Vec::new()));
        }
        let mut scratch = HaddScratch::default();
        let Some(h0) = self.h_add(&self.init, &mut scratch) else {
            return Ok(None);
        };
        let mut nodes: Vec<Node> = vec![Node {
            parent: u32::MAX,
            action: u32::MAX,
        }];
        let mut states: Vec<Bits> = vec![self.init.clone()];
        let mut seen: HashMap<Bits, u32> = HashMap::new();
        seen.insert(self.init.clone(), 0);
        let mut open = BinaryHeap::new();
        let mut seq = 0u64;
        open.push(Reverse((h0, seq, 0u32)));
        let mut app = Vec::new();
        while let Some(Reverse((_, _, n))) = open.pop() {
            if deadline.expired() {
                return Err(TimedOut);
            }
            stats.expansions += 1;
            let state = states[n as usize].clone();
            self.applicable(&state, &mut app);
            for &ai in &app {
                let next = self.successor(&state, ai);
                if seen.contains_key(&next) {
                    continue;
                }
                stats.generated += 1;
                let id = nodes.len() as u32;
                nodes.push(Node {
                    parent: n,
                    action: ai,
                });
                seen.insert(next.clone(), id);
                if self.is_goal(&next) {
                    return Ok(Some(extract(&nodes, id)));
                }
                if let Some(h) = self.h_add(&next, &mut scratch) {
                    seq += 1;
                    open.push(Reverse((h, seq, id)));
                }
                states.push(next);
            }
        }
        Ok(None)
    }

    fn bfs(
        &self,
        deadline: Deadline,
        stats: &mut SearchStats,
    ) -> Result<Option<Vec<u32>>, TimedOut> {
        if self.is_goal(&self.init) {
            return Ok(Some(Vec::new()));
        }
        let mut nodes = vec![Node {
            parent: u32::MAX,
            action: u32::MAX,
        }];
        let mut states: Vec<Bits> = vec![self.init.clone()];
        let mut seen: HashSet<Bits> = HashSet::new();
        seen.insert(self.init.clone());
        let mut queue = VecDeque::from([0u32]);
        let mut app = Vec::new();
        while let Some(n) = queue.pop_front() {
            if deadline.expired() {
                return Err(TimedOut);
            }
            stats.expansions += 1;
            let state = states[n as usize].clone();
            self.applicable(&state, &mut app);
            for &ai in &app {
                let next = self.successor(&state, ai);
                if !seen.insert(next.clone()) {
                    continue;
                }
                stats.generated += 1;
                let id = nodes.len() as u32;
                nodes.push(Node {
                    parent: n,
                    action: ai,
                });
                if self.is_goal(&next) {
                    return Ok(Some(extract(&nodes, id)));
                }
                states.push(next);
                queue.push_back(id);
            }
        }
        Ok(None)
    }
}

#[derive(Default)]
struct HaddScratch {
    cost: Vec<u64>,
    unsat: Vec<u32>,
    acc: Vec<u64>,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    is_goal: Vec<bool>,
}

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    action: u32,
}

fn extract(nodes: &[Node], mut id: u32) -> Vec<u32> {
    let mut out = Vec::new();
    while nodes[id as usize].parent != u32::MAX {
        out.push(nodes[id as usize].action);
        id = nodes[id as usize].parent;
    }
    out.reverse();
    out
}

fn relaxed_reachable(actions: &[CompiledAction], init: &[u64], n_facts: usize) -> Vec<bool> {
    let mut reached: Vec<bool> = (0..n_facts as u32).map(|f| get(init, f)).collect();
    let mut unsat: Vec<usize> = actions.iter().map(|a| a.pre.len()).collect();
    let mut pre_of = vec![Vec::new(); n_facts];
    for (i, a) in actions.iter().enumerate() {
        for &p in &a.pre {
            pre_of[p as usize].push(i);
        }
    }
    let mut stack: Vec<u32> = (0..n_facts as u32)
        .filter(|&f| reached[f as usize])
        .collect();
    let fire = |i: usize, reached: &mut Vec<bool>, stack: &mut Vec<u32>| {
        for &g in &actions[i].add {
            if !reached[g as usize] {
                reached[g as usize] = true;
                stack.push(g);
            }
        }
    };
    for i in (0..actions.len()).filter(|&i| unsat[i] == 0) {
        fire(i, &mut reached, &mut stack);
    }
    while let Some(f) = stack.pop() {
        for &i in &pre_of[f as usize] {
            unsat[i] -= 1;
            if unsat[i] == 0 {
                fire(i, &mut reached, &mut stack);
            }
        }
    }
    reached
}

fn get(bits: &[u64], f: u32) -> bool {
    bits[(f / 64) as usize] >> (f % 64) & 1 == 1
}

fn set(bits: &mut [u64], f: u32) {
    bits[(f / 64) as usize] |= 1 << (f % 64);
}

fn clear(bits: &mut [u64], f: u32) {
    bits[(f / 64) as usize] &= !(1 << (f % 64));
}
