use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::Duration;

use super::{ObjectScorer, Provenance, ScoreMap, Scored};
use crate::pddl::Problem;

pub const FLOOR: f64 = 0.05;
pub const CORRIDOR_SCORE: f64 = 0.9;
pub const CELL_DECAY: f64 = 0.75;

const ADJACENCY: [&str; 4] = ["upto", "downto", "leftto", "rightto"];

/// Deterministic corridor scorer.
///
/// Goal objects score 1. A cell scores `0.9 * 0.75^d` where `d` is its grid
/// distance to the nearest cell lying on some shortest robot-goal path. An
/// obstacle takes the score of its cell, a stacked box that of the box
/// below. Everything else gets the floor.
pub fn baseline_score(problem: &Problem) -> ScoreMap {
    let mut scores: BTreeMap<String, f64> = problem
        .objects()
        .keys()
        .map(|o| (o.clone(), FLOOR))
        .collect();

    let mut adj: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut robot_at = None;
    let mut obstacle_at: Vec<(&str, &str)> = Vec::new();
    let mut upon: Vec<(&str, &str)> = Vec::new();
    for a in problem.init() {
        match (a.predicate.as_str(), a.args.as_slice()) {
            (p, [x, y]) if ADJACENCY.contains(&p) => {
                adj.entry(x.as_str()).or_default().push(y.as_str());
                adj.entry(y.as_str()).or_default().push(x.as_str());
            }
            ("rat", [_, p]) => robot_at = Some(p.as_str()),
            ("oat", [o, p]) => obstacle_at.push((o.as_str(), p.as_str())),
            ("upon", [top, bottom]) => upon.push((top.as_str(), bottom.as_str())),
            _ => {}
        }
    }
    for v in adj.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    let goal_cell = problem
        .goal()
        .iter()
        .find(|a| a.predicate == "rat" && a.args.len() == 2)
        .map(|a| a.args[1].as_str());

    if let (Some(r), Some(g)) = (robot_at, goal_cell) {
        let from_r = bfs(&adj, &[r]);
        let from_g = bfs(&adj, &[g]);
        if let Some(&total) = from_r.get(g) {
            let corridor: Vec<&str> = from_r
                .iter()
                .filter(|(c, &d)| from_g.get(*c).is_some_and(|&e| d + e == total))
                .map(|(c, _)| *c)
                .collect();
            for (cell, d) in bfs(&adj, &corridor) {
                if let Some(s) = scores.get_mut(cell) {
                    *s = (CORRIDOR_SCORE * CELL_DECAY.powi(d as i32)).max(FLOOR);
                }
            }
        }
    }
    let goal_objects = problem.goal_objects();
    for g in &goal_objects {
        scores.insert(g.clone(), 1.0);
    }
    for (o, p) in &obstacle_at {
        let s = scores.get(*p).copied().unwrap_or(FLOOR);
        scores.insert(o.to_string(), s);
    }
    // a stack can be several boxes high; walk down to the box on the floor
    let below: HashMap<&str, &str> = upon.iter().copied().collect();
    for (top, _) in &upon {
        let mut cur = *top;
        let mut seen = BTreeSet::new();
        while let Some(&b) = below.get(cur) {
            if !seen.insert(cur) {
                break;
            }
            cur = b;
        }
        let s = scores.get(cur).copied().unwrap_or(FLOOR);
        scores.insert(top.to_string(), s);
    }
    for g in goal_objects {
        scores.insert(g, 1.0);
    }
    scores.retain(|k, _| problem.objects().contains_key(k));
    ScoreMap::new(scores, Provenance::Baseline)
}

fn bfs<'a>(adj: &HashMap<&'a str, Vec<&'a str>>, sources: &[&'a str]) -> HashMap<&'a str, usize> {
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    for &s in sources {
        dist.insert(s, 0);
        queue.push_back(s);
    }
    while let Some(c) = queue.pop_front() {
        let d = dist[c];
        for &n in adj.get(c).map(Vec::as_slice).unwrap_or(&[]) {
            if !dist.contains_key(n) {
                dist.insert(n, d + 1);
                queue.push_back(n);
            }
        }
    }
    dist
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BaselineScorer;

impl ObjectScorer for BaselineScorer {
    fn name(&self) -> &'static str {
        "baseline"
    }

    fn score_problem(&self, problem: &Problem) -> Scored {
        Scored {
            map: baseline_score(problem),
            charged: Duration::ZERO,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mazenamo::author_domain;
    use crate::pddl::parse_problem;

    #[test]
    fn line_of_cells() {
        let p = parse_problem(
            "(define (problem t) (:domain mazenamo)
               (:objects r1 - robot a b c d - position o1 o2 o3 - obstacle)
               (:init (rat r1 a) (rightto a b) (leftto b a) (upto b c) (downto c b) (upto c d)
                      (oat o1 b) (oat o2 d) (upon o3 o2))
               (:goal (rat r1 b)))",
            &author_domain(),
        )
        .unwrap();
        let s = baseline_score(&p);
        assert_eq!(s.get("b"), Some(1.0));
        assert_eq!(s.get("r1"), Some(1.0));
        assert_eq!(s.get("a"), Some(0.9));
        let close = |o: &str, v: f64| (s.get(o).unwrap() - v).abs() < 1e-12;
        assert!(close("c", 0.9 * 0.75));
        assert!(close("d", 0.9 * 0.75 * 0.75));
        assert_eq!(s.get("o1"), Some(1.0));
        assert_eq!(s.get("o3"), s.get("d"));
        assert!(s.covers(&p));
    }

    #[test]
    fn no_positions_means_floor() {
        let p = parse_problem(
            "(define (problem t) (:domain mazenamo) (:objects r1 - robot o1 - obstacle p1 - position)
               (:init (islight o1)) (:goal (rat r1 p1)))",
            &author_domain(),
        )
        .unwrap();
        let s = baseline_score(&p);
        assert_eq!(s.get("o1"), Some(FLOOR));
        assert_eq!(s.get("p1"), Some(1.0));
    }
}
