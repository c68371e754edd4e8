use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Mutex;
use std::time::Duration;

use super::{ObjectScorer, Provenance, ScoreMap, Scored};
use crate::llm::{score_objects, Gateway};
use crate::pddl::{GroundAtom, Problem};

/// Most facts sent with a scoring request.
pub const FACT_CAP: usize = 80;

/// The first `cap` init facts in order of their printed form.
pub fn select_facts(problem: &Problem, cap: usize) -> Vec<GroundAtom> {
    let mut facts: Vec<(String, &GroundAtom)> =
        problem.init().iter().map(|a| (a.to_string(), a)).collect();
    facts.sort_by(|a, b| a.0.cmp(&b.0));
    facts
        .into_iter()
        .take(cap)
        .map(|(_, a)| a.clone())
        .collect()
}

/// Hash of objects, init and goal. The problem name is left out so renamed
/// copies share a cache entry.
pub fn content_key(problem: &Problem) -> u64 {
    let mut h = DefaultHasher::new();
    problem.objects().hash(&mut h);
    problem.init().hash(&mut h);
    problem.goal().hash(&mut h);
    h.finish()
}

/// Scores by asking the model once per distinct problem.
pub struct LlmScorer {
    gateway: Gateway,
    cache: Mutex<HashMap<u64, ScoreMap>>,
}

impl LlmScorer {
    pub fn new(gateway: Gateway) -> Self {
        LlmScorer {
            gateway,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }
}

impl ObjectScorer for LlmScorer {
    fn name(&self) -> &'static str {
        "llm"
    }

    fn score_problem(&self, problem: &Problem) -> Scored {
        let key = content_key(problem);
        if let Some(map) = self.cache.lock().unwrap().get(&key) {
            return Scored {
                map: map.clone(),
                charged: Duration::ZERO,
            };
        }
        let facts = select_facts(problem, FACT_CAP);
        let reply = score_objects(&self.gateway, problem.goal(), problem.objects(), &facts);
        let provenance = if reply.error.is_some() {
            Provenance::Fallback
        } else {
            Provenance::Llm
        };
        let map = ScoreMap::new(reply.scores, provenance);
        self.cache.lock().unwrap().insert(key, map.clone());
        Scored {
            map,
            charged: reply.simulated_latency,
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::llm::{CallKind, MockEntry, MockFixture, MockLlm};
    use crate::mazenamo::{generate, Difficulty, GridSpec};

    #[test]
    fn one_call_per_problem() {
        let mock = Arc::new(MockLlm::always(CallKind::Scoring, r#"{"r1": 0.9}"#));
        let s = LlmScorer::new(Gateway::mock(mock.clone()));
        let p = generate(&GridSpec::square(5, Difficulty::Easy, 1))
            .unwrap()
            .problem;
        let a = s.score_problem(&p);
        let b = s.score_problem(&p.clone().with_name("other"));
        assert_eq!(a.map, b.map);
        assert_eq!(mock.calls(CallKind::Scoring), 1);
        assert_eq!(a.map.get("r1"), Some(0.9));
        assert!(a.map.covers(&p));
        assert_eq!(a.map.provenance(), Provenance::Llm);
    }

    #[test]
    fn failure_is_uniform_fallback() {
        let mock = Arc::new(MockLlm::new(MockFixture::default().with(
            CallKind::Scoring,
            [MockEntry::Error {
                error: "network".into(),
            }],
        )));
        let s = LlmScorer::new(Gateway::mock(mock));
        let p = generate(&GridSpec::square(5, Difficulty::Easy, 2))
            .unwrap()
            .problem;
        let m = s.score_problem(&p).map;
        assert_eq!(m.provenance(), Provenance::Fallback);
        assert!(m.iter().all(|(_, v)| v == 0.5));
        assert_eq!(m.len(), p.objects().len());
    }

    #[test]
    fn facts_are_capped_and_sorted() {
        let p = generate(&GridSpec::square(6, Difficulty::Easy, 3))
            .unwrap()
            .problem;
        let f = select_facts(&p, FACT_CAP);
        assert_eq!(f.len(), FACT_CAP.min(p.init().len()));
        let s: Vec<String> = f.iter().map(|a| a.to_string()).collect();
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
    }
}
