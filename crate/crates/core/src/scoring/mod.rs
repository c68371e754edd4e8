//! Object importance scores for incremental object inclusion.

mod baseline;
mod llm;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::pddl::Problem;

pub use baseline::{baseline_score, BaselineScorer, CELL_DECAY, CORRIDOR_SCORE, FLOOR};
pub use llm::{content_key, select_facts, LlmScorer, FACT_CAP};

/// Scores plus any latency the caller should charge to its clock.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub map: ScoreMap,
    pub charged: Duration,
}

/// Common interface of the object scorers.
pub trait ObjectScorer: Send + Sync {
    fn name(&self) -> &'static str;

    fn score_problem(&self, problem: &Problem) -> Scored;

    fn score_object(&self, object: &str, problem: &Problem) -> f64 {
        self.score_problem(problem).map.get(object).unwrap_or(FLOOR)
    }

    /// Neither scorer learns anything.
    fn train(&mut self, _dataset: &[Problem]) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Baseline,
    Llm,
    Fallback,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Baseline => "baseline",
            Provenance::Llm => "llm",
            Provenance::Fallback => "fallback",
        })
    }
}

/// Scores in `[0, 1]` for every object of one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMap {
    scores: BTreeMap<String, f64>,
    provenance: Provenance,
}

impl ScoreMap {
    /// Values are clamped into `[0, 1]`; NaN becomes 0.5.
    pub fn new(scores: BTreeMap<String, f64>, provenance: Provenance) -> Self {
        let scores = scores
            .into_iter()
            .map(|(k, v)| (k, if v.is_nan() { 0.5 } else { v.clamp(0.0, 1.0) }))
            .collect();
        ScoreMap { scores, provenance }
    }

    /// Every object of `problem` at `value`.
    pub fn uniform(problem: &Problem, value: f64, provenance: Provenance) -> Self {
        Self::new(
            problem
                .objects()
                .keys()
                .map(|o| (o.clone(), value))
                .collect(),
            provenance,
        )
    }

    pub fn get(&self, object: &str) -> Option<f64> {
        self.scores.get(object).copied()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.scores.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// True when every object of `problem` has a score.
    pub fn covers(&self, problem: &Problem) -> bool {
        problem
            .objects()
            .keys()
            .all(|o| self.scores.contains_key(o))
    }

    /// `object,score,provenance` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("object,score,provenance\n");
        for (o, v) in &self.scores {
            s.push_str(&format!("{o},{v:.4},{}\n", self.provenance));
        }
        s
    }
}
