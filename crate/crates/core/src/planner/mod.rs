//! Grounded forward state-space search with wall-clock deadlines and an
//! independent plan validator.

mod ground;
mod search;
mod validate;

use std::fmt;
use std::time::{Duration, Instant};

use crate::pddl::GroundAtom;

pub use ground::{ground, ground_until};
pub use search::{search, search_with, SearchMode};
pub use validate::{
    instantiate, parse_plan, validate, PlanFailure, PlanFailureKind, PlanParseError,
};

/// A fully instantiated action.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub pre_pos: Vec<GroundAtom>,
    pub pre_neg: Vec<GroundAtom>,
    pub add: Vec<GroundAtom>,
    pub del: Vec<GroundAtom>,
}

impl GroundAction {
    pub fn objects(&self) -> impl Iterator<Item = &str> {
        self.args.iter().map(String::as_str)
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expansions: u64,
    pub generated: u64,
    pub ground_actions: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub actions: Vec<GroundAction>,
    pub stats: SearchStats,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// One `(action arg ...)` per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for a in &self.actions {
            s.push_str(&a.to_string());
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Solved(Plan),
    Timeout { stats: SearchStats },
    Unsolvable { stats: SearchStats },
}

impl SearchOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SearchOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn into_plan(self) -> Option<Plan> {
        match self {
            SearchOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }

    pub fn stats(&self) -> SearchStats {
        match self {
            SearchOutcome::Solved(p) => p.stats,
            SearchOutcome::Timeout { stats } | SearchOutcome::Unsolvable { stats } => *stats,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SearchOutcome::Solved(_) => "solved",
            SearchOutcome::Timeout { .. } => "timeout",
            SearchOutcome::Unsolvable { .. } => "unsolvable",
        }
    }
}

/// Absolute wall-clock limit on a monotonic clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Deadline {
    at: Instant,
}

impl Deadline {
    pub fn at(at: Instant) -> Self {
        Deadline { at }
    }

    pub fn after(budget: Duration) -> Self {
        Deadline {
            at: Instant::now() + budget,
        }
    }

    pub fn after_secs(secs: f64) -> Self {
        Self::after(Duration::from_secs_f64(secs.max(0.0)))
    }

    pub fn instant(&self) -> Instant {
        self.at
    }

    pub fn remaining(&self) -> Duration {
        self.at.saturating_duration_since(Instant::now())
    }

    pub fn expired(&self) -> bool {
        Instant::now() >= self.at
    }

    /// The earlier of two deadlines.
    pub fn min(self, other: Deadline) -> Deadline {
        if self.at <= other.at {
            self
        } else {
            other
        }
    }
}
