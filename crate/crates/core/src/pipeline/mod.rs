//! The three-step pruned planning loop: score-thresholded search, optional
//! model-guided recovery, relaxed search, then a final search over the
//! complementary closure.

mod budget;
mod steps;

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::Gateway;
use crate::pddl::{Domain, Problem};
use crate::planner::Plan;
use crate::rules::{ComplementaryRule, RelaxationRule};
use crate::scoring::ObjectScorer;

pub use budget::{
    BudgetLedger, Clock, Policy, FEASIBILITY_THRESHOLD, RECOVERY_CAP_FRACTION, T_LLM, T_REPLAN_MIN,
    T_STEP2_MIN,
};
pub use steps::{
    attempt_recovery, step1_pruned_search, step2_relaxation, step3_final, RecoveryAttempt,
    RunState, Step1Result, StepFailure,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// One search on the full problem.
    PureSearch,
    /// Step 1 only, with the whole timeout.
    ScorerOnly,
    ManualRules,
    LlmRules,
    /// Generated rules plus recovery.
    #[default]
    Full,
}

impl Mode {
    pub const ALL: [Mode; 5] = [
        Mode::PureSearch,
        Mode::ScorerOnly,
        Mode::ManualRules,
        Mode::LlmRules,
        Mode::Full,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::PureSearch => "pure-search",
            Mode::ScorerOnly => "scorer-only",
            Mode::ManualRules => "manual-rules",
            Mode::LlmRules => "llm-rules",
            Mode::Full => "full",
        }
    }

    pub fn uses_rules(&self) -> bool {
        matches!(self, Mode::ManualRules | Mode::LlmRules | Mode::Full)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("timeout must be positive, got {0}")]
    Timeout(f64),
    #[error("decay must lie in (0, 1), got {0}")]
    Decay(f64),
    #[error("thresholds must satisfy 0 < q_min < q0 <= 1, got q_min {q_min}, q0 {q0}")]
    Thresholds { q0: f64, q_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Seconds.
    pub timeout: f64,
    pub q0: f64,
    pub gamma: f64,
    pub q_min: f64,
    pub mode: Mode,
    pub policy: Policy,
    pub recovery: bool,
    pub relaxation: Vec<RelaxationRule>,
    pub complementary: Vec<ComplementaryRule>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            timeout: 10.0,
            q0: 0.81,
            gamma: 0.9,
            q_min: 0.01,
            mode: Mode::Full,
            policy: Policy::FeasibilityGated,
            recovery: true,
            relaxation: Vec::new(),
            complementary: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Defaults for `mode`; recovery is on only in full mode.
    pub fn for_mode(mode: Mode, timeout: f64) -> Self {
        PipelineConfig {
            timeout,
            mode,
            recovery: mode == Mode::Full,
            ..Self::default()
        }
    }

    pub fn with_rules(
        mut self,
        relaxation: Vec<RelaxationRule>,
        complementary: Vec<ComplementaryRule>,
    ) -> Self {
        self.relaxation = relaxation;
        self.complementary = complementary;
        self
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.timeout.is_nan() || self.timeout <= 0.0 {
            return Err(ConfigError::Timeout(self.timeout));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(ConfigError::Decay(self.gamma));
        }
        if !(self.q_min > 0.0 && self.q_min < self.q0 && self.q0 <= 1.0) {
            return Err(ConfigError::Thresholds {
                q0: self.q0,
                q_min: self.q_min,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Timeout,
    Unsolvable,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Success => "success",
            Outcome::Timeout => "timeout",
            Outcome::Unsolvable => "unsolvable",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Search,
    Step1,
    Recovery,
    Step2,
    Step3,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Search => "search",
            Stage::Step1 => "step1",
            Stage::Recovery => "recovery",
            Stage::Step2 => "step2",
            Stage::Step3 => "step3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecoveryStatus {
    /// Step 1 succeeded or the mode has no recovery.
    #[default]
    None,
    /// Gate closed; no call made.
    Declined,
    /// Called, but no validated plan came of it.
    Failed,
    Succeeded,
}

impl fmt::Display for RecoveryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecoveryStatus::None => "none",
            RecoveryStatus::Declined => "declined",
            RecoveryStatus::Failed => "failed",
            RecoveryStatus::Succeeded => "succeeded",
        })
    }
}

/// One line of the run trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub problem: String,
    pub step: String,
    /// Seconds since the start of the run.
    pub start: f64,
    pub duration: f64,
    pub outcome: String,
    pub objects: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

/// Seconds spent per step, including charged latency.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub scoring: f64,
    pub step1: f64,
    pub recovery: f64,
    pub step2: f64,
    pub step3: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult {
    pub problem: String,
    pub mode: Mode,
    pub outcome: Outcome,
    /// Present exactly on success; validated on the full problem.
    pub plan: Option<Plan>,
    pub stage: Stage,
    pub recovery: RecoveryStatus,
    pub recovery_calls: u32,
    pub o1: Option<usize>,
    pub o2: Option<usize>,
    pub o3: Option<usize>,
    /// Threshold of every Step-1 iteration, skipped ones included.
    pub thresholds: Vec<f64>,
    /// Searches actually run in Step 1.
    pub searches: u32,
    pub step2_budget: Option<f64>,
    pub timings: Timings,
    pub trace: Vec<TraceRecord>,
}

impl PipelineResult {
    pub fn is_success(&self) -> bool {
        self.outcome == Outcome::Success
    }

    pub fn plan_len(&self) -> Option<usize> {
        self.plan.as_ref().map(Plan::len)
    }

    pub fn write_trace(&self, out: &mut impl Write) -> std::io::Result<()> {
        for r in &self.trace {
            writeln!(
                out,
                "{}",
                serde_json::to_string(r).expect("trace record serializes")
            )?;
        }
        Ok(())
    }
}

/// Everything a run needs besides the problem.
pub struct Pipeline<'a> {
    pub domain: &'a Domain,
    pub config: &'a PipelineConfig,
    pub scorer: &'a dyn ObjectScorer,
    /// Used for recovery; without it recovery is skipped.
    pub gateway: Option<&'a Gateway>,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        domain: &'a Domain,
        config: &'a PipelineConfig,
        scorer: &'a dyn ObjectScorer,
    ) -> Self {
        Pipeline {
            domain,
            config,
            scorer,
            gateway: None,
        }
    }

    pub fn with_gateway(mut self, gateway: &'a Gateway) -> Self {
        self.gateway = Some(gateway);
        self
    }

    pub fn run(&self, problem: &Problem) -> PipelineResult {
        steps::run(self, problem)
    }
}

/// Objects mentioned by the actions of `plan`.
pub fn plan_objects(plan: &Plan) -> BTreeSet<String> {
    plan.actions
        .iter()
        .flat_map(|a| a.args.iter().cloned())
        .collect()
}
