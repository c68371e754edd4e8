use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::planner::Deadline;

/// Latency reserved for one recovery call, seconds.
pub const T_LLM: f64 = 5.0;
/// Smallest recovery replan worth starting.
pub const T_REPLAN_MIN: f64 = 1.0;
/// Step 2 never gets less than this under the gated policy.
pub const T_STEP2_MIN: f64 = 5.0;
/// Time that must remain before the Step-2 deadline for a recovery call.
pub const FEASIBILITY_THRESHOLD: f64 = T_LLM + T_REPLAN_MIN + T_STEP2_MIN;
/// Recovery replan cap as a fraction of the total timeout.
pub const RECOVERY_CAP_FRACTION: f64 = 0.15;

/// How recovery shares the time before the Step-2 deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Replan may run up to the Step-2 deadline.
    SharedBudget,
    /// Replan capped, call latency not reserved.
    CappedLatencyUnaware,
    /// Call only when latency, a minimal replan and Step 2 all fit.
    #[default]
    FeasibilityGated,
}

impl Policy {
    pub const ALL: [Policy; 3] = [
        Policy::SharedBudget,
        Policy::CappedLatencyUnaware,
        Policy::FeasibilityGated,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::SharedBudget => "shared-budget",
            Policy::CappedLatencyUnaware => "capped-latency-unaware",
            Policy::FeasibilityGated => "feasibility-gated",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shared-budget" | "I" | "1" => Ok(Policy::SharedBudget),
            "capped-latency-unaware" | "II" | "2" => Ok(Policy::CappedLatencyUnaware),
            "feasibility-gated" | "III" | "3" => Ok(Policy::FeasibilityGated),
            _ => Err(format!("unknown policy {s:?}")),
        }
    }
}

/// Budget arithmetic for one run. All times are seconds since the start of
/// the run; nothing here reads a clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetLedger {
    pub total: f64,
    pub policy: Policy,
}

impl BudgetLedger {
    pub fn new(total: f64, policy: Policy) -> Self {
        BudgetLedger { total, policy }
    }

    /// End of the Step-1 loop.
    pub fn step1_end(&self) -> f64 {
        self.total / 6.0
    }

    pub fn step2_deadline(&self) -> f64 {
        self.total / 2.0
    }

    pub fn recovery_cap(&self) -> f64 {
        RECOVERY_CAP_FRACTION * self.total
    }

    /// Whether a recovery call may be issued at `now`.
    pub fn gate(&self, now: f64) -> bool {
        match self.policy {
            Policy::FeasibilityGated => self.step2_deadline() - now >= FEASIBILITY_THRESHOLD,
            Policy::SharedBudget | Policy::CappedLatencyUnaware => true,
        }
    }

    /// Replan budget for a call issued at `before` that returned at `after`.
    pub fn replan_budget(&self, before: f64, after: f64) -> f64 {
        let deadline = self.step2_deadline();
        let b = match self.policy {
            Policy::FeasibilityGated => self.recovery_cap().min(deadline - after - T_STEP2_MIN),
            Policy::CappedLatencyUnaware => self.recovery_cap().min(deadline - before),
            Policy::SharedBudget => deadline - after,
        };
        b.max(0.0)
    }

    /// Search budget of the relaxed problem when Step 2 starts at `now`.
    pub fn step2_budget(&self, now: f64) -> f64 {
        let to_deadline = self.step2_deadline() - now;
        match self.policy {
            Policy::FeasibilityGated => to_deadline.max(T_STEP2_MIN).min(self.total - now).max(0.0),
            Policy::SharedBudget | Policy::CappedLatencyUnaware => to_deadline.max(0.0),
        }
    }

    /// Worst-case timeline: Step 1 ends at `step1_end`, the call takes
    /// `latency` and a replan uses its whole budget. Returns the Step-2
    /// budget and whether the call was made.
    pub fn worst_case_step2(&self, step1_end: f64, latency: f64) -> (f64, bool) {
        if !self.gate(step1_end) {
            return (self.step2_budget(step1_end), false);
        }
        let after = step1_end + latency;
        let replan = self.replan_budget(step1_end, after);
        let replan = if replan >= T_REPLAN_MIN || self.policy != Policy::FeasibilityGated {
            replan
        } else {
            0.0
        };
        (self.step2_budget(after + replan), true)
    }
}

/// Run clock: wall time since the start plus charged simulated latency.
#[derive(Debug, Clone)]
pub struct Clock {
    start: Instant,
    charged: Duration,
}

impl Clock {
    pub fn start() -> Self {
        Clock {
            start: Instant::now(),
            charged: Duration::ZERO,
        }
    }

    pub fn elapsed(&self) -> f64 {
        (self.start.elapsed() + self.charged).as_secs_f64()
    }

    pub fn charge(&mut self, d: Duration) {
        self.charged += d;
    }

    pub fn charged(&self) -> Duration {
        self.charged
    }

    /// The wall instant at which `elapsed()` reaches `t`.
    pub fn deadline_at(&self, t: f64) -> Deadline {
        let t = Duration::from_secs_f64(t.max(0.0));
        Deadline::at(self.start + t.saturating_sub(self.charged))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_sum_of_reserves() {
        assert_eq!(T_LLM, 5.0);
        assert_eq!(T_REPLAN_MIN, 1.0);
        assert_eq!(T_STEP2_MIN, 5.0);
        assert_eq!(FEASIBILITY_THRESHOLD, 11.0);
    }

    #[test]
    fn gate_at_30_and_40() {
        let l30 = BudgetLedger::new(30.0, Policy::FeasibilityGated);
        let l40 = BudgetLedger::new(40.0, Policy::FeasibilityGated);
        assert_eq!(l30.step2_deadline() - 5.0, 10.0);
        assert!(!l30.gate(5.0));
        assert!(l40.gate(5.0));
        assert!(BudgetLedger::new(30.0, Policy::CappedLatencyUnaware).gate(5.0));
    }

    #[test]
    fn replan_windows() {
        // T = 40, call from 5 s to 9 s: min(6, 20 - 9 - 5) = 6
        let l = BudgetLedger::new(40.0, Policy::FeasibilityGated);
        assert!((l.replan_budget(5.0, 9.0) - 6.0).abs() < 1e-9);
        assert!((l.replan_budget(5.0, 12.0) - 3.0).abs() < 1e-9);
        let l = BudgetLedger::new(30.0, Policy::CappedLatencyUnaware);
        assert!((l.replan_budget(5.0, 10.0) - 4.5).abs() < 1e-9);
    }

    #[test]
    fn policy_two_starves_step_two() {
        let l = BudgetLedger::new(30.0, Policy::CappedLatencyUnaware);
        let (b, called) = l.worst_case_step2(5.0, 5.0);
        assert!(called);
        assert!((b - 0.5).abs() < 1e-9);
    }

    #[test]
    fn clock_charges_move_deadlines() {
        let mut c = Clock::start();
        c.charge(Duration::from_secs(3));
        assert!(c.elapsed() >= 3.0);
        assert!(c.deadline_at(2.0).expired());
        assert!(!c.deadline_at(60.0).expired());
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.to_string().parse::<Policy>().unwrap(), p);
        }
    }
}
