//! Worst-case Step-2 budgets of the three recovery policies for a range of
//! timeouts and model latencies.

use pruneplan::pipeline::{BudgetLedger, Policy, FEASIBILITY_THRESHOLD};

fn main() {
    println!("threshold {FEASIBILITY_THRESHOLD} s");
    println!(
        "{:<24} {:>5} {:>7} {:>6} {:>7}",
        "policy", "T", "latency", "call", "step2"
    );
    for policy in Policy::ALL {
        for total in [30.0, 40.0, 60.0] {
            let ledger = BudgetLedger::new(total, policy);
            for latency in [1.0, 5.0, 8.0] {
                let (budget, called) = ledger.worst_case_step2(ledger.step1_end(), latency);
                println!(
                    "{:<24} {total:>5} {latency:>7} {called:>6} {budget:>7.2}",
                    policy.as_str()
                );
            }
        }
    }
}
