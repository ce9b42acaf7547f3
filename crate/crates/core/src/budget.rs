//! Evaluation budget accounting.
//!
//! The unit of account is one step-cost computation. One full evaluation of
//! a length-E sequence costs E steps, so budgets expressed in full
//! evaluations convert exactly to integer step counts and algorithms with
//! different evaluation granularity (greedy lookahead vs. whole-sequence
//! objectives) can be compared fairly.

use serde::{Deserialize, Serialize};

/// Counts step-cost computations for one optimizer run.
///
/// The counter only ever increases. The edge count of the network being
/// optimized fixes the steps-per-full-evaluation conversion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalBudget {
    step_computations: u64,
    edge_count: usize,
}

impl EvalBudget {
    pub fn new(edge_count: usize) -> Self {
        EvalBudget {
            step_computations: 0,
            edge_count,
        }
    }

    pub fn record_steps(&mut self, n: u64) {
        self.step_computations += n;
    }

    pub fn step_computations(&self) -> u64 {
        self.step_computations
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Budget spent in units of full sequence evaluations.
    pub fn full_evaluations(&self) -> f64 {
        if self.edge_count == 0 {
            return 0.0;
        }
        self.step_computations as f64 / self.edge_count as f64
    }

    pub fn report(&self) -> BudgetReport {
        BudgetReport {
            step_computations: self.step_computations,
            full_evaluations: self.full_evaluations(),
        }
    }
}

/// Serializable snapshot of spent budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub step_computations: u64,
    pub full_evaluations: f64,
}

/// Converts a budget in full evaluations to integer step units.
///
/// Floored at one step so an optimizer always gets to evaluate something;
/// non-finite budgets mean "unlimited".
pub fn step_limit(max_full_evaluations: f64, edge_count: usize) -> u64 {
    if !max_full_evaluations.is_finite() {
        return u64::MAX;
    }
    let steps = (max_full_evaluations * edge_count as f64).round();
    if steps <= 1.0 {
        1
    } else if steps >= u64::MAX as f64 {
        u64::MAX
    } else {
        steps as u64
    }
}
