//! Contraction sequence optimizers.
//!
//! Four search strategies over the E! orderings of a network's edges:
//! exhaustive branch-and-bound (exact, small E only), k-step greedy,
//! a genetic algorithm over permutations, and generalized simulated
//! annealing over random keys with a transposition hill climb. All consume
//! budget in step-computation units through [`EvalBudget`]
//! and are bit-reproducible given a seed.

mod exhaustive;
mod ga;
mod greedy;
mod sa;

pub use exhaustive::{exhaustive_search, exhaustive_search_with, ExhaustiveConfig, EXHAUSTIVE_EDGE_GUARD};
pub use ga::{fitness, ga_run, GaConfig};
pub use greedy::{greedy_search, GreedyConfig};
pub use sa::{local_search, sa_run, SaConfig};

pub(crate) use ga::ga_run_with_stop;
pub(crate) use sa::sa_run_with_stop;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{BudgetReport, EvalBudget};
use crate::cost::Cost;
use crate::graph::GraphError;
use crate::sequence::{ContractionSequence, DecodeKeysError, EvaluateError};

/// Best cost known after spending a given amount of budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub full_evaluations: f64,
    pub best_cost: Cost,
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerResult {
    pub best_sequence: ContractionSequence,
    pub best_cost: Cost,
    /// Best-so-far improvements in budget order; non-increasing in cost.
    pub trace: Vec<TracePoint>,
    pub evaluations: BudgetReport,
}

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("network has {edges} edges, above the exhaustive guard of {guard}; pass force to override")]
    TooManyEdges { edges: usize, guard: usize },
    #[error("network needs at least {needed} edges for this optimizer, got {got}")]
    TooFewEdges { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    DecodeKeys(#[from] DecodeKeysError),
}

/// Caller-supplied stop predicate over spent budget and current best cost.
pub(crate) type StopPredicate<'a> = &'a mut dyn FnMut(&EvalBudget, Option<&Cost>) -> bool;

/// Stop condition shared by the stochastic optimizers: the step budget,
/// plus an optional caller-supplied predicate over spent budget and current
/// best (used by the time-remaining harness rule). Checked before every
/// full-sequence evaluation.
pub(crate) struct StopRule<'a> {
    pub limit_steps: u64,
    pub extra: Option<StopPredicate<'a>>,
}

impl<'a> StopRule<'a> {
    pub fn budget_only(limit_steps: u64) -> Self {
        StopRule {
            limit_steps,
            extra: None,
        }
    }

    pub fn should_stop(&mut self, budget: &EvalBudget, best: Option<&Cost>) -> bool {
        if budget.step_computations() >= self.limit_steps {
            return true;
        }
        match &mut self.extra {
            Some(f) => f(budget, best),
            None => false,
        }
    }
}
