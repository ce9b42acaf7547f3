//! Greedy search with k-step lookahead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::EvalBudget;
use crate::cost::Cost;
use crate::graph::{EdgeId, TensorNetwork};
use crate::sequence::ContractionSequence;

use super::{OptimizeError, OptimizerResult, TracePoint};

#[derive(Debug, Clone, Copy)]
pub struct GreedyConfig {
    /// Lookahead depth k: candidates are all orderings of the next
    /// min(k, remaining) contractions.
    pub lookahead: usize,
    /// Seed for uniform tie-breaking between minimum-score candidates.
    pub seed: u64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig { lookahead: 2, seed: 0 }
    }
}

/// Greedy contraction ordering.
///
/// Each round enumerates every length-min(k, remaining) candidate sequence
/// from the current state (depth-first, ascending edge id at every level),
/// scores each candidate by the sum of its step costs, picks uniformly among
/// the minimum-score candidates with the seeded RNG, and commits only the
/// picked candidate's first edge. Step costs shared by candidates with a
/// common prefix are computed once per round; nothing is cached across
/// rounds. With k = 1 the budget spent is exactly E(E+1)/2 steps.
pub fn greedy_search(
    net: &TensorNetwork,
    config: &GreedyConfig,
    budget: &mut EvalBudget,
) -> Result<OptimizerResult, OptimizeError> {
    if config.lookahead < 1 {
        return Err(OptimizeError::InvalidConfig(
            "greedy lookahead must be at least 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = net.clone();
    let mut committed: Vec<EdgeId> = Vec::with_capacity(net.edge_count());
    let mut total = Cost::zero();
    while state.edge_count() > 0 {
        let depth = config.lookahead.min(state.edge_count());
        let mut round = Round {
            budget,
            best_score: None,
            mins: Vec::new(),
            current_first: None,
        };
        round.root(&state, depth)?;
        let (edge, first_cost) = round.mins[rng.random_range(0..round.mins.len())].clone();
        state.apply_contraction(edge)?;
        committed.push(edge);
        total += first_cost;
    }
    Ok(OptimizerResult {
        best_sequence: ContractionSequence::new(committed),
        best_cost: total.clone(),
        trace: vec![TracePoint {
            full_evaluations: budget.full_evaluations(),
            best_cost: total,
        }],
        evaluations: budget.report(),
    })
}

/// One lookahead round: enumerates candidates and tracks the minimum score
/// together with the (first edge, first step cost) of every candidate that
/// attains it, in enumeration order.
struct Round<'a> {
    budget: &'a mut EvalBudget,
    best_score: Option<Cost>,
    mins: Vec<(EdgeId, Cost)>,
    current_first: Option<(EdgeId, Cost)>,
}

impl Round<'_> {
    fn root(&mut self, state: &TensorNetwork, depth: usize) -> Result<(), OptimizeError> {
        for e in state.edge_ids() {
            let first_cost = state.step_cost(e)?;
            self.budget.record_steps(1);
            self.current_first = Some((e, first_cost.clone()));
            if depth == 1 {
                self.offer(first_cost);
            } else {
                let mut child = state.clone();
                child.apply_contraction(e)?;
                self.suffix(&child, depth - 1, first_cost)?;
            }
        }
        Ok(())
    }

    fn suffix(&mut self, state: &TensorNetwork, depth_left: usize, accumulated: Cost) -> Result<(), OptimizeError> {
        for e in state.edge_ids() {
            let step = state.step_cost(e)?;
            self.budget.record_steps(1);
            let score = accumulated.clone() + step;
            if depth_left == 1 {
                self.offer(score);
            } else {
                let mut child = state.clone();
                child.apply_contraction(e)?;
                self.suffix(&child, depth_left - 1, score)?;
            }
        }
        Ok(())
    }

    fn offer(&mut self, score: Cost) {
        let first = self.current_first.clone().expect("set before descending");
        match &self.best_score {
            Some(best) if score > *best => {}
            Some(best) if score == *best => self.mins.push(first),
            _ => {
                self.best_score = Some(score);
                self.mins.clear();
                self.mins.push(first);
            }
        }
    }
}
