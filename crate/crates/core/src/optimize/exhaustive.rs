//! Exhaustive search with branch-and-bound pruning.

use crate::budget::EvalBudget;
use crate::cost::Cost;
use crate::graph::{EdgeId, TensorNetwork};
use crate::sequence::ContractionSequence;

use super::{OptimizeError, OptimizerResult, TracePoint};

/// Largest edge count accepted without an explicit override. Beyond this,
/// E! enumeration is hopeless even with pruning.
pub const EXHAUSTIVE_EDGE_GUARD: usize = 16;

#[derive(Debug, Clone, Copy, Default)]
pub struct ExhaustiveConfig {
    /// Search even when the network exceeds [`EXHAUSTIVE_EDGE_GUARD`] edges.
    pub force: bool,
}

/// Finds the global minimum cost sequence by depth-first enumeration.
///
/// Candidate edges are tried in ascending id order at every depth, so the
/// result is deterministic. A partial sequence is pruned as soon as its
/// accumulated cost reaches the best complete cost found so far; since every
/// step costs at least 1, no pruned branch can hold an improvement. Every
/// computed step cost counts against the budget.
pub fn exhaustive_search(net: &TensorNetwork, budget: &mut EvalBudget) -> Result<OptimizerResult, OptimizeError> {
    exhaustive_search_with(net, &ExhaustiveConfig::default(), budget)
}

pub fn exhaustive_search_with(
    net: &TensorNetwork,
    config: &ExhaustiveConfig,
    budget: &mut EvalBudget,
) -> Result<OptimizerResult, OptimizeError> {
    let edges = net.edge_count();
    if edges == 0 {
        return Err(OptimizeError::TooFewEdges { needed: 1, got: 0 });
    }
    if edges > EXHAUSTIVE_EDGE_GUARD && !config.force {
        return Err(OptimizeError::TooManyEdges {
            edges,
            guard: EXHAUSTIVE_EDGE_GUARD,
        });
    }
    let mut search = Search {
        budget,
        best: None,
        trace: Vec::new(),
        path: Vec::with_capacity(edges),
    };
    let remaining = net.edge_ids();
    search.descend(net, &remaining, Cost::zero())?;
    let (best_cost, best_sequence) = search.best.expect("at least one complete sequence");
    Ok(OptimizerResult {
        best_sequence: ContractionSequence::new(best_sequence),
        best_cost,
        trace: search.trace,
        evaluations: search.budget.report(),
    })
}

struct Search<'a> {
    budget: &'a mut EvalBudget,
    best: Option<(Cost, Vec<EdgeId>)>,
    trace: Vec<TracePoint>,
    path: Vec<EdgeId>,
}

impl Search<'_> {
    fn descend(
        &mut self,
        state: &TensorNetwork,
        remaining: &[EdgeId],
        accumulated: Cost,
    ) -> Result<(), OptimizeError> {
        if remaining.is_empty() {
            // Children are only descended into when strictly below the best,
            // so reaching full depth always improves.
            self.best = Some((accumulated.clone(), self.path.clone()));
            self.trace.push(TracePoint {
                full_evaluations: self.budget.full_evaluations(),
                best_cost: accumulated,
            });
            return Ok(());
        }
        for (i, &e) in remaining.iter().enumerate() {
            let step = state.step_cost(e)?;
            self.budget.record_steps(1);
            let child_cost = accumulated.clone() + step;
            if let Some((best, _)) = &self.best {
                if &child_cost >= best {
                    continue;
                }
            }
            let mut child = state.clone();
            child.apply_contraction(e)?;
            let mut child_remaining = Vec::with_capacity(remaining.len() - 1);
            child_remaining.extend_from_slice(&remaining[..i]);
            child_remaining.extend_from_slice(&remaining[i + 1..]);
            self.path.push(e);
            self.descend(&child, &child_remaining, child_cost)?;
            self.path.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexId;
    use crate::sequence::{evaluate_sequence, validate_sequence};

    #[test]
    fn finds_the_cheap_order_on_the_three_tensor_example() {
        let mut net = TensorNetwork::new();
        for v in 0..3 {
            net.add_vertex(VertexId(v));
        }
        net.add_edge(VertexId(0), VertexId(1), 2).unwrap();
        net.add_edge(VertexId(0), VertexId(2), 2).unwrap();
        net.add_open_leg(VertexId(0), 2).unwrap();
        net.add_open_leg(VertexId(0), 2).unwrap();
        net.add_open_leg(VertexId(2), 2).unwrap();
        net.add_open_leg(VertexId(2), 2).unwrap();
        let mut budget = EvalBudget::new(2);
        let result = exhaustive_search(&net, &mut budget).unwrap();
        assert_eq!(result.best_cost, Cost::from(48));
        assert_eq!(result.best_sequence.order, vec![EdgeId(0), EdgeId(1)]);
        assert!(budget.step_computations() > 0);
    }

    #[test]
    fn four_cycle_optimum_is_twenty_two() {
        let mut net = TensorNetwork::new();
        for v in 0..4 {
            net.add_vertex(VertexId(v));
        }
        net.add_edge(VertexId(0), VertexId(1), 2).unwrap();
        net.add_edge(VertexId(1), VertexId(2), 2).unwrap();
        net.add_edge(VertexId(2), VertexId(3), 2).unwrap();
        net.add_edge(VertexId(3), VertexId(0), 2).unwrap();
        let mut budget = EvalBudget::new(4);
        let result = exhaustive_search(&net, &mut budget).unwrap();
        assert_eq!(result.best_cost, Cost::from(22));
        let mut check = EvalBudget::new(4);
        let (total, _) = evaluate_sequence(&net, &result.best_sequence, &mut check).unwrap();
        assert_eq!(total, result.best_cost);
    }

    #[test]
    fn guard_refuses_large_networks_unless_forced() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 4, chi: 2 }).unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        let err = exhaustive_search(&net, &mut budget).unwrap_err();
        assert!(matches!(err, OptimizeError::TooManyEdges { edges: 24, guard: 16 }));
    }

    #[test]
    fn trace_is_non_increasing_and_result_valid() {
        let net = crate::generators::erdos_renyi(&crate::generators::ErdosRenyiSpec {
            vertices: 5,
            edge_probability: 0.9,
            chi: 3,
            seed: 7,
        })
        .unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        let result = exhaustive_search(&net, &mut budget).unwrap();
        validate_sequence(&net, &result.best_sequence).unwrap();
        for pair in result.trace.windows(2) {
            assert!(pair[1].best_cost < pair[0].best_cost);
            assert!(pair[1].full_evaluations >= pair[0].full_evaluations);
        }
        assert_eq!(result.trace.last().unwrap().best_cost, result.best_cost);
    }
}
