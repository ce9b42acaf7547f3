//! Contraction sequences: full orderings of a network's internal edges.
//!
//! A sequence is valid for a network exactly when it is a permutation of the
//! network's edge ids. Evaluation replays the sequence against a scratch
//! copy of the network, accumulating exact step costs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::EvalBudget;
use crate::cost::Cost;
use crate::graph::{EdgeId, GraphError, TensorNetwork, VertexId};

/// An ordering of edge contractions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractionSequence {
    pub order: Vec<EdgeId>,
}

impl ContractionSequence {
    pub fn new(order: Vec<EdgeId>) -> Self {
        ContractionSequence { order }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.order.iter().copied()
    }

    /// Copy with positions `i` and `i + 1` exchanged.
    pub fn swapped_adjacent(&self, i: usize) -> Self {
        let mut order = self.order.clone();
        order.swap(i, i + 1);
        ContractionSequence { order }
    }
}

/// Why a sequence is not a permutation of a network's edges.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequenceViolation {
    #[error("sequence contains edge {0} twice")]
    DuplicateEdge(EdgeId),
    #[error("sequence names edge {0} which is not in the network")]
    UnknownEdge(EdgeId),
    #[error("sequence is missing edge {0}")]
    MissingEdge(EdgeId),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvaluateError {
    #[error("invalid sequence: {0}")]
    Invalid(#[from] SequenceViolation),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Checks that `seq` is a permutation of the network's edge ids, naming the
/// first offending edge otherwise.
pub fn validate_sequence(net: &TensorNetwork, seq: &ContractionSequence) -> Result<(), SequenceViolation> {
    let mut seen = std::collections::BTreeSet::new();
    for e in seq.iter() {
        if !net.contains_edge(e) {
            return Err(SequenceViolation::UnknownEdge(e));
        }
        if !seen.insert(e) {
            return Err(SequenceViolation::DuplicateEdge(e));
        }
    }
    for e in net.edge_ids() {
        if !seen.contains(&e) {
            return Err(SequenceViolation::MissingEdge(e));
        }
    }
    Ok(())
}

/// One contraction in an evaluated sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub edge: EdgeId,
    pub step_cost: Cost,
    pub accumulated_cost: Cost,
    /// Network state after the step; populated only on request.
    pub snapshot: Option<TensorNetwork>,
}

/// Total cost of a sequence without per-step records. Adds `seq.len()` step
/// computations to the budget.
pub fn sequence_cost(
    net: &TensorNetwork,
    seq: &ContractionSequence,
    budget: &mut EvalBudget,
) -> Result<Cost, EvaluateError> {
    SequenceEvaluator::new(net).cost(seq, budget)
}

/// Replays sequences against a flat copy of one network's structure.
///
/// A step cost needs only the dims incident to the two merging clusters, so
/// the network is lowered once into index arrays: a union-find over vertices
/// and one linked chain of incident items (edges and legs) per vertex, which
/// merge by concatenation. Replaying a sequence then resets a few arrays
/// instead of cloning the tree-backed network, which matters because search
/// loops evaluate thousands of sequences against the same network.
pub(crate) struct SequenceEvaluator {
    edge_slot: BTreeMap<EdgeId, u32>,
    /// Dim per item; edge slots first, then one slot per open leg.
    dims: Vec<u64>,
    endpoints: Vec<(u32, u32)>,
    item_of_node: Vec<u32>,
    init_head: Vec<i32>,
    init_tail: Vec<i32>,
    init_next: Vec<i32>,
    head: Vec<i32>,
    tail: Vec<i32>,
    next: Vec<i32>,
    parent: Vec<u32>,
    alive: Vec<bool>,
    seen: Vec<u32>,
    stamp: u32,
    factors: Vec<u64>,
}

impl SequenceEvaluator {
    pub(crate) fn new(net: &TensorNetwork) -> Self {
        fn append(v: usize, item: u32, head: &mut [i32], tail: &mut [i32], next: &mut Vec<i32>, items: &mut Vec<u32>) {
            let node = items.len() as i32;
            items.push(item);
            next.push(-1);
            if head[v] < 0 {
                head[v] = node;
            } else {
                next[tail[v] as usize] = node;
            }
            tail[v] = node;
        }

        let vertex_slot: BTreeMap<VertexId, u32> =
            net.vertices().enumerate().map(|(i, v)| (v, i as u32)).collect();
        let e_count = net.edge_count();
        let mut edge_slot = BTreeMap::new();
        let mut dims = Vec::with_capacity(e_count + net.leg_count());
        let mut endpoints = Vec::with_capacity(e_count);
        let mut init_head = vec![-1i32; vertex_slot.len()];
        let mut init_tail = vec![-1i32; vertex_slot.len()];
        let mut init_next = Vec::with_capacity(2 * e_count + net.leg_count());
        let mut item_of_node = Vec::with_capacity(init_next.capacity());
        for (i, (id, info)) in net.edges().enumerate() {
            edge_slot.insert(id, i as u32);
            dims.push(info.chi);
            let u = vertex_slot[&info.endpoints.0];
            let v = vertex_slot[&info.endpoints.1];
            endpoints.push((u, v));
            append(u as usize, i as u32, &mut init_head, &mut init_tail, &mut init_next, &mut item_of_node);
            append(v as usize, i as u32, &mut init_head, &mut init_tail, &mut init_next, &mut item_of_node);
        }
        for (i, (_, info)) in net.open_legs().enumerate() {
            dims.push(info.chi);
            let v = vertex_slot[&info.vertex] as usize;
            append(v, (e_count + i) as u32, &mut init_head, &mut init_tail, &mut init_next, &mut item_of_node);
        }
        SequenceEvaluator {
            head: init_head.clone(),
            tail: init_tail.clone(),
            next: init_next.clone(),
            parent: (0..vertex_slot.len() as u32).collect(),
            alive: vec![true; e_count],
            seen: vec![0; dims.len()],
            stamp: 0,
            factors: Vec::new(),
            edge_slot,
            dims,
            endpoints,
            item_of_node,
            init_head,
            init_tail,
            init_next,
        }
    }

    fn reset(&mut self) {
        self.head.copy_from_slice(&self.init_head);
        self.tail.copy_from_slice(&self.init_tail);
        self.next.copy_from_slice(&self.init_next);
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.alive.fill(true);
    }

    fn find(&mut self, mut v: u32) -> u32 {
        while self.parent[v as usize] != v {
            self.parent[v as usize] = self.parent[self.parent[v as usize] as usize];
            v = self.parent[v as usize];
        }
        v
    }

    /// Pushes the dim of every distinct live item in `root`'s chain.
    fn collect(&mut self, root: u32) {
        let mut n = self.head[root as usize];
        while n >= 0 {
            let item = self.item_of_node[n as usize] as usize;
            if (item >= self.alive.len() || self.alive[item]) && self.seen[item] != self.stamp {
                self.seen[item] = self.stamp;
                self.factors.push(self.dims[item]);
            }
            n = self.next[n as usize];
        }
    }

    /// Exact total cost of `seq`; same result, errors, and budget accounting
    /// as [`sequence_cost`].
    pub(crate) fn cost(
        &mut self,
        seq: &ContractionSequence,
        budget: &mut EvalBudget,
    ) -> Result<Cost, EvaluateError> {
        self.reset();
        let mut total = Cost::zero();
        let mut steps = 0u64;
        for e in seq.iter() {
            let slot = match self.edge_slot.get(&e) {
                Some(&s) => s as usize,
                None => return Err(SequenceViolation::UnknownEdge(e).into()),
            };
            if !self.alive[slot] {
                return Err(SequenceViolation::DuplicateEdge(e).into());
            }
            let (u, v) = self.endpoints[slot];
            let ru = self.find(u);
            let rv = self.find(v);
            self.stamp = self.stamp.wrapping_add(1);
            if self.stamp == 0 {
                self.seen.fill(0);
                self.stamp = 1;
            }
            self.factors.clear();
            self.collect(ru);
            if rv != ru {
                self.collect(rv);
            }
            total += Cost::product_of_buffer(&mut self.factors);
            self.alive[slot] = false;
            if rv != ru {
                if self.head[rv as usize] >= 0 {
                    if self.head[ru as usize] < 0 {
                        self.head[ru as usize] = self.head[rv as usize];
                    } else {
                        self.next[self.tail[ru as usize] as usize] = self.head[rv as usize];
                    }
                    self.tail[ru as usize] = self.tail[rv as usize];
                }
                self.parent[rv as usize] = ru;
            }
            steps += 1;
        }
        if (steps as usize) < self.alive.len() {
            for (&id, &slot) in &self.edge_slot {
                if self.alive[slot as usize] {
                    return Err(SequenceViolation::MissingEdge(id).into());
                }
            }
        }
        budget.record_steps(steps);
        Ok(total)
    }
}

/// Evaluates a sequence, returning the exact total cost and one record per
/// step. Adds `seq.len()` step computations to the budget.
pub fn evaluate_sequence(
    net: &TensorNetwork,
    seq: &ContractionSequence,
    budget: &mut EvalBudget,
) -> Result<(Cost, Vec<StepRecord>), EvaluateError> {
    evaluate_with_snapshots(net, seq, budget, false)
}

/// As [`evaluate_sequence`] but each record also carries the network state
/// after its step, for trace export.
pub fn evaluate_sequence_with_snapshots(
    net: &TensorNetwork,
    seq: &ContractionSequence,
    budget: &mut EvalBudget,
) -> Result<(Cost, Vec<StepRecord>), EvaluateError> {
    evaluate_with_snapshots(net, seq, budget, true)
}

fn evaluate_with_snapshots(
    net: &TensorNetwork,
    seq: &ContractionSequence,
    budget: &mut EvalBudget,
    snapshots: bool,
) -> Result<(Cost, Vec<StepRecord>), EvaluateError> {
    validate_sequence(net, seq)?;
    let mut state = net.clone();
    let mut total = Cost::zero();
    let mut records = Vec::with_capacity(seq.len());
    for e in seq.iter() {
        let step = state.contract_edge(e)?;
        total += &step;
        records.push(StepRecord {
            edge: e,
            step_cost: step,
            accumulated_cost: total.clone(),
            snapshot: snapshots.then(|| state.clone()),
        });
    }
    budget.record_steps(seq.len() as u64);
    Ok((total, records))
}

/// Network state after applying the whole sequence (no budget accounting).
pub fn final_state(net: &TensorNetwork, seq: &ContractionSequence) -> Result<TensorNetwork, EvaluateError> {
    validate_sequence(net, seq)?;
    let mut state = net.clone();
    for e in seq.iter() {
        state.apply_contraction(e)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeKeysError {
    #[error("got {keys} keys for {edges} edges")]
    LengthMismatch { keys: usize, edges: usize },
    #[error("key {value} at position {index} is outside [0, 1]")]
    KeyOutOfRange { index: usize, value: f64 },
}

/// Decodes a random-key vector into a sequence: edges are ordered by
/// ascending key, ties broken by position (stable).
pub fn decode_keys(keys: &[f64], edge_ids: &[EdgeId]) -> Result<ContractionSequence, DecodeKeysError> {
    if keys.len() != edge_ids.len() {
        return Err(DecodeKeysError::LengthMismatch {
            keys: keys.len(),
            edges: edge_ids.len(),
        });
    }
    for (index, &value) in keys.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(DecodeKeysError::KeyOutOfRange { index, value });
        }
    }
    let mut positions: Vec<usize> = (0..keys.len()).collect();
    positions.sort_unstable_by(|&a, &b| {
        keys[a]
            .partial_cmp(&keys[b])
            .expect("keys validated finite")
            .then(a.cmp(&b))
    });
    Ok(ContractionSequence::new(positions.into_iter().map(|i| edge_ids[i]).collect()))
}
