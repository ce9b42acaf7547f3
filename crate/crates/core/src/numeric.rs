//! Numeric oracle: contracts small networks with explicit dense tensors.
//!
//! Every vertex gets a dense tensor with one axis per incident edge end
//! (a self-loop owns two axes) and one axis per open leg. Executing a
//! sequence numerically must give the same final tensors for every valid
//! ordering, which checks the graph semantics against actual multilinear
//! algebra.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{EdgeId, LegId, TensorNetwork, VertexId};
use crate::sequence::{validate_sequence, ContractionSequence, SequenceViolation};

/// Largest dense tensor the oracle will allocate, in elements.
pub const MAX_TENSOR_ELEMENTS: usize = 1_000_000;

/// One axis of a vertex tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AxisLabel {
    /// End `slot` (0 or 1) of an internal edge. A normal edge contributes
    /// slot 0 to its first endpoint and slot 1 to its second; a self-loop
    /// contributes both slots to its vertex.
    Edge { edge: EdgeId, slot: u8 },
    Leg(LegId),
}

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl DenseTensor {
    fn element_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Returns a copy with axes reordered so output axis d is input axis
    /// perm[d].
    fn permuted(&self, perm: &[usize]) -> DenseTensor {
        assert_eq!(perm.len(), self.dims.len());
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let in_strides = strides(&self.dims);
        let mut data = vec![0.0; self.data.len()];
        let mut coords = vec![0usize; dims.len()];
        for slot in data.iter_mut() {
            let mut lin_in = 0;
            for (d, &c) in coords.iter().enumerate() {
                lin_in += c * in_strides[perm[d]];
            }
            *slot = self.data[lin_in];
            for d in (0..dims.len()).rev() {
                coords[d] += 1;
                if coords[d] < dims[d] {
                    break;
                }
                coords[d] = 0;
            }
        }
        DenseTensor { dims, data }
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for d in (0..dims.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * dims[d + 1];
    }
    s
}

/// A labeled tensor sitting on a vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexTensor {
    pub axes: Vec<AxisLabel>,
    pub tensor: DenseTensor,
}

/// Dense tensors for every vertex of a network.
#[derive(Debug, Clone)]
pub struct DenseAssignment {
    tensors: BTreeMap<VertexId, VertexTensor>,
}

impl DenseAssignment {
    pub fn tensor(&self, v: VertexId) -> Option<&VertexTensor> {
        self.tensors.get(&v)
    }
}

/// One connected component's result after executing a full sequence: the
/// remaining axes are the component's open legs, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalTensor {
    pub vertex: VertexId,
    pub legs: Vec<LegId>,
    pub tensor: DenseTensor,
}

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("vertex {vertex} needs {elements} tensor elements, above the limit of {MAX_TENSOR_ELEMENTS}")]
    TensorTooLarge { vertex: VertexId, elements: u128 },
    #[error("invalid sequence: {0}")]
    Invalid(#[from] SequenceViolation),
    #[error("internal shape mismatch at {context}")]
    ShapeMismatch { context: String },
    #[error("results have different structure: {0}")]
    StructureMismatch(String),
}

/// Assigns every vertex a dense tensor with i.i.d. uniform [-1, 1] entries.
///
/// Axis order per vertex: incident edges ascending by id (slot 0 before
/// slot 1 for self-loops), then legs ascending by id. Deterministic in the
/// seed; vertices are filled in ascending order from one stream.
pub fn random_assignment(net: &TensorNetwork, seed: u64) -> Result<DenseAssignment, NumericError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = BTreeMap::new();
    for v in net.vertices() {
        let mut axes: Vec<AxisLabel> = Vec::new();
        let mut dims: Vec<usize> = Vec::new();
        for e in net.incident_edges(v) {
            let info = net.edge(e).expect("incident edge exists");
            let chi = info.chi as usize;
            if info.endpoints.0 == v {
                axes.push(AxisLabel::Edge { edge: e, slot: 0 });
                dims.push(chi);
            }
            if info.endpoints.1 == v {
                axes.push(AxisLabel::Edge { edge: e, slot: 1 });
                dims.push(chi);
            }
        }
        for l in net.incident_legs(v) {
            let chi = net.open_leg(l).expect("incident leg exists").chi as usize;
            axes.push(AxisLabel::Leg(l));
            dims.push(chi);
        }
        let elements: u128 = dims.iter().map(|&d| d as u128).product();
        if elements > MAX_TENSOR_ELEMENTS as u128 {
            return Err(NumericError::TensorTooLarge { vertex: v, elements });
        }
        let data: Vec<f64> = (0..elements as usize).map(|_| rng.random_range(-1.0..1.0)).collect();
        tensors.insert(
            v,
            VertexTensor {
                axes,
                tensor: DenseTensor {
                    dims,
                    data,
                },
            },
        );
    }
    Ok(DenseAssignment { tensors })
}

/// Numerically executes a contraction sequence.
///
/// A normal edge sums the matching axis pair across its two endpoint
/// tensors (parallel edges stay as separate axis pairs on the merged tensor
/// until their own step); a self-loop is a partial trace. Returns one final
/// tensor per connected component with leg axes sorted ascending.
pub fn execute(
    net: &TensorNetwork,
    assignment: &DenseAssignment,
    seq: &ContractionSequence,
) -> Result<Vec<FinalTensor>, NumericError> {
    validate_sequence(net, seq)?;
    let mut graph = net.clone();
    let mut tensors = assignment.tensors.clone();
    for e in seq.iter() {
        let info = *graph.edge(e).expect("validated sequence");
        let (u, v) = info.endpoints;
        if u == v {
            let t = tensors.remove(&u).expect("tensor per vertex");
            let traced = partial_trace(t, e)?;
            tensors.insert(u, traced);
        } else {
            let tu = tensors.remove(&u).expect("tensor per vertex");
            let tv = tensors.remove(&v).expect("tensor per vertex");
            let merged = contract_pair(tu, tv, e)?;
            tensors.insert(u.min(v), merged);
        }
        graph.apply_contraction(e).expect("validated sequence");
    }
    let mut finals = Vec::with_capacity(tensors.len());
    for (vertex, vt) in tensors {
        finals.push(sort_legs(vertex, vt)?);
    }
    Ok(finals)
}

fn axis_position(axes: &[AxisLabel], wanted: AxisLabel, context: &str) -> Result<usize, NumericError> {
    axes.iter()
        .position(|a| *a == wanted)
        .ok_or_else(|| NumericError::ShapeMismatch {
            context: context.to_string(),
        })
}

/// Contracts the axis pair of edge `e` across two tensors. Either endpoint
/// may hold either slot (endpoints get rewritten during merges, labels
/// never do).
fn contract_pair(a: VertexTensor, b: VertexTensor, e: EdgeId) -> Result<VertexTensor, NumericError> {
    let slot_in = |axes: &[AxisLabel]| {
        axes.iter().find_map(|ax| match ax {
            AxisLabel::Edge { edge, slot } if *edge == e => Some(*slot),
            _ => None,
        })
    };
    let sa = slot_in(&a.axes).ok_or_else(|| NumericError::ShapeMismatch {
        context: format!("edge {e} not on first tensor"),
    })?;
    let sb = slot_in(&b.axes).ok_or_else(|| NumericError::ShapeMismatch {
        context: format!("edge {e} not on second tensor"),
    })?;
    if sa == sb {
        return Err(NumericError::ShapeMismatch {
            context: format!("edge {e} has the same slot on both tensors"),
        });
    }
    let pa = axis_position(&a.axes, AxisLabel::Edge { edge: e, slot: sa }, "contract")?;
    let pb = axis_position(&b.axes, AxisLabel::Edge { edge: e, slot: sb }, "contract")?;
    let chi = a.tensor.dims[pa];
    if b.tensor.dims[pb] != chi {
        return Err(NumericError::ShapeMismatch {
            context: format!("edge {e} dimensions disagree"),
        });
    }

    // Move the contracted axis last on a, first on b, then multiply.
    let mut perm_a: Vec<usize> = (0..a.axes.len()).filter(|&i| i != pa).collect();
    perm_a.push(pa);
    let mut perm_b: Vec<usize> = vec![pb];
    perm_b.extend((0..b.axes.len()).filter(|&i| i != pb));
    let ta = a.tensor.permuted(&perm_a);
    let tb = b.tensor.permuted(&perm_b);
    let rows = ta.element_count() / chi.max(1);
    let cols = tb.element_count() / chi.max(1);
    let mut data = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..chi {
            let left = ta.data[i * chi + k];
            if left == 0.0 {
                continue;
            }
            let row_b = &tb.data[k * cols..(k + 1) * cols];
            let row_out = &mut data[i * cols..(i + 1) * cols];
            for (o, r) in row_out.iter_mut().zip(row_b) {
                *o += left * r;
            }
        }
    }
    let mut axes: Vec<AxisLabel> = perm_a[..perm_a.len() - 1].iter().map(|&i| a.axes[i]).collect();
    axes.extend(perm_b[1..].iter().map(|&i| b.axes[i]));
    let mut dims: Vec<usize> = ta.dims[..ta.dims.len() - 1].to_vec();
    dims.extend(&tb.dims[1..]);
    Ok(VertexTensor {
        axes,
        tensor: DenseTensor { dims, data },
    })
}

/// Partial trace over the two axes of self-loop `e`.
fn partial_trace(t: VertexTensor, e: EdgeId) -> Result<VertexTensor, NumericError> {
    let p0 = axis_position(&t.axes, AxisLabel::Edge { edge: e, slot: 0 }, "trace slot 0")?;
    let p1 = axis_position(&t.axes, AxisLabel::Edge { edge: e, slot: 1 }, "trace slot 1")?;
    let chi = t.tensor.dims[p0];
    if t.tensor.dims[p1] != chi {
        return Err(NumericError::ShapeMismatch {
            context: format!("self-loop {e} dimensions disagree"),
        });
    }
    let mut perm: Vec<usize> = (0..t.axes.len()).filter(|&i| i != p0 && i != p1).collect();
    let axes: Vec<AxisLabel> = perm.iter().map(|&i| t.axes[i]).collect();
    perm.push(p0);
    perm.push(p1);
    let moved = t.tensor.permuted(&perm);
    let kept = moved.element_count() / (chi * chi).max(1);
    let mut data = vec![0.0; kept];
    for (i, slot) in data.iter_mut().enumerate() {
        for k in 0..chi {
            *slot += moved.data[i * chi * chi + k * chi + k];
        }
    }
    let dims = moved.dims[..moved.dims.len() - 2].to_vec();
    Ok(VertexTensor {
        axes,
        tensor: DenseTensor { dims, data },
    })
}

fn sort_legs(vertex: VertexId, vt: VertexTensor) -> Result<FinalTensor, NumericError> {
    let mut legs: Vec<(LegId, usize)> = Vec::with_capacity(vt.axes.len());
    for (i, axis) in vt.axes.iter().enumerate() {
        match axis {
            AxisLabel::Leg(l) => legs.push((*l, i)),
            AxisLabel::Edge { edge, .. } => {
                return Err(NumericError::ShapeMismatch {
                    context: format!("edge {edge} survived a full sequence"),
                })
            }
        }
    }
    legs.sort_by_key(|(l, _)| *l);
    let perm: Vec<usize> = legs.iter().map(|(_, i)| *i).collect();
    Ok(FinalTensor {
        vertex,
        legs: legs.into_iter().map(|(l, _)| l).collect(),
        tensor: vt.tensor.permuted(&perm),
    })
}

/// Largest elementwise deviation between two execution results, relative to
/// the larger max-norm with an absolute floor of 1e-12 against all-zero
/// results. Errors if the results differ structurally.
pub fn max_relative_deviation(a: &[FinalTensor], b: &[FinalTensor]) -> Result<f64, NumericError> {
    if a.len() != b.len() {
        return Err(NumericError::StructureMismatch(format!(
            "{} components vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut worst = 0.0f64;
    for (ta, tb) in a.iter().zip(b) {
        if ta.vertex != tb.vertex || ta.legs != tb.legs || ta.tensor.dims != tb.tensor.dims {
            return Err(NumericError::StructureMismatch(format!(
                "component {} shapes differ",
                ta.vertex
            )));
        }
        let scale = ta.tensor.max_abs().max(tb.tensor.max_abs()).max(1e-12);
        for (x, y) in ta.tensor.data.iter().zip(&tb.tensor.data) {
            worst = worst.max((x - y).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::EvalBudget;
    use crate::sequence::sequence_cost;

    fn deviation_between_orders(net: &TensorNetwork, s1: &[u32], s2: &[u32], seed: u64) -> f64 {
        let assignment = random_assignment(net, seed).unwrap();
        let seq1 = ContractionSequence::new(s1.iter().map(|&i| EdgeId(i)).collect());
        let seq2 = ContractionSequence::new(s2.iter().map(|&i| EdgeId(i)).collect());
        let r1 = execute(net, &assignment, &seq1).unwrap();
        let r2 = execute(net, &assignment, &seq2).unwrap();
        max_relative_deviation(&r1, &r2).unwrap()
    }

    #[test]
    fn both_orders_of_the_three_tensor_example_agree() {
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
        assert!(deviation_between_orders(&net, &[0, 1], &[1, 0], 4) < 1e-12);
    }

    #[test]
    fn parallel_edges_and_self_loops_agree_across_orders() {
        let mut net = TensorNetwork::new();
        net.add_vertex(VertexId(0));
        net.add_vertex(VertexId(1));
        net.add_edge(VertexId(0), VertexId(1), 2).unwrap();
        net.add_edge(VertexId(0), VertexId(1), 3).unwrap();
        net.add_edge(VertexId(1), VertexId(1), 2).unwrap();
        net.add_open_leg(VertexId(0), 2).unwrap();
        for (s1, s2) in [([0, 1, 2], [2, 1, 0]), ([1, 2, 0], [0, 2, 1])] {
            assert!(deviation_between_orders(&net, &s1, &s2, 9) < 1e-12);
        }
    }

    #[test]
    fn closed_network_reduces_to_a_scalar() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 2, chi: 2 }).unwrap();
        let assignment = random_assignment(&net, 1).unwrap();
        let seq = ContractionSequence::new(net.edge_ids());
        let finals = execute(&net, &assignment, &seq).unwrap();
        assert_eq!(finals.len(), 1);
        assert!(finals[0].legs.is_empty());
        assert_eq!(finals[0].tensor.dims, Vec::<usize>::new());
        assert_eq!(finals[0].tensor.data.len(), 1);
    }

    #[test]
    fn disconnected_networks_return_one_tensor_per_component() {
        let mut net = TensorNetwork::new();
        for v in 0..4 {
            net.add_vertex(VertexId(v));
        }
        net.add_edge(VertexId(0), VertexId(1), 2).unwrap();
        net.add_edge(VertexId(2), VertexId(3), 3).unwrap();
        net.add_open_leg(VertexId(2), 2).unwrap();
        let assignment = random_assignment(&net, 0).unwrap();
        let seq = ContractionSequence::new(vec![EdgeId(1), EdgeId(0)]);
        let finals = execute(&net, &assignment, &seq).unwrap();
        assert_eq!(finals.len(), 2);
        assert_eq!(finals[0].vertex, VertexId(0));
        assert!(finals[0].legs.is_empty());
        assert_eq!(finals[1].vertex, VertexId(2));
        assert_eq!(finals[1].legs, vec![LegId(0)]);
    }

    #[test]
    fn tracing_an_identity_slot_multiplies_by_chi() {
        let mut net = TensorNetwork::new();
        net.add_vertex(VertexId(0));
        net.add_edge(VertexId(0), VertexId(0), 3).unwrap();
        net.add_open_leg(VertexId(0), 2).unwrap();
        // Hand-build the tensor v[i] * delta_ab on axes (loop0, loop1, leg).
        let mut data = vec![0.0; 3 * 3 * 2];
        let v = [0.7, -0.3];
        for a in 0..3 {
            for i in 0..2 {
                data[a * 3 * 2 + a * 2 + i] = v[i];
            }
        }
        let tensors = BTreeMap::from([(
            VertexId(0),
            VertexTensor {
                axes: vec![
                    AxisLabel::Edge { edge: EdgeId(0), slot: 0 },
                    AxisLabel::Edge { edge: EdgeId(0), slot: 1 },
                    AxisLabel::Leg(LegId(0)),
                ],
                tensor: DenseTensor {
                    dims: vec![3, 3, 2],
                    data,
                },
            },
        )]);
        let assignment = DenseAssignment { tensors };
        let seq = ContractionSequence::new(vec![EdgeId(0)]);
        let finals = execute(&net, &assignment, &seq).unwrap();
        assert_eq!(finals[0].tensor.data, vec![3.0 * 0.7, 3.0 * -0.3]);
    }

    #[test]
    fn guard_rejects_oversized_tensors() {
        let mut net = TensorNetwork::new();
        net.add_vertex(VertexId(0));
        net.add_vertex(VertexId(1));
        for _ in 0..8 {
            net.add_edge(VertexId(0), VertexId(1), 10).unwrap();
        }
        let err = random_assignment(&net, 0).unwrap_err();
        assert!(matches!(err, NumericError::TensorTooLarge { .. }));
    }

    #[test]
    fn assignment_is_deterministic_in_the_seed() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 2, chi: 3 }).unwrap();
        let a = random_assignment(&net, 12).unwrap();
        let b = random_assignment(&net, 12).unwrap();
        for v in net.vertices() {
            assert_eq!(a.tensor(v), b.tensor(v));
        }
    }

    #[test]
    fn execution_does_not_touch_budgets() {
        // The oracle is a semantic check, not an optimizer; make sure the
        // cost model still sees the same totals afterwards.
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 2, chi: 2 }).unwrap();
        let seq = ContractionSequence::new(net.edge_ids());
        let mut budget = EvalBudget::new(net.edge_count());
        let before = sequence_cost(&net, &seq, &mut budget).unwrap();
        let assignment = random_assignment(&net, 3).unwrap();
        execute(&net, &assignment, &seq).unwrap();
        let mut budget2 = EvalBudget::new(net.edge_count());
        assert_eq!(sequence_cost(&net, &seq, &mut budget2).unwrap(), before);
    }
}
