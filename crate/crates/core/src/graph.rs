//! Tensor networks as multigraphs with dimensioned edges and open legs.
//!
//! Vertices are tensors, internal edges are summed index pairs, and open
//! legs are uncontracted indices. Parallel edges and self-loops are allowed
//! and meaningful: contracting an edge between two vertices merges them,
//! which turns every other edge between the same pair into a self-loop on
//! the merged vertex, and contracting a self-loop is a partial trace.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::Cost;

/// Bond dimension of an edge or open leg. Always at least 1.
pub type BondDim = u64;

/// Identifier of a tensor in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

/// Identifier of an internal edge. Assigned densely as 0..E-1 at
/// construction; contraction removes ids but never renumbers survivors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub u32);

/// Identifier of an open (uncontracted) leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LegId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for LegId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Endpoints and bond dimension of an internal edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeInfo {
    pub endpoints: (VertexId, VertexId),
    pub chi: BondDim,
}

impl EdgeInfo {
    pub fn is_self_loop(&self) -> bool {
        self.endpoints.0 == self.endpoints.1
    }
}

/// Owning vertex and bond dimension of an open leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LegInfo {
    pub vertex: VertexId,
    pub chi: BondDim,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Incidence {
    edges: BTreeSet<EdgeId>,
    legs: BTreeSet<LegId>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("no such edge: {0}")]
    NoSuchEdge(EdgeId),
    #[error("unknown vertex {vertex} referenced by {referrer}")]
    UnknownVertex { vertex: VertexId, referrer: String },
    #[error("bond dimension must be at least 1, got chi={chi} on {element}")]
    InvalidBondDim { element: String, chi: BondDim },
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u32 },
    #[error("edge ids must be dense 0..E-1: missing {0} with {1} edges present")]
    NonDenseEdgeIds(EdgeId, usize),
}

/// A tensor network: a multigraph whose edges and legs carry bond dimensions.
///
/// Mutation is limited to construction (`add_*`) and contraction. All
/// internal maps are ordered so iteration, serialization, and therefore
/// every downstream artifact are deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorNetwork {
    edges: BTreeMap<EdgeId, EdgeInfo>,
    legs: BTreeMap<LegId, LegInfo>,
    incidence: BTreeMap<VertexId, Incidence>,
}

impl TensorNetwork {
    pub fn new() -> Self {
        TensorNetwork {
            edges: BTreeMap::new(),
            legs: BTreeMap::new(),
            incidence: BTreeMap::new(),
        }
    }

    /// Adds a vertex. Adding an existing vertex is a no-op.
    pub fn add_vertex(&mut self, v: VertexId) {
        self.incidence.entry(v).or_default();
    }

    /// Adds an internal edge between two existing vertices (`u == v` makes a
    /// self-loop) and returns its densely assigned id.
    pub fn add_edge(&mut self, u: VertexId, v: VertexId, chi: BondDim) -> Result<EdgeId, GraphError> {
        let id = EdgeId(self.edges.len() as u32);
        self.check_vertex(u, || format!("edge {id}"))?;
        self.check_vertex(v, || format!("edge {id}"))?;
        if chi < 1 {
            return Err(GraphError::InvalidBondDim {
                element: id.to_string(),
                chi,
            });
        }
        self.edges.insert(id, EdgeInfo { endpoints: (u, v), chi });
        self.incidence.get_mut(&u).expect("checked").edges.insert(id);
        self.incidence.get_mut(&v).expect("checked").edges.insert(id);
        Ok(id)
    }

    /// Adds an open leg on an existing vertex and returns its id.
    pub fn add_open_leg(&mut self, vertex: VertexId, chi: BondDim) -> Result<LegId, GraphError> {
        let id = LegId(self.legs.len() as u32);
        self.check_vertex(vertex, || format!("leg {id}"))?;
        if chi < 1 {
            return Err(GraphError::InvalidBondDim {
                element: id.to_string(),
                chi,
            });
        }
        self.legs.insert(id, LegInfo { vertex, chi });
        self.incidence.get_mut(&vertex).expect("checked").legs.insert(id);
        Ok(id)
    }

    fn check_vertex(&self, v: VertexId, referrer: impl Fn() -> String) -> Result<(), GraphError> {
        if self.incidence.contains_key(&v) {
            Ok(())
        } else {
            Err(GraphError::UnknownVertex {
                vertex: v,
                referrer: referrer(),
            })
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.incidence.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn leg_count(&self) -> usize {
        self.legs.len()
    }

    pub fn contains_vertex(&self, v: VertexId) -> bool {
        self.incidence.contains_key(&v)
    }

    pub fn contains_edge(&self, e: EdgeId) -> bool {
        self.edges.contains_key(&e)
    }

    /// Vertices in ascending id order.
    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.incidence.keys().copied()
    }

    /// Edge ids in ascending order.
    pub fn edge_ids(&self) -> Vec<EdgeId> {
        self.edges.keys().copied().collect()
    }

    /// Edges with their info, in ascending id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &EdgeInfo)> + '_ {
        self.edges.iter().map(|(id, info)| (*id, info))
    }

    pub fn edge(&self, e: EdgeId) -> Option<&EdgeInfo> {
        self.edges.get(&e)
    }

    /// Open legs with their info, in ascending id order.
    pub fn open_legs(&self) -> impl Iterator<Item = (LegId, &LegInfo)> + '_ {
        self.legs.iter().map(|(id, info)| (*id, info))
    }

    pub fn open_leg(&self, l: LegId) -> Option<&LegInfo> {
        self.legs.get(&l)
    }

    /// Edges incident to a vertex (self-loops appear once), ascending.
    pub fn incident_edges(&self, v: VertexId) -> impl Iterator<Item = EdgeId> + '_ {
        self.incidence.get(&v).into_iter().flat_map(|i| i.edges.iter().copied())
    }

    /// Open legs attached to a vertex, ascending.
    pub fn incident_legs(&self, v: VertexId) -> impl Iterator<Item = LegId> + '_ {
        self.incidence.get(&v).into_iter().flat_map(|i| i.legs.iter().copied())
    }

    /// Cost of contracting edge `e` in the current state: the product of chi
    /// over the set of distinct edges and open legs incident to either
    /// endpoint. Each element counts once, including `e` itself, parallel
    /// edges, and self-loops.
    pub fn step_cost(&self, e: EdgeId) -> Result<Cost, GraphError> {
        let info = self.edges.get(&e).ok_or(GraphError::NoSuchEdge(e))?;
        let (u, v) = info.endpoints;
        let iu = self.incidence.get(&u).expect("endpoint tracked");
        let mut dims: Vec<BondDim> = Vec::new();
        for m in &iu.edges {
            dims.push(self.edges[m].chi);
        }
        for l in &iu.legs {
            dims.push(self.legs[l].chi);
        }
        if v != u {
            let iv = self.incidence.get(&v).expect("endpoint tracked");
            for m in &iv.edges {
                // Edges joining u and v (e itself and its parallels) are in
                // both incidence sets; count them once.
                if !iu.edges.contains(m) {
                    dims.push(self.edges[m].chi);
                }
            }
            for l in &iv.legs {
                dims.push(self.legs[l].chi);
            }
        }
        Ok(Cost::product_of_dims(dims))
    }

    /// Contracts edge `e` in place and returns its step cost.
    ///
    /// For a normal edge the endpoints merge into the smaller vertex id;
    /// every other edge between the two endpoints becomes a self-loop on the
    /// survivor. For a self-loop only the edge is removed (a trace).
    pub fn contract_edge(&mut self, e: EdgeId) -> Result<Cost, GraphError> {
        let cost = self.step_cost(e)?;
        self.apply_contraction(e)?;
        Ok(cost)
    }

    /// Performs the structural part of a contraction without computing the
    /// step cost. Used where the cost is already known to avoid counting a
    /// budget step twice.
    pub(crate) fn apply_contraction(&mut self, e: EdgeId) -> Result<(), GraphError> {
        let info = *self.edges.get(&e).ok_or(GraphError::NoSuchEdge(e))?;
        let (u, v) = info.endpoints;
        self.edges.remove(&e);
        if u == v {
            self.incidence.get_mut(&u).expect("endpoint tracked").edges.remove(&e);
            return Ok(());
        }
        let survivor = u.min(v);
        let absorbed = v.max(u);
        let mut inc_s = self.incidence.remove(&survivor).expect("endpoint tracked");
        let inc_a = self.incidence.remove(&absorbed).expect("endpoint tracked");
        inc_s.edges.remove(&e);
        for m in inc_a.edges {
            if m == e {
                continue;
            }
            let edge = self.edges.get_mut(&m).expect("incidence consistent");
            if edge.endpoints.0 == absorbed {
                edge.endpoints.0 = survivor;
            }
            if edge.endpoints.1 == absorbed {
                edge.endpoints.1 = survivor;
            }
            inc_s.edges.insert(m);
        }
        for l in inc_a.legs {
            self.legs.get_mut(&l).expect("incidence consistent").vertex = survivor;
            inc_s.legs.insert(l);
        }
        self.incidence.insert(survivor, inc_s);
        Ok(())
    }

    /// Consistency check used after deserialization and in tests: incidence
    /// maps mirror the edge and leg tables exactly.
    pub fn validate(&self) -> Result<(), GraphError> {
        for (id, info) in &self.edges {
            for endpoint in [info.endpoints.0, info.endpoints.1] {
                let inc = self.incidence.get(&endpoint).ok_or(GraphError::UnknownVertex {
                    vertex: endpoint,
                    referrer: id.to_string(),
                })?;
                if !inc.edges.contains(id) {
                    return Err(GraphError::UnknownVertex {
                        vertex: endpoint,
                        referrer: id.to_string(),
                    });
                }
            }
            if info.chi < 1 {
                return Err(GraphError::InvalidBondDim {
                    element: id.to_string(),
                    chi: info.chi,
                });
            }
        }
        for (id, info) in &self.legs {
            let inc = self.incidence.get(&info.vertex).ok_or(GraphError::UnknownVertex {
                vertex: info.vertex,
                referrer: id.to_string(),
            })?;
            if !inc.legs.contains(id) {
                return Err(GraphError::UnknownVertex {
                    vertex: info.vertex,
                    referrer: id.to_string(),
                });
            }
            if info.chi < 1 {
                return Err(GraphError::InvalidBondDim {
                    element: id.to_string(),
                    chi: info.chi,
                });
            }
        }
        Ok(())
    }
}

impl Default for TensorNetwork {
    fn default() -> Self {
        TensorNetwork::new()
    }
}

/// Pure-function view of [`TensorNetwork::contract_edge`]: returns the
/// contracted network and the step cost, leaving the input untouched.
pub fn contract_step(net: &TensorNetwork, e: EdgeId) -> Result<(TensorNetwork, Cost), GraphError> {
    let mut next = net.clone();
    let cost = next.contract_edge(e)?;
    Ok((next, cost))
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    id: u32,
    u: u32,
    v: u32,
    chi: BondDim,
}

#[derive(Serialize, Deserialize)]
struct LegJson {
    id: u32,
    vertex: u32,
    chi: BondDim,
}

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    vertices: Vec<u32>,
    edges: Vec<EdgeJson>,
    open_legs: Vec<LegJson>,
}

impl Serialize for TensorNetwork {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let json = NetworkJson {
            vertices: self.vertices().map(|v| v.0).collect(),
            edges: self
                .edges()
                .map(|(id, info)| EdgeJson {
                    id: id.0,
                    u: info.endpoints.0 .0,
                    v: info.endpoints.1 .0,
                    chi: info.chi,
                })
                .collect(),
            open_legs: self
                .open_legs()
                .map(|(id, info)| LegJson {
                    id: id.0,
                    vertex: info.vertex.0,
                    chi: info.chi,
                })
                .collect(),
        };
        json.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for TensorNetwork {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let json = NetworkJson::deserialize(deserializer)?;
        TensorNetwork::try_from(json).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<NetworkJson> for TensorNetwork {
    type Error = GraphError;

    fn try_from(json: NetworkJson) -> Result<Self, GraphError> {
        let mut net = TensorNetwork::new();
        for v in &json.vertices {
            if net.contains_vertex(VertexId(*v)) {
                return Err(GraphError::DuplicateId { kind: "vertex", id: *v });
            }
            net.add_vertex(VertexId(*v));
        }
        // Edges may appear in any order in the file but ids must be the
        // dense range 0..E-1; insert in id order so add_edge's sequential
        // assignment reproduces them.
        let mut by_id: BTreeMap<u32, &EdgeJson> = BTreeMap::new();
        for edge in &json.edges {
            if by_id.insert(edge.id, edge).is_some() {
                return Err(GraphError::DuplicateId { kind: "edge", id: edge.id });
            }
        }
        for (expect, (id, edge)) in by_id.iter().enumerate() {
            if *id as usize != expect {
                return Err(GraphError::NonDenseEdgeIds(EdgeId(expect as u32), json.edges.len()));
            }
            net.add_edge(VertexId(edge.u), VertexId(edge.v), edge.chi)?;
        }
        let mut leg_ids: BTreeMap<u32, &LegJson> = BTreeMap::new();
        for leg in &json.open_legs {
            if leg_ids.insert(leg.id, leg).is_some() {
                return Err(GraphError::DuplicateId { kind: "leg", id: leg.id });
            }
        }
        // Leg ids are not required to be dense, so bypass add_open_leg's
        // sequential assignment and insert directly.
        for (id, leg) in leg_ids {
            let vertex = VertexId(leg.vertex);
            if !net.contains_vertex(vertex) {
                return Err(GraphError::UnknownVertex {
                    vertex,
                    referrer: LegId(id).to_string(),
                });
            }
            if leg.chi < 1 {
                return Err(GraphError::InvalidBondDim {
                    element: LegId(id).to_string(),
                    chi: leg.chi,
                });
            }
            net.legs.insert(LegId(id), LegInfo { vertex, chi: leg.chi });
            net.incidence.get_mut(&vertex).expect("checked").legs.insert(LegId(id));
        }
        net.validate()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Three tensors: edge e0 joins v0-v1, edge e1 joins v0-v2, two legs on
    /// v0 and two on v2, all with bond dimension `chi`.
    fn three_tensor(chi: BondDim) -> TensorNetwork {
        let mut net = TensorNetwork::new();
        for v in 0..3 {
            net.add_vertex(VertexId(v));
        }
        net.add_edge(VertexId(0), VertexId(1), chi).unwrap();
        net.add_edge(VertexId(0), VertexId(2), chi).unwrap();
        net.add_open_leg(VertexId(0), chi).unwrap();
        net.add_open_leg(VertexId(0), chi).unwrap();
        net.add_open_leg(VertexId(2), chi).unwrap();
        net.add_open_leg(VertexId(2), chi).unwrap();
        net
    }

    #[test]
    fn step_cost_counts_each_incident_dimension_once() {
        let net = three_tensor(2);
        // Contracting e0 involves e0, e1, and the two legs on v0: 2^4 = 16.
        assert_eq!(net.step_cost(EdgeId(0)).unwrap(), Cost::from(16));
        // Contracting e1 involves everything: 2^6 = 64.
        assert_eq!(net.step_cost(EdgeId(1)).unwrap(), Cost::from(64));
    }

    #[test]
    fn contraction_merges_into_smaller_id() {
        let mut net = three_tensor(2);
        net.contract_edge(EdgeId(0)).unwrap();
        assert_eq!(net.vertex_count(), 2);
        assert!(net.contains_vertex(VertexId(0)));
        assert!(!net.contains_vertex(VertexId(1)));
        assert_eq!(net.edge(EdgeId(1)).unwrap().endpoints, (VertexId(0), VertexId(2)));
        net.validate().unwrap();
    }

    #[test]
    fn parallel_edge_becomes_self_loop_after_merge() {
        let mut net = TensorNetwork::new();
        net.add_vertex(VertexId(0));
        net.add_vertex(VertexId(1));
        let a = net.add_edge(VertexId(0), VertexId(1), 2).unwrap();
        let b = net.add_edge(VertexId(0), VertexId(1), 2).unwrap();
        // Both parallel edges count once: step cost 2*2 = 4.
        assert_eq!(net.step_cost(a).unwrap(), Cost::from(4));
        net.contract_edge(a).unwrap();
        assert!(net.edge(b).unwrap().is_self_loop());
        // The surviving self-loop costs its own chi: 2.
        assert_eq!(net.step_cost(b).unwrap(), Cost::from(2));
        net.contract_edge(b).unwrap();
        assert_eq!(net.edge_count(), 0);
        assert_eq!(net.vertex_count(), 1);
        net.validate().unwrap();
    }

    #[test]
    fn self_loop_trace_costs_its_own_chi() {
        let mut net = TensorNetwork::new();
        net.add_vertex(VertexId(5));
        let e = net.add_edge(VertexId(5), VertexId(5), 7).unwrap();
        assert_eq!(net.step_cost(e).unwrap(), Cost::from(7));
        net.contract_edge(e).unwrap();
        assert_eq!(net.edge_count(), 0);
        assert_eq!(net.vertex_count(), 1);
    }

    #[test]
    fn legs_follow_their_vertex_through_merges() {
        let mut net = three_tensor(3);
        net.contract_edge(EdgeId(1)).unwrap();
        let leg_owners: Vec<VertexId> = net.open_legs().map(|(_, info)| info.vertex).collect();
        assert_eq!(leg_owners, vec![VertexId(0); 4]);
        net.validate().unwrap();
    }

    #[test]
    fn missing_edge_is_reported() {
        let net = three_tensor(2);
        assert_eq!(net.step_cost(EdgeId(9)), Err(GraphError::NoSuchEdge(EdgeId(9))));
    }

    #[test]
    fn zero_bond_dimension_is_rejected() {
        let mut net = TensorNetwork::new();
        net.add_vertex(VertexId(0));
        let err = net.add_edge(VertexId(0), VertexId(0), 0).unwrap_err();
        assert!(matches!(err, GraphError::InvalidBondDim { .. }));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let net = three_tensor(2);
        let json = serde_json::to_string(&net).unwrap();
        let back: TensorNetwork = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn json_with_sparse_edge_ids_is_rejected() {
        let text = r#"{"vertices":[0,1],"edges":[{"id":1,"u":0,"v":1,"chi":2}],"open_legs":[]}"#;
        let err = serde_json::from_str::<TensorNetwork>(text).unwrap_err();
        assert!(err.to_string().contains("dense"));
    }

    #[test]
    fn json_with_unknown_endpoint_is_rejected() {
        let text = r#"{"vertices":[0],"edges":[{"id":0,"u":0,"v":3,"chi":2}],"open_legs":[]}"#;
        let err = serde_json::from_str::<TensorNetwork>(text).unwrap_err();
        assert!(err.to_string().contains("unknown vertex"));
    }
}
