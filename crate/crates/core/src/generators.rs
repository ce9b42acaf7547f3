//! Network generators and file loading.
//!
//! Both generators are fully deterministic: the square lattice from its
//! dimensions alone, the Erdos-Renyi ensemble from its seed.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{BondDim, EdgeId, GraphError, TensorNetwork, VertexId};

/// An L x L square lattice with uniform bond dimension and no open legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SquareSpec {
    pub side: u32,
    pub chi: BondDim,
}

/// An Erdos-Renyi G(n, p) network with uniform bond dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErdosRenyiSpec {
    pub vertices: u32,
    pub edge_probability: f64,
    pub chi: BondDim,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("lattice side must be at least 1")]
    EmptyLattice,
    #[error("bond dimension must be at least 1")]
    InvalidBondDim,
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Builds the L x L lattice. Vertices are numbered row-major (vertex r*L + c
/// for row r, column c); horizontal edges come first, also row-major, then
/// vertical edges, giving 2L(L-1) edges total.
pub fn square_lattice(spec: &SquareSpec) -> Result<TensorNetwork, GeneratorError> {
    let l = spec.side;
    if l < 1 {
        return Err(GeneratorError::EmptyLattice);
    }
    if spec.chi < 1 {
        return Err(GeneratorError::InvalidBondDim);
    }
    let mut net = TensorNetwork::new();
    for v in 0..l * l {
        net.add_vertex(VertexId(v));
    }
    for r in 0..l {
        for c in 0..l - 1 {
            net.add_edge(VertexId(r * l + c), VertexId(r * l + c + 1), spec.chi)?;
        }
    }
    for r in 0..l - 1 {
        for c in 0..l {
            net.add_edge(VertexId(r * l + c), VertexId((r + 1) * l + c), spec.chi)?;
        }
    }
    Ok(net)
}

/// Id of the horizontal lattice edge between (r, c) and (r, c+1), matching
/// [`square_lattice`]'s numbering.
pub fn square_horizontal_edge(side: u32, row: u32, col: u32) -> EdgeId {
    EdgeId(row * (side - 1) + col)
}

/// Id of the vertical lattice edge between (r, c) and (r+1, c), matching
/// [`square_lattice`]'s numbering.
pub fn square_vertical_edge(side: u32, row: u32, col: u32) -> EdgeId {
    EdgeId(side * (side - 1) + row * side + col)
}

/// Samples G(n, p): vertex pairs are visited in lexicographic order and one
/// uniform draw per pair decides inclusion, so a seed pins the instance.
pub fn erdos_renyi(spec: &ErdosRenyiSpec) -> Result<TensorNetwork, GeneratorError> {
    if !(0.0..=1.0).contains(&spec.edge_probability) {
        return Err(GeneratorError::InvalidProbability(spec.edge_probability));
    }
    if spec.chi < 1 {
        return Err(GeneratorError::InvalidBondDim);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut net = TensorNetwork::new();
    for v in 0..spec.vertices {
        net.add_vertex(VertexId(v));
    }
    for u in 0..spec.vertices {
        for v in u + 1..spec.vertices {
            let draw: f64 = rng.random();
            if draw < spec.edge_probability {
                net.add_edge(VertexId(u), VertexId(v), spec.chi)?;
            }
        }
    }
    Ok(net)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        source: serde_json::Error,
    },
}

/// Reads a network from a JSON file, validating structure and dimensions.
pub fn load_network(path: impl AsRef<Path>) -> Result<TensorNetwork, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| LoadError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Writes a network as pretty JSON (trailing newline included).
pub fn save_network(net: &TensorNetwork, path: impl AsRef<Path>) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(net).expect("network serializes");
    text.push('\n');
    std::fs::write(path, text)
}
