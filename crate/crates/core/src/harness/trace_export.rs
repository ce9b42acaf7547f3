use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cost::Cost;
use crate::graph::{EdgeId, TensorNetwork};
use crate::sequence::{validate_sequence, ContractionSequence};

use super::HarnessError;

#[derive(Debug, Serialize)]
struct TraceStep {
    index: usize,
    edge: EdgeId,
    step_cost: Cost,
    accumulated_cost: Cost,
    /// Surviving network after this step.
    graph: TensorNetwork,
}

#[derive(Debug, Serialize)]
struct TraceFile {
    edge_count: usize,
    total_cost: Cost,
    steps: Vec<TraceStep>,
}

/// What [`export_sequence_trace`] wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub total_cost: Cost,
    /// Every file written, in creation order.
    pub files: Vec<PathBuf>,
}

/// Exports a step-by-step record of one contraction sequence.
///
/// Writes into `out_dir`:
/// - `step_NNN.dot`: the network before step NNN, with every present edge
///   carrying a `stepcost` attribute (its contraction cost in that state)
///   and the edge about to be contracted highlighted;
/// - `final.dot`: the network after the last step;
/// - `trace.json`: per-step edge, step cost, accumulated cost, and the
///   surviving graph.
///
/// All outputs are deterministic for a given network and sequence.
pub fn export_sequence_trace(
    net: &TensorNetwork,
    seq: &ContractionSequence,
    out_dir: impl AsRef<Path>,
) -> Result<TraceSummary, HarnessError> {
    let out_dir = out_dir.as_ref();
    validate_sequence(net, seq)?;
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::with_capacity(seq.len() + 2);
    let mut state = net.clone();
    let mut total = Cost::zero();
    let mut steps = Vec::with_capacity(seq.len());
    for (index, e) in seq.iter().enumerate() {
        let dot = render_dot(&state, &format!("step_{index:03}"), Some(e))?;
        let path = out_dir.join(format!("step_{index:03}.dot"));
        std::fs::write(&path, dot)?;
        files.push(path);
        let step_cost = state.contract_edge(e)?;
        total += &step_cost;
        steps.push(TraceStep {
            index,
            edge: e,
            step_cost,
            accumulated_cost: total.clone(),
            graph: state.clone(),
        });
    }
    let final_path = out_dir.join("final.dot");
    std::fs::write(&final_path, render_dot(&state, "final", None)?)?;
    files.push(final_path);
    let trace = TraceFile {
        edge_count: seq.len(),
        total_cost: total.clone(),
        steps,
    };
    let mut json = serde_json::to_string_pretty(&trace).expect("trace serializes");
    json.push('\n');
    let json_path = out_dir.join("trace.json");
    std::fs::write(&json_path, json)?;
    files.push(json_path);
    Ok(TraceSummary { total_cost: total, files })
}

/// Renders the network as a DOT graph. Each edge gets `chi` and `stepcost`
/// attributes (the current cost of contracting that edge), so downstream
/// tools can color bonds by cost; `contracting`, if given, is drawn bold.
fn render_dot(net: &TensorNetwork, name: &str, contracting: Option<EdgeId>) -> Result<String, HarnessError> {
    let mut out = String::new();
    writeln!(out, "graph {name} {{").expect("string write");
    match contracting {
        Some(e) => writeln!(out, "  label=\"{name}: contract {e}\";"),
        None => writeln!(out, "  label=\"{name}\";"),
    }
    .expect("string write");
    writeln!(out, "  node [shape=circle];").expect("string write");
    for v in net.vertices() {
        writeln!(out, "  {v};").expect("string write");
    }
    for (id, info) in net.edges() {
        let cost = net.step_cost(id)?;
        let highlight = if contracting == Some(id) {
            ", color=red, penwidth=2.0"
        } else {
            ""
        };
        writeln!(
            out,
            "  {} -- {} [label=\"{id}\", chi=\"{}\", stepcost=\"{cost}\"{highlight}];",
            info.endpoints.0, info.endpoints.1, info.chi
        )
        .expect("string write");
    }
    for (id, info) in net.open_legs() {
        writeln!(out, "  {id} [shape=point];").expect("string write");
        writeln!(
            out,
            "  {} -- {id} [style=dashed, label=\"{id}\", chi=\"{}\"];",
            info.vertex, info.chi
        )
        .expect("string write");
    }
    writeln!(out, "}}").expect("string write");
    Ok(out)
}
