//! Experiment harness: seeded sweeps, budget policies, statistics, the
//! handcrafted lattice baseline, and per-step trace export.
//!
//! Everything here is deterministic given a spec and base seed: runs are
//! parallelized over threads but results are keyed and ordered by
//! (size, algorithm, run), so CSV and JSON artifacts are byte-stable.

mod experiments;
mod handcrafted;
mod stats;
mod trace_export;

pub use experiments::{
    render_runs_csv, render_summary_csv, render_variable_csv, run_equal_budget, run_sweep,
    run_variable_budget, time_remaining_run, AlgSpec, BudgetPolicy, ExperimentSpec, Family, RunRecord,
    SummaryRecord, SweepReport, VariableBudgetRow, DESKTOP_LIMIT_MULTIPLICATIONS,
};
pub use handcrafted::handcrafted_row_sequence;
pub use stats::{compute_stats, CostStats};
pub use trace_export::{export_sequence_trace, TraceSummary};

use thiserror::Error;

use crate::generators::{GeneratorError, LoadError};
use crate::graph::GraphError;
use crate::optimize::OptimizeError;
use crate::sequence::{EvaluateError, SequenceViolation};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment needs at least one {0}")]
    EmptySpec(&'static str),
    #[error("the match-greedy budget policy needs a greedy entry in the algorithm list")]
    NoGreedyToMatch,
    #[error("equal-budget runs require the match-greedy budget policy")]
    NotMatchGreedy,
    #[error("budget checkpoints must be finite, positive, and strictly ascending")]
    BadCheckpoints,
    #[error("flops per evaluation must be finite and positive, got {0}")]
    BadFlopsPerEval(f64),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error("invalid sequence: {0}")]
    Sequence(#[from] SequenceViolation),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
