//! Contraction-order optimization for tensor networks.
//!
//! Contracting a tensor network means summing its internal indices in some
//! order, and the order changes the floating-point work by orders of
//! magnitude. This crate models networks as multigraphs with dimensioned
//! edges and open legs, scores orderings with an exact multiplication-count
//! cost, and searches for cheap orderings four ways:
//!
//! - [`optimize::exhaustive_search`]: branch-and-bound over all orderings,
//!   exact but limited to small edge counts;
//! - [`optimize::greedy_search`]: k-step lookahead, committing one edge at
//!   a time;
//! - [`optimize::ga_run`]: a genetic algorithm over permutations with
//!   fitness-proportional selection, elitism, and transposition mutation;
//! - [`optimize::sa_run`]: generalized simulated annealing over random-key
//!   encodings with restarts and a transposition hill climb.
//!
//! Search effort is accounted in step-cost computations ([`EvalBudget`]),
//! with E steps equal to one full evaluation of an E-edge sequence, so
//! algorithms with different evaluation granularity compare fairly. The
//! [`harness`] module reproduces the benchmark experiments (seeded sweeps,
//! equal-budget comparisons, variable-budget traces, trace export) and the
//! [`numeric`] module cross-checks the contraction semantics by executing
//! sequences on concrete dense tensors.
//!
//! All randomized components take explicit seeds and are bit-reproducible.

pub mod budget;
pub mod cost;
pub mod generators;
pub mod graph;
pub mod harness;
pub mod numeric;
pub mod optimize;
pub mod sequence;

pub use budget::{step_limit, BudgetReport, EvalBudget};
pub use cost::Cost;
pub use graph::{contract_step, BondDim, EdgeId, GraphError, LegId, TensorNetwork, VertexId};
pub use optimize::{
    exhaustive_search, fitness, ga_run, greedy_search, local_search, sa_run, GaConfig, GreedyConfig,
    OptimizeError, OptimizerResult, SaConfig, TracePoint,
};
pub use sequence::{
    decode_keys, evaluate_sequence, final_state, sequence_cost, validate_sequence, ContractionSequence,
    SequenceViolation, StepRecord,
};
