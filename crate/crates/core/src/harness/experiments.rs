use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::budget::{step_limit, EvalBudget};
use crate::cost::Cost;
use crate::generators::{erdos_renyi, load_network, square_lattice, ErdosRenyiSpec, SquareSpec};
use crate::graph::{BondDim, TensorNetwork};
use crate::optimize::{
    exhaustive_search_with, ga_run_with_stop, greedy_search, sa_run_with_stop, ExhaustiveConfig, GaConfig,
    GreedyConfig, OptimizerResult, SaConfig, StopRule, TracePoint, EXHAUSTIVE_EDGE_GUARD,
};
use crate::sequence::{sequence_cost, ContractionSequence};

use super::stats::compute_stats;
use super::HarnessError;

/// Rough bound on the multiplications a desktop machine can do in about a
/// day. Emitted as an annotation in CSV headers, never used as a cutoff.
pub const DESKTOP_LIMIT_MULTIPLICATIONS: u64 = 10_000_000_000_000_000;

/// Which benchmark networks a sweep runs over.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// L x L lattices; sweep sizes are the side lengths L.
    Square { chi: BondDim },
    /// G(n, p) networks; sweep sizes are the vertex counts n. By default a
    /// fresh instance is drawn per run (seed = base + run); with
    /// `fixed_instance` every run shares the instance drawn at the base seed.
    ErdosRenyi {
        edge_probability: f64,
        chi: BondDim,
        fixed_instance: bool,
    },
    /// A single network loaded from a file; its sweep size is its vertex
    /// count.
    File { path: PathBuf },
}

/// An algorithm entry in a sweep. Seeds and budgets are assigned by the
/// harness per run; these hold only the algorithm-intrinsic knobs.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgSpec {
    Exhaustive { force: bool },
    Greedy { lookahead: usize },
    Ga { population_size: usize, mutation_rate: f64 },
    Sa {
        initial_temp: f64,
        restart_temp_ratio: f64,
        visit: f64,
        accept: f64,
        local_search: bool,
    },
}

impl AlgSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgSpec::Exhaustive { .. } => "exhaustive",
            AlgSpec::Greedy { .. } => "greedy",
            AlgSpec::Ga { .. } => "ga",
            AlgSpec::Sa { .. } => "sa",
        }
    }

    pub fn greedy_default() -> Self {
        let cfg = GreedyConfig::default();
        AlgSpec::Greedy { lookahead: cfg.lookahead }
    }

    pub fn ga_default() -> Self {
        let cfg = GaConfig::default();
        AlgSpec::Ga {
            population_size: cfg.population_size,
            mutation_rate: cfg.mutation_rate,
        }
    }

    pub fn sa_default() -> Self {
        let cfg = SaConfig::default();
        AlgSpec::Sa {
            initial_temp: cfg.initial_temp,
            restart_temp_ratio: cfg.restart_temp_ratio,
            visit: cfg.visit,
            accept: cfg.accept,
            local_search: cfg.local_search,
        }
    }
}

/// How each run's evaluation budget is set.
#[derive(Debug, Clone, PartialEq)]
pub enum BudgetPolicy {
    /// Stochastic algorithms get this many full evaluations.
    Fixed { max_full_evaluations: f64 },
    /// Per run, greedy executes first and its measured incremental step-cost
    /// computation count becomes the stochastic algorithms' budget in full
    /// evaluations: one objective call per greedy step computation. Greedy
    /// scores candidates through cheap incremental steps while the
    /// stochastic algorithms pay E steps per objective call, so matching
    /// raw computation counts is what makes the comparison equal-effort.
    MatchGreedy,
    /// Stochastic algorithms stop once estimated search work (steps times
    /// flops-per-evaluation) reaches the best cost found; `None` means
    /// E * 10 flops per evaluation.
    TimeRemaining { flops_per_eval: Option<f64> },
}

/// One sweep: a family, the sizes to visit, the algorithms to compare, and
/// how many seeded runs per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub family: Family,
    pub sizes: Vec<u32>,
    pub algorithms: Vec<AlgSpec>,
    pub runs: usize,
    pub base_seed: u64,
    pub budget: BudgetPolicy,
}

/// Result of one (size, algorithm, run) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub size: u32,
    pub algorithm: &'static str,
    pub run: usize,
    pub seed: u64,
    pub edge_count: usize,
    pub cost: Cost,
    pub full_evaluations: f64,
}

/// Aggregate of one (size, algorithm) column over all runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRecord {
    pub size: u32,
    pub algorithm: &'static str,
    pub runs: usize,
    pub median_cost: Cost,
    pub best_cost: Cost,
    pub log_std: f64,
    pub mean_full_evaluations: f64,
}

/// Everything a sweep produced: per-run rows plus per-column summaries,
/// both ordered by (size, algorithm, run) with algorithms in spec order.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<RunRecord>,
    pub summaries: Vec<SummaryRecord>,
}

impl SweepReport {
    /// Per-run costs of one (size, algorithm) column, in run order.
    pub fn costs(&self, size: u32, algorithm: &str) -> Vec<Cost> {
        self.runs
            .iter()
            .filter(|r| r.size == size && r.algorithm == algorithm)
            .map(|r| r.cost.clone())
            .collect()
    }

    pub fn summary(&self, size: u32, algorithm: &str) -> Option<&SummaryRecord> {
        self.summaries
            .iter()
            .find(|s| s.size == size && s.algorithm == algorithm)
    }
}

/// One checkpointed point of a variable-budget trace.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableBudgetRow {
    pub algorithm: &'static str,
    pub full_evaluations: f64,
    pub best_cost: Cost,
}

enum BudgetMode {
    /// The algorithm's intrinsic termination (greedy, exhaustive).
    Unlimited,
    /// Stop at this many full evaluations.
    Evals(f64),
    /// Stop when steps * flops_per_eval reaches the best cost found.
    TimeRemaining { flops_per_eval: f64 },
}

/// Builds a rayon pool honoring `TNOPT_THREADS` (a positive integer caps
/// the worker count; anything else falls back to rayon's default).
fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("TNOPT_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                builder = builder.num_threads(n);
            }
        }
    }
    builder.build().expect("rayon pool")
}

fn validate_spec(spec: &ExperimentSpec) -> Result<(), HarnessError> {
    if spec.algorithms.is_empty() {
        return Err(HarnessError::EmptySpec("algorithm"));
    }
    if spec.runs < 1 {
        return Err(HarnessError::EmptySpec("run"));
    }
    if !matches!(spec.family, Family::File { .. }) && spec.sizes.is_empty() {
        return Err(HarnessError::EmptySpec("size"));
    }
    if matches!(spec.budget, BudgetPolicy::MatchGreedy)
        && !spec.algorithms.iter().any(|a| matches!(a, AlgSpec::Greedy { .. }))
    {
        return Err(HarnessError::NoGreedyToMatch);
    }
    Ok(())
}

fn effective_sizes(spec: &ExperimentSpec) -> Result<Vec<u32>, HarnessError> {
    match &spec.family {
        Family::File { path } => {
            let net = load_network(path)?;
            Ok(vec![net.vertex_count() as u32])
        }
        _ => Ok(spec.sizes.clone()),
    }
}

fn instance(spec: &ExperimentSpec, size: u32, run: usize) -> Result<TensorNetwork, HarnessError> {
    match &spec.family {
        Family::Square { chi } => Ok(square_lattice(&SquareSpec { side: size, chi: *chi })?),
        Family::ErdosRenyi {
            edge_probability,
            chi,
            fixed_instance,
        } => {
            let seed = if *fixed_instance {
                spec.base_seed
            } else {
                spec.base_seed + run as u64
            };
            Ok(erdos_renyi(&ErdosRenyiSpec {
                vertices: size,
                edge_probability: *edge_probability,
                chi: *chi,
                seed,
            })?)
        }
        Family::File { path } => Ok(load_network(path)?),
    }
}

/// Completes a degenerate network (fewer edges than the algorithm needs)
/// by evaluating the only sensible sequence: all edges ascending.
fn trivial_result(net: &TensorNetwork) -> Result<OptimizerResult, HarnessError> {
    let seq = ContractionSequence::new(net.edge_ids());
    let mut budget = EvalBudget::new(net.edge_count());
    let cost = sequence_cost(net, &seq, &mut budget)?;
    Ok(OptimizerResult {
        best_sequence: seq,
        best_cost: cost.clone(),
        trace: vec![TracePoint {
            full_evaluations: budget.full_evaluations(),
            best_cost: cost,
        }],
        evaluations: budget.report(),
    })
}

/// Runs one algorithm on one network. Returns `None` only when a sweep
/// skips exhaustive search above its edge guard (`skip_guarded`).
fn execute_alg(
    net: &TensorNetwork,
    alg: &AlgSpec,
    seed: u64,
    mode: BudgetMode,
    skip_guarded: bool,
) -> Result<Option<OptimizerResult>, HarnessError> {
    let e = net.edge_count();
    match alg {
        AlgSpec::Exhaustive { force } => {
            if e == 0 {
                return Ok(Some(trivial_result(net)?));
            }
            if e > EXHAUSTIVE_EDGE_GUARD && !force && skip_guarded {
                return Ok(None);
            }
            let mut budget = EvalBudget::new(e);
            let result = exhaustive_search_with(net, &ExhaustiveConfig { force: *force }, &mut budget)?;
            Ok(Some(result))
        }
        AlgSpec::Greedy { lookahead } => {
            if e == 0 {
                return Ok(Some(trivial_result(net)?));
            }
            let mut budget = EvalBudget::new(e);
            let config = GreedyConfig {
                lookahead: *lookahead,
                seed,
            };
            Ok(Some(greedy_search(net, &config, &mut budget)?))
        }
        AlgSpec::Ga {
            population_size,
            mutation_rate,
        } => {
            if e < 2 {
                return Ok(Some(trivial_result(net)?));
            }
            let config = GaConfig {
                population_size: *population_size,
                mutation_rate: *mutation_rate,
                seed,
                max_full_evaluations: mode_evals(&mode),
            };
            let mut budget = EvalBudget::new(e);
            let result = with_stop_rule(&mode, e, |stop| ga_run_with_stop(net, &config, &mut budget, stop))?;
            Ok(Some(result))
        }
        AlgSpec::Sa {
            initial_temp,
            restart_temp_ratio,
            visit,
            accept,
            local_search,
        } => {
            if e < 2 {
                return Ok(Some(trivial_result(net)?));
            }
            let config = SaConfig {
                initial_temp: *initial_temp,
                restart_temp_ratio: *restart_temp_ratio,
                visit: *visit,
                accept: *accept,
                local_search: *local_search,
                seed,
                max_full_evaluations: mode_evals(&mode),
            };
            let mut budget = EvalBudget::new(e);
            let result = with_stop_rule(&mode, e, |stop| sa_run_with_stop(net, &config, &mut budget, stop))?;
            Ok(Some(result))
        }
    }
}

fn mode_evals(mode: &BudgetMode) -> f64 {
    match mode {
        BudgetMode::Evals(b) => *b,
        BudgetMode::Unlimited | BudgetMode::TimeRemaining { .. } => f64::INFINITY,
    }
}

fn with_stop_rule<T>(
    mode: &BudgetMode,
    edge_count: usize,
    run: impl FnOnce(StopRule<'_>) -> Result<T, crate::optimize::OptimizeError>,
) -> Result<T, HarnessError> {
    match mode {
        BudgetMode::Evals(b) => Ok(run(StopRule::budget_only(step_limit(*b, edge_count)))?),
        BudgetMode::Unlimited => Ok(run(StopRule::budget_only(u64::MAX))?),
        BudgetMode::TimeRemaining { flops_per_eval } => {
            let flops = *flops_per_eval;
            // Compared in the ln domain so enormous exact costs never need a
            // lossy conversion; a one-granule slack is inherent to the rule.
            let mut extra = move |budget: &EvalBudget, best: Option<&Cost>| match best {
                Some(best) => (budget.step_computations() as f64 * flops).ln() >= best.ln(),
                None => false,
            };
            Ok(run(StopRule {
                limit_steps: u64::MAX,
                extra: Some(&mut extra),
            })?)
        }
    }
}

/// Runs every algorithm on one instance; slots align with the algorithm
/// list, `None` marking skipped entries.
fn run_cell(
    spec: &ExperimentSpec,
    size: u32,
    run: usize,
) -> Result<Vec<Option<RunRecord>>, HarnessError> {
    let net = instance(spec, size, run)?;
    let e = net.edge_count();
    let seed = spec.base_seed + run as u64;

    let reference_greedy = match spec.budget {
        BudgetPolicy::MatchGreedy => {
            let idx = spec
                .algorithms
                .iter()
                .position(|a| matches!(a, AlgSpec::Greedy { .. }))
                .expect("validated");
            let result = execute_alg(&net, &spec.algorithms[idx], seed, BudgetMode::Unlimited, true)?
                .expect("greedy always produces a result");
            Some((idx, result))
        }
        _ => None,
    };

    let mut records = Vec::with_capacity(spec.algorithms.len());
    for (idx, alg) in spec.algorithms.iter().enumerate() {
        let result = match (&reference_greedy, alg) {
            (Some((gi, greedy)), _) if *gi == idx => Some(greedy.clone()),
            (Some(_), AlgSpec::Exhaustive { .. } | AlgSpec::Greedy { .. }) => {
                execute_alg(&net, alg, seed, BudgetMode::Unlimited, true)?
            }
            (Some((_, greedy)), _) => {
                let b = greedy.evaluations.step_computations as f64;
                execute_alg(&net, alg, seed, BudgetMode::Evals(b), true)?
            }
            (None, _) => {
                let mode = match &spec.budget {
                    BudgetPolicy::Fixed { max_full_evaluations } => match alg {
                        AlgSpec::Exhaustive { .. } | AlgSpec::Greedy { .. } => BudgetMode::Unlimited,
                        _ => BudgetMode::Evals(*max_full_evaluations),
                    },
                    BudgetPolicy::TimeRemaining { flops_per_eval } => match alg {
                        AlgSpec::Exhaustive { .. } | AlgSpec::Greedy { .. } => BudgetMode::Unlimited,
                        _ => BudgetMode::TimeRemaining {
                            flops_per_eval: flops_per_eval.unwrap_or(e as f64 * 10.0),
                        },
                    },
                    BudgetPolicy::MatchGreedy => unreachable!("handled above"),
                };
                execute_alg(&net, alg, seed, mode, true)?
            }
        };
        records.push(result.map(|r| RunRecord {
            size,
            algorithm: alg.name(),
            run,
            seed,
            edge_count: e,
            cost: r.best_cost,
            full_evaluations: r.evaluations.full_evaluations,
        }));
    }
    Ok(records)
}

/// Runs the full sweep: every (size, run) cell in parallel, then aggregates
/// per (size, algorithm). Deterministic for a given spec regardless of the
/// thread count.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepReport, HarnessError> {
    validate_spec(spec)?;
    let sizes = effective_sizes(spec)?;
    let cells: Vec<(u32, usize)> = sizes
        .iter()
        .flat_map(|&size| (0..spec.runs).map(move |run| (size, run)))
        .collect();
    let pool = thread_pool();
    let results: Vec<Result<Vec<Option<RunRecord>>, HarnessError>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(size, run)| run_cell(spec, size, run))
            .collect()
    });
    let mut by_cell = Vec::with_capacity(results.len());
    for r in results {
        by_cell.push(r?);
    }

    let mut runs = Vec::new();
    let mut summaries = Vec::new();
    for (si, &size) in sizes.iter().enumerate() {
        for (ai, alg) in spec.algorithms.iter().enumerate() {
            let mut costs = Vec::new();
            let mut evals_sum = 0.0;
            for run in 0..spec.runs {
                if let Some(record) = &by_cell[si * spec.runs + run][ai] {
                    costs.push(record.cost.clone());
                    evals_sum += record.full_evaluations;
                    runs.push(record.clone());
                }
            }
            if let Some(stats) = compute_stats(&costs) {
                summaries.push(SummaryRecord {
                    size,
                    algorithm: alg.name(),
                    runs: stats.count,
                    median_cost: stats.median,
                    best_cost: stats.best,
                    log_std: stats.std_log10,
                    mean_full_evaluations: evals_sum / stats.count as f64,
                });
            }
        }
    }
    Ok(SweepReport { runs, summaries })
}

/// Equal-budget comparison: shorthand for [`run_sweep`] with the
/// match-greedy policy, which the experiment spec must already carry.
pub fn run_equal_budget(spec: &ExperimentSpec) -> Result<SweepReport, HarnessError> {
    if spec.budget != BudgetPolicy::MatchGreedy {
        return Err(HarnessError::NotMatchGreedy);
    }
    run_sweep(spec)
}

/// Best-cost-so-far against budget for each algorithm on one network.
///
/// Stochastic algorithms run ONCE to the last checkpoint and report their
/// best cost at every checkpoint along the way; greedy and exhaustive are
/// fixed-budget, so each contributes a single measured point. Checkpoints
/// a stochastic run never reached (below its first evaluation) are omitted.
pub fn run_variable_budget(
    net: &TensorNetwork,
    algorithms: &[AlgSpec],
    checkpoints: &[f64],
    seed: u64,
) -> Result<Vec<VariableBudgetRow>, HarnessError> {
    if algorithms.is_empty() {
        return Err(HarnessError::EmptySpec("algorithm"));
    }
    if checkpoints.is_empty()
        || checkpoints.iter().any(|b| !b.is_finite() || *b <= 0.0)
        || checkpoints.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(HarnessError::BadCheckpoints);
    }
    let last = *checkpoints.last().expect("non-empty");
    let mut rows = Vec::new();
    for alg in algorithms {
        match alg {
            AlgSpec::Exhaustive { .. } | AlgSpec::Greedy { .. } => {
                if let Some(result) = execute_alg(net, alg, seed, BudgetMode::Unlimited, true)? {
                    rows.push(VariableBudgetRow {
                        algorithm: alg.name(),
                        full_evaluations: result.evaluations.full_evaluations,
                        best_cost: result.best_cost,
                    });
                }
            }
            _ => {
                let result = execute_alg(net, alg, seed, BudgetMode::Evals(last), true)?
                    .expect("stochastic algorithms always run");
                for &checkpoint in checkpoints {
                    let reached = result
                        .trace
                        .iter()
                        .take_while(|p| p.full_evaluations <= checkpoint)
                        .last();
                    if let Some(point) = reached {
                        rows.push(VariableBudgetRow {
                            algorithm: alg.name(),
                            full_evaluations: checkpoint,
                            best_cost: point.best_cost.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Runs one algorithm under the time-remaining stopping rule: optimization
/// stops once its spent step computations, valued at `flops_per_eval`
/// multiplications each, reach the best contraction cost found. Bounds
/// total work at roughly twice the final contraction. `None` means
/// E * 10 flops per evaluation. Fixed-budget algorithms (greedy,
/// exhaustive) simply run to completion.
pub fn time_remaining_run(
    net: &TensorNetwork,
    alg: &AlgSpec,
    flops_per_eval: Option<f64>,
    seed: u64,
) -> Result<OptimizerResult, HarnessError> {
    let flops = flops_per_eval.unwrap_or(net.edge_count() as f64 * 10.0);
    if !(flops.is_finite() && flops > 0.0) {
        return Err(HarnessError::BadFlopsPerEval(flops));
    }
    let mode = match alg {
        AlgSpec::Exhaustive { .. } | AlgSpec::Greedy { .. } => BudgetMode::Unlimited,
        _ => BudgetMode::TimeRemaining { flops_per_eval: flops },
    };
    Ok(execute_alg(net, alg, seed, mode, false)?.expect("not skipped"))
}

fn push_comment_header(out: &mut String, title: &str) {
    writeln!(out, "# {title}").expect("string write");
    writeln!(
        out,
        "# cost columns appear as exact integers and as log10 floats; medians use the lower median"
    )
    .expect("string write");
    writeln!(
        out,
        "# desktop_limit_multiplications = {DESKTOP_LIMIT_MULTIPLICATIONS} (annotation only, never a cutoff)"
    )
    .expect("string write");
}

/// Renders the per-run rows of a sweep as CSV (with `#` comment headers).
pub fn render_runs_csv(report: &SweepReport) -> String {
    let mut out = String::new();
    push_comment_header(&mut out, "per-run contraction-ordering results");
    writeln!(out, "size,algorithm,run,seed,edge_count,full_evaluations,cost,log10_cost").expect("string write");
    for r in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6}",
            r.size,
            r.algorithm,
            r.run,
            r.seed,
            r.edge_count,
            r.full_evaluations,
            r.cost,
            r.cost.log10()
        )
        .expect("string write");
    }
    out
}

/// Renders the per-(size, algorithm) summaries of a sweep as CSV.
pub fn render_summary_csv(report: &SweepReport) -> String {
    let mut out = String::new();
    push_comment_header(&mut out, "sweep summary: one row per (size, algorithm)");
    writeln!(
        out,
        "size,algorithm,runs,median_cost,log10_median_cost,best_cost,log10_best_cost,log_std,mean_full_evaluations"
    )
    .expect("string write");
    for s in &report.summaries {
        writeln!(
            out,
            "{},{},{},{},{:.6},{},{:.6},{:.6},{}",
            s.size,
            s.algorithm,
            s.runs,
            s.median_cost,
            s.median_cost.log10(),
            s.best_cost,
            s.best_cost.log10(),
            s.log_std,
            s.mean_full_evaluations
        )
        .expect("string write");
    }
    out
}

/// Renders a variable-budget trace table as CSV.
pub fn render_variable_csv(rows: &[VariableBudgetRow]) -> String {
    let mut out = String::new();
    push_comment_header(&mut out, "variable-budget best-cost traces");
    writeln!(out, "algorithm,full_evaluations,best_cost,log10_best_cost").expect("string write");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6}",
            r.algorithm,
            r.full_evaluations,
            r.best_cost,
            r.best_cost.log10()
        )
        .expect("string write");
    }
    out
}
