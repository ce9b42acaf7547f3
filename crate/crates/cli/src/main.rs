use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tnopt_core::generators::{erdos_renyi, load_network, ErdosRenyiSpec, SquareSpec};
use tnopt_core::harness::{
    compute_stats, export_sequence_trace, handcrafted_row_sequence, render_runs_csv, render_summary_csv,
    render_variable_csv, run_sweep, run_variable_budget, time_remaining_run, AlgSpec, BudgetPolicy,
    ExperimentSpec, Family,
};
use tnopt_core::numeric::{execute, max_relative_deviation, random_assignment, FinalTensor};
use tnopt_core::optimize::{exhaustive_search_with, ExhaustiveConfig};
use tnopt_core::{
    ga_run, greedy_search, sa_run, ContractionSequence, Cost, EvalBudget, GaConfig, GreedyConfig,
    SaConfig, TensorNetwork,
};

#[derive(Parser)]
#[command(
    name = "tnopt",
    version,
    about = "Find low-cost contraction sequences for tensor networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark networks
    Gen {
        #[command(subcommand)]
        family: GenCommand,
    },
    /// Run one optimizer on one network
    Optimize(OptimizeArgs),
    /// Run seeded experiment sweeps, writing CSV tables
    Sweep {
        #[command(subcommand)]
        mode: SweepCommand,
    },
    /// Export a per-step trace (JSON + DOT) of a contraction sequence
    Trace(TraceArgs),
    /// Check numerically that random orderings give identical results
    Verify(VerifyArgs),
    /// Summary statistics over a list of exact costs
    Stats(StatsArgs),
}

#[derive(Subcommand)]
enum GenCommand {
    /// L x L square lattice with uniform bond dimension
    Square {
        /// Vertices per side
        #[arg(long)]
        side: u32,
        /// Bond dimension of every edge
        #[arg(long)]
        chi: u64,
        /// Also write the handcrafted row-by-row baseline sequence to this file
        #[arg(long)]
        row_sequence: Option<PathBuf>,
        /// Output file (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Erdos-Renyi G(n, p) network with uniform bond dimension
    Er {
        #[arg(long)]
        vertices: u32,
        /// Probability of each vertex pair receiving an edge
        #[arg(long)]
        probability: f64,
        #[arg(long)]
        chi: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file (stdout when omitted)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgName {
    Exhaustive,
    Greedy,
    Ga,
    Sa,
}

/// Algorithm tuning knobs shared by `optimize` and the sweep commands.
#[derive(Args)]
struct TuningArgs {
    /// Exhaustive: search past the edge-count guard
    #[arg(long)]
    force: bool,
    /// Greedy: lookahead depth k
    #[arg(long, default_value_t = GreedyConfig::default().lookahead)]
    lookahead: usize,
    /// GA: population size
    #[arg(long, default_value_t = GaConfig::default().population_size)]
    pop: usize,
    /// GA: per-individual transposition probability
    #[arg(long, default_value_t = GaConfig::default().mutation_rate)]
    mutation: f64,
    /// SA: initial visiting temperature
    #[arg(long, default_value_t = SaConfig::default().initial_temp)]
    initial_temp: f64,
    /// SA: restart when the temperature falls below this fraction of start
    #[arg(long, default_value_t = SaConfig::default().restart_temp_ratio)]
    restart_ratio: f64,
    /// SA: visiting distribution shape q_v
    #[arg(long, default_value_t = SaConfig::default().visit)]
    visit: f64,
    /// SA: acceptance shape q_a
    #[arg(long, allow_negative_numbers = true, default_value_t = SaConfig::default().accept)]
    accept: f64,
    /// SA: disable the transposition hill climb
    #[arg(long)]
    no_local_search: bool,
}

impl TuningArgs {
    fn spec(&self, name: AlgName) -> AlgSpec {
        match name {
            AlgName::Exhaustive => AlgSpec::Exhaustive { force: self.force },
            AlgName::Greedy => AlgSpec::Greedy {
                lookahead: self.lookahead,
            },
            AlgName::Ga => AlgSpec::Ga {
                population_size: self.pop,
                mutation_rate: self.mutation,
            },
            AlgName::Sa => AlgSpec::Sa {
                initial_temp: self.initial_temp,
                restart_temp_ratio: self.restart_ratio,
                visit: self.visit,
                accept: self.accept,
                local_search: !self.no_local_search,
            },
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    /// Network JSON file
    #[arg(long)]
    net: PathBuf,
    #[arg(long, value_enum)]
    alg: AlgName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget in full sequence evaluations (GA and SA)
    #[arg(long, default_value_t = 1000.0)]
    budget: f64,
    /// Stop by the time-remaining rule instead of a fixed budget
    #[arg(long)]
    time_remaining: bool,
    /// Multiplications one evaluation is worth under --time-remaining
    /// (defaults to 10 E)
    #[arg(long)]
    flops_per_eval: Option<f64>,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Output file (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SweepCommand {
    /// Per run, greedy runs first and fixes the stochastic budget
    Equal(SweepArgs),
    /// All stochastic runs get the same fixed budget
    Fixed {
        /// Budget in full sequence evaluations
        #[arg(long)]
        budget: f64,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Stochastic runs stop at the time-remaining break-even point
    TimeRemaining {
        /// Multiplications one evaluation is worth (defaults to 10 E)
        #[arg(long)]
        flops_per_eval: Option<f64>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Best-cost-vs-budget traces for one network
    Variable(VariableArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Network family: "square", "er", or a network JSON file path
    #[arg(long)]
    family: String,
    /// Sizes to visit (side lengths for square, vertex counts for er)
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<u32>,
    #[arg(long, default_value_t = 10)]
    chi: u64,
    /// Edge probability (er family)
    #[arg(long, default_value_t = 0.8)]
    probability: f64,
    /// Reuse the base-seed instance for every run (er family)
    #[arg(long)]
    fixed_instance: bool,
    /// Algorithms to compare, comma separated
    #[arg(long, value_delimiter = ',', required = true)]
    algs: Vec<AlgName>,
    #[arg(long, default_value_t = 20)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Directory receiving runs.csv and summary.csv
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VariableArgs {
    /// Network JSON file
    #[arg(long)]
    net: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    algs: Vec<AlgName>,
    /// Budget checkpoints in full evaluations, strictly ascending
    #[arg(long, value_delimiter = ',', required = true)]
    checkpoints: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Output CSV file (stdout when omitted)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TraceArgs {
    /// Network JSON file
    #[arg(long)]
    net: PathBuf,
    /// Sequence JSON file ({"order": [...]})
    #[arg(long)]
    seq: PathBuf,
    /// Directory receiving trace.json and the DOT files
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Network JSON file
    #[arg(long)]
    net: PathBuf,
    /// Number of random orderings to execute and compare
    #[arg(long, default_value_t = 4)]
    orders: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum allowed relative deviation between orderings
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
}

#[derive(Args)]
struct StatsArgs {
    /// Costs as exact decimal integers
    #[arg(required = true)]
    costs: Vec<String>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { family } => gen(family),
        Command::Optimize(args) => optimize(args),
        Command::Sweep { mode } => sweep(mode),
        Command::Trace(args) => trace(args),
        Command::Verify(args) => verify(args),
        Command::Stats(args) => stats(args),
    }
}

/// Writes `text` to the file or stdout; file contents always end with a
/// newline so repeated runs are byte-comparable.
fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

fn gen(command: GenCommand) -> Result<()> {
    match command {
        GenCommand::Square {
            side,
            chi,
            row_sequence,
            output,
        } => {
            let net = tnopt_core::generators::square_lattice(&SquareSpec { side, chi })?;
            if let Some(path) = row_sequence {
                let seq = handcrafted_row_sequence(side)?;
                emit(Some(&path), &to_pretty_json(&seq))?;
            }
            emit(output.as_deref(), &to_pretty_json(&net))
        }
        GenCommand::Er {
            vertices,
            probability,
            chi,
            seed,
            output,
        } => {
            let net = erdos_renyi(&ErdosRenyiSpec {
                vertices,
                edge_probability: probability,
                chi,
                seed,
            })?;
            emit(output.as_deref(), &to_pretty_json(&net))
        }
    }
}

fn optimize(args: OptimizeArgs) -> Result<()> {
    let net = load_network(&args.net)?;
    let result = if args.time_remaining {
        time_remaining_run(&net, &args.tuning.spec(args.alg), args.flops_per_eval, args.seed)?
    } else {
        let mut budget = EvalBudget::new(net.edge_count());
        match args.alg {
            AlgName::Exhaustive => exhaustive_search_with(
                &net,
                &ExhaustiveConfig {
                    force: args.tuning.force,
                },
                &mut budget,
            )?,
            AlgName::Greedy => greedy_search(
                &net,
                &GreedyConfig {
                    lookahead: args.tuning.lookahead,
                    seed: args.seed,
                },
                &mut budget,
            )?,
            AlgName::Ga => ga_run(
                &net,
                &GaConfig {
                    population_size: args.tuning.pop,
                    mutation_rate: args.tuning.mutation,
                    seed: args.seed,
                    max_full_evaluations: args.budget,
                },
                &mut budget,
            )?,
            AlgName::Sa => sa_run(
                &net,
                &SaConfig {
                    initial_temp: args.tuning.initial_temp,
                    restart_temp_ratio: args.tuning.restart_ratio,
                    visit: args.tuning.visit,
                    accept: args.tuning.accept,
                    local_search: !args.tuning.no_local_search,
                    seed: args.seed,
                    max_full_evaluations: args.budget,
                },
                &mut budget,
            )?,
        }
    };
    emit(args.output.as_deref(), &to_pretty_json(&result))
}

fn family_from_flag(args: &SweepArgs) -> Family {
    match args.family.as_str() {
        "square" => Family::Square { chi: args.chi },
        "er" => Family::ErdosRenyi {
            edge_probability: args.probability,
            chi: args.chi,
            fixed_instance: args.fixed_instance,
        },
        path => Family::File { path: path.into() },
    }
}

fn sweep(mode: SweepCommand) -> Result<()> {
    let (args, budget) = match mode {
        SweepCommand::Equal(args) => (args, BudgetPolicy::MatchGreedy),
        SweepCommand::Fixed { budget, sweep } => (
            sweep,
            BudgetPolicy::Fixed {
                max_full_evaluations: budget,
            },
        ),
        SweepCommand::TimeRemaining { flops_per_eval, sweep } => {
            (sweep, BudgetPolicy::TimeRemaining { flops_per_eval })
        }
        SweepCommand::Variable(args) => return sweep_variable(args),
    };
    let spec = ExperimentSpec {
        family: family_from_flag(&args),
        sizes: args.sizes.clone(),
        algorithms: args.algs.iter().map(|a| args.tuning.spec(*a)).collect(),
        runs: args.runs,
        base_seed: args.seed,
        budget,
    };
    let report = run_sweep(&spec)?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    for (name, text) in [
        ("runs.csv", render_runs_csv(&report)),
        ("summary.csv", render_summary_csv(&report)),
    ] {
        let path = args.out_dir.join(name);
        emit(Some(&path), &text)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn sweep_variable(args: VariableArgs) -> Result<()> {
    let net = load_network(&args.net)?;
    let algorithms: Vec<AlgSpec> = args.algs.iter().map(|a| args.tuning.spec(*a)).collect();
    let rows = run_variable_budget(&net, &algorithms, &args.checkpoints, args.seed)?;
    emit(args.output.as_deref(), &render_variable_csv(&rows))
}

fn trace(args: TraceArgs) -> Result<()> {
    let net = load_network(&args.net)?;
    let text = std::fs::read_to_string(&args.seq).with_context(|| format!("reading {}", args.seq.display()))?;
    let seq: ContractionSequence =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.seq.display()))?;
    let summary = export_sequence_trace(&net, &seq, &args.out_dir)?;
    for file in &summary.files {
        eprintln!("wrote {}", file.display());
    }
    println!("total_cost {}", summary.total_cost);
    Ok(())
}

fn random_order(net: &TensorNetwork, rng: &mut ChaCha8Rng) -> ContractionSequence {
    let mut order = net.edge_ids();
    order.shuffle(rng);
    ContractionSequence::new(order)
}

fn verify(args: VerifyArgs) -> Result<()> {
    if args.orders < 2 {
        bail!("need at least 2 orderings to compare");
    }
    let net = load_network(&args.net)?;
    let assignment = random_assignment(&net, args.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(1));
    let mut reference: Option<Vec<FinalTensor>> = None;
    let mut worst: f64 = 0.0;
    for _ in 0..args.orders {
        let seq = random_order(&net, &mut rng);
        let finals = execute(&net, &assignment, &seq)?;
        match &reference {
            None => reference = Some(finals),
            Some(baseline) => worst = worst.max(max_relative_deviation(baseline, &finals)?),
        }
    }
    let ok = worst <= args.tolerance;
    let report = serde_json::json!({
        "orders": args.orders,
        "max_relative_deviation": worst,
        "tolerance": args.tolerance,
        "ok": ok,
    });
    println!("{report:#}");
    if !ok {
        bail!("orderings deviate by {worst:e}, above tolerance {:e}", args.tolerance);
    }
    Ok(())
}

fn stats(args: StatsArgs) -> Result<()> {
    let costs: Vec<Cost> = args
        .costs
        .iter()
        .map(|raw| raw.parse::<Cost>().with_context(|| format!("parsing cost {raw:?}")))
        .collect::<Result<_>>()?;
    let s = compute_stats(&costs).expect("clap enforces at least one cost");
    let report = serde_json::json!({
        "count": s.count,
        "best": s.best.to_string(),
        "median": s.median.to_string(),
        "mean_log10": s.mean_log10,
        "std_log10": s.std_log10,
    });
    println!("{report:#}");
    Ok(())
}
