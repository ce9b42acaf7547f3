//! Genetic algorithm over contraction orderings.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::{step_limit, EvalBudget};
use crate::cost::Cost;
use crate::graph::{EdgeId, TensorNetwork};
use crate::sequence::{ContractionSequence, SequenceEvaluator};

use super::{OptimizeError, OptimizerResult, StopRule, TracePoint};

#[derive(Debug, Clone, Copy)]
pub struct GaConfig {
    pub population_size: usize,
    /// Probability that a selected individual receives one transposition.
    pub mutation_rate: f64,
    pub seed: u64,
    /// Budget in full sequence evaluations.
    pub max_full_evaluations: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            mutation_rate: 0.6,
            seed: 0,
            max_full_evaluations: 1000.0,
        }
    }
}

/// Maps a population's costs to selection fitness.
///
/// With c_min and c_max the population extremes, fitness is
/// exp((ln c_max - ln c) / (ln c_max - ln c_min)) - 0.99, which spans
/// [0.01, e - 0.99] with the cheapest individual at the top. A population
/// with all costs equal gets uniform fitness 1.0. The log-ratio is clamped
/// to [0, 1] to absorb f64 rounding at extreme magnitudes.
pub fn fitness(costs: &[Cost]) -> Result<Vec<f64>, OptimizeError> {
    if costs.is_empty() {
        return Err(OptimizeError::InvalidConfig("fitness of an empty population".into()));
    }
    let min = costs.iter().min().expect("non-empty");
    let max = costs.iter().max().expect("non-empty");
    if min == max {
        return Ok(vec![1.0; costs.len()]);
    }
    let ln_min = min.ln();
    let ln_max = max.ln();
    let span = ln_max - ln_min;
    Ok(costs
        .iter()
        .map(|c| {
            let ratio = ((ln_max - c.ln()) / span).clamp(0.0, 1.0);
            ratio.exp() - 0.99
        })
        .collect())
}

/// Runs the genetic algorithm until the evaluation budget is spent.
///
/// Every generation re-evaluates all individuals; the budget check runs
/// before each evaluation, so the overshoot is below one full evaluation.
/// Breeding: one unchanged copy of the current fittest individual, then
/// population_size - 1 fitness-proportional selections with replacement,
/// each mutated (one uniform transposition) with probability mutation_rate.
pub fn ga_run(net: &TensorNetwork, config: &GaConfig, budget: &mut EvalBudget) -> Result<OptimizerResult, OptimizeError> {
    let limit = step_limit(config.max_full_evaluations, net.edge_count());
    ga_run_with_stop(net, config, budget, StopRule::budget_only(limit))
}

pub(crate) fn ga_run_with_stop(
    net: &TensorNetwork,
    config: &GaConfig,
    budget: &mut EvalBudget,
    mut stop: StopRule<'_>,
) -> Result<OptimizerResult, OptimizeError> {
    let e = net.edge_count();
    if e < 2 {
        return Err(OptimizeError::TooFewEdges { needed: 2, got: e });
    }
    if config.population_size < 2 {
        return Err(OptimizeError::InvalidConfig("population size must be at least 2".into()));
    }
    if !(0.0..=1.0).contains(&config.mutation_rate) {
        return Err(OptimizeError::InvalidConfig(format!(
            "mutation rate {} is outside [0, 1]",
            config.mutation_rate
        )));
    }
    if config.max_full_evaluations.is_nan() || config.max_full_evaluations <= 0.0 {
        return Err(OptimizeError::InvalidConfig("evaluation budget must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let edge_ids = net.edge_ids();
    let mut evaluator = SequenceEvaluator::new(net);
    let mut population: Vec<Vec<EdgeId>> = (0..config.population_size)
        .map(|_| {
            let mut order = edge_ids.clone();
            order.shuffle(&mut rng);
            order
        })
        .collect();

    let mut best: Option<(Cost, Vec<EdgeId>)> = None;
    let mut trace: Vec<TracePoint> = Vec::new();
    'generations: loop {
        let mut costs: Vec<Cost> = Vec::with_capacity(population.len());
        for individual in &population {
            if stop.should_stop(budget, best.as_ref().map(|(c, _)| c)) {
                break 'generations;
            }
            let cost = evaluator.cost(&ContractionSequence::new(individual.clone()), budget)?;
            let improved = best.as_ref().is_none_or(|(b, _)| cost < *b);
            if improved {
                best = Some((cost.clone(), individual.clone()));
                trace.push(TracePoint {
                    full_evaluations: budget.full_evaluations(),
                    best_cost: cost.clone(),
                });
            }
            costs.push(cost);
        }
        if stop.should_stop(budget, best.as_ref().map(|(c, _)| c)) {
            break;
        }
        let weights = fitness(&costs)?;
        let selector = WeightedIndex::new(&weights)
            .map_err(|err| OptimizeError::InvalidConfig(format!("fitness weights: {err}")))?;
        let elite = costs
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| a.cmp(b))
            .expect("population non-empty")
            .0;
        let mut next: Vec<Vec<EdgeId>> = Vec::with_capacity(population.len());
        next.push(population[elite].clone());
        for _ in 1..population.len() {
            let parent = selector.sample(&mut rng);
            let mut child = population[parent].clone();
            if rng.random::<f64>() < config.mutation_rate {
                let i = rng.random_range(0..e);
                let j = rng.random_range(0..e - 1);
                let j = if j >= i { j + 1 } else { j };
                child.swap(i, j);
            }
            next.push(child);
        }
        population = next;
    }

    let (best_cost, best_order) = best.expect("budget floor guarantees one evaluation");
    Ok(OptimizerResult {
        best_sequence: ContractionSequence::new(best_order),
        best_cost,
        trace,
        evaluations: budget.report(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::validate_sequence;

    #[test]
    fn fitness_spans_the_documented_range() {
        let costs: Vec<Cost> = [100u64, 1000, 10000].into_iter().map(Cost::from).collect();
        let f = fitness(&costs).unwrap();
        assert!((f[0] - 1.7282818284590453).abs() < 1e-9, "got {}", f[0]);
        assert!((f[1] - 0.6587212707001282).abs() < 1e-9, "got {}", f[1]);
        assert!((f[2] - 0.01).abs() < 1e-12, "got {}", f[2]);
    }

    #[test]
    fn fitness_endpoints_are_exact() {
        let costs: Vec<Cost> = [7u64, 48, 96, 5000].into_iter().map(Cost::from).collect();
        let f = fitness(&costs).unwrap();
        assert!((f[0] - (std::f64::consts::E - 0.99)).abs() < 1e-15);
        assert!((f[3] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn degenerate_population_gets_uniform_fitness() {
        let costs = vec![Cost::from(22); 5];
        assert_eq!(fitness(&costs).unwrap(), vec![1.0; 5]);
    }

    #[test]
    fn selection_probabilities_sum_to_one() {
        let costs: Vec<Cost> = (1..=20u64).map(|i| Cost::from(i * i * 3 + 1)).collect();
        let f = fitness(&costs).unwrap();
        let total: f64 = f.iter().sum();
        let normalized: f64 = f.iter().map(|w| w / total).sum();
        assert!((normalized - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ga_finds_the_optimum_of_the_three_tensor_example() {
        let mut net = TensorNetwork::new();
        for v in 0..3 {
            net.add_vertex(crate::graph::VertexId(v));
        }
        net.add_edge(crate::graph::VertexId(0), crate::graph::VertexId(1), 2).unwrap();
        net.add_edge(crate::graph::VertexId(0), crate::graph::VertexId(2), 2).unwrap();
        net.add_open_leg(crate::graph::VertexId(0), 2).unwrap();
        net.add_open_leg(crate::graph::VertexId(0), 2).unwrap();
        net.add_open_leg(crate::graph::VertexId(2), 2).unwrap();
        net.add_open_leg(crate::graph::VertexId(2), 2).unwrap();
        let mut budget = EvalBudget::new(2);
        let config = GaConfig {
            max_full_evaluations: 60.0,
            ..GaConfig::default()
        };
        let result = ga_run(&net, &config, &mut budget).unwrap();
        assert_eq!(result.best_cost, Cost::from(48));
        validate_sequence(&net, &result.best_sequence).unwrap();
    }

    #[test]
    fn ga_respects_its_budget_within_one_evaluation() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 3, chi: 4 }).unwrap();
        let e = net.edge_count() as u64;
        for max in [1.0, 7.5, 33.0] {
            let mut budget = EvalBudget::new(e as usize);
            let config = GaConfig {
                max_full_evaluations: max,
                seed: 9,
                ..GaConfig::default()
            };
            ga_run(&net, &config, &mut budget).unwrap();
            let limit = (max * e as f64).round() as u64;
            assert!(budget.step_computations() >= limit.min(e));
            assert!(
                budget.step_computations() < limit + e,
                "spent {} steps against a limit of {limit}",
                budget.step_computations()
            );
        }
    }

    #[test]
    fn ga_is_bit_reproducible() {
        let net = crate::generators::erdos_renyi(&crate::generators::ErdosRenyiSpec {
            vertices: 7,
            edge_probability: 0.8,
            chi: 3,
            seed: 17,
        })
        .unwrap();
        let config = GaConfig {
            max_full_evaluations: 80.0,
            seed: 31,
            ..GaConfig::default()
        };
        let mut b1 = EvalBudget::new(net.edge_count());
        let mut b2 = EvalBudget::new(net.edge_count());
        let r1 = ga_run(&net, &config, &mut b1).unwrap();
        let r2 = ga_run(&net, &config, &mut b2).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn ga_trace_is_non_increasing() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 3, chi: 7 }).unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        let config = GaConfig {
            max_full_evaluations: 150.0,
            seed: 2,
            ..GaConfig::default()
        };
        let result = ga_run(&net, &config, &mut budget).unwrap();
        for pair in result.trace.windows(2) {
            assert!(pair[1].best_cost < pair[0].best_cost);
            assert!(pair[1].full_evaluations >= pair[0].full_evaluations);
        }
        assert_eq!(result.trace.last().unwrap().best_cost, result.best_cost);
    }

    #[test]
    fn ga_rejects_single_edge_networks() {
        let mut net = TensorNetwork::new();
        net.add_vertex(crate::graph::VertexId(0));
        net.add_edge(crate::graph::VertexId(0), crate::graph::VertexId(0), 3).unwrap();
        let mut budget = EvalBudget::new(1);
        let err = ga_run(&net, &GaConfig::default(), &mut budget).unwrap_err();
        assert!(matches!(err, OptimizeError::TooFewEdges { needed: 2, got: 1 }));
    }
}
