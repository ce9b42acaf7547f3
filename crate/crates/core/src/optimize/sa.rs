//! Generalized simulated annealing over random keys.
//!
//! The search space is the unit cube [0, 1]^E; a point decodes to a
//! contraction sequence by argsort of its keys. Proposals come from the
//! Tsallis visiting distribution at the current visiting temperature, worse
//! moves are accepted with the generalized acceptance probability, and the
//! schedule restarts from a fresh uniform point when the temperature decays
//! below a fixed fraction of its start. Every accepted improvement of the
//! global best triggers a transposition hill climb.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use crate::budget::{step_limit, EvalBudget};
use crate::cost::Cost;
use crate::graph::{EdgeId, TensorNetwork};
use crate::sequence::{decode_keys, ContractionSequence, SequenceEvaluator};

use super::{OptimizeError, OptimizerResult, StopRule, TracePoint};

#[derive(Debug, Clone, Copy)]
pub struct SaConfig {
    /// Starting visiting temperature.
    pub initial_temp: f64,
    /// Restart when the visiting temperature falls below this fraction of
    /// the initial temperature.
    pub restart_temp_ratio: f64,
    /// Visiting distribution shape q_v, in (1, 3).
    pub visit: f64,
    /// Acceptance shape q_a (more negative: stricter acceptance of worse moves).
    pub accept: f64,
    /// Run the transposition hill climb after global-best improvements.
    pub local_search: bool,
    pub seed: u64,
    /// Budget in full sequence evaluations.
    pub max_full_evaluations: f64,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            initial_temp: 5230.0,
            restart_temp_ratio: 2e-5,
            visit: 2.62,
            accept: -5.0,
            local_search: true,
            seed: 0,
            max_full_evaluations: 1000.0,
        }
    }
}

/// Runs generalized simulated annealing until the budget is spent.
///
/// The visiting temperature follows T(t) = T0 (2^(qv-1) - 1) /
/// ((1+t)^(qv-1) - 1) for t = 1, 2, ...; the acceptance temperature is
/// T(t)/t. Each temperature step runs a chain of 2E proposals: the first E
/// displace every coordinate, the last E displace one coordinate each.
/// Objective values are compared in the ln domain for acceptance, exactly
/// for best-so-far tracking. The budget check runs before every evaluation,
/// so the overshoot stays below one full evaluation.
pub fn sa_run(net: &TensorNetwork, config: &SaConfig, budget: &mut EvalBudget) -> Result<OptimizerResult, OptimizeError> {
    let limit = step_limit(config.max_full_evaluations, net.edge_count());
    sa_run_with_stop(net, config, budget, StopRule::budget_only(limit))
}

pub(crate) fn sa_run_with_stop(
    net: &TensorNetwork,
    config: &SaConfig,
    budget: &mut EvalBudget,
    mut stop: StopRule<'_>,
) -> Result<OptimizerResult, OptimizeError> {
    let e = net.edge_count();
    if e < 2 {
        return Err(OptimizeError::TooFewEdges { needed: 2, got: e });
    }
    validate_config(config)?;

    let edge_ids = net.edge_ids();
    let mut evaluator = SequenceEvaluator::new(net);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let visitor = Visitor::new(config.visit);
    let qv = config.visit;
    let t1 = 2f64.powf(qv - 1.0) - 1.0;
    let restart_temp = config.restart_temp_ratio * config.initial_temp;

    let mut x: Vec<f64> = (0..e).map(|_| rng.random()).collect();
    let first_seq = decode_keys(&x, &edge_ids)?;
    let mut current_cost = evaluator.cost(&first_seq, budget)?;
    let mut best_cost = current_cost.clone();
    let mut best_seq = first_seq;
    let mut trace = vec![TracePoint {
        full_evaluations: budget.full_evaluations(),
        best_cost: best_cost.clone(),
    }];
    // The very first evaluation establishes the global best, so it gets the
    // same hill-climb treatment as any later improvement.
    climb_from_best(
        &mut evaluator, config, budget, &mut stop, &edge_ids, &mut best_cost, &mut best_seq, &mut x,
        &mut current_cost, &mut trace,
    )?;

    let mut t: u64 = 1;
    'anneal: loop {
        if stop.should_stop(budget, Some(&best_cost)) {
            break;
        }
        let temperature = config.initial_temp * t1 / (((t + 1) as f64).powf(qv - 1.0) - 1.0);
        if temperature < restart_temp {
            t = 1;
            for key in x.iter_mut() {
                *key = rng.random();
            }
            if stop.should_stop(budget, Some(&best_cost)) {
                break;
            }
            let seq = decode_keys(&x, &edge_ids)?;
            current_cost = evaluator.cost(&seq, budget)?;
            if current_cost < best_cost {
                best_cost = current_cost.clone();
                best_seq = seq;
                trace.push(TracePoint {
                    full_evaluations: budget.full_evaluations(),
                    best_cost: best_cost.clone(),
                });
                climb_from_best(
                    &mut evaluator, config, budget, &mut stop, &edge_ids, &mut best_cost, &mut best_seq,
                    &mut x, &mut current_cost, &mut trace,
                )?;
            }
            continue;
        }
        let t_accept = temperature / t as f64;
        for j in 0..2 * e {
            if stop.should_stop(budget, Some(&best_cost)) {
                break 'anneal;
            }
            let mut candidate = x.clone();
            if j < e {
                for coord in candidate.iter_mut() {
                    *coord = wrap_unit(*coord + visitor.deviate(&mut rng, temperature));
                }
            } else {
                let idx = j - e;
                candidate[idx] = wrap_unit(candidate[idx] + visitor.deviate(&mut rng, temperature));
            }
            let seq = decode_keys(&candidate, &edge_ids)?;
            let candidate_cost = evaluator.cost(&seq, budget)?;
            if candidate_cost < current_cost {
                x = candidate;
                current_cost = candidate_cost;
                if current_cost < best_cost {
                    best_cost = current_cost.clone();
                    best_seq = seq;
                    trace.push(TracePoint {
                        full_evaluations: budget.full_evaluations(),
                        best_cost: best_cost.clone(),
                    });
                    climb_from_best(
                        &mut evaluator, config, budget, &mut stop, &edge_ids, &mut best_cost, &mut best_seq,
                        &mut x, &mut current_cost, &mut trace,
                    )?;
                }
            } else {
                let delta = candidate_cost.ln() - current_cost.ln();
                let p = acceptance_probability(delta, t_accept, config.accept);
                if rng.random::<f64>() <= p {
                    x = candidate;
                    current_cost = candidate_cost;
                }
            }
        }
        t += 1;
    }

    Ok(OptimizerResult {
        best_sequence: best_seq,
        best_cost,
        trace,
        evaluations: budget.report(),
    })
}

fn validate_config(config: &SaConfig) -> Result<(), OptimizeError> {
    if config.initial_temp.is_nan() || config.initial_temp <= 0.0 {
        return Err(OptimizeError::InvalidConfig("initial temperature must be positive".into()));
    }
    if !(config.restart_temp_ratio > 0.0 && config.restart_temp_ratio < 1.0) {
        return Err(OptimizeError::InvalidConfig(format!(
            "restart temperature ratio {} is outside (0, 1)",
            config.restart_temp_ratio
        )));
    }
    if !(config.visit > 1.0 && config.visit < 3.0) {
        return Err(OptimizeError::InvalidConfig(format!(
            "visit parameter {} is outside (1, 3)",
            config.visit
        )));
    }
    if config.accept.is_nan() || config.accept >= 1.0 {
        return Err(OptimizeError::InvalidConfig(format!(
            "accept parameter {} must be below 1",
            config.accept
        )));
    }
    if config.max_full_evaluations.is_nan() || config.max_full_evaluations <= 0.0 {
        return Err(OptimizeError::InvalidConfig("evaluation budget must be positive".into()));
    }
    Ok(())
}

/// Runs the hill climb from the current global best and, on improvement,
/// moves the chain state onto the improved sequence.
#[allow(clippy::too_many_arguments)]
fn climb_from_best(
    evaluator: &mut SequenceEvaluator,
    config: &SaConfig,
    budget: &mut EvalBudget,
    stop: &mut StopRule<'_>,
    edge_ids: &[EdgeId],
    best_cost: &mut Cost,
    best_seq: &mut ContractionSequence,
    x: &mut Vec<f64>,
    current_cost: &mut Cost,
    trace: &mut Vec<TracePoint>,
) -> Result<(), OptimizeError> {
    if !config.local_search {
        return Ok(());
    }
    let (seq, cost) = local_search_from(evaluator, best_seq.clone(), best_cost.clone(), budget, stop)?;
    if cost < *best_cost {
        *best_cost = cost.clone();
        *best_seq = seq.clone();
        trace.push(TracePoint {
            full_evaluations: budget.full_evaluations(),
            best_cost: cost.clone(),
        });
        *x = encode_sequence(&seq, edge_ids);
        *current_cost = cost;
    }
    Ok(())
}

/// Best-improvement hill climb over adjacent transpositions.
///
/// Evaluates the input once as the baseline, then repeatedly evaluates all
/// E-1 adjacent swaps and moves to the best strictly improving neighbor,
/// stopping at a local optimum. Each neighbor evaluation costs one full
/// evaluation of budget; the climb aborts cleanly mid-sweep if the budget
/// runs out.
pub fn local_search(
    net: &TensorNetwork,
    seq: &ContractionSequence,
    budget: &mut EvalBudget,
) -> Result<(ContractionSequence, Cost), OptimizeError> {
    let mut evaluator = SequenceEvaluator::new(net);
    let cost = evaluator.cost(seq, budget)?;
    local_search_from(&mut evaluator, seq.clone(), cost, budget, &mut StopRule::budget_only(u64::MAX))
}

fn local_search_from(
    evaluator: &mut SequenceEvaluator,
    mut seq: ContractionSequence,
    mut cost: Cost,
    budget: &mut EvalBudget,
    stop: &mut StopRule<'_>,
) -> Result<(ContractionSequence, Cost), OptimizeError> {
    let e = seq.len();
    if e < 2 {
        return Ok((seq, cost));
    }
    loop {
        let mut best_swap: Option<(Cost, usize)> = None;
        for i in 0..e - 1 {
            if stop.should_stop(budget, Some(&cost)) {
                return Ok((seq, cost));
            }
            let neighbor = seq.swapped_adjacent(i);
            let neighbor_cost = evaluator.cost(&neighbor, budget)?;
            if best_swap.as_ref().is_none_or(|(c, _)| neighbor_cost < *c) {
                best_swap = Some((neighbor_cost, i));
            }
        }
        let (swap_cost, swap_at) = best_swap.expect("at least one adjacent swap");
        if swap_cost < cost {
            seq = seq.swapped_adjacent(swap_at);
            cost = swap_cost;
        } else {
            return Ok((seq, cost));
        }
    }
}

/// Generalized acceptance probability for a worse move with ln-cost
/// difference `delta_ln` at acceptance temperature `t_accept`. Values above
/// 1 (possible for improving moves) mean certain acceptance.
pub(crate) fn acceptance_probability(delta_ln: f64, t_accept: f64, accept: f64) -> f64 {
    let bracket = 1.0 - (1.0 - accept) * delta_ln / t_accept;
    if bracket <= 0.0 {
        0.0
    } else {
        (bracket.ln() / (1.0 - accept)).exp()
    }
}

/// Random keys that decode back to exactly `seq`: the edge contracted at
/// rank r gets key (r+1)/(E+1).
fn encode_sequence(seq: &ContractionSequence, edge_ids: &[EdgeId]) -> Vec<f64> {
    let mut keys = vec![0.0; edge_ids.len()];
    let denom = (edge_ids.len() + 1) as f64;
    for (rank, edge) in seq.iter().enumerate() {
        let idx = edge_ids.binary_search(&edge).expect("sequence edge belongs to the network");
        keys[idx] = (rank + 1) as f64 / denom;
    }
    keys
}

/// Wraps a proposed coordinate back into [0, 1), nudged off the lower
/// boundary so repeated wrapping cannot pin a key at exactly 0.
fn wrap_unit(value: f64) -> f64 {
    let mut wrapped = ((value % 1.0) + 1.0) % 1.0;
    if wrapped < 1e-10 {
        wrapped += 1e-10;
    }
    wrapped
}

const TAIL_LIMIT: f64 = 1e8;

/// Tsallis q_v-Gaussian visiting distribution.
///
/// A deviate is built from one standard-normal pair obtained by the
/// Box-Muller transform of two uniforms; the temperature-independent
/// factors are precomputed from q_v.
struct Visitor {
    qv: f64,
    factor4p: f64,
    factor6: f64,
}

impl Visitor {
    fn new(qv: f64) -> Self {
        let factor2 = ((4.0 - qv) * (qv - 1.0).ln()).exp();
        let factor3 = ((2.0 - qv) / (qv - 1.0) * std::f64::consts::LN_2).exp();
        let factor4p = PI.sqrt() * factor2 / (factor3 * (3.0 - qv));
        let factor5 = 1.0 / (qv - 1.0) - 0.5;
        let d1 = 2.0 - factor5;
        let factor6 = PI * (1.0 - factor5) / (PI * (1.0 - factor5)).sin() / ln_gamma(d1).exp();
        Visitor { qv, factor4p, factor6 }
    }

    fn deviate<R: Rng>(&self, rng: &mut R, temperature: f64) -> f64 {
        let (zx, zy) = gaussian_pair(rng);
        let factor1 = (temperature.ln() / (self.qv - 1.0)).exp();
        let factor4 = self.factor4p * factor1;
        let sigma = (-(self.qv - 1.0) * (self.factor6 / factor4).ln() / (3.0 - self.qv)).exp();
        let numerator = zx * sigma;
        let denominator = ((self.qv - 1.0) * zy.abs().ln() / (3.0 - self.qv)).exp();
        let mut value = numerator / denominator;
        // Heavy tails: cap at TAIL_LIMIT, rescaled by a fresh uniform. The
        // comparison also catches inf and NaN from a zero denominator.
        if value.is_nan() || value.abs() > TAIL_LIMIT {
            let magnitude = TAIL_LIMIT * rng.random::<f64>();
            value = if value < 0.0 { -magnitude } else { magnitude };
        }
        value
    }
}

fn gaussian_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = 2.0 * PI * u2;
    (radius * angle.cos(), radius * angle.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VertexId;
    use crate::sequence::validate_sequence;

    fn three_tensor(chi: u64) -> TensorNetwork {
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
    fn sa_finds_the_optimum_of_the_three_tensor_example() {
        let net = three_tensor(2);
        let mut budget = EvalBudget::new(2);
        let config = SaConfig {
            max_full_evaluations: 50.0,
            ..SaConfig::default()
        };
        let result = sa_run(&net, &config, &mut budget).unwrap();
        assert_eq!(result.best_cost, Cost::from(48));
        validate_sequence(&net, &result.best_sequence).unwrap();
    }

    #[test]
    fn sa_respects_its_budget_within_one_evaluation() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 3, chi: 4 }).unwrap();
        let e = net.edge_count() as u64;
        for max in [1.0, 9.0, 41.5] {
            let mut budget = EvalBudget::new(e as usize);
            let config = SaConfig {
                max_full_evaluations: max,
                seed: 5,
                ..SaConfig::default()
            };
            sa_run(&net, &config, &mut budget).unwrap();
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
    fn sa_is_bit_reproducible() {
        let net = crate::generators::erdos_renyi(&crate::generators::ErdosRenyiSpec {
            vertices: 7,
            edge_probability: 0.8,
            chi: 3,
            seed: 23,
        })
        .unwrap();
        let config = SaConfig {
            max_full_evaluations: 120.0,
            seed: 77,
            ..SaConfig::default()
        };
        let mut b1 = EvalBudget::new(net.edge_count());
        let mut b2 = EvalBudget::new(net.edge_count());
        assert_eq!(sa_run(&net, &config, &mut b1).unwrap(), sa_run(&net, &config, &mut b2).unwrap());
    }

    #[test]
    fn sa_trace_is_non_increasing() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 4, chi: 6 }).unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        let config = SaConfig {
            max_full_evaluations: 300.0,
            seed: 3,
            ..SaConfig::default()
        };
        let result = sa_run(&net, &config, &mut budget).unwrap();
        for pair in result.trace.windows(2) {
            assert!(pair[1].best_cost < pair[0].best_cost);
            assert!(pair[1].full_evaluations >= pair[0].full_evaluations);
        }
        assert_eq!(result.trace.last().unwrap().best_cost, result.best_cost);
    }

    #[test]
    fn sa_survives_restarts() {
        let net = crate::generators::square_lattice(&crate::generators::SquareSpec { side: 3, chi: 3 }).unwrap();
        let mut budget = EvalBudget::new(net.edge_count());
        // A ratio this close to 1 forces a restart after the first
        // temperature step, exercising the reset path many times.
        let config = SaConfig {
            restart_temp_ratio: 0.5,
            max_full_evaluations: 200.0,
            seed: 8,
            ..SaConfig::default()
        };
        let result = sa_run(&net, &config, &mut budget).unwrap();
        validate_sequence(&net, &result.best_sequence).unwrap();
    }

    #[test]
    fn improving_moves_are_always_accepted() {
        for delta in [-10.0, -1.0, -1e-9] {
            for t in [5230.0, 1.0, 1e-6] {
                let p = acceptance_probability(delta, t, -5.0);
                assert!(p >= 1.0, "delta={delta} t={t} gave p={p}");
            }
        }
    }

    #[test]
    fn hopeless_moves_are_never_accepted() {
        // bracket <= 0 when delta >= t_accept / (1 - qa)
        let p = acceptance_probability(100.0, 1.0, -5.0);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn acceptance_decreases_with_cost_increase() {
        let small = acceptance_probability(0.1, 10.0, -5.0);
        let large = acceptance_probability(5.0, 10.0, -5.0);
        assert!(small > large);
        assert!((0.0..=1.0).contains(&large));
    }

    #[test]
    fn deviates_stay_finite_and_wrapped_keys_valid() {
        let visitor = Visitor::new(2.62);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            let v = visitor.deviate(&mut rng, 5230.0);
            assert!(v.is_finite());
            assert!(v.abs() <= TAIL_LIMIT);
            let key = wrap_unit(0.5 + v);
            assert!((0.0..=1.0).contains(&key));
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let ids: Vec<EdgeId> = (0..6).map(EdgeId).collect();
        let seq = ContractionSequence::new(vec![
            EdgeId(3),
            EdgeId(0),
            EdgeId(5),
            EdgeId(1),
            EdgeId(4),
            EdgeId(2),
        ]);
        let keys = encode_sequence(&seq, &ids);
        assert_eq!(decode_keys(&keys, &ids).unwrap(), seq);
    }

    #[test]
    fn local_search_leaves_an_optimal_sequence_unchanged() {
        let net = three_tensor(2);
        let optimal = ContractionSequence::new(vec![EdgeId(0), EdgeId(1)]);
        let mut budget = EvalBudget::new(2);
        let (seq, cost) = local_search(&net, &optimal, &mut budget).unwrap();
        assert_eq!(seq, optimal);
        assert_eq!(cost, Cost::from(48));
        // One baseline evaluation plus one sweep of E-1 = 1 neighbor.
        assert_eq!(budget.step_computations(), 4);
    }

    #[test]
    fn local_search_fixes_the_reversed_sequence() {
        let net = three_tensor(2);
        let reversed = ContractionSequence::new(vec![EdgeId(1), EdgeId(0)]);
        let mut budget = EvalBudget::new(2);
        let (seq, cost) = local_search(&net, &reversed, &mut budget).unwrap();
        assert_eq!(seq.order, vec![EdgeId(0), EdgeId(1)]);
        assert_eq!(cost, Cost::from(48));
    }

    #[test]
    fn bad_configs_are_rejected() {
        let net = three_tensor(2);
        let mut budget = EvalBudget::new(2);
        for config in [
            SaConfig { visit: 1.0, ..SaConfig::default() },
            SaConfig { visit: 3.0, ..SaConfig::default() },
            SaConfig { restart_temp_ratio: 0.0, ..SaConfig::default() },
            SaConfig { initial_temp: 0.0, ..SaConfig::default() },
            SaConfig { accept: 1.5, ..SaConfig::default() },
            SaConfig { max_full_evaluations: 0.0, ..SaConfig::default() },
        ] {
            assert!(matches!(
                sa_run(&net, &config, &mut budget),
                Err(OptimizeError::InvalidConfig(_))
            ));
        }
    }
}
