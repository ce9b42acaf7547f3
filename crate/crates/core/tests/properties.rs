//! Cross-module invariants exercised on randomized inputs.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tnopt_core::generators::{erdos_renyi, square_lattice, ErdosRenyiSpec, SquareSpec};
use tnopt_core::harness::{
    handcrafted_row_sequence, render_runs_csv, render_summary_csv, run_sweep, AlgSpec, BudgetPolicy,
    ExperimentSpec, Family,
};
use tnopt_core::numeric::{execute, max_relative_deviation, random_assignment};
use tnopt_core::optimize::{exhaustive_search, ga_run, greedy_search, sa_run, GaConfig, GreedyConfig, SaConfig};
use tnopt_core::{
    evaluate_sequence, sequence_cost, validate_sequence, ContractionSequence, Cost, EvalBudget,
    SequenceViolation, TensorNetwork,
};

fn er(vertices: u32, chi: u64, seed: u64) -> TensorNetwork {
    erdos_renyi(&ErdosRenyiSpec {
        vertices,
        edge_probability: 0.7,
        chi,
        seed,
    })
    .unwrap()
}

fn shuffled_order(net: &TensorNetwork, seed: u64) -> ContractionSequence {
    let mut order = net.edge_ids();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ContractionSequence::new(order)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_permutation_evaluates_and_totals_its_steps(
        vertices in 2u32..8,
        chi in 2u64..5,
        net_seed in any::<u64>(),
        order_seed in any::<u64>(),
    ) {
        let net = er(vertices, chi, net_seed);
        let seq = shuffled_order(&net, order_seed);
        let mut budget = EvalBudget::new(net.edge_count().max(1));
        let (total, records) = evaluate_sequence(&net, &seq, &mut budget).unwrap();
        let mut acc = Cost::zero();
        for r in &records {
            prop_assert!(r.step_cost >= Cost::one());
            acc += r.step_cost.clone();
        }
        prop_assert_eq!(&acc, &total);
        prop_assert_eq!(budget.step_computations(), net.edge_count() as u64);
    }

    #[test]
    fn dropping_or_repeating_an_edge_is_rejected(
        vertices in 3u32..8,
        net_seed in any::<u64>(),
        order_seed in any::<u64>(),
    ) {
        let net = er(vertices, 2, net_seed);
        prop_assume!(net.edge_count() >= 2);
        let seq = shuffled_order(&net, order_seed);
        let mut short = seq.order.clone();
        let dropped = short.pop().unwrap();
        prop_assert_eq!(
            validate_sequence(&net, &ContractionSequence::new(short.clone())),
            Err(SequenceViolation::MissingEdge(dropped))
        );
        let mut doubled = short;
        doubled.push(doubled[0]);
        prop_assert_eq!(
            validate_sequence(&net, &ContractionSequence::new(doubled)),
            Err(SequenceViolation::DuplicateEdge(seq.order[0]))
        );
    }

    #[test]
    fn final_structure_does_not_depend_on_the_order(
        vertices in 2u32..8,
        chi in 2u64..5,
        net_seed in any::<u64>(),
        seed_a in any::<u64>(),
        seed_b in any::<u64>(),
    ) {
        let net = er(vertices, chi, net_seed);
        prop_assume!(net.edge_count() >= 1);
        let end_a = tnopt_core::final_state(&net, &shuffled_order(&net, seed_a)).unwrap();
        let end_b = tnopt_core::final_state(&net, &shuffled_order(&net, seed_b)).unwrap();
        prop_assert_eq!(end_a.edge_count(), 0);
        prop_assert_eq!(end_b.edge_count(), 0);
        prop_assert_eq!(end_a.vertex_count(), end_b.vertex_count());
        prop_assert_eq!(end_a.leg_count(), net.leg_count());
        prop_assert_eq!(end_b.leg_count(), net.leg_count());
    }

    #[test]
    fn exhaustive_lower_bounds_random_orderings(
        vertices in 2u32..5,
        chi in 2u64..4,
        net_seed in any::<u64>(),
        order_seed in any::<u64>(),
    ) {
        let net = er(vertices, chi, net_seed);
        prop_assume!(net.edge_count() >= 1);
        let mut budget = EvalBudget::new(net.edge_count());
        let found = exhaustive_search(&net, &mut budget).unwrap();
        let mut check = EvalBudget::new(net.edge_count());
        prop_assert_eq!(
            sequence_cost(&net, &found.best_sequence, &mut check).unwrap(),
            found.best_cost.clone()
        );
        for s in 0..10u64 {
            let random_cost =
                sequence_cost(&net, &shuffled_order(&net, order_seed.wrapping_add(s)), &mut check).unwrap();
            prop_assert!(found.best_cost <= random_cost);
        }
    }
}

#[test]
fn depth_one_greedy_spends_the_triangular_step_count() {
    for (vertices, seed) in [(5u32, 1u64), (8, 2), (12, 3)] {
        let net = er(vertices, 3, seed);
        let e = net.edge_count() as u64;
        if e < 2 {
            continue;
        }
        let mut budget = EvalBudget::new(e as usize);
        greedy_search(&net, &GreedyConfig { lookahead: 1, seed: 0 }, &mut budget).unwrap();
        assert_eq!(budget.step_computations(), e * (e + 1) / 2);
    }
}

#[test]
fn dense_execution_matches_across_orderings() {
    let net = er(5, 3, 17);
    let assignment = random_assignment(&net, 99).unwrap();
    let reference = execute(&net, &assignment, &shuffled_order(&net, 0)).unwrap();
    for order_seed in 1..4u64 {
        let other = execute(&net, &assignment, &shuffled_order(&net, order_seed)).unwrap();
        let deviation = max_relative_deviation(&reference, &other).unwrap();
        assert!(deviation <= 1e-9, "deviation {deviation} for order seed {order_seed}");
    }
}

#[test]
fn sweeps_render_byte_identical_reports() {
    let spec = ExperimentSpec {
        family: Family::ErdosRenyi {
            edge_probability: 0.8,
            chi: 3,
            fixed_instance: false,
        },
        sizes: vec![6],
        algorithms: vec![AlgSpec::greedy_default(), AlgSpec::sa_default()],
        runs: 3,
        base_seed: 5,
        budget: BudgetPolicy::Fixed {
            max_full_evaluations: 50.0,
        },
    };
    let first = run_sweep(&spec).unwrap();
    let second = run_sweep(&spec).unwrap();
    assert_eq!(render_runs_csv(&first), render_runs_csv(&second));
    assert_eq!(render_summary_csv(&first), render_summary_csv(&second));
}

#[test]
fn stochastic_budgets_overshoot_less_than_one_evaluation() {
    for seed in 0..6u64 {
        let net = er(7, 3, seed);
        if net.edge_count() < 2 {
            continue;
        }
        let budget_evals = 25.0;
        let mut sa_budget = EvalBudget::new(net.edge_count());
        let sa = sa_run(
            &net,
            &SaConfig {
                seed,
                max_full_evaluations: budget_evals,
                ..SaConfig::default()
            },
            &mut sa_budget,
        )
        .unwrap();
        assert!(sa.evaluations.full_evaluations < budget_evals + 1.0);
        let mut ga_budget = EvalBudget::new(net.edge_count());
        let ga = ga_run(
            &net,
            &GaConfig {
                seed,
                max_full_evaluations: budget_evals,
                ..GaConfig::default()
            },
            &mut ga_budget,
        )
        .unwrap();
        assert!(ga.evaluations.full_evaluations < budget_evals + 1.0);
        for result in [&sa, &ga] {
            for pair in result.trace.windows(2) {
                assert!(pair[1].best_cost <= pair[0].best_cost);
                assert!(pair[1].full_evaluations >= pair[0].full_evaluations);
            }
        }
    }
}

#[test]
fn row_sequence_is_valid_and_reproducible_on_ten_by_ten() {
    let net = square_lattice(&SquareSpec { side: 10, chi: 4 }).unwrap();
    let seq = handcrafted_row_sequence(10).unwrap();
    validate_sequence(&net, &seq).unwrap();
    let mut budget = EvalBudget::new(net.edge_count());
    let first = sequence_cost(&net, &seq, &mut budget).unwrap();
    let again = sequence_cost(&net, &seq, &mut budget).unwrap();
    assert_eq!(first, again);
    assert!(first > Cost::one());
}
