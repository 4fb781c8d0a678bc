mod common;

use common::chain::{all_aware, all_unaware, Chain};
use common::harness;
use proptest::prelude::*;
use stimuli_core::engine::{self, Action};
use stimuli_core::graph::GraphSnapshot;
use stimuli_core::metrics::{self, convergence_report, drift_absorption_trials, drift_expected, DriftChainSpec, TrialRecord};
use stimuli_core::AgentState::{self, *};
use stimuli_core::{ProtocolParams, SimRng, World};

fn mean_aware_time(g: &GraphSnapshot, trials: u64, seed: u64) -> f64 {
    let total: u64 = (0..trials)
        .map(|i| harness::aware_time(g, &mut SimRng::for_trial(seed, i), 100_000).expect("converges"))
        .sum();
    total as f64 / trials as f64
}

#[test]
fn chain_oracle_two_path() {
    // Hand-solved: from (U,U) the witness flags at rate p/2, then generates a
    // token at rate p/2, which is consumed at rate 1/2 or walks back.
    let c = Chain::path(2, &[0], 0.5);
    let exact = c.hitting_time(&[Unaware, Unaware], all_aware);
    assert!(exact > 0.0 && exact.is_finite());
    let emp = mean_aware_time(&GraphSnapshot::path(2), 40_000, 11);
    assert!((emp - exact).abs() / exact < 0.03, "empirical {emp} vs exact {exact}");
}

#[test]
fn chain_oracle_three_path_and_cycle() {
    for (g, c) in [(GraphSnapshot::path(3), Chain::path(3, &[0], 0.5)), (GraphSnapshot::cycle(3), Chain::cycle(3, &[0], 0.5))] {
        let exact = c.hitting_time(&[Unaware; 3], all_aware);
        let emp = mean_aware_time(&g, 40_000, 12);
        assert!((emp - exact).abs() / exact < 0.03, "empirical {emp} vs exact {exact}");
    }
}

#[test]
fn chain_oracle_agrees_with_simple_cases() {
    // A single witness: flag at rate p, then Aware.
    let c = Chain::path(1, &[0], 0.25);
    assert!((c.hitting_time(&[Unaware], all_aware) - 4.0).abs() < 1e-9);
    // A lone A_C on a 2-path clears in expected 2 iterations.
    let c = Chain::path(2, &[], 0.5);
    assert!((c.hitting_time(&[AwareClear, Unaware], all_unaware) - 2.0).abs() < 1e-9);
}

#[test]
fn cycle3_unaware_after_witness_removal() {
    let start = [AwareWitness, AwareAlert, AwareEmpty];
    let exact = Chain::cycle(3, &[], 0.5).hitting_time(&start, all_unaware);
    let g = GraphSnapshot::cycle(3);
    let trials = 5_000u64;
    let mut total = 0;
    for i in 0..trials {
        let mut rng = SimRng::for_trial(5, i);
        let mut world = World::with_states(start.to_vec(), ProtocolParams::with_default_p(1, 2).unwrap());
        let out = engine::run_until(&mut world, &g, &mut rng, |w| w.all_unaware(), 100_000).unwrap();
        assert!(out.satisfied);
        total += out.iterations;
    }
    let emp = total as f64 / trials as f64;
    assert!(emp <= 3.0 * exact && emp >= exact / 3.0);
    assert!((emp - exact).abs() / exact < 0.05, "empirical {emp} vs exact {exact}");
}

#[test]
fn two_path_converges_every_trial() {
    let g = GraphSnapshot::path(2);
    for i in 0..500 {
        assert!(harness::aware_time(&g, &mut SimRng::for_trial(99, i), 100_000).is_some());
    }
}

#[test]
fn invariant_holds_on_sampled_trajectories() {
    let t = harness::invariant_trajectories(300, 1_000, 8);
    assert_eq!(t.violations, 0, "{t:?}");
    assert_eq!(t.steps, 300_000);
}

#[test]
fn residual_components_match_brute_force() {
    // Every state assignment on small graphs, every witness subset of size <= 1.
    let graphs = [GraphSnapshot::path(4), GraphSnapshot::cycle(4), GraphSnapshot::complete(3), GraphSnapshot::grid(2, 2)];
    let mut checked = 0;
    for g in &graphs {
        let n = g.n();
        for code in 0..6usize.pow(n as u32) {
            let states: Vec<AgentState> = (0..n).map(|i| AgentState::ALL[(code / 6usize.pow(i as u32)) % 6]).collect();
            for wit in 0..=n {
                let mut world = World::with_states(states.clone(), ProtocolParams::with_default_p(1, 4).unwrap());
                let mut flags = vec![false; n];
                if wit < n {
                    world.set_witness(wit, true).unwrap();
                    flags[wit] = true;
                }
                assert_eq!(metrics::residual_components(&world, g).len(), harness::residual_count(g, &states, &flags));
                assert_eq!(metrics::state_invariant_holds(&world, g), harness::invariant_ok(g, &states));
                checked += 1;
            }
        }
    }
    assert!(checked > 10_000);
}

#[test]
fn residual_components_seven_agents() {
    let mut rng = SimRng::new(70);
    for _ in 0..20_000 {
        let n = 5 + rng.below(3);
        let g = GraphSnapshot::random_connected(n, rng.below(4), 4, &mut rng);
        let states: Vec<AgentState> = (0..n).map(|_| AgentState::ALL[rng.below(6)]).collect();
        let mut world = World::with_states(states.clone(), ProtocolParams::with_default_p(2, 4).unwrap());
        let mut flags = vec![false; n];
        for _ in 0..rng.below(3) {
            let u = rng.below(n);
            if !flags[u] {
                flags[u] = true;
                world.set_witness(u, true).unwrap();
            }
        }
        assert_eq!(metrics::residual_components(&world, &g).len(), harness::residual_count(&g, &states, &flags));
    }
}

#[test]
fn residual_elimination_small() {
    for n in [8, 16] {
        let (mean, bound) = harness::residual_elimination(n, 100, 3);
        assert!(mean <= bound, "n={n}: mean {mean} > {bound}");
    }
}

#[test]
fn drift_closed_form() {
    let mut rng = SimRng::new(4);
    for (n, eta, x0) in [(10.0, 0.5, 5), (20.0, 0.9, 3)] {
        let spec = DriftChainSpec { eta, n, x0 };
        let m = drift_absorption_trials(&spec, 20_000, &mut rng);
        assert!((m / drift_expected(&spec) - 1.0).abs() < 0.05);
    }
}

#[test]
fn single_trial_report_has_no_fit() {
    let rec = TrialRecord {
        trial: 0,
        seed: 1,
        n: 4,
        converged: true,
        iterations: 10,
        aware_completion: None,
        samples: vec![],
        ledger: None,
        batches: vec![],
    };
    let rep = convergence_report(&[rec]);
    assert_eq!(rep.rows.len(), 1);
    assert!(rep.slope.is_none());
}

fn world_strategy() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 2usize..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn potential_rises_only_on_witness_actions((seed, n) in world_strategy()) {
        let mut rng = SimRng::new(seed);
        let g = GraphSnapshot::random_connected(n, rng.below(n), 4, &mut rng);
        let mut world = World::new(n, ProtocolParams::with_default_p(2, 4).unwrap());
        world.set_witness(rng.below(n), true).unwrap();
        for t in 0..2_000 {
            if t == 1_000 {
                let w: Vec<usize> = world.witnesses().collect();
                world.set_witness(w[0], false).unwrap();
            }
            let before = metrics::potential(&world);
            let tokens = world.token_count();
            let act = engine::step(&mut world, &g, &mut rng).unwrap();
            let after = metrics::potential(&world);
            prop_assert!(after.phi <= before.phi + 1);
            if after.phi == before.phi + 1 {
                prop_assert!(act.is_witness_action(), "{act:?}");
            }
            prop_assert!(world.token_count() <= tokens + 1);
            if act.action == Action::TokenMoved || act.action == Action::TokenStayed {
                prop_assert_eq!(world.token_count(), tokens);
            }
            if world.witness_count() == 0 {
                prop_assert!(after.phi <= before.phi);
            }
            prop_assert!(harness::invariant_ok(&g, world.states()));
        }
    }

    #[test]
    fn potential_matches_state_counts(states in proptest::collection::vec(0usize..6, 1..12)) {
        let s: Vec<AgentState> = states.iter().map(|&i| AgentState::ALL[i]).collect();
        let p = metrics::potential_of(&s);
        prop_assert_eq!(p.phi_a, s.iter().filter(|x| **x != Unaware).count());
        prop_assert_eq!(p.phi_at, s.iter().filter(|x| matches!(x, AwareAlert | AwareAlertWitness)).count());
        prop_assert_eq!(p.phi, p.phi_a + p.phi_at);
    }
}
