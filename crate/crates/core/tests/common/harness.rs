//! Monte-Carlo drivers shared by the integration suites and the acceptance
//! run. Checks that decide pass/fail are recomputed here from raw states.

use std::collections::{BTreeSet, HashMap};

use stimuli_core::engine::{self, WitnessEvent, WitnessOp, WitnessSchedule};
use stimuli_core::graph::{validate_local_reconfiguration, DynamicGraph, GraphSnapshot, RandomRewiring, StaticAdversary};
use stimuli_core::lattice::{LatticeWorld, MoveOutcome, Site};
use stimuli_core::model::group_vector;
use stimuli_core::{AgentState, BehaviorGroup, ProtocolParams, SimRng, World};

/// Aware components of `g` restricted to agents where `aware` holds.
pub fn components(g: &GraphSnapshot, states: &[AgentState]) -> Vec<Vec<usize>> {
    let n = states.len();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX || states[s] == AgentState::Unaware {
            continue;
        }
        let id = out.len();
        let mut stack = vec![s];
        let mut comp = Vec::new();
        label[s] = id;
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &v in g.neighbors(u) {
                if label[v] == usize::MAX && states[v] != AgentState::Unaware {
                    label[v] = id;
                    stack.push(v);
                }
            }
        }
        out.push(comp);
    }
    out
}

pub fn invariant_ok(g: &GraphSnapshot, states: &[AgentState]) -> bool {
    use AgentState::*;
    components(g, states)
        .iter()
        .all(|c| c.iter().any(|&u| matches!(states[u], AwareWitness | AwareAlertWitness | AwareClear)))
}

pub fn residual_count(g: &GraphSnapshot, states: &[AgentState], witness: &[bool]) -> usize {
    use AgentState::*;
    components(g, states)
        .iter()
        .filter(|c| {
            c.iter().any(|&u| states[u] == AwareClear || (matches!(states[u], AwareWitness | AwareAlertWitness) && !witness[u]))
        })
        .count()
}

fn random_schedule(n: usize, w: usize, horizon: u64, rng: &mut SimRng) -> Vec<WitnessEvent> {
    let mut times: Vec<u64> = (0..1 + rng.below(6)).map(|_| rng.below(horizon as usize) as u64).collect();
    times.sort_unstable();
    let mut live: BTreeSet<usize> = BTreeSet::new();
    let mut events = Vec::new();
    for at in times {
        let remove = !live.is_empty() && (live.len() == w || rng.chance(0.4));
        if remove {
            let v: Vec<usize> = live.iter().copied().collect();
            let agent = v[rng.below(v.len())];
            live.remove(&agent);
            events.push(WitnessEvent { at, op: WitnessOp::Remove, agent });
        } else {
            let free: Vec<usize> = (0..n).filter(|u| !live.contains(u)).collect();
            let agent = free[rng.below(free.len())];
            live.insert(agent);
            events.push(WitnessEvent { at, op: WitnessOp::Add, agent });
        }
    }
    events
}

#[derive(Debug, Default, Clone, Copy)]
pub struct InvariantTally {
    pub trajectories: u64,
    pub steps: u64,
    pub violations: u64,
}

/// Random graphs with `n <= 12` (static or rewired), random witness
/// schedules, all-Unaware start; Def. 1 checked after every step.
pub fn invariant_trajectories(count: u64, steps: u64, seed: u64) -> InvariantTally {
    let mut tally = InvariantTally::default();
    for i in 0..count {
        let mut rng = SimRng::for_trial(seed, i);
        let n = 2 + rng.below(11);
        let w = 1 + rng.below(3.min(n));
        let max_degree = 3 + rng.below(3);
        let g0 = GraphSnapshot::random_connected(n, rng.below(n + 1), max_degree, &mut rng);
        let mut dg = if i % 2 == 0 {
            DynamicGraph::new(g0, Box::new(StaticAdversary), true)
        } else {
            DynamicGraph::new(g0, Box::new(RandomRewiring { rate: 0.5, max_degree }), true)
        };
        let params = ProtocolParams::with_default_p(w, max_degree).unwrap();
        let mut world = World::new(n, params);
        let mut sched = WitnessSchedule::new(random_schedule(n, w, steps, &mut rng), n, w).unwrap();
        for t in 0..steps {
            sched.apply_due(&mut world).unwrap();
            let groups = group_vector(world.states());
            dg.next_graph(t, &groups, &mut rng).unwrap();
            engine::step(&mut world, dg.graph(), &mut rng).unwrap();
            tally.steps += 1;
            if !invariant_ok(dg.graph(), world.states()) {
                tally.violations += 1;
            }
        }
        tally.trajectories += 1;
    }
    tally
}

/// Residual-heavy random start on a connected graph with `w = 2` fixed
/// witnesses; returns the mean iterations until no residual component is
/// left, and the bound `2 n^2 / (1 - w p)`.
pub fn residual_elimination(n: usize, seeds: u64, base: u64) -> (f64, f64) {
    use AgentState::*;
    let w = 2;
    let mut total = 0u64;
    let mut bound = 0.0;
    for i in 0..seeds {
        let mut rng = SimRng::for_trial(base, i);
        let max_degree = 4;
        let g0 = GraphSnapshot::random_connected(n, n / 2, max_degree, &mut rng);
        let mut dg = if i % 2 == 0 {
            DynamicGraph::new(g0, Box::new(StaticAdversary), true)
        } else {
            DynamicGraph::new(g0, Box::new(RandomRewiring { rate: 0.5, max_degree }), true)
        };
        let params = ProtocolParams::with_default_p(w, max_degree).unwrap();
        bound = 2.0 * (n * n) as f64 / (1.0 - w as f64 * params.p());
        let states: Vec<AgentState> = (0..n)
            .map(|_| match rng.below(20) {
                0..=6 => AwareClear,
                7..=11 => AwareWitness,
                12..=14 => AwareAlertWitness,
                15..=16 => AwareEmpty,
                17 => AwareAlert,
                _ => Unaware,
            })
            .collect();
        let mut world = World::with_states(states, params);
        let mut witness = vec![false; n];
        while witness.iter().filter(|&&b| b).count() < w {
            let u = rng.below(n);
            if !witness[u] {
                witness[u] = true;
                world.set_witness(u, true).unwrap();
            }
        }
        let mut t = 0u64;
        while residual_count(dg.graph(), world.states(), &witness) > 0 {
            let groups = group_vector(world.states());
            dg.next_graph(t, &groups, &mut rng).unwrap();
            engine::step(&mut world, dg.graph(), &mut rng).unwrap();
            t += 1;
        }
        total += t;
    }
    (total as f64 / seeds as f64, bound)
}

/// Iterations to all-Aware from all-Unaware on a static graph with a
/// permanent witness at agent 0; `None` when `cap` is reached.
pub fn aware_time(g: &GraphSnapshot, rng: &mut SimRng, cap: u64) -> Option<u64> {
    let params = ProtocolParams::with_default_p(1, g.max_degree().max(1)).unwrap();
    let mut world = World::new(g.n(), params);
    world.set_witness(0, true).unwrap();
    let out = engine::run_until(&mut world, g, rng, |w| w.all_aware(), cap).unwrap();
    out.satisfied.then_some(out.iterations)
}

/// Cycle of `n`: converge to all-Aware under a witness at agent 0, remove
/// the witness, then count iterations to all-Unaware.
pub fn cycle_unaware_time(n: usize, rng: &mut SimRng) -> u64 {
    let g = GraphSnapshot::cycle(n);
    let params = ProtocolParams::with_default_p(1, 2).unwrap();
    let mut world = World::new(n, params);
    world.set_witness(0, true).unwrap();
    let out = engine::run_until(&mut world, &g, rng, |w| w.all_aware(), u64::MAX).unwrap();
    assert!(out.satisfied);
    world.set_witness(0, false).unwrap();
    engine::run_until(&mut world, &g, rng, |w| w.all_unaware(), u64::MAX).unwrap().iterations
}

/// Tally of Execute-Gather moves replayed through the local-connectivity check.
#[derive(Debug, Default, Clone, Copy)]
pub struct GatherTally {
    pub accepted: u64,
    pub invalid: u64,
    pub runs: u64,
}

fn local_graphs(lat: &LatticeWorld, u: usize, to: Site, states: &[AgentState]) -> (GraphSnapshot, GraphSnapshot, Vec<BehaviorGroup>) {
    let torus = lat.torus();
    let from = lat.position(u);
    let mut ids = vec![u];
    for v in 0..lat.agent_count() {
        if v != u {
            let p = lat.position(v);
            if torus.direction_between(p, from).is_some() || torus.direction_between(p, to).is_some() {
                ids.push(v);
            }
        }
    }
    let at = |v: usize, moved: bool| if moved && v == u { to } else { lat.position(v) };
    let graph = |moved: bool| {
        let mut e = Vec::new();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                if torus.direction_between(at(ids[i], moved), at(ids[j], moved)).is_some() {
                    e.push((i, j));
                }
            }
        }
        GraphSnapshot::from_edges(ids.len(), &e).unwrap()
    };
    let groups = ids.iter().map(|&v| states[v].behavior_group()).collect();
    (graph(false), graph(true), groups)
}

/// Foraging runs on small random tori, instrumented so that every
/// accepted gather move is checked as a graph reconfiguration. Stops once
/// `target` moves were checked.
pub fn gather_moves(target: u64, seed: u64) -> GatherTally {
    let mut tally = GatherTally::default();
    let lambdas = [1.0, 2.0, 4.0, 8.0];
    while tally.accepted < target {
        let mut rng = SimRng::for_trial(seed, tally.runs);
        let lambda = lambdas[tally.runs as usize % lambdas.len()];
        let (side, n) = (14, 30 + rng.below(40));
        let mut lat = LatticeWorld::random(side, n, lambda, 1, &mut rng).unwrap();
        let params = ProtocolParams::with_default_p(1, 6).unwrap();
        let mut world = World::new(n, params);
        let food = lat.position(0);
        lat.apply_food_event(&mut world, stimuli_core::lattice::FoodEvent::Place { q: food.q, r: food.r }).unwrap();
        for it in 0..400_000u64 {
            if it == 200_000 {
                let dest = lat.position(rng.below(n));
                let cur = lat.food().next().unwrap();
                if dest != cur {
                    let ev = stimuli_core::lattice::FoodEvent::Shift { from: cur.to_pair(), to: dest.to_pair() };
                    lat.apply_food_event(&mut world, ev).unwrap();
                }
            }
            let u = rng.below(n);
            if rng.unit() < 0.5 {
                engine::activate(&mut world, &lat, u, &mut rng).unwrap();
                continue;
            }
            let s = world.state(u);
            if world.is_witness(u) || s.behavior_group() == BehaviorGroup::Immobile {
                continue;
            }
            if s.is_aware() {
                let d = rng.below(6);
                let draw = rng.unit();
                let to = lat.torus().step(lat.position(u), d);
                let (before, after, groups) = local_graphs(&lat, u, to, world.states());
                let states = world.states().to_vec();
                let aware = |v: usize| states[v].is_aware();
                if let MoveOutcome::Moved { .. } = lat.gather_with(u, d, draw, &aware).unwrap() {
                    tally.accepted += 1;
                    if !validate_local_reconfiguration(&before, &after, 0, &groups).unwrap() {
                        tally.invalid += 1;
                    }
                    world.set_witness(u, lat.is_food(lat.position(u))).unwrap();
                }
            } else if lat.execute_search(u, &mut rng).moved() {
                world.set_witness(u, lat.is_food(lat.position(u))).unwrap();
            }
            if tally.accepted >= target {
                break;
            }
        }
        tally.runs += 1;
    }
    tally
}

/// Fixed polyhexes of `k` cells, each enumerated once with its least cell
/// (by `(r, q)`) at the origin.
pub fn fixed_polyhexes(k: usize, mut visit: impl FnMut(&[Site])) {
    fn allowed(s: Site) -> bool {
        s.r > 0 || (s.r == 0 && s.q >= 0)
    }
    fn rec(untried: &mut Vec<Site>, poly: &mut Vec<Site>, seen: &mut std::collections::HashSet<Site>, k: usize, visit: &mut dyn FnMut(&[Site])) {
        while let Some(c) = untried.pop() {
            poly.push(c);
            if poly.len() == k {
                visit(poly);
            } else {
                let mut next = untried.clone();
                let mut fresh = Vec::new();
                for nb in c.neighbors() {
                    if allowed(nb) && seen.insert(nb) {
                        fresh.push(nb);
                        next.push(nb);
                    }
                }
                rec(&mut next, poly, seen, k, visit);
                for f in fresh {
                    seen.remove(&f);
                }
            }
            poly.pop();
        }
    }
    let origin = Site::new(0, 0);
    let mut seen = std::collections::HashSet::from([origin]);
    rec(&mut vec![origin], &mut Vec::new(), &mut seen, k, &mut visit);
}

fn edge_count(cells: &[Site]) -> usize {
    let mut e = 0;
    for (i, a) in cells.iter().enumerate() {
        for b in &cells[i + 1..] {
            if a.distance(*b) == 1 {
                e += 1;
            }
        }
    }
    e
}

/// Stationary law of `k` mobile Aware agents around a pinned witness at
/// the origin: `pi(sigma) ∝ lambda^e(sigma)` over connected placements,
/// keyed by the sorted mobile offsets.
pub fn metropolis_target(k: usize, lambda: f64) -> HashMap<Vec<Site>, f64> {
    let mut weights = HashMap::new();
    fixed_polyhexes(k + 1, |cells| {
        let e = edge_count(cells) as i32;
        for &pin in cells {
            let mut key: Vec<Site> = cells.iter().filter(|&&c| c != pin).map(|c| c.sub(pin)).collect();
            key.sort();
            weights.insert(key, lambda.powi(e));
        }
    });
    let z: f64 = weights.values().sum();
    weights.values_mut().for_each(|v| *v /= z);
    weights
}

/// Runs the gather chain (uniform agent, pinned witness idle) for `steps`
/// and returns the total-variation distance to [`metropolis_target`].
pub fn metropolis_tv(k: usize, lambda: f64, steps: u64, seed: u64) -> f64 {
    let target = metropolis_target(k, lambda);
    let side = 4 * (k as u32 + 2);
    let c = side as i32 / 2;
    let positions: Vec<Site> = (0..=k as i32).map(|i| Site::new(c + i, c)).collect();
    let mut lat = LatticeWorld::from_positions(side, &positions, lambda, 1).unwrap();
    let params = ProtocolParams::with_default_p(1, 6).unwrap();
    let mut states = vec![AgentState::AwareEmpty; k + 1];
    states[0] = AgentState::AwareWitness;
    let mut world = World::with_states(states, params);
    lat.apply_food_event(&mut world, stimuli_core::lattice::FoodEvent::Place { q: c, r: c }).unwrap();
    let mut rng = SimRng::new(seed);
    let aware = |_: usize| true;
    let torus = lat.torus();
    let mut counts: HashMap<Vec<Site>, u64> = HashMap::new();
    let burn = steps / 100;
    for t in 0..burn + steps {
        let u = rng.below(k + 1);
        if u != 0 {
            let d = rng.below(6);
            let draw = rng.unit();
            lat.gather_with(u, d, draw, &aware).unwrap();
        }
        if t >= burn {
            let pin = lat.position(0);
            let mut key: Vec<Site> = (1..=k).map(|v| torus.offset(pin, lat.position(v))).collect();
            key.sort();
            *counts.entry(key).or_default() += 1;
        }
    }
    let mut tv = 0.0;
    for (key, &p) in &target {
        let q = counts.get(key).copied().unwrap_or(0) as f64 / steps as f64;
        tv += (p - q).abs();
    }
    for (key, &c) in &counts {
        if !target.contains_key(key) {
            tv += c as f64 / steps as f64;
        }
    }
    tv / 2.0
}
