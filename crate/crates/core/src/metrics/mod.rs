//! Potential, residual components, perimeter, drift harness and
//! convergence summaries.

mod drift;
mod perimeter;
mod report;

pub use drift::{drift_absorption_trials, drift_expected, DriftChainSpec};
pub use perimeter::{
    boundary_walk_length, component_perimeter, has_hole, p_min, plane_edges, plane_perimeter, spiral_walk, unwrap_component,
    PerimeterReading,
};
pub use report::{convergence_report, fit_loglog_slope, ConvergenceReport, ConvergenceRow, Sample, TrialRecord};

use serde::Serialize;

use crate::engine::{NeighborBuf, Topology, World};
use crate::model::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PotentialReading {
    pub phi_a: usize,
    pub phi_at: usize,
    pub phi: usize,
}

/// Aware agents plus Aware agents holding an alert token.
pub fn potential(world: &World) -> PotentialReading {
    let phi_a = world.aware_count();
    let phi_at = world.token_count();
    PotentialReading { phi_a, phi_at, phi: phi_a + phi_at }
}

/// Same counts computed from a state slice.
pub fn potential_of(states: &[AgentState]) -> PotentialReading {
    let phi_a = states.iter().filter(|s| s.is_aware()).count();
    let phi_at = states.iter().filter(|s| s.has_alert_token()).count();
    PotentialReading { phi_a, phi_at, phi: phi_a + phi_at }
}

/// Connected components of the Aware-induced subgraph, each sorted, ordered
/// by smallest member.
pub fn aware_components<T: Topology + ?Sized>(world: &World, topo: &T) -> Vec<Vec<usize>> {
    let n = world.agent_count();
    let states = world.states();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    let mut buf = NeighborBuf::new();
    for s in 0..n {
        if seen[s] || !states[s].is_aware() {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut i = 0;
        while i < comp.len() {
            topo.neighbors_into(comp[i], &mut buf);
            for &v in &buf {
                if !seen[v] && states[v].is_aware() {
                    seen[v] = true;
                    comp.push(v);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

fn is_residual(world: &World, comp: &[usize]) -> bool {
    comp.iter().any(|&u| {
        let s = world.state(u);
        s == AgentState::AwareClear || (s.has_witness_flag() && !world.is_witness(u))
    })
}

/// Aware components containing an A_C agent or a flagged non-witness.
pub fn residual_components<T: Topology + ?Sized>(world: &World, topo: &T) -> Vec<Vec<usize>> {
    aware_components(world, topo).into_iter().filter(|c| is_residual(world, c)).collect()
}

/// Every Aware component contains an agent in A_W, A_AW or A_C.
pub fn state_invariant_holds<T: Topology + ?Sized>(world: &World, topo: &T) -> bool {
    aware_components(world, topo).iter().all(|c| {
        c.iter().any(|&u| {
            matches!(world.state(u), AgentState::AwareWitness | AgentState::AwareAlertWitness | AgentState::AwareClear)
        })
    })
}
