//! Scenario descriptions, single-trial simulations and the batch runner.

mod parse;
mod runner;
mod sim;

pub use parse::parse_scenario;
pub use runner::{run_scenario, run_trial, write_outputs, RunOptions, TrialOutput};
pub use sim::{Backend, Simulation, TraceRecord};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;
use crate::graph::{BatchRule, ScriptedSequence};
use crate::lattice::FoodEvent;
use crate::model::AgentState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Graph,
    Lattice,
}

#[derive(Debug, Clone)]
pub enum GraphTopology {
    Path,
    Cycle,
    Complete,
    Grid { rows: usize, cols: usize },
    Random { extra: usize, max_degree: usize },
    Edges(Vec<(usize, usize)>),
    Scripted(ScriptedSequence),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    Static,
    RandomRewiring { rate: f64, max_degree: usize },
    /// Agents move on a lattice of the given side; the graph is their adjacency.
    LatticeMovement { side: u32, lambda: f64 },
}

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub topology: GraphTopology,
    pub adversary: AdversarySpec,
    pub validate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPlacement {
    Random,
    /// Hexagonal blob around the lattice center.
    Compressed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    pub side: u32,
    pub lambda: f64,
    pub init: InitialPlacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopWhen {
    AllAware,
    AllUnaware,
    NoResiduals,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopSpec {
    pub when: StopWhen,
    pub max_iters: u64,
    /// The predicate is only consulted from this iteration on.
    pub not_before: u64,
}

/// Stimulus or parameter change; also the payload of live commands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Event {
    AddWitness { agent: usize },
    RemoveWitness { agent: usize },
    Food(FoodEvent),
    SetLambda { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub t: u64,
    pub event: Event,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub mode: Mode,
    pub n: usize,
    pub w: usize,
    pub p: f64,
    /// Explicit Δ; otherwise derived per trial from the topology.
    pub delta: Option<usize>,
    pub initial: Vec<AgentState>,
    pub graph: Option<GraphSpec>,
    pub lattice: Option<LatticeSpec>,
    pub schedule: Vec<TimedEvent>,
    pub stop: StopSpec,
    pub trials: u64,
    pub seed: u64,
    pub stride: u64,
    pub snapshot_every: Option<u64>,
    pub ledger: Option<BatchRule>,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
        parse_scenario(&text, path.parent())
    }

    /// The same scenario with extra timed events merged into the schedule;
    /// at equal times the existing events come first.
    pub fn with_events(&self, extra: &[TimedEvent]) -> Scenario {
        let mut s = self.clone();
        s.schedule.extend_from_slice(extra);
        s.schedule.sort_by_key(|e| e.t);
        s
    }
}
