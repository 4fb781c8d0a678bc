//! One seeded trial of a scenario, advanced iteration by iteration.

use serde::Serialize;

use crate::engine::{self, Activation, World};
use crate::error::ScenarioError;
use crate::graph::{DynamicGraph, GraphSnapshot, RandomRewiring, RecurrenceLedger, StaticAdversary};
use crate::lattice::{LatticeMovementAdversary, LatticeSnapshot, LatticeWorld, Site};
use crate::metrics::{self, component_perimeter, PerimeterReading, Sample};
use crate::model::{group_vector, ProtocolParams};
use crate::rng::SimRng;

use super::{AdversarySpec, Event, GraphTopology, InitialPlacement, Mode, Scenario, StopWhen, TimedEvent};

pub enum Backend {
    Graph(DynamicGraph),
    Lattice(LatticeWorld),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub iteration: u64,
    pub agent: usize,
    pub old_state: crate::model::AgentState,
    pub new_state: crate::model::AgentState,
}

pub struct Simulation {
    world: World,
    backend: Backend,
    rng: SimRng,
    schedule: Vec<TimedEvent>,
    cursor: usize,
    ledger: Option<RecurrenceLedger>,
    trace: Option<Vec<TraceRecord>>,
}

impl Simulation {
    /// Trial `trial` of `sc`, seeded from `sc.seed` and the trial index.
    pub fn new(sc: &Scenario, trial: u64) -> Result<Simulation, ScenarioError> {
        Self::with_rng(sc, SimRng::for_trial(sc.seed, trial))
    }

    pub fn with_rng(sc: &Scenario, mut rng: SimRng) -> Result<Simulation, ScenarioError> {
        let n = sc.n;
        let (world, backend) = match sc.mode {
            Mode::Graph => {
                let spec = sc.graph.as_ref().ok_or_else(|| ScenarioError::field("graph", "missing"))?;
                let mut movement = None;
                let initial = match (&spec.adversary, &spec.topology) {
                    (AdversarySpec::LatticeMovement { side, lambda }, _) => {
                        let lat = LatticeWorld::random(*side, n, *lambda, sc.w, &mut rng)?;
                        let g = lat.to_graph();
                        movement = Some(LatticeMovementAdversary::new(lat));
                        g
                    }
                    (_, GraphTopology::Path) => GraphSnapshot::path(n),
                    (_, GraphTopology::Cycle) => GraphSnapshot::cycle(n),
                    (_, GraphTopology::Complete) => GraphSnapshot::complete(n),
                    (_, GraphTopology::Grid { rows, cols }) => GraphSnapshot::grid(*cols, *rows),
                    (_, GraphTopology::Random { extra, max_degree }) => GraphSnapshot::random_connected(n, *extra, *max_degree, &mut rng),
                    (_, GraphTopology::Edges(e)) => GraphSnapshot::from_edges(n, e)?,
                    (_, GraphTopology::Scripted(seq)) => seq.initial().cloned().expect("validated at parse time"),
                };
                let derived = match (&spec.adversary, &spec.topology) {
                    (AdversarySpec::LatticeMovement { .. }, _) => 6,
                    (AdversarySpec::RandomRewiring { max_degree, .. }, _) => (*max_degree).max(initial.max_degree()),
                    (_, GraphTopology::Scripted(seq)) => seq.frames().values().map(|g| g.max_degree()).max().unwrap_or(0),
                    _ => initial.max_degree(),
                };
                let params = ProtocolParams::new(sc.w, sc.p, sc.delta.unwrap_or(derived).max(1))?;
                let world = World::with_states(sc.initial.clone(), params);
                let dg = match (&spec.adversary, &spec.topology, movement) {
                    (AdversarySpec::LatticeMovement { .. }, _, Some(adv)) => DynamicGraph::new(initial, Box::new(adv), spec.validate),
                    (AdversarySpec::RandomRewiring { rate, max_degree }, _, _) => {
                        DynamicGraph::new(initial, Box::new(RandomRewiring { rate: *rate, max_degree: *max_degree }), spec.validate)
                    }
                    (_, GraphTopology::Scripted(seq), _) => DynamicGraph::new(initial, Box::new(seq.clone()), spec.validate),
                    _ => DynamicGraph::new(initial, Box::new(StaticAdversary), spec.validate),
                };
                (world, Backend::Graph(dg))
            }
            Mode::Lattice => {
                let spec = sc.lattice.as_ref().ok_or_else(|| ScenarioError::field("lattice", "missing"))?;
                let lat = match spec.init {
                    InitialPlacement::Random => LatticeWorld::random(spec.side, n, spec.lambda, sc.w, &mut rng)?,
                    InitialPlacement::Compressed => {
                        let c = spec.side as i32 / 2;
                        LatticeWorld::compressed(spec.side, n, Site::new(c, c), spec.lambda, sc.w)?
                    }
                };
                let params = ProtocolParams::new(sc.w, sc.p, sc.delta.unwrap_or(6))?;
                let mut world = World::with_states(sc.initial.clone(), params);
                lat.sync_witnesses(&mut world)?;
                (world, Backend::Lattice(lat))
            }
        };
        Ok(Simulation { world, backend, rng, schedule: sc.schedule.clone(), cursor: 0, ledger: sc.ledger.map(RecurrenceLedger::new), trace: None })
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn drain_trace(&mut self) -> Vec<TraceRecord> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn lattice(&self) -> Option<&LatticeWorld> {
        match &self.backend {
            Backend::Lattice(l) => Some(l),
            Backend::Graph(_) => None,
        }
    }

    pub fn ledger(&self) -> Option<&RecurrenceLedger> {
        self.ledger.as_ref()
    }

    pub fn rng(&self) -> &SimRng {
        &self.rng
    }

    pub fn tick(&self) -> u64 {
        self.world.iteration()
    }

    /// Applies scheduled events stamped at or before the current iteration.
    pub fn apply_due(&mut self) -> Result<usize, ScenarioError> {
        let t = self.tick();
        let mut k = 0;
        while self.cursor < self.schedule.len() && self.schedule[self.cursor].t <= t {
            let ev = self.schedule[self.cursor].event;
            self.cursor += 1;
            self.apply_event(&ev)?;
            k += 1;
        }
        Ok(k)
    }

    /// Applies an event right now, after any scheduled events that are due.
    pub fn inject(&mut self, ev: &Event) -> Result<TimedEvent, ScenarioError> {
        self.apply_due()?;
        self.apply_event(ev)?;
        Ok(TimedEvent { t: self.tick(), event: *ev })
    }

    fn apply_event(&mut self, ev: &Event) -> Result<(), ScenarioError> {
        match (&mut self.backend, ev) {
            (Backend::Graph(_), Event::AddWitness { agent }) => self.world.set_witness(*agent, true)?,
            (Backend::Graph(_), Event::RemoveWitness { agent }) => self.world.set_witness(*agent, false)?,
            (Backend::Lattice(l), Event::Food(f)) => l.apply_food_event(&mut self.world, *f)?,
            (Backend::Lattice(l), Event::SetLambda { value }) => {
                if !(*value > 0.0 && value.is_finite()) {
                    return Err(ScenarioError::field("lambda", "must be positive"));
                }
                l.set_lambda(*value)
            }
            (_, ev) => return Err(ScenarioError::field("event", format!("{ev:?} does not apply in this mode"))),
        }
        Ok(())
    }

    /// One iteration: adversary move (graph mode) and one activation.
    pub fn step_once(&mut self) -> Result<(), ScenarioError> {
        let t = self.tick();
        match &mut self.backend {
            Backend::Graph(dg) => {
                if !dg.is_static() {
                    let groups = group_vector(self.world.states());
                    dg.next_graph(t, &groups, &mut self.rng)?;
                }
                let act = engine::step(&mut self.world, dg.graph(), &mut self.rng)?;
                record(&mut self.trace, t, &act);
                if let Some(l) = &mut self.ledger {
                    l.record_recurrence(&self.world, dg.graph());
                }
            }
            Backend::Lattice(lat) => {
                let out = lat.foraging_step(&mut self.world, &mut self.rng)?;
                if let crate::lattice::ForagingAction::State(act) = &out.action {
                    record(&mut self.trace, t, act);
                }
                if let Some(l) = &mut self.ledger {
                    if let Some(a) = out.selected_for_move() {
                        l.note_selection(a);
                    }
                    if let Some((u, v)) = out.contact {
                        l.note_contact(u, v);
                    }
                    l.record_recurrence(&self.world, &*lat);
                }
            }
        }
        Ok(())
    }

    /// Due events, then one iteration.
    pub fn advance(&mut self) -> Result<(), ScenarioError> {
        self.apply_due()?;
        self.step_once()
    }

    pub fn predicate(&self, when: StopWhen) -> bool {
        match when {
            StopWhen::AllAware => self.world.all_aware(),
            StopWhen::AllUnaware => self.world.all_unaware(),
            StopWhen::NoResiduals => self.residual_count() == 0,
            StopWhen::Never => false,
        }
    }

    pub fn residual_count(&self) -> usize {
        match &self.backend {
            Backend::Graph(dg) => metrics::residual_components(&self.world, dg.graph()).len(),
            Backend::Lattice(l) => metrics::residual_components(&self.world, l).len(),
        }
    }

    /// Perimeter of the largest Aware component holding a witness; `None`
    /// without one or when it wraps around the torus.
    pub fn witness_perimeter(&self) -> Option<PerimeterReading> {
        let Backend::Lattice(l) = &self.backend else { return None };
        metrics::aware_components(&self.world, l)
            .into_iter()
            .filter(|c| c.iter().any(|&u| self.world.is_witness(u)))
            .max_by_key(|c| c.len())
            .and_then(|c| component_perimeter(l, &c).ok().flatten())
    }

    pub fn sample(&self) -> Sample {
        let pot = metrics::potential(&self.world);
        let per = self.witness_perimeter();
        let n = self.world.agent_count().max(1);
        Sample {
            iteration: self.tick(),
            phi_a: pot.phi_a,
            phi_at: pot.phi_at,
            phi: pot.phi,
            residuals: self.residual_count(),
            aware_fraction: self.world.aware_count() as f64 / n as f64,
            perimeter: per.map(|p| p.boundary_walk_length),
            alpha: per.map(|p| p.alpha_ratio),
        }
    }

    pub fn snapshot(&self) -> Option<LatticeSnapshot> {
        self.lattice().map(|l| l.snapshot(&self.world))
    }

    pub fn snapshot_json(&self) -> Option<String> {
        self.lattice().map(|l| l.snapshot_json(&self.world))
    }
}

fn record(trace: &mut Option<Vec<TraceRecord>>, t: u64, act: &Activation) {
    if let Some(buf) = trace {
        for c in &act.changes {
            buf.push(TraceRecord { iteration: t, agent: c.agent, old_state: c.old, new_state: c.new });
        }
    }
}
