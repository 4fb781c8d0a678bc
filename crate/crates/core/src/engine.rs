//! Random sequential execution of the adaptive stimuli protocol.

use smallvec::SmallVec;

use crate::error::EngineError;
use crate::model::{AgentState, ProtocolParams};
use crate::rng::SimRng;

/// Small inline buffer for neighbor lists.
pub type NeighborBuf = SmallVec<[usize; 8]>;

/// Adjacency view the engine runs against.
pub trait Topology {
    fn vertex_count(&self) -> usize;
    /// Writes the neighbors of `u` into `out` (cleared first) in a fixed order.
    fn neighbors_into(&self, u: usize, out: &mut NeighborBuf);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Change {
    pub agent: usize,
    pub old: AgentState,
    pub new: AgentState,
}

/// Which branch of the protocol the activated agent took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Witness without flag set its flag (probability `p`).
    FlagSet,
    /// Witness without flag failed its draw.
    FlagDeclined,
    /// Flagged non-witness broadcast all-clear and became Unaware.
    StimulusLost,
    /// Unaware agent consumed a neighbor's alert token.
    TokenConsumed,
    /// Token walk moved the token to a neighbor.
    TokenMoved,
    /// Token walk self-loop or blocked transfer.
    TokenStayed,
    TokenGenerated,
    TokenDeclined,
    /// A_C agent broadcast all-clear and became Unaware.
    ClearBroadcast,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Activation {
    pub agent: usize,
    pub action: Action,
    pub changes: SmallVec<[Change; 8]>,
}

impl Activation {
    /// True when the potential can rise: the agent is a witness acting on its stimulus.
    pub fn is_witness_action(&self) -> bool {
        matches!(self.action, Action::FlagSet | Action::FlagDeclined | Action::TokenGenerated | Action::TokenDeclined)
    }
}

/// States, witness membership and iteration counter of `n` agents.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    states: Vec<AgentState>,
    witness: Vec<bool>,
    witness_count: usize,
    aware_count: usize,
    token_count: usize,
    iteration: u64,
    params: ProtocolParams,
}

impl World {
    /// All-Unaware world with no witnesses.
    pub fn new(n: usize, params: ProtocolParams) -> Self {
        World {
            states: vec![AgentState::Unaware; n],
            witness: vec![false; n],
            witness_count: 0,
            aware_count: 0,
            token_count: 0,
            iteration: 0,
            params,
        }
    }

    pub fn with_states(states: Vec<AgentState>, params: ProtocolParams) -> Self {
        let n = states.len();
        let mut w = World::new(n, params);
        for (u, s) in states.into_iter().enumerate() {
            w.set_state(u, s);
        }
        w
    }

    pub fn agent_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[AgentState] {
        &self.states
    }

    pub fn state(&self, u: usize) -> AgentState {
        self.states[u]
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn set_params(&mut self, params: ProtocolParams) {
        self.params = params;
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn aware_count(&self) -> usize {
        self.aware_count
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn witness_count(&self) -> usize {
        self.witness_count
    }

    pub fn is_witness(&self, u: usize) -> bool {
        self.witness[u]
    }

    pub fn witnesses(&self) -> impl Iterator<Item = usize> + '_ {
        self.witness.iter().enumerate().filter(|(_, &w)| w).map(|(u, _)| u)
    }

    pub fn all_aware(&self) -> bool {
        self.aware_count == self.states.len()
    }

    pub fn all_unaware(&self) -> bool {
        self.aware_count == 0
    }

    /// Overwrites a state, keeping the aggregate counters in sync.
    pub fn set_state(&mut self, u: usize, s: AgentState) {
        let old = self.states[u];
        self.aware_count = self.aware_count + s.is_aware() as usize - old.is_aware() as usize;
        self.token_count = self.token_count + s.has_alert_token() as usize - old.has_alert_token() as usize;
        self.states[u] = s;
    }

    /// Adds or removes `u` from the witness set. Never touches the state;
    /// the flag follows on the agent's next activation.
    pub fn set_witness(&mut self, u: usize, on: bool) -> Result<(), EngineError> {
        let n = self.states.len();
        if u >= n {
            return Err(EngineError::UnknownAgent { agent: u, n });
        }
        if self.witness[u] == on {
            return Ok(());
        }
        if on && self.witness_count + 1 > self.params.w() {
            return Err(EngineError::WitnessOverflow {
                count: self.witness_count + 1,
                w: self.params.w(),
                iteration: self.iteration,
            });
        }
        self.witness[u] = on;
        if on {
            self.witness_count += 1;
        } else {
            self.witness_count -= 1;
        }
        Ok(())
    }

    pub(crate) fn bump_iteration(&mut self) {
        self.iteration += 1;
    }

    pub fn set_iteration(&mut self, t: u64) {
        self.iteration = t;
    }

    fn record(&mut self, act: &mut Activation, u: usize, new: AgentState) {
        let old = self.states[u];
        if old != new {
            self.set_state(u, new);
            act.changes.push(Change { agent: u, old, new });
        }
    }

    fn check(&self, topo_n: usize) -> Result<(), EngineError> {
        if topo_n != self.states.len() {
            return Err(EngineError::SizeMismatch { graph: topo_n, world: self.states.len() });
        }
        if self.witness_count > self.params.w() {
            return Err(EngineError::WitnessOverflow {
                count: self.witness_count,
                w: self.params.w(),
                iteration: self.iteration,
            });
        }
        Ok(())
    }
}

/// Runs the protocol action of agent `u` once. Does not advance the iteration.
pub fn activate<T: Topology + ?Sized>(
    world: &mut World,
    topo: &T,
    u: usize,
    rng: &mut SimRng,
) -> Result<Activation, EngineError> {
    use AgentState::*;
    let mut act = Activation { agent: u, action: Action::Idle, changes: SmallVec::new() };
    let s = world.states[u];
    let witness = world.witness[u];
    let p = world.params.p();
    let mut nbrs = NeighborBuf::new();

    if witness && !s.has_witness_flag() {
        if rng.chance(p) {
            world.record(&mut act, u, AwareWitness);
            act.action = Action::FlagSet;
        } else {
            act.action = Action::FlagDeclined;
        }
        return Ok(act);
    }
    if !witness && s.has_witness_flag() {
        topo.neighbors_into(u, &mut nbrs);
        for &v in &nbrs {
            if world.states[v].is_aware() {
                world.record(&mut act, v, AwareClear);
            }
        }
        world.record(&mut act, u, Unaware);
        act.action = Action::StimulusLost;
        return Ok(act);
    }
    match s {
        Unaware => {
            topo.neighbors_into(u, &mut nbrs);
            let holder = nbrs.iter().copied().filter(|&v| world.states[v].has_alert_token()).min();
            if let Some(v) = holder {
                let dropped = if world.states[v] == AwareAlert { AwareEmpty } else { AwareWitness };
                world.record(&mut act, v, dropped);
                world.record(&mut act, u, AwareEmpty);
                act.action = Action::TokenConsumed;
            }
        }
        AwareAlert | AwareAlertWitness => {
            topo.neighbors_into(u, &mut nbrs);
            let delta = world.params.delta_max();
            if nbrs.len() > delta {
                return Err(EngineError::DegreeExceeded { agent: u, degree: nbrs.len(), delta });
            }
            let j = rng.below(delta);
            act.action = Action::TokenStayed;
            if j < nbrs.len() {
                let v = nbrs[j];
                let target = match world.states[v] {
                    AwareEmpty => Some(AwareAlert),
                    AwareWitness => Some(AwareAlertWitness),
                    _ => None,
                };
                if let Some(t) = target {
                    world.record(&mut act, v, t);
                    let own = if s == AwareAlert { AwareEmpty } else { AwareWitness };
                    world.record(&mut act, u, own);
                    act.action = Action::TokenMoved;
                }
            }
        }
        AwareWitness => {
            if rng.chance(p) {
                world.record(&mut act, u, AwareAlertWitness);
                act.action = Action::TokenGenerated;
            } else {
                act.action = Action::TokenDeclined;
            }
        }
        AwareClear => {
            topo.neighbors_into(u, &mut nbrs);
            for &v in &nbrs {
                if world.states[v].is_aware() {
                    world.record(&mut act, v, AwareClear);
                }
            }
            world.record(&mut act, u, Unaware);
            act.action = Action::ClearBroadcast;
        }
        AwareEmpty => {}
    }
    Ok(act)
}

/// One iteration: a uniformly random agent is activated.
pub fn step<T: Topology + ?Sized>(world: &mut World, topo: &T, rng: &mut SimRng) -> Result<Activation, EngineError> {
    world.check(topo.vertex_count())?;
    let n = world.agent_count();
    if n == 0 {
        world.bump_iteration();
        return Ok(Activation { agent: 0, action: Action::Idle, changes: SmallVec::new() });
    }
    let u = rng.below(n);
    let act = activate(world, topo, u, rng)?;
    world.bump_iteration();
    Ok(act)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOutcome {
    pub iterations: u64,
    pub satisfied: bool,
}

/// Steps until `predicate` holds (checked before the first step and after
/// each one) or `max_iters` steps were taken.
pub fn run_until<T, P>(
    world: &mut World,
    topo: &T,
    rng: &mut SimRng,
    mut predicate: P,
    max_iters: u64,
) -> Result<RunOutcome, EngineError>
where
    T: Topology + ?Sized,
    P: FnMut(&World) -> bool,
{
    let mut used = 0;
    if predicate(world) {
        return Ok(RunOutcome { iterations: 0, satisfied: true });
    }
    while used < max_iters {
        step(world, topo, rng)?;
        used += 1;
        if predicate(world) {
            return Ok(RunOutcome { iterations: used, satisfied: true });
        }
    }
    Ok(RunOutcome { iterations: used, satisfied: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessOp {
    Add,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WitnessEvent {
    pub at: u64,
    pub op: WitnessOp,
    pub agent: usize,
}

/// Timed witness additions and removals, applied before the activation of
/// the iteration they are stamped with.
#[derive(Debug, Clone, Default)]
pub struct WitnessSchedule {
    events: Vec<WitnessEvent>,
    cursor: usize,
}

impl WitnessSchedule {
    /// Validates ordering and the `w` bound by dry-running the schedule.
    pub fn new(events: Vec<WitnessEvent>, n: usize, w: usize) -> Result<Self, EngineError> {
        let mut live = vec![false; n];
        let mut count = 0usize;
        for (i, e) in events.iter().enumerate() {
            if i > 0 && events[i - 1].at > e.at {
                return Err(EngineError::Schedule { index: i, msg: "events not sorted by iteration".into() });
            }
            if e.agent >= n {
                return Err(EngineError::Schedule { index: i, msg: format!("agent {} out of range", e.agent) });
            }
            match e.op {
                WitnessOp::Add => {
                    if live[e.agent] {
                        return Err(EngineError::Schedule { index: i, msg: format!("agent {} is already a witness", e.agent) });
                    }
                    count += 1;
                    if count > w {
                        return Err(EngineError::Schedule {
                            index: i,
                            msg: format!("{count} concurrent stimuli exceed w = {w}"),
                        });
                    }
                    live[e.agent] = true;
                }
                WitnessOp::Remove => {
                    if !live[e.agent] {
                        return Err(EngineError::Schedule { index: i, msg: format!("agent {} is not a witness", e.agent) });
                    }
                    count -= 1;
                    live[e.agent] = false;
                }
            }
        }
        Ok(WitnessSchedule { events, cursor: 0 })
    }

    pub fn events(&self) -> &[WitnessEvent] {
        &self.events
    }

    /// Applies every pending event stamped at or before the world's iteration.
    pub fn apply_due(&mut self, world: &mut World) -> Result<usize, EngineError> {
        let mut applied = 0;
        while let Some(e) = self.events.get(self.cursor) {
            if e.at > world.iteration() {
                break;
            }
            world.set_witness(e.agent, e.op == WitnessOp::Add)?;
            self.cursor += 1;
            applied += 1;
        }
        Ok(applied)
    }

    pub fn next_event_at(&self) -> Option<u64> {
        self.events.get(self.cursor).map(|e| e.at)
    }

    pub fn is_exhausted(&self) -> bool {
        self.cursor >= self.events.len()
    }
}

/// One-shot helper: applies all events due at the world's current iteration.
pub fn apply_witness_schedule(world: &mut World, events: &[WitnessEvent]) -> Result<(), EngineError> {
    let t = world.iteration();
    for e in events.iter().filter(|e| e.at == t) {
        world.set_witness(e.agent, e.op == WitnessOp::Add)?;
    }
    Ok(())
}
