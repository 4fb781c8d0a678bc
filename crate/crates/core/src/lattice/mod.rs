//! Periodic triangular lattice foraging world.

pub mod geometry;
pub mod moves;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::engine::{self, Activation, NeighborBuf, Topology, World};
use crate::error::{GraphError, LatticeError};
use crate::graph::{validate_local_reconfiguration, Adversary, GraphSnapshot, Reconfiguration};
use crate::model::{AgentState, BehaviorGroup};
use crate::rng::SimRng;

pub use geometry::{opposite, Site, Torus, DIRECTIONS};
pub use moves::{compression_move_valid, metropolis_accept};

const EMPTY: u32 = u32::MAX;

/// A proposed single-step move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MoveProposal {
    pub agent: usize,
    pub from: Site,
    pub to: Site,
    pub direction: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Moved { from: Site, to: Site },
    /// Target occupied.
    Blocked,
    /// Not a valid compression move.
    Invalid,
    /// Failed the Metropolis filter.
    Rejected,
}

impl MoveOutcome {
    pub fn moved(&self) -> bool {
        matches!(self, MoveOutcome::Moved { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ForagingAction {
    State(Activation),
    /// Movement branch on a witness or Immobile agent.
    Pinned,
    Gather(MoveOutcome),
    Search(MoveOutcome),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForagingOutcome {
    pub agent: usize,
    pub action: ForagingAction,
    /// A move placed an Unaware agent next to an Aware one: `(unaware, aware)`.
    pub contact: Option<(usize, usize)>,
}

impl ForagingOutcome {
    /// Agent selected on the movement branch, if any.
    pub fn selected_for_move(&self) -> Option<usize> {
        match self.action {
            ForagingAction::State(_) => None,
            _ => Some(self.agent),
        }
    }
}

/// Food placement, removal or relocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum FoodEvent {
    Place { q: i32, r: i32 },
    Remove { q: i32, r: i32 },
    Shift { from: [i32; 2], to: [i32; 2] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: usize,
    pub q: i32,
    pub r: i32,
    pub state: AgentState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoodRecord {
    pub q: i32,
    pub r: i32,
}

/// Serialized lattice state shared by file dumps and the live wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSnapshot {
    pub side: u32,
    pub agents: Vec<AgentRecord>,
    pub food: Vec<FoodRecord>,
    pub lambda: f64,
    pub tick: u64,
}

/// Occupancy, food and bias of one foraging trial.
#[derive(Debug, Clone)]
pub struct LatticeWorld {
    torus: Torus,
    occ: Vec<u32>,
    pos: Vec<Site>,
    food: BTreeSet<Site>,
    food_mask: Vec<bool>,
    lambda: f64,
    w: usize,
    check_moves: bool,
}

impl LatticeWorld {
    /// Agents at the given distinct sites (wrapped onto the torus).
    pub fn from_positions(side: u32, positions: &[Site], lambda: f64, w: usize) -> Result<Self, LatticeError> {
        if side < 4 {
            return Err(LatticeError::SideTooSmall(side));
        }
        let torus = Torus::new(side);
        if positions.len() > torus.site_count() {
            return Err(LatticeError::TooManyAgents { agents: positions.len(), sites: torus.site_count() });
        }
        let mut occ = vec![EMPTY; torus.site_count()];
        let mut pos = Vec::with_capacity(positions.len());
        for (i, &p) in positions.iter().enumerate() {
            let s = torus.wrap(p);
            let idx = torus.index(s);
            if occ[idx] != EMPTY {
                return Err(LatticeError::Occupied(s.q, s.r));
            }
            occ[idx] = i as u32;
            pos.push(s);
        }
        Ok(LatticeWorld {
            torus,
            occ,
            pos,
            food: BTreeSet::new(),
            food_mask: vec![false; torus.site_count()],
            lambda,
            w,
            check_moves: cfg!(debug_assertions),
        })
    }

    /// `n` agents on uniformly random distinct sites.
    pub fn random(side: u32, n: usize, lambda: f64, w: usize, rng: &mut SimRng) -> Result<Self, LatticeError> {
        let sites = side as usize * side as usize;
        if n > sites {
            return Err(LatticeError::TooManyAgents { agents: n, sites });
        }
        let torus = Torus::new(side);
        let mut idx: Vec<usize> = (0..sites).collect();
        for i in 0..n {
            let j = i + rng.below(sites - i);
            idx.swap(i, j);
        }
        let positions: Vec<Site> = idx[..n].iter().map(|&i| torus.site(i)).collect();
        Self::from_positions(side, &positions, lambda, w)
    }

    /// `n` agents filling a hexagonal spiral around `center`.
    pub fn compressed(side: u32, n: usize, center: Site, lambda: f64, w: usize) -> Result<Self, LatticeError> {
        let positions: Vec<Site> = hex_spiral(n).into_iter().map(|s| s.add(center)).collect();
        if n > (side as usize / 2).pow(2) {
            return Err(LatticeError::TooManyAgents { agents: n, sites: (side as usize / 2).pow(2) });
        }
        Self::from_positions(side, &positions, lambda, w)
    }

    pub fn torus(&self) -> Torus {
        self.torus
    }

    pub fn side(&self) -> u32 {
        self.torus.side()
    }

    pub fn agent_count(&self) -> usize {
        self.pos.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn set_lambda(&mut self, lambda: f64) {
        self.lambda = lambda;
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn set_check_moves(&mut self, on: bool) {
        self.check_moves = on;
    }

    pub fn position(&self, agent: usize) -> Site {
        self.pos[agent]
    }

    pub fn positions(&self) -> &[Site] {
        &self.pos
    }

    #[inline]
    pub fn agent_at(&self, s: Site) -> Option<usize> {
        let a = self.occ[self.torus.index(s)];
        (a != EMPTY).then_some(a as usize)
    }

    #[inline]
    pub fn is_food(&self, s: Site) -> bool {
        self.food_mask[self.torus.index(s)]
    }

    pub fn food(&self) -> impl Iterator<Item = Site> + '_ {
        self.food.iter().copied()
    }

    pub fn food_count(&self) -> usize {
        self.food.len()
    }

    /// Occupied neighbor sites of `s`, with their agents, in direction order.
    pub fn neighbor_agents(&self, s: Site) -> impl Iterator<Item = usize> + '_ {
        (0..6).filter_map(move |d| self.agent_at(self.torus.step(s, d)))
    }

    /// Aware neighbors of a site, excluding `skip`.
    fn aware_degree<F: Fn(usize) -> bool>(&self, s: Site, aware: &F, skip: usize) -> i32 {
        self.neighbor_agents(s).filter(|&v| v != skip && aware(v)).count() as i32
    }

    fn aware_site<'a, F: Fn(usize) -> bool>(&'a self, aware: &'a F) -> impl Fn(Site) -> bool + 'a {
        move |s| self.agent_at(s).is_some_and(|v| aware(v))
    }

    pub fn proposal(&self, agent: usize, direction: usize) -> MoveProposal {
        let from = self.pos[agent];
        MoveProposal { agent, from, to: self.torus.step(from, direction), direction }
    }

    /// Valid compression move check; `aware` classifies agents by id.
    pub fn is_valid_compression_move<F: Fn(usize) -> bool>(&self, prop: &MoveProposal, aware: F) -> Result<bool, LatticeError> {
        let d = self
            .torus
            .direction_between(prop.from, prop.to)
            .ok_or(LatticeError::NotAdjacent(prop.from.q, prop.from.r, prop.to.q, prop.to.r))?;
        if self.agent_at(prop.to).is_some() {
            return Ok(false);
        }
        Ok(compression_move_valid(self.aware_site(&aware), prop.from, d))
    }

    fn relocate(&mut self, agent: usize, to: Site) {
        let from = self.pos[agent];
        let (fi, ti) = (self.torus.index(from), self.torus.index(to));
        self.occ[fi] = EMPTY;
        self.occ[ti] = agent as u32;
        self.pos[agent] = self.torus.wrap(to);
    }

    /// Graph view of a move restricted to the mover and its neighbors on
    /// both sides: `(before, after, mover index, groups)`.
    pub fn local_reconfiguration<F: Fn(usize) -> bool>(
        &self,
        agent: usize,
        to: Site,
        aware: &F,
    ) -> (GraphSnapshot, GraphSnapshot, usize, Vec<BehaviorGroup>) {
        let from = self.pos[agent];
        let mut ids = vec![agent];
        for v in self.neighbor_agents(from).chain(self.neighbor_agents(to)) {
            if !ids.contains(&v) {
                ids.push(v);
            }
        }
        let site_of = |v: usize, moved: bool| if moved && v == agent { self.torus.wrap(to) } else { self.pos[v] };
        let build = |moved: bool| {
            let mut edges = Vec::new();
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    if self.torus.direction_between(site_of(ids[i], moved), site_of(ids[j], moved)).is_some() {
                        edges.push((i, j));
                    }
                }
            }
            GraphSnapshot::from_edges(ids.len(), &edges).expect("lattice adjacency is simple")
        };
        let groups = ids
            .iter()
            .map(|&v| {
                if v == agent {
                    BehaviorGroup::Mobile
                } else if aware(v) {
                    BehaviorGroup::Mobile
                } else {
                    BehaviorGroup::Unaware
                }
            })
            .collect();
        (build(false), build(true), 0, groups)
    }

    /// Gather move of a Mobile agent: uniform direction, validity check,
    /// Metropolis filter on the change in Aware neighbors.
    pub fn execute_gather<F: Fn(usize) -> bool>(&mut self, agent: usize, aware: F, rng: &mut SimRng) -> Result<MoveOutcome, LatticeError> {
        let d = rng.below(6);
        let draw = rng.unit();
        self.gather_with(agent, d, draw, &aware)
    }

    /// Gather move with explicit direction and acceptance draw.
    pub fn gather_with<F: Fn(usize) -> bool>(&mut self, agent: usize, d: usize, draw: f64, aware: &F) -> Result<MoveOutcome, LatticeError> {
        let from = self.pos[agent];
        let to = self.torus.step(from, d);
        if self.agent_at(to).is_some() {
            return Ok(MoveOutcome::Blocked);
        }
        if !compression_move_valid(self.aware_site(aware), from, d) {
            return Ok(MoveOutcome::Invalid);
        }
        let before = self.aware_degree(from, aware, agent);
        let after = self.aware_degree(to, aware, agent);
        if !metropolis_accept(self.lambda, after - before, draw) {
            return Ok(MoveOutcome::Rejected);
        }
        if self.check_moves {
            let (b, a, u, g) = self.local_reconfiguration(agent, to, aware);
            if !validate_local_reconfiguration(&b, &a, u, &g).unwrap_or(false) {
                return Err(LatticeError::NotLocallyConnected { agent, fq: from.q, fr: from.r });
            }
        }
        self.relocate(agent, to);
        Ok(MoveOutcome::Moved { from, to: self.pos[agent] })
    }

    /// Exclusion step of an Unaware agent.
    pub fn execute_search(&mut self, agent: usize, rng: &mut SimRng) -> MoveOutcome {
        let d = rng.below(6);
        let from = self.pos[agent];
        let to = self.torus.step(from, d);
        if self.agent_at(to).is_some() {
            return MoveOutcome::Blocked;
        }
        self.relocate(agent, to);
        MoveOutcome::Moved { from, to: self.pos[agent] }
    }

    /// Sets the witness bit of every agent from the food set.
    pub fn sync_witnesses(&self, world: &mut World) -> Result<(), LatticeError> {
        for u in 0..self.agent_count() {
            if !self.is_food(self.pos[u]) {
                world.set_witness(u, false)?;
            }
        }
        for u in 0..self.agent_count() {
            if self.is_food(self.pos[u]) {
                world.set_witness(u, true)?;
            }
        }
        Ok(())
    }

    fn check_in_range(&self, q: i32, r: i32) -> Result<Site, LatticeError> {
        let s = Site::new(q, r);
        if self.torus.contains(s) {
            Ok(s)
        } else {
            Err(LatticeError::OutOfRange { q, r, side: self.side() })
        }
    }

    /// Applies a food event; out-of-range coordinates are rejected, not wrapped.
    pub fn apply_food_event(&mut self, world: &mut World, event: FoodEvent) -> Result<(), LatticeError> {
        match event {
            FoodEvent::Place { q, r } => {
                let s = self.check_in_range(q, r)?;
                if self.food.contains(&s) {
                    return Err(LatticeError::FoodExists(q, r));
                }
                if self.food.len() >= self.w {
                    return Err(LatticeError::FoodLimit { q, r, w: self.w });
                }
                self.set_food(world, s, true)
            }
            FoodEvent::Remove { q, r } => {
                let s = self.check_in_range(q, r)?;
                if !self.food.contains(&s) {
                    return Err(LatticeError::FoodNotFound(q, r));
                }
                self.set_food(world, s, false)
            }
            FoodEvent::Shift { from, to } => {
                let f = self.check_in_range(from[0], from[1])?;
                let t = self.check_in_range(to[0], to[1])?;
                if !self.food.contains(&f) {
                    return Err(LatticeError::FoodNotFound(f.q, f.r));
                }
                if f == t {
                    return Ok(());
                }
                if self.food.contains(&t) {
                    return Err(LatticeError::FoodExists(t.q, t.r));
                }
                self.set_food(world, f, false)?;
                self.set_food(world, t, true)
            }
        }
    }

    fn set_food(&mut self, world: &mut World, s: Site, on: bool) -> Result<(), LatticeError> {
        let idx = self.torus.index(s);
        self.food_mask[idx] = on;
        if on {
            self.food.insert(s);
        } else {
            self.food.remove(&s);
        }
        if let Some(a) = self.agent_at(s) {
            world.set_witness(a, on)?;
        }
        Ok(())
    }

    /// One foraging iteration: a uniform agent either runs its protocol
    /// action or moves, each with probability one half.
    pub fn foraging_step(&mut self, world: &mut World, rng: &mut SimRng) -> Result<ForagingOutcome, LatticeError> {
        let n = self.agent_count();
        if n == 0 {
            world.bump_iteration();
            return Ok(ForagingOutcome { agent: 0, action: ForagingAction::Pinned, contact: None });
        }
        let u = rng.below(n);
        let out = self.foraging_action(world, u, rng)?;
        world.bump_iteration();
        Ok(out)
    }

    /// Foraging action of agent `u` without advancing the iteration.
    pub fn foraging_action(&mut self, world: &mut World, u: usize, rng: &mut SimRng) -> Result<ForagingOutcome, LatticeError> {
        let coin = rng.unit();
        if coin < 0.5 {
            let act = engine::activate(world, &*self, u, rng)?;
            return Ok(ForagingOutcome { agent: u, action: ForagingAction::State(act), contact: None });
        }
        let state = world.state(u);
        let (action, moved) = if world.is_witness(u) || state.behavior_group() == BehaviorGroup::Immobile {
            (ForagingAction::Pinned, false)
        } else if state.is_aware() {
            let states = world.states();
            let o = self.execute_gather(u, |v| states[v].is_aware(), rng)?;
            (ForagingAction::Gather(o), o.moved())
        } else {
            let o = self.execute_search(u, rng);
            (ForagingAction::Search(o), o.moved())
        };
        let mut contact = None;
        if moved {
            world.set_witness(u, self.is_food(self.pos[u]))?;
            contact = self.new_contact(world.states(), u);
        }
        Ok(ForagingOutcome { agent: u, action, contact })
    }

    /// First Unaware/Aware adjacency involving the mover at its new site.
    fn new_contact(&self, states: &[AgentState], u: usize) -> Option<(usize, usize)> {
        let mover_aware = states[u].is_aware();
        self.neighbor_agents(self.pos[u])
            .find(|&v| states[v].is_aware() != mover_aware)
            .map(|v| if mover_aware { (v, u) } else { (u, v) })
    }

    /// Adjacency graph of the current occupancy.
    pub fn to_graph(&self) -> GraphSnapshot {
        let mut edges = Vec::new();
        for u in 0..self.agent_count() {
            for v in self.neighbor_agents(self.pos[u]) {
                if v > u {
                    edges.push((u, v));
                }
            }
        }
        GraphSnapshot::from_edges(self.agent_count(), &edges).expect("lattice adjacency is simple")
    }

    pub fn snapshot(&self, world: &World) -> LatticeSnapshot {
        LatticeSnapshot {
            side: self.side(),
            agents: (0..self.agent_count())
                .map(|i| AgentRecord { id: i, q: self.pos[i].q, r: self.pos[i].r, state: world.state(i) })
                .collect(),
            food: self.food.iter().map(|s| FoodRecord { q: s.q, r: s.r }).collect(),
            lambda: self.lambda,
            tick: world.iteration(),
        }
    }

    pub fn snapshot_json(&self, world: &World) -> String {
        serde_json::to_string(&self.snapshot(world)).expect("snapshot serializes")
    }

    /// True iff no two agents share a site and the inverse map agrees.
    pub fn occupancy_consistent(&self) -> bool {
        let mut seen = 0;
        for (i, &a) in self.occ.iter().enumerate() {
            if a != EMPTY {
                seen += 1;
                if self.torus.index(self.pos[a as usize]) != i {
                    return false;
                }
            }
        }
        seen == self.pos.len()
    }
}

impl Topology for LatticeWorld {
    fn vertex_count(&self) -> usize {
        self.agent_count()
    }

    #[inline]
    fn neighbors_into(&self, u: usize, out: &mut NeighborBuf) {
        out.clear();
        let s = self.pos[u];
        for d in 0..6 {
            let a = self.occ[self.torus.index(s.step(d))];
            if a != EMPTY {
                out.push(a as usize);
            }
        }
    }
}

/// Sites of a hexagonal spiral around the origin: center, then rings
/// outward, each ring counterclockwise starting just past the corner
/// `r * D[4]` and ending on it, so every prefix has maximal edge count.
pub fn hex_spiral(n: usize) -> Vec<Site> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(Site::new(0, 0));
    let mut radius = 1;
    while out.len() < n {
        let mut ring = Vec::with_capacity(6 * radius as usize);
        let mut s = DIRECTIONS[4].scale(radius);
        for side in 0..6 {
            for _ in 0..radius {
                ring.push(s);
                s = s.step(side);
            }
        }
        ring.rotate_left(1);
        for s in ring {
            if out.len() == n {
                return out;
            }
            out.push(s);
        }
        radius += 1;
    }
    out
}

/// Graph-mode adversary whose graph is the adjacency of agents moving on a
/// lattice; it sees behavior groups only.
pub struct LatticeMovementAdversary {
    lattice: LatticeWorld,
}

impl LatticeMovementAdversary {
    pub fn new(lattice: LatticeWorld) -> Self {
        LatticeMovementAdversary { lattice }
    }

    pub fn lattice(&self) -> &LatticeWorld {
        &self.lattice
    }

    pub fn initial_graph(&self) -> GraphSnapshot {
        self.lattice.to_graph()
    }
}

impl Adversary for LatticeMovementAdversary {
    fn propose(&mut self, _: u64, _: &GraphSnapshot, groups: &[BehaviorGroup], rng: &mut SimRng) -> Result<Vec<Reconfiguration>, GraphError> {
        let n = self.lattice.agent_count();
        if n == 0 {
            return Ok(Vec::new());
        }
        let u = rng.below(n);
        let moved = match groups[u] {
            BehaviorGroup::Immobile => false,
            _ if self.lattice.is_food(self.lattice.position(u)) => false,
            BehaviorGroup::Mobile => self.lattice.execute_gather(u, |v| groups[v].is_aware(), rng)?.moved(),
            BehaviorGroup::Unaware => self.lattice.execute_search(u, rng).moved(),
        };
        if !moved {
            return Ok(Vec::new());
        }
        let mut ns: Vec<usize> = self.lattice.neighbor_agents(self.lattice.position(u)).collect();
        ns.sort_unstable();
        Ok(vec![Reconfiguration { vertex: u, neighbors: ns }])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProtocolParams;

    fn world(n: usize, states: Option<Vec<AgentState>>) -> World {
        let p = ProtocolParams::with_default_p(1, 6).unwrap();
        match states {
            Some(s) => World::with_states(s, p),
            None => World::new(n, p),
        }
    }

    #[test]
    fn spiral_is_compact() {
        let s = hex_spiral(19);
        assert_eq!(s.len(), 19);
        assert!(s.iter().all(|x| x.norm() <= 2));
        let set: BTreeSet<_> = s.iter().collect();
        assert_eq!(set.len(), 19);
        for k in 2..40 {
            let sp = hex_spiral(k);
            assert!(sp[1..].iter().enumerate().all(|(i, s)| sp[..=i].iter().any(|t| t.distance(*s) == 1)));
        }
    }

    #[test]
    fn isolated_search_always_moves() {
        let mut lat = LatticeWorld::from_positions(8, &[Site::new(3, 3)], 4.0, 1).unwrap();
        let mut rng = SimRng::new(1);
        for _ in 0..100 {
            assert!(lat.execute_search(0, &mut rng).moved());
        }
    }

    #[test]
    fn surrounded_never_moves() {
        let pos: Vec<Site> = std::iter::once(Site::new(3, 3)).chain(Site::new(3, 3).neighbors()).collect();
        let mut lat = LatticeWorld::from_positions(8, &pos, 4.0, 1).unwrap();
        let mut rng = SimRng::new(1);
        for _ in 0..100 {
            assert_eq!(lat.execute_search(0, &mut rng), MoveOutcome::Blocked);
            assert_eq!(lat.execute_gather(0, |_| true, &mut rng).unwrap(), MoveOutcome::Blocked);
        }
        assert!(lat.occupancy_consistent());
    }

    #[test]
    fn gather_rejects_by_metropolis() {
        // Agent 0 at origin, Aware neighbor 1 at (1,0) and 2 at (0,1).
        // Moving in direction 1? occupied. Direction 2 (-1,1): common
        // neighbors (0,1) and (-1,0); d = 2, d' = 1.
        let pos = [Site::new(4, 4), Site::new(5, 4), Site::new(4, 5)];
        let mut lat = LatticeWorld::from_positions(10, &pos, 4.0, 1).unwrap();
        let aware = |_: usize| true;
        assert_eq!(lat.gather_with(0, 2, 0.3, &aware).unwrap(), MoveOutcome::Rejected);
        assert!(lat.gather_with(0, 2, 0.2, &aware).unwrap().moved());
    }

    #[test]
    fn food_events_and_witness_sync() {
        let mut lat = LatticeWorld::from_positions(6, &[Site::new(1, 1), Site::new(2, 1)], 4.0, 1).unwrap();
        let mut w = world(2, None);
        lat.apply_food_event(&mut w, FoodEvent::Place { q: 4, r: 4 }).unwrap();
        assert_eq!(w.witness_count(), 0);
        assert!(matches!(lat.apply_food_event(&mut w, FoodEvent::Place { q: 1, r: 1 }), Err(LatticeError::FoodLimit { .. })));
        lat.apply_food_event(&mut w, FoodEvent::Shift { from: [4, 4], to: [1, 1] }).unwrap();
        assert!(w.is_witness(0));
        assert_eq!(w.state(0), AgentState::Unaware);
        assert!(matches!(lat.apply_food_event(&mut w, FoodEvent::Place { q: 6, r: 0 }), Err(LatticeError::OutOfRange { .. })));
        assert!(matches!(lat.apply_food_event(&mut w, FoodEvent::Remove { q: 2, r: 2 }), Err(LatticeError::FoodNotFound(2, 2))));
        lat.apply_food_event(&mut w, FoodEvent::Remove { q: 1, r: 1 }).unwrap();
        assert_eq!(w.witness_count(), 0);
    }

    #[test]
    fn pinned_witness_never_moves() {
        let mut lat = LatticeWorld::from_positions(8, &[Site::new(2, 2)], 4.0, 1).unwrap();
        let mut w = world(1, None);
        lat.apply_food_event(&mut w, FoodEvent::Place { q: 2, r: 2 }).unwrap();
        let mut rng = SimRng::new(9);
        for _ in 0..500 {
            lat.foraging_step(&mut w, &mut rng).unwrap();
            assert_eq!(lat.position(0), Site::new(2, 2));
        }
        assert_eq!(w.state(0), AgentState::AwareAlertWitness);
    }

    #[test]
    fn clear_agent_broadcasts_on_state_branch() {
        let mut lat = LatticeWorld::from_positions(8, &[Site::new(2, 2), Site::new(3, 2)], 4.0, 1).unwrap();
        let mut w = world(2, Some(vec![AgentState::AwareClear, AgentState::AwareAlert]));
        // Find a seed whose coin picks the state branch.
        let mut rng = (0..).map(SimRng::new).find(|r| r.clone().unit() < 0.5).unwrap();
        let out = lat.foraging_action(&mut w, 0, &mut rng).unwrap();
        assert!(matches!(out.action, ForagingAction::State(_)));
        assert_eq!(w.states(), &[AgentState::Unaware, AgentState::AwareClear]);
    }

    #[test]
    fn snapshot_format() {
        let lat = LatticeWorld::from_positions(5, &[Site::new(0, 1)], 4.0, 1).unwrap();
        let w = world(1, None);
        assert_eq!(
            lat.snapshot_json(&w),
            r#"{"side":5,"agents":[{"id":0,"q":0,"r":1,"state":"U"}],"food":[],"lambda":4.0,"tick":0}"#
        );
    }

    #[test]
    fn movement_adversary_emits_single_vertex_steps() {
        let mut rng = SimRng::new(5);
        let lat = LatticeWorld::random(8, 20, 4.0, 1, &mut rng).unwrap();
        let mut adv = LatticeMovementAdversary::new(lat);
        let mut g = adv.initial_graph();
        let groups = vec![BehaviorGroup::Unaware; 20];
        for t in 1..200 {
            for step in adv.propose(t, &g, &groups, &mut rng).unwrap() {
                g.set_neighbors(step.vertex, &step.neighbors).unwrap();
            }
            assert_eq!(g, adv.lattice().to_graph());
        }
    }
}
