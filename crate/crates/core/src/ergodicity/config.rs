//! Agent configurations on the unbounded plane with one pinned agent.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::ErgodicityError;
use crate::lattice::moves::compression_move_valid;
use crate::engine::World;
use crate::lattice::{FoodEvent, LatticeSnapshot, LatticeWorld, Site};
use crate::model::ProtocolParams;
use crate::metrics::unwrap_component;

/// File form of a configuration: all agent sites, including the pinned one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSnapshot {
    pub pinned: [i32; 2],
    pub agents: Vec<[i32; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneConfig {
    sites: BTreeSet<Site>,
    pinned: Site,
}

impl PlaneConfig {
    pub fn new(sites: impl IntoIterator<Item = Site>, pinned: Site) -> Result<Self, ErgodicityError> {
        let sites: BTreeSet<Site> = sites.into_iter().collect();
        if !sites.contains(&pinned) {
            return Err(ErgodicityError::PinnedMissing);
        }
        let cfg = PlaneConfig { sites, pinned };
        if !cfg.is_connected() {
            return Err(ErgodicityError::Disconnected);
        }
        Ok(cfg)
    }

    pub fn from_snapshot(s: &ConfigSnapshot) -> Result<Self, ErgodicityError> {
        Self::new(s.agents.iter().map(|&p| Site::from(p)), Site::from(s.pinned))
    }

    /// All agents of a lattice world, with the single agent on food pinned.
    pub fn from_lattice(world: &LatticeWorld) -> Result<Self, ErgodicityError> {
        let pinned: Vec<usize> = (0..world.agent_count()).filter(|&a| world.is_food(world.position(a))).collect();
        if pinned.len() != 1 {
            return Err(ErgodicityError::ImmobileCount(pinned.len()));
        }
        let mut order = vec![pinned[0]];
        order.extend((0..world.agent_count()).filter(|&a| a != pinned[0]));
        let plane = unwrap_component(world, &order).map_err(|_| ErgodicityError::Disconnected)?.ok_or(ErgodicityError::Disconnected)?;
        // The first member unwraps to the origin.
        Self::new(plane, Site::new(0, 0))
    }

    /// Same as [`PlaneConfig::from_lattice`] for a serialized lattice.
    pub fn from_lattice_snapshot(snap: &LatticeSnapshot) -> Result<Self, ErgodicityError> {
        let mut agents = snap.agents.clone();
        agents.sort_by_key(|a| a.id);
        let positions: Vec<Site> = agents.iter().map(|a| Site::new(a.q, a.r)).collect();
        let w = snap.food.len().max(1);
        let bad = |_| ErgodicityError::Disconnected;
        let mut lat = LatticeWorld::from_positions(snap.side, &positions, snap.lambda, w).map_err(bad)?;
        let params = ProtocolParams::with_default_p(w, 6).map_err(|_| ErgodicityError::Disconnected)?;
        let mut world = World::new(positions.len(), params);
        for f in &snap.food {
            lat.apply_food_event(&mut world, FoodEvent::Place { q: f.q, r: f.r }).map_err(bad)?;
        }
        Self::from_lattice(&lat)
    }

    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot { pinned: self.pinned.to_pair(), agents: self.sites.iter().map(|s| s.to_pair()).collect() }
    }

    pub fn sites(&self) -> &BTreeSet<Site> {
        &self.sites
    }

    pub fn pinned(&self) -> Site {
        self.pinned
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.sites.contains(&s)
    }

    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.sites.iter().next() else { return true };
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in c.neighbors() {
                if self.sites.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.len() == self.sites.len()
    }

    /// Valid compression move of the agent at `from` to the adjacent `to`.
    pub fn is_valid_move(&self, from: Site, to: Site) -> bool {
        if from == self.pinned || !self.contains(from) || self.contains(to) {
            return false;
        }
        match from.direction_to(to) {
            Some(d) => compression_move_valid(|s| self.contains(s), from, d),
            None => false,
        }
    }

    pub(crate) fn apply(&mut self, from: Site, to: Site) {
        self.sites.remove(&from);
        self.sites.insert(to);
    }

    /// Every configuration one valid move away.
    pub fn successors(&self) -> Vec<PlaneConfig> {
        let mut out = Vec::new();
        for &s in &self.sites {
            for t in s.neighbors() {
                if self.is_valid_move(s, t) {
                    let mut c = self.clone();
                    c.apply(s, t);
                    out.push(c);
                }
            }
        }
        out
    }

    /// Straight line of `len()` agents from the pinned agent in direction `d`.
    pub fn line(pinned: Site, len: usize, d: usize) -> PlaneConfig {
        let sites = (0..len as i32).map(|k| pinned.add(crate::lattice::DIRECTIONS[d].scale(k)));
        PlaneConfig { sites: sites.collect(), pinned }
    }

    /// Direction of the line if the configuration is a straight line with
    /// the pinned agent at one end (`Some(None)` for a lone agent).
    pub fn line_direction(&self) -> Option<Option<usize>> {
        if self.len() == 1 {
            return Some(None);
        }
        let d = (0..6).find(|&d| self.contains(self.pinned.step(d)))?;
        (*self == PlaneConfig::line(self.pinned, self.len(), d)).then_some(Some(d))
    }
}
