//! Spines through the pinned agent and their lengths.

use crate::lattice::{Site, DIRECTIONS};

use super::config::PlaneConfig;

/// Whether `s` lies on one of the six rays out of `center` (the center counts).
pub fn on_spine(center: Site, s: Site) -> bool {
    let v = s.sub(center);
    v.q == 0 || v.r == 0 || v.q + v.r == 0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpineInfo {
    /// Distance of the furthest spine agent with an adjacent non-spine agent.
    pub lengths: [u32; 6],
    /// Distance of the furthest spine agent at all.
    pub extents: [u32; 6],
}

impl SpineInfo {
    pub fn of(cfg: &PlaneConfig) -> SpineInfo {
        let c = cfg.pinned();
        let reach = cfg.sites().iter().map(|s| s.distance(c)).max().unwrap_or(0);
        let mut lengths = [0u32; 6];
        let mut extents = [0u32; 6];
        for (i, dir) in DIRECTIONS.iter().enumerate() {
            for k in 1..=reach as i32 {
                let s = c.add(dir.scale(k));
                if !cfg.contains(s) {
                    continue;
                }
                extents[i] = k as u32;
                if s.neighbors().iter().any(|&n| cfg.contains(n) && !on_spine(c, n)) {
                    lengths[i] = k as u32;
                }
            }
        }
        SpineInfo { lengths, extents }
    }

    pub fn min_length(&self) -> u32 {
        *self.lengths.iter().min().unwrap()
    }

    pub fn argmin(&self) -> usize {
        let m = self.min_length();
        self.lengths.iter().position(|&l| l == m).unwrap()
    }
}
