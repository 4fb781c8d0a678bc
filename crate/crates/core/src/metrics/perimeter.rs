//! Boundary walk of a set of lattice sites.
//!
//! The walk moves from particle to particle along lattice edges with the
//! set on its left, starting at the lexicographically least site (smallest
//! `q`, then smallest `r`). A single particle has walk length 0, a line of
//! `k` particles `2k - 2`; a hole-free connected set of `k` particles with
//! `e` internal edges has length `3k - e - 3`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::MetricsError;
use crate::lattice::{hex_spiral, LatticeWorld, Site};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerimeterReading {
    pub boundary_walk_length: u32,
    pub p_min: u32,
    pub alpha_ratio: f64,
    /// Outer boundary only; alpha claims do not apply.
    pub has_hole: bool,
}

/// Length of the outer boundary walk of a connected plane set.
pub fn boundary_walk_length(sites: &HashSet<Site>) -> u32 {
    let Some(&start) = sites.iter().min() else { return 0 };
    // Directions 2, 3, 4 of the least site are empty; start looking back at 3.
    let next_from = |c: Site, back: usize| -> Option<(Site, usize)> {
        (1..=6).map(|k| (back + k) % 6).find(|&d| sites.contains(&c.step(d))).map(|d| (c.step(d), d))
    };
    let Some((first, first_dir)) = next_from(start, 3) else { return 0 };
    let mut cur = first;
    let mut back = (first_dir + 3) % 6;
    let mut len = 1u32;
    loop {
        let (nxt, d) = next_from(cur, back).expect("connected set");
        if cur == start && nxt == first {
            return len;
        }
        len += 1;
        back = (d + 3) % 6;
        cur = nxt;
    }
}

/// Adjacent pairs within a plane set.
pub fn plane_edges(sites: &HashSet<Site>) -> usize {
    sites.iter().map(|s| (0..3).filter(|&d| sites.contains(&s.step(d))).count()).sum()
}

/// Whether the complement of the set has a bounded component.
pub fn has_hole(sites: &HashSet<Site>) -> bool {
    if sites.len() < 6 {
        return false;
    }
    let qmin = sites.iter().map(|s| s.q).min().unwrap() - 1;
    let qmax = sites.iter().map(|s| s.q).max().unwrap() + 1;
    let rmin = sites.iter().map(|s| s.r).min().unwrap() - 1;
    let rmax = sites.iter().map(|s| s.r).max().unwrap() + 1;
    let inside = |s: Site| (qmin..=qmax).contains(&s.q) && (rmin..=rmax).contains(&s.r);
    let total = ((qmax - qmin + 1) * (rmax - rmin + 1)) as usize;
    let start = Site::new(qmin, rmin);
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in c.neighbors() {
            if inside(n) && !sites.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() + sites.len() < total
}

fn pmin_small() -> &'static Vec<u32> {
    static TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Minima over all connected sets for k <= 10, from exhaustive search.
        let mut t = vec![0, 0, 2, 3, 4, 5, 6, 6, 7, 8, 8];
        // Hexagonal spiral beyond.
        for k in 11..=4096usize {
            t.push(spiral_walk(k));
        }
        t
    })
}

/// Walk length of the hexagonal spiral of `k` sites.
pub fn spiral_walk(k: usize) -> u32 {
    let set: HashSet<Site> = hex_spiral(k).into_iter().collect();
    (3 * k - plane_edges(&set) - 3) as u32
}

/// Minimum boundary walk length over connected sets of `k` sites.
pub fn p_min(k: usize) -> u32 {
    let t = pmin_small();
    if k < t.len() {
        t[k]
    } else {
        spiral_walk(k)
    }
}

fn reading(sites: &HashSet<Site>) -> PerimeterReading {
    let walk = boundary_walk_length(sites);
    let pm = p_min(sites.len());
    PerimeterReading {
        boundary_walk_length: walk,
        p_min: pm,
        alpha_ratio: if pm == 0 { 1.0 } else { walk as f64 / pm as f64 },
        has_hole: has_hole(sites),
    }
}

/// Plane coordinates of a lattice component, unwrapped by BFS from its
/// first member. Fails if the component is disconnected; returns `None`
/// inside `Ok` when it wraps around the torus.
pub fn unwrap_component(world: &LatticeWorld, component: &[usize]) -> Result<Option<HashSet<Site>>, MetricsError> {
    let Some(&first) = component.first() else { return Err(MetricsError::Empty) };
    for &a in component {
        if a >= world.agent_count() {
            return Err(MetricsError::UnknownAgent(a));
        }
    }
    let members: HashSet<usize> = component.iter().copied().collect();
    let torus = world.torus();
    let mut plane: HashMap<usize, Site> = HashMap::from([(first, Site::new(0, 0))]);
    let mut queue = VecDeque::from([first]);
    let mut wraps = false;
    while let Some(a) = queue.pop_front() {
        let pa = plane[&a];
        for d in 0..6 {
            if let Some(b) = world.agent_at(torus.step(world.position(a), d)) {
                if !members.contains(&b) {
                    continue;
                }
                let pb = pa.step(d);
                match plane.get(&b) {
                    Some(&existing) if existing != pb => wraps = true,
                    Some(_) => {}
                    None => {
                        plane.insert(b, pb);
                        queue.push_back(b);
                    }
                }
            }
        }
    }
    if let Some(&missing) = component.iter().find(|a| !plane.contains_key(a)) {
        return Err(MetricsError::Disconnected { start: first, unreached: missing });
    }
    if wraps {
        return Ok(None);
    }
    Ok(Some(plane.into_values().collect()))
}

/// Perimeter reading of a lattice component (`None` when it wraps).
pub fn component_perimeter(world: &LatticeWorld, component: &[usize]) -> Result<Option<PerimeterReading>, MetricsError> {
    Ok(unwrap_component(world, component)?.map(|s| reading(&s)))
}

/// Perimeter reading of a plane set.
pub fn plane_perimeter(sites: &HashSet<Site>) -> PerimeterReading {
    reading(sites)
}
