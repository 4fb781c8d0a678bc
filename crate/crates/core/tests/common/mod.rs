#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use stimuli_core::lattice::Site;
use stimuli_core::metrics::has_hole;
use stimuli_core::SimRng;

pub mod chain;
pub mod harness;
pub mod replay;

/// Random connected set of `k` cells containing the origin (holes allowed).
pub fn random_connected(k: usize, rng: &mut SimRng) -> BTreeSet<Site> {
    let mut cells = vec![Site::new(0, 0)];
    let mut set: HashSet<Site> = cells.iter().copied().collect();
    while cells.len() < k {
        let base = cells[rng.below(cells.len())];
        let n = base.step(rng.below(6));
        if set.insert(n) {
            cells.push(n);
        }
    }
    set.into_iter().collect()
}

/// Random hole-free polyhex of `k` cells containing the origin.
pub fn random_polyhex(k: usize, rng: &mut SimRng) -> BTreeSet<Site> {
    loop {
        let mut cells = vec![Site::new(0, 0)];
        let mut set: HashSet<Site> = cells.iter().copied().collect();
        while cells.len() < k {
            let base = cells[rng.below(cells.len())];
            let n = base.step(rng.below(6));
            if set.insert(n) {
                cells.push(n);
            }
        }
        if !has_hole(&set) {
            return set.into_iter().collect();
        }
    }
}

/// All hole-free polyhexes of `k` cells containing the origin.
pub fn all_polyhexes(k: usize) -> Vec<BTreeSet<Site>> {
    let mut level: HashSet<BTreeSet<Site>> = HashSet::from([BTreeSet::from([Site::new(0, 0)])]);
    for _ in 1..k {
        let mut next = HashSet::new();
        for shape in &level {
            for s in shape {
                for n in s.neighbors() {
                    if !shape.contains(&n) {
                        let mut bigger = shape.clone();
                        bigger.insert(n);
                        next.insert(bigger);
                    }
                }
            }
        }
        level = next;
    }
    level.into_iter().filter(|s| !has_hole(&s.iter().copied().collect())).collect()
}
