//! Valid compression moves.
//!
//! A move of an agent from `l` to the adjacent empty site `l' = l + D[d]`
//! is judged on the eight sites around the pair, in cyclic order
//! `[c1, a1, a2, a3, c2, b1, b2, b3]`: `c1`, `c2` are the common neighbors,
//! `a*` neighbor only `l`, `b*` only `l'`. The ring has no chords, so
//! connectivity through the union neighborhood is connectivity along it.

use super::geometry::Site;

const C1: u8 = 1 << 0;
const C2: u8 = 1 << 4;
const A_MASK: u8 = 0b0000_1110;
const B_MASK: u8 = 0b1110_0000;
const L_MASK: u8 = C1 | A_MASK | C2;

/// The eight ring sites of a move from `from` in direction `d`.
pub fn ring_sites(from: Site, d: usize) -> [Site; 8] {
    let to = from.step(d);
    [
        from.step(d + 1),
        from.step(d + 2),
        from.step(d + 3),
        from.step(d + 4),
        from.step(d + 5),
        to.step(d + 5),
        to.step(d),
        to.step(d + 1),
    ]
}

const fn run_touches_common(mask: u8, start: usize) -> bool {
    // Walk both ways along occupied ring positions from `start`.
    let mut i = start;
    let mut steps = 0;
    while steps < 8 && (mask >> i) & 1 == 1 {
        if i == 0 || i == 4 {
            return true;
        }
        i = (i + 1) % 8;
        steps += 1;
    }
    let mut i = start;
    let mut steps = 0;
    while steps < 8 && (mask >> i) & 1 == 1 {
        if i == 0 || i == 4 {
            return true;
        }
        i = (i + 7) % 8;
        steps += 1;
    }
    false
}

/// Occupied bits among three consecutive positions form one block.
const fn contiguous3(bits: u8) -> bool {
    bits != 0 && bits != 0b101
}

const fn mask_valid(mask: u8) -> bool {
    if (mask & L_MASK).count_ones() >= 5 {
        return false;
    }
    if mask & (C1 | C2) != 0 {
        let mut i = 0;
        while i < 8 {
            if (mask >> i) & 1 == 1 && !run_touches_common(mask, i) {
                return false;
            }
            i += 1;
        }
        true
    } else {
        contiguous3((mask & A_MASK) >> 1) && contiguous3((mask & B_MASK) >> 5)
    }
}

const fn build_table() -> [bool; 256] {
    let mut t = [false; 256];
    let mut m = 0;
    while m < 256 {
        t[m] = mask_valid(m as u8);
        m += 1;
    }
    t
}

static VALID: [bool; 256] = build_table();

/// Lookup for a ring occupancy bitmask (bit `i` = ring position `i`).
#[inline]
pub fn ring_mask_is_valid(mask: u8) -> bool {
    VALID[mask as usize]
}

/// Ring occupancy bitmask of Aware agents around a move.
#[inline]
pub fn ring_mask<F: Fn(Site) -> bool>(aware_at: &F, from: Site, d: usize) -> u8 {
    let ring = ring_sites(from, d);
    let mut m = 0u8;
    for (i, s) in ring.iter().enumerate() {
        if aware_at(*s) {
            m |= 1 << i;
        }
    }
    m
}

/// Whether moving the agent at `from` one step in direction `d` is a valid
/// compression move. `aware_at` reports Aware occupancy in plane
/// coordinates; the target is assumed empty.
#[inline]
pub fn compression_move_valid<F: Fn(Site) -> bool>(aware_at: F, from: Site, d: usize) -> bool {
    ring_mask_is_valid(ring_mask(&aware_at, from, d))
}

/// Metropolis filter: accept iff `draw < lambda^(delta_edges)`.
#[inline]
pub fn metropolis_accept(lambda: f64, delta_edges: i32, draw: f64) -> bool {
    delta_edges >= 0 && lambda >= 1.0 || draw < lambda.powi(delta_edges)
}
