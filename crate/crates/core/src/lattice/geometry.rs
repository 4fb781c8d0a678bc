//! Axial coordinates on the triangular lattice.
//!
//! Direction indices run counterclockwise:
//! 0 = (1,0), 1 = (0,1), 2 = (-1,1), 3 = (-1,0), 4 = (0,-1), 5 = (1,-1).
//! In the plane picture (0,1) is "up" and (1,0) is "up-right".

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Site {
    pub q: i32,
    pub r: i32,
}

pub const DIRECTIONS: [Site; 6] = [
    Site { q: 1, r: 0 },
    Site { q: 0, r: 1 },
    Site { q: -1, r: 1 },
    Site { q: -1, r: 0 },
    Site { q: 0, r: -1 },
    Site { q: 1, r: -1 },
];

pub const fn opposite(d: usize) -> usize {
    (d + 3) % 6
}

impl Site {
    pub const fn new(q: i32, r: i32) -> Self {
        Site { q, r }
    }

    #[inline]
    pub const fn add(self, o: Site) -> Site {
        Site { q: self.q + o.q, r: self.r + o.r }
    }

    #[inline]
    pub const fn sub(self, o: Site) -> Site {
        Site { q: self.q - o.q, r: self.r - o.r }
    }

    pub const fn scale(self, k: i32) -> Site {
        Site { q: self.q * k, r: self.r * k }
    }

    #[inline]
    pub const fn step(self, d: usize) -> Site {
        self.add(DIRECTIONS[d % 6])
    }

    pub fn neighbors(self) -> [Site; 6] {
        std::array::from_fn(|d| self.step(d))
    }

    /// Hex distance from the origin.
    pub fn norm(self) -> i32 {
        self.q.abs().max(self.r.abs()).max((self.q + self.r).abs())
    }

    pub fn distance(self, o: Site) -> i32 {
        self.sub(o).norm()
    }

    /// Direction index `d` with `self.step(d) == o`, if adjacent.
    pub fn direction_to(self, o: Site) -> Option<usize> {
        let diff = o.sub(self);
        DIRECTIONS.iter().position(|&v| v == diff)
    }

    /// Rotation by 60 degrees counterclockwise about the origin.
    pub const fn rotate_ccw(self) -> Site {
        Site { q: -self.r, r: self.q + self.r }
    }

    /// Mirror image across the horizontal axis through the origin.
    pub const fn reflect(self) -> Site {
        Site { q: self.q, r: -self.q - self.r }
    }

    pub fn to_pair(self) -> [i32; 2] {
        [self.q, self.r]
    }
}

impl From<[i32; 2]> for Site {
    fn from(p: [i32; 2]) -> Self {
        Site::new(p[0], p[1])
    }
}

/// Periodic `side` x `side` lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Torus {
    side: u32,
}

impl Torus {
    pub fn new(side: u32) -> Self {
        Torus { side }
    }

    pub fn side(&self) -> u32 {
        self.side
    }

    pub fn site_count(&self) -> usize {
        (self.side as usize) * (self.side as usize)
    }

    /// Coordinates inside `[0, side)` on both axes.
    pub fn contains(&self, s: Site) -> bool {
        let n = self.side as i32;
        (0..n).contains(&s.q) && (0..n).contains(&s.r)
    }

    #[inline]
    pub fn wrap(&self, s: Site) -> Site {
        let n = self.side as i32;
        Site { q: s.q.rem_euclid(n), r: s.r.rem_euclid(n) }
    }

    #[inline]
    pub fn index(&self, s: Site) -> usize {
        let w = self.wrap(s);
        w.r as usize * self.side as usize + w.q as usize
    }

    pub fn site(&self, index: usize) -> Site {
        let n = self.side as usize;
        Site::new((index % n) as i32, (index / n) as i32)
    }

    #[inline]
    pub fn step(&self, s: Site, d: usize) -> Site {
        self.wrap(s.step(d))
    }

    /// Direction from `a` to `b` on the torus, if adjacent.
    pub fn direction_between(&self, a: Site, b: Site) -> Option<usize> {
        let (a, b) = (self.wrap(a), self.wrap(b));
        (0..6).find(|&d| self.step(a, d) == b)
    }

    /// Shortest representative of `b - a` (componentwise in `(-side/2, side/2]`).
    pub fn offset(&self, a: Site, b: Site) -> Site {
        let n = self.side as i32;
        let fix = |x: i32| {
            let m = x.rem_euclid(n);
            if m > n / 2 {
                m - n
            } else {
                m
            }
        };
        Site::new(fix(b.q - a.q), fix(b.r - a.r))
    }
}
