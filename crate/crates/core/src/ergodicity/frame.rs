//! Rotated or reflected views of the plane around the pinned agent.
//!
//! In the canonical view the source spine points up-left (direction 2) and
//! the target spine down-left (direction 3). Lane/depth `(l, d)` maps to
//! canonical `(x, y) = (-l, l - d)`.

use crate::lattice::Site;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub center: Site,
    pub rot: u8,
    pub reflect: bool,
}

impl Frame {
    /// Frame whose source spine is plane direction `s` and target `s + 1`.
    pub fn for_spine(center: Site, s: usize) -> Frame {
        Frame { center, rot: ((s + 4) % 6) as u8, reflect: false }
    }

    pub fn all(center: Site) -> impl Iterator<Item = Frame> {
        (0..12u8).map(move |i| Frame { center, rot: i % 6, reflect: i >= 6 })
    }

    pub fn to_plane(&self, c: Site) -> Site {
        let mut v = if self.reflect { c.reflect() } else { c };
        for _ in 0..self.rot {
            v = v.rotate_ccw();
        }
        v.add(self.center)
    }

    pub fn to_canonical(&self, p: Site) -> Site {
        let mut v = p.sub(self.center);
        for _ in 0..(6 - self.rot) % 6 {
            v = v.rotate_ccw();
        }
        if self.reflect {
            v.reflect()
        } else {
            v
        }
    }
}

/// Canonical coordinates of lane/depth `(l, d)`.
pub fn lane_depth(l: i32, d: i32) -> Site {
    Site::new(-l, l - d)
}
