//! Constructive reduction of a configuration to a straight line.

use std::collections::{HashMap, HashSet, VecDeque};

use log::{debug, warn};

use crate::error::ErgodicityError;
use crate::lattice::{Site, DIRECTIONS};

use super::config::PlaneConfig;
use super::frame::{lane_depth, Frame};
use super::spine::{on_spine, SpineInfo};

const UP: Site = Site { q: 0, r: 1 };
const DOWN: Site = Site { q: 0, r: -1 };
const LEFT_DOWN: Site = Site { q: -1, r: 0 };
const LEFT_UP: Site = Site { q: -1, r: 1 };
const RIGHT_DOWN: Site = Site { q: 1, r: -1 };
const RIGHT_UP: Site = Site { q: 1, r: 0 };

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlanStats {
    pub spine_combs: usize,
    pub combs: usize,
    pub hexagon_reductions: usize,
    pub relocations: usize,
    /// Times the source spine segment itself had a gap.
    pub source_gaps: usize,
    /// Minimum spine length at the start of every outer round.
    pub min_lengths: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct Planner {
    cfg: PlaneConfig,
    moves: Vec<(Site, Site)>,
    stats: PlanStats,
    budget: usize,
}

impl Planner {
    pub fn new(cfg: PlaneConfig) -> Self {
        let n = cfg.len();
        Planner { cfg, moves: Vec::new(), stats: PlanStats::default(), budget: 200 * (n + 4) * (n + 4) * (n + 4) }
    }

    pub fn config(&self) -> &PlaneConfig {
        &self.cfg
    }

    pub fn moves(&self) -> &[(Site, Site)] {
        &self.moves
    }

    pub fn stats(&self) -> &PlanStats {
        &self.stats
    }

    pub fn into_parts(self) -> (PlaneConfig, Vec<(Site, Site)>, PlanStats) {
        (self.cfg, self.moves, self.stats)
    }

    fn mv(&mut self, from: Site, to: Site) -> Result<(), ErgodicityError> {
        if !self.cfg.is_valid_move(from, to) {
            return Err(ErgodicityError::InvalidMove(from.q, from.r, to.q, to.r));
        }
        if self.moves.len() >= self.budget {
            return Err(ErgodicityError::Budget("move count"));
        }
        self.cfg.apply(from, to);
        self.moves.push((from, to));
        Ok(())
    }

    /// Move one agent along a shortest path of valid moves.
    pub fn relocate(&mut self, from: Site, to: Site) -> Result<(), ErgodicityError> {
        if from == to {
            return Ok(());
        }
        let path = self.route(from, to).ok_or(ErgodicityError::NoRoute(from.q, from.r, to.q, to.r))?;
        self.stats.relocations += 1;
        for w in path.windows(2) {
            self.mv(w[0], w[1])?;
        }
        Ok(())
    }

    fn route(&self, from: Site, to: Site) -> Option<Vec<Site>> {
        if !self.cfg.contains(from) || self.cfg.contains(to) || from == self.cfg.pinned() {
            return None;
        }
        let mut others = self.cfg.sites().clone();
        others.remove(&from);
        let bound = {
            let c = self.cfg.pinned();
            let far = self.cfg.sites().iter().map(|s| s.distance(c)).max().unwrap_or(0);
            far.max(to.distance(c)) + 2
        };
        let center = self.cfg.pinned();
        let valid = |a: Site, b: Site| {
            let d = a.direction_to(b).unwrap();
            crate::lattice::moves::compression_move_valid(|s| others.contains(&s), a, d)
        };
        let mut prev: HashMap<Site, Site> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = HashSet::from([from]);
        while let Some(a) = queue.pop_front() {
            if a == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for b in a.neighbors() {
                if others.contains(&b) || b.distance(center) > bound || seen.contains(&b) {
                    continue;
                }
                if valid(a, b) {
                    seen.insert(b);
                    prev.insert(b, a);
                    queue.push_back(b);
                }
            }
        }
        None
    }

    // ---- canonical-frame helpers ----

    fn occ(&self, f: &Frame, c: Site) -> bool {
        self.cfg.contains(f.to_plane(c))
    }

    fn mv_c(&mut self, f: &Frame, a: Site, b: Site) -> Result<(), ErgodicityError> {
        self.mv(f.to_plane(a), f.to_plane(b))
    }

    fn relocate_c(&mut self, f: &Frame, a: Site, b: Site) -> Result<(), ErgodicityError> {
        self.relocate(f.to_plane(a), f.to_plane(b))
    }

    fn canonical_sites(&self, f: &Frame) -> Vec<Site> {
        self.cfg.sites().iter().map(|&p| f.to_canonical(p)).collect()
    }

    /// Checks the combed clauses for the residual region of `(x0, y0)`.
    fn combed_at(&self, f: &Frame, x0: i32, y0: i32) -> Result<(), &'static str> {
        let region: Vec<Site> = self.canonical_sites(f).into_iter().filter(|s| s.q <= x0 && s.r <= y0).collect();
        for s in &region {
            if s.r == y0 && self.occ(f, s.add(UP)) {
                return Err("site above a topmost agent is occupied");
            }
        }
        let mut rows: HashMap<i32, Vec<i32>> = HashMap::new();
        for s in &region {
            rows.entry(s.r).or_default().push(s.q);
        }
        for (&y, xs) in &rows {
            let m = xs.len() as i32;
            if !(0..m).all(|k| self.occ(f, Site::new(x0 - k, y))) {
                return Err("agents do not form rows anchored at the region edge");
            }
            if !self.occ(f, Site::new(x0 + 1, y)) {
                return Err("row has no anchor");
            }
            if self.occ(f, Site::new(x0 + 1, y - 1)) {
                return Err("row anchor has an agent below it");
            }
        }
        Ok(())
    }

    pub fn combed(&self, f: &Frame, lane: i32, depth: i32) -> bool {
        let c = lane_depth(lane, depth);
        self.combed_at(f, c.q, c.r).is_ok()
    }

    fn combable(&self, f: &Frame, lane: i32, depth: i32) -> Result<(), &'static str> {
        if lane <= 0 || depth < 0 {
            return Err("lane must be positive and depth non-negative");
        }
        let c = lane_depth(lane, depth);
        self.combed_at(f, c.q - 1, c.r).map_err(|_| "next lane is not combed")?;
        if self.occ(f, c.add(UP)) {
            return Err("site above is occupied");
        }
        Ok(())
    }

    /// Brings the residual region of `(lane, depth)` into combed form.
    pub fn comb(&mut self, f: &Frame, lane: i32, depth: i32) -> Result<(), ErgodicityError> {
        self.combable(f, lane, depth).map_err(|clause| ErgodicityError::NotCombable { lane, depth, clause })?;
        self.stats.combs += 1;
        let Site { q: x0, r: y0 } = lane_depth(lane, depth);
        self.form_lines(f, x0, y0)?;
        self.merge_lines(f, x0, y0)?;
        self.combed_at(f, x0, y0).map_err(|clause| ErgodicityError::CombIncomplete { lane, depth, clause })
    }

    fn column_runs(&self, f: &Frame, x0: i32, y0: i32) -> Vec<(i32, i32)> {
        // (top, bottom) of maximal runs in column x0 at or below y0, top first
        let mut ys: Vec<i32> = self.canonical_sites(f).into_iter().filter(|s| s.q == x0 && s.r <= y0).map(|s| s.r).collect();
        ys.sort_unstable_by(|a, b| b.cmp(a));
        let mut runs: Vec<(i32, i32)> = Vec::new();
        for y in ys {
            match runs.last_mut() {
                Some((_, bot)) if *bot == y + 1 => *bot = y,
                _ => runs.push((y, y)),
            }
        }
        runs
    }

    fn form_lines(&mut self, f: &Frame, x0: i32, y0: i32) -> Result<(), ErgodicityError> {
        let mut guard = 0usize;
        while let Some(&(top, bottom)) = self.column_runs(f, x0, y0).iter().find(|(t, b)| t > b) {
            guard += 1;
            if guard > 4 * (self.cfg.len() + 4) * (self.cfg.len() + 4) {
                return Err(ErgodicityError::Budget("line formation"));
            }
            let p = Site::new(x0, top);
            if self.shiftable(f, p) {
                self.shift(f, p)?;
            } else {
                let yb = bottom;
                let mut m = 0;
                while self.occ(f, Site::new(x0 - 1 - m, yb)) {
                    m += 1;
                }
                let target = Site::new(x0 - 1 - m, yb);
                self.walk_or_route(f, p, target, x0, top, yb, m)?;
            }
        }
        Ok(())
    }

    fn shiftable(&self, f: &Frame, p: Site) -> bool {
        let n: Vec<Site> = p.neighbors().into_iter().filter(|&s| self.occ(f, s)).collect();
        n.len() == 2 && n.contains(&p.add(DOWN)) && n.contains(&p.add(RIGHT_UP))
    }

    fn shift(&mut self, f: &Frame, p1: Site) -> Result<(), ErgodicityError> {
        let step = Site::new(2, -2);
        let mut ps = vec![p1];
        loop {
            let next = ps.last().unwrap().add(step);
            if self.occ(f, next) && self.shiftable(f, next) {
                ps.push(next);
            } else {
                break;
            }
        }
        let q = ps.last().unwrap().add(step);
        if !self.occ(f, q) || self.occ(f, q.add(UP)) || self.occ(f, q.add(LEFT_DOWN)) {
            for &p in ps.iter().rev() {
                self.mv_c(f, p, p.add(RIGHT_DOWN))?;
            }
        } else {
            self.mv_c(f, q, q.add(LEFT_UP))?;
            for &p in ps.iter().skip(1).rev() {
                self.mv_c(f, p, p.add(LEFT_UP))?;
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn walk_or_route(&mut self, f: &Frame, p: Site, target: Site, x0: i32, yp: i32, yb: i32, m: i32) -> Result<(), ErgodicityError> {
        let mut path = vec![p, Site::new(x0 - 1, yp)];
        for y in (yb + 1..yp).rev() {
            path.push(Site::new(x0 - 1, y));
        }
        for k in 1..=m {
            path.push(Site::new(x0 - 1 - k, yb + 1));
        }
        path.push(target);
        let mut cur = p;
        for &nxt in &path[1..] {
            if nxt == cur {
                continue;
            }
            if self.cfg.is_valid_move(f.to_plane(cur), f.to_plane(nxt)) {
                self.mv_c(f, cur, nxt)?;
                cur = nxt;
            } else {
                break;
            }
        }
        if cur != target {
            self.relocate_c(f, cur, target)?;
        }
        Ok(())
    }

    fn merge_lines(&mut self, f: &Frame, x0: i32, y0: i32) -> Result<(), ErgodicityError> {
        let mut rows: Vec<i32> = self.column_runs(f, x0, y0).into_iter().map(|(t, _)| t).collect();
        rows.sort_unstable();
        for y in rows {
            let mut cur = y;
            if !self.occ(f, Site::new(x0, cur)) {
                continue;
            }
            while self.occ(f, Site::new(x0 + 1, cur - 1)) {
                let len = self.row_len(f, x0, cur);
                if self.occ(f, Site::new(x0, cur - 1)) {
                    let mut below = self.row_len(f, x0, cur - 1);
                    for k in (0..len).rev() {
                        self.relocate_c(f, Site::new(x0 - k, cur), Site::new(x0 - below, cur - 1))?;
                        below += 1;
                    }
                    break;
                }
                for k in 0..len {
                    self.mv_c(f, Site::new(x0 - k, cur), Site::new(x0 - k, cur - 1))?;
                }
                cur -= 1;
            }
        }
        Ok(())
    }

    fn row_len(&self, f: &Frame, x0: i32, y: i32) -> i32 {
        let mut m = 0;
        while self.occ(f, Site::new(x0 - m, y)) {
            m += 1;
        }
        m
    }

    /// Combs with source spine `s` as far in as its length allows.
    pub fn spine_comb(&mut self, s: usize) -> Result<(), ErgodicityError> {
        let info = SpineInfo::of(&self.cfg);
        let (r, rt) = (info.lengths[s] as i32, info.extents[s] as i32);
        let f = Frame::for_spine(self.cfg.pinned(), s);
        let x1 = self.canonical_sites(&f).iter().map(|c| -c.q).max().unwrap_or(0);
        self.stats.spine_combs += 1;
        debug!("spine comb s={s} r={r} rt={rt} x1={x1}");
        for x in (r + 1..=x1).rev() {
            let y = if x > rt { 1 } else { 0 };
            self.comb(&f, x, y)?;
        }
        Ok(())
    }

    fn min_length(&self) -> u32 {
        SpineInfo::of(&self.cfg).min_length()
    }

    /// Reduces to a straight line from the pinned agent.
    pub fn reduce_to_line(&mut self) -> Result<(), ErgodicityError> {
        while self.cfg.line_direction().is_none() {
            let info = SpineInfo::of(&self.cfg);
            let r = info.min_length();
            self.stats.min_lengths.push(r);
            if self.stats.min_lengths.len() > 8 * (self.cfg.len() + 2) {
                return Err(ErgodicityError::Budget("outer rounds"));
            }
            if !self.spine_round(info.argmin(), r)? && self.cfg.line_direction().is_none() {
                if r == 0 {
                    return Err(ErgodicityError::NoProgress(0));
                }
                self.hexagon_reduce(r)?;
            }
        }
        Ok(())
    }

    /// Up to seven spine combs, stopping on progress. Returns whether the
    /// minimum spine length dropped below `r`.
    fn spine_round(&mut self, s0: usize, r: u32) -> Result<bool, ErgodicityError> {
        for j in 0..7 {
            let s = (s0 + j) % 6;
            let rs = SpineInfo::of(&self.cfg).lengths[s];
            self.spine_comb(s)?;
            if self.min_length() < r || self.cfg.line_direction().is_some() {
                return Ok(true);
            }
            if rs > 0 {
                let f = Frame::for_spine(self.cfg.pinned(), s);
                let ri = rs as i32;
                if let Some(d) = (0..=ri).find(|&d| !self.occ(&f, lane_depth(ri, d))) {
                    if d == 0 {
                        self.stats.source_gaps += 1;
                        warn!("source spine segment has a gap at lane {ri}");
                    } else if d < ri {
                        self.comb(&f, ri, d + 1)?;
                    }
                    if self.min_length() < r {
                        return Ok(true);
                    }
                    return Err(ErgodicityError::NoProgress(r));
                }
            }
        }
        Ok(false)
    }

    fn hexagon_reduce(&mut self, r: u32) -> Result<(), ErgodicityError> {
        self.stats.hexagon_reductions += 1;
        let mut candidates: Vec<Planner> = Vec::new();
        self.hexagon_candidates(r, &mut candidates);
        let before = candidates.len();
        for cand in candidates {
            if SpineInfo::of(&cand.cfg).min_length() < r || cand.cfg.line_direction().is_some() {
                *self = cand;
                return Ok(());
            }
        }
        debug!("hexagon reduction: {before} candidates, none progressed");
        Err(ErgodicityError::NoProgress(r))
    }

    fn hexagon_candidates(&self, r: u32, out: &mut Vec<Planner>) {
        let c = self.cfg.pinned();
        let ri = r as i32;
        let try_with = |out: &mut Vec<Planner>, body: &dyn Fn(&mut Planner) -> Result<(), ErgodicityError>| {
            let mut p = self.clone();
            if body(&mut p).is_ok() {
                out.push(p);
            }
        };
        // A vacancy in the ring at distance r: comb just below it.
        let ring: Vec<Site> = ring_sites(c, ri);
        for &g in ring.iter().filter(|&&g| !self.cfg.contains(g)) {
            for f in Frame::all(c) {
                let g_c = f.to_canonical(g);
                if g_c.q == -ri && g_c.r > 0 && g_c.r < ri {
                    let d = ri - g_c.r;
                    try_with(out, &|p: &mut Planner| p.comb(&f, ri, d + 1));
                }
            }
        }
        if !out.is_empty() {
            return;
        }
        let info = SpineInfo::of(&self.cfg);
        if r == 1 {
            for &a in ring.iter().filter(|&&a| self.cfg.contains(a)) {
                let s = c.direction_to(a).unwrap();
                if info.extents[s] > 1 {
                    continue;
                }
                for t in a.neighbors() {
                    if t.distance(c) == 2 && !on_spine(c, t) && !self.cfg.contains(t) {
                        try_with(out, &|p: &mut Planner| p.mv(a, t));
                    }
                }
            }
            return;
        }
        let inner = ring_sites(c, ri - 1);
        for &v1 in inner.iter().filter(|&&v| self.cfg.contains(v)) {
            for v2 in v1.neighbors() {
                if v2.distance(c) != ri - 2 || !self.cfg.contains(v2) {
                    continue;
                }
                // Corner adjacent to v1: push it and its tail outward.
                for i in 0..6 {
                    let corner = c.add(DIRECTIONS[i].scale(ri));
                    if !self.cfg.contains(corner) || corner.distance(v1) != 1 {
                        continue;
                    }
                    for f in Frame::all(c) {
                        if f.to_canonical(corner) != Site::new(-ri, ri) {
                            continue;
                        }
                        try_with(out, &|p: &mut Planner| {
                            let k_max = SpineInfo::of(&p.cfg).extents[i] as i32;
                            p.mv_c(&f, Site::new(-ri, ri), Site::new(-ri - 1, ri))?;
                            for k in 1..=(k_max - ri) {
                                let t = Site::new(-ri - k, ri + k);
                                if p.occ(&f, t) {
                                    p.mv_c(&f, t, t.add(LEFT_DOWN))?;
                                }
                            }
                            Ok(())
                        });
                    }
                }
                let Some(um1) = v1
                    .neighbors()
                    .into_iter()
                    .find(|u| u.distance(v2) == 1 && u.distance(c) == ri - 1)
                else {
                    continue;
                };
                for v0 in um1.neighbors() {
                    if v0.distance(v1) != 1 || v0.distance(c) != ri || !self.cfg.contains(v0) {
                        continue;
                    }
                    let dest = if self.cfg.contains(um1) { v0.add(v0.sub(um1)) } else { um1 };
                    for f in Frame::all(c) {
                        let v0c = f.to_canonical(v0);
                        if v0c.q != -ri || v0c.r <= 0 || v0c.r >= ri {
                            continue;
                        }
                        if dest != um1 && f.to_canonical(dest) != v0c.add(LEFT_UP) {
                            continue;
                        }
                        let d = ri - v0c.r;
                        try_with(out, &|p: &mut Planner| {
                            p.mv(v0, dest)?;
                            p.comb(&f, ri, d + 1)
                        });
                    }
                }
            }
        }
    }

    /// Rotates a straight line to point in direction `dir`.
    pub fn reorient(&mut self, dir: usize) -> Result<(), ErgodicityError> {
        let c = self.cfg.pinned();
        let Some(Some(cur)) = self.cfg.line_direction() else {
            return match self.cfg.line_direction() {
                Some(None) => Ok(()),
                _ => Err(ErgodicityError::NoProgress(0)),
            };
        };
        if cur == dir {
            return Ok(());
        }
        let k = self.cfg.len() as i32 - 1;
        for i in (1..=k).rev() {
            self.relocate(c.add(DIRECTIONS[cur].scale(i)), c.add(DIRECTIONS[dir].scale(k - i + 1)))?;
        }
        Ok(())
    }
}

/// Sites at distance exactly `r` from `c`, counter-clockwise.
pub fn ring_sites(c: Site, r: i32) -> Vec<Site> {
    if r == 0 {
        return vec![c];
    }
    let mut out = Vec::with_capacity(6 * r as usize);
    let mut cur = c.add(DIRECTIONS[4].scale(r));
    for side in 0..6 {
        for _ in 0..r {
            out.push(cur);
            cur = cur.add(DIRECTIONS[side]);
        }
    }
    out
}
