//! Graph snapshots, reconfiguration adversaries, local-connectivity
//! validation and recurrence instrumentation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::engine::{NeighborBuf, Topology, World};
use crate::error::GraphError;
use crate::model::BehaviorGroup;
use crate::rng::SimRng;

/// Undirected simple graph with sorted adjacency lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GraphSnapshot {
    adj: Vec<Vec<usize>>,
}

impl GraphSnapshot {
    pub fn empty(n: usize) -> Self {
        GraphSnapshot { adj: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut g = GraphSnapshot::empty(n);
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GraphError::VertexOutOfRange { vertex: a.max(b), n });
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if g.has_edge(a, b) {
                return Err(GraphError::DuplicateEdge(a.min(b), a.max(b)));
            }
            g.insert(a, b);
        }
        Ok(g)
    }

    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("path edges are simple")
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n >= 3 {
            edges.push((n - 1, 0));
        }
        Self::from_edges(n, &edges).expect("cycle edges are simple")
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Self::from_edges(n, &edges).expect("complete edges are simple")
    }

    /// `w` by `h` grid, vertices numbered row-major.
    pub fn grid(w: usize, h: usize) -> Self {
        let mut edges = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = y * w + x;
                if x + 1 < w {
                    edges.push((v, v + 1));
                }
                if y + 1 < h {
                    edges.push((v, v + w));
                }
            }
        }
        Self::from_edges(w * h, &edges).expect("grid edges are simple")
    }

    /// Random connected graph: a random tree plus `extra` random chords,
    /// never exceeding `max_degree` (chords violating it are skipped).
    pub fn random_connected(n: usize, extra: usize, max_degree: usize, rng: &mut SimRng) -> Self {
        let mut g = GraphSnapshot::empty(n);
        for v in 1..n {
            let candidates: Vec<usize> = (0..v).filter(|&u| g.degree(u) < max_degree.max(2)).collect();
            let u = if candidates.is_empty() { rng.below(v) } else { candidates[rng.below(candidates.len())] };
            g.insert(u, v);
        }
        for _ in 0..extra {
            if n < 2 {
                break;
            }
            let a = rng.below(n);
            let b = rng.below(n);
            if a != b && !g.has_edge(a, b) && g.degree(a) < max_degree && g.degree(b) < max_degree {
                g.insert(a, b);
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, ns) in self.adj.iter().enumerate() {
            out.extend(ns.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    fn insert(&mut self, a: usize, b: usize) {
        if let Err(i) = self.adj[a].binary_search(&b) {
            self.adj[a].insert(i, b);
        }
        if let Err(i) = self.adj[b].binary_search(&a) {
            self.adj[b].insert(i, a);
        }
    }

    fn remove(&mut self, a: usize, b: usize) {
        if let Ok(i) = self.adj[a].binary_search(&b) {
            self.adj[a].remove(i);
        }
        if let Ok(i) = self.adj[b].binary_search(&a) {
            self.adj[b].remove(i);
        }
    }

    /// Replaces the neighborhood of `u`; only edges incident to `u` change.
    pub fn set_neighbors(&mut self, u: usize, neighbors: &[usize]) -> Result<(), GraphError> {
        let n = self.n();
        for &v in neighbors {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
            if v == u {
                return Err(GraphError::SelfLoop(u));
            }
        }
        for v in self.adj[u].clone() {
            self.remove(u, v);
        }
        for &v in neighbors {
            self.insert(u, v);
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        if self.n() == 0 {
            return true;
        }
        let mut seen = vec![false; self.n()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.n()
    }
}

impl Topology for GraphSnapshot {
    fn vertex_count(&self) -> usize {
        self.n()
    }

    #[inline]
    fn neighbors_into(&self, u: usize, out: &mut NeighborBuf) {
        out.clear();
        out.extend_from_slice(&self.adj[u]);
    }
}

/// Union-find labels of `members` under edges of `g` restricted to `members`.
fn induced_labels(g: &GraphSnapshot, members: &[usize]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..members.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, &a) in members.iter().enumerate() {
        for (j, &b) in members.iter().enumerate().skip(i + 1) {
            if g.has_edge(a, b) {
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                parent[ra] = rb;
            }
        }
    }
    (0..members.len()).map(|i| find(&mut parent, i)).collect()
}

/// Checks that `after` differs from `before` only at edges incident to `u`
/// and that the change is a locally connected reconfiguration.
pub fn validate_local_reconfiguration(
    before: &GraphSnapshot,
    after: &GraphSnapshot,
    u: usize,
    groups: &[BehaviorGroup],
) -> Result<bool, GraphError> {
    let n = before.n();
    if after.n() != n {
        return Err(GraphError::VertexOutOfRange { vertex: after.n().max(n), n: n.min(after.n()) });
    }
    for x in (0..n).filter(|&x| x != u) {
        let b = before.neighbors(x).iter().filter(|&&v| v != u);
        let a = after.neighbors(x).iter().filter(|&&v| v != u);
        if !b.clone().eq(a.clone()) {
            let v = b
                .clone()
                .find(|v| !after.has_edge(x, **v))
                .or_else(|| a.clone().find(|v| !before.has_edge(x, **v)))
                .copied()
                .unwrap_or(x);
            return Err(GraphError::MalformedDiff(x.min(v), x.max(v), u));
        }
    }
    if before.neighbors(u) == after.neighbors(u) {
        return Ok(true);
    }
    match groups[u] {
        BehaviorGroup::Immobile => Ok(false),
        BehaviorGroup::Unaware => Ok(true),
        BehaviorGroup::Mobile => {
            if !after.neighbors(u).iter().any(|&v| groups[v].is_aware()) {
                return Ok(false);
            }
            let mut members: Vec<usize> = before.neighbors(u).iter().copied().filter(|&v| groups[v].is_aware()).collect();
            members.push(u);
            let lb = induced_labels(before, &members);
            let la = induced_labels(after, &members);
            let k = members.len() - 1;
            for i in 0..k {
                for j in i + 1..k {
                    if lb[i] == lb[j] && la[i] != la[j] {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

/// A single-vertex rewiring: `vertex` gets exactly `neighbors`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconfiguration {
    pub vertex: usize,
    pub neighbors: Vec<usize>,
}

/// Produces the micro-steps that turn G_{t-1} into G_t. Sees only the
/// behavior-group vector of the previous iteration.
pub trait Adversary: Send {
    fn propose(
        &mut self,
        t: u64,
        graph: &GraphSnapshot,
        groups: &[BehaviorGroup],
        rng: &mut SimRng,
    ) -> Result<Vec<Reconfiguration>, GraphError>;

    /// Static adversaries let callers skip group extraction.
    fn is_static(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Default)]
pub struct StaticAdversary;

impl Adversary for StaticAdversary {
    fn propose(&mut self, _: u64, _: &GraphSnapshot, _: &[BehaviorGroup], _: &mut SimRng) -> Result<Vec<Reconfiguration>, GraphError> {
        Ok(Vec::new())
    }

    fn is_static(&self) -> bool {
        true
    }
}

/// Oblivious sequence read from a file; iterations without a listed graph
/// keep the previous one.
#[derive(Debug, Clone)]
pub struct ScriptedSequence {
    frames: BTreeMap<u64, GraphSnapshot>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptLine {
    t: u64,
    edges: Vec<(usize, usize)>,
}

impl ScriptedSequence {
    pub fn new(frames: BTreeMap<u64, GraphSnapshot>) -> Self {
        ScriptedSequence { frames }
    }

    /// Parses newline-delimited `{"t": .., "edges": [[a, b], ..]}` records.
    pub fn parse(text: &str, n: usize, path: &Path) -> Result<Self, GraphError> {
        let mut frames = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ScriptLine = serde_json::from_str(line).map_err(|e| GraphError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            let g = GraphSnapshot::from_edges(n, &rec.edges).map_err(|e| GraphError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            if frames.insert(rec.t, g).is_some() {
                return Err(GraphError::Parse { path: path.to_path_buf(), line: i + 1, msg: format!("duplicate t = {}", rec.t) });
            }
        }
        Ok(ScriptedSequence { frames })
    }

    pub fn load(path: &Path, n: usize) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|source| GraphError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, n, path)
    }

    /// The graph listed at t = 0, if any.
    pub fn initial(&self) -> Option<&GraphSnapshot> {
        self.frames.get(&0)
    }

    pub fn frames(&self) -> &BTreeMap<u64, GraphSnapshot> {
        &self.frames
    }
}

/// Vertex-by-vertex rewiring from `from` to `to`, ascending vertex order.
pub fn decompose(from: &GraphSnapshot, to: &GraphSnapshot) -> Vec<Reconfiguration> {
    let mut work = from.clone();
    let mut steps = Vec::new();
    for u in 0..to.n() {
        if work.neighbors(u) != to.neighbors(u) {
            let ns = to.neighbors(u).to_vec();
            work.set_neighbors(u, &ns).expect("target graph is valid");
            steps.push(Reconfiguration { vertex: u, neighbors: ns });
        }
    }
    steps
}

impl Adversary for ScriptedSequence {
    fn propose(&mut self, t: u64, graph: &GraphSnapshot, _: &[BehaviorGroup], _: &mut SimRng) -> Result<Vec<Reconfiguration>, GraphError> {
        match self.frames.get(&t) {
            Some(target) => Ok(decompose(graph, target)),
            None => Ok(Vec::new()),
        }
    }
}

/// Each iteration, with probability `rate`, one random non-Immobile vertex
/// proposes a random rewiring; it is kept only if it is locally connected,
/// respects the degree bound and keeps the graph connected.
#[derive(Debug, Clone)]
pub struct RandomRewiring {
    pub rate: f64,
    pub max_degree: usize,
}

impl Adversary for RandomRewiring {
    fn propose(&mut self, _: u64, graph: &GraphSnapshot, groups: &[BehaviorGroup], rng: &mut SimRng) -> Result<Vec<Reconfiguration>, GraphError> {
        let n = graph.n();
        if n < 2 || !rng.chance(self.rate) {
            return Ok(Vec::new());
        }
        let u = rng.below(n);
        if groups[u] == BehaviorGroup::Immobile {
            return Ok(Vec::new());
        }
        let mut ns: Vec<usize> = graph.neighbors(u).to_vec();
        let v = rng.below(n);
        if v != u {
            if let Some(i) = ns.iter().position(|&x| x == v) {
                ns.remove(i);
            } else if graph.degree(v) < self.max_degree && ns.len() < self.max_degree {
                ns.push(v);
                ns.sort_unstable();
            }
        }
        let mut after = graph.clone();
        after.set_neighbors(u, &ns)?;
        if after.is_connected() && validate_local_reconfiguration(graph, &after, u, groups)? {
            Ok(vec![Reconfiguration { vertex: u, neighbors: ns }])
        } else {
            Ok(Vec::new())
        }
    }
}

/// Current graph plus the adversary that evolves it.
pub struct DynamicGraph {
    graph: GraphSnapshot,
    adversary: Box<dyn Adversary>,
    validate: bool,
}

impl DynamicGraph {
    pub fn new(initial: GraphSnapshot, adversary: Box<dyn Adversary>, validate: bool) -> Self {
        DynamicGraph { graph: initial, adversary, validate }
    }

    pub fn fixed(graph: GraphSnapshot) -> Self {
        Self::new(graph, Box::new(StaticAdversary), false)
    }

    pub fn graph(&self) -> &GraphSnapshot {
        &self.graph
    }

    pub fn is_static(&self) -> bool {
        self.adversary.is_static()
    }

    /// Advances to G_t, validating every micro-step when enabled.
    pub fn next_graph(&mut self, t: u64, groups: &[BehaviorGroup], rng: &mut SimRng) -> Result<&GraphSnapshot, GraphError> {
        let steps = self.adversary.propose(t, &self.graph, groups, rng)?;
        for step in steps {
            if self.validate {
                let mut after = self.graph.clone();
                after.set_neighbors(step.vertex, &step.neighbors)?;
                if !validate_local_reconfiguration(&self.graph, &after, step.vertex, groups)? {
                    return Err(GraphError::InvalidReconfiguration { vertex: step.vertex, iteration: t });
                }
                self.graph = after;
            } else {
                self.graph.set_neighbors(step.vertex, &step.neighbors)?;
            }
        }
        Ok(&self.graph)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchRule {
    /// Every iteration closes a batch (D_k = 1).
    PerIteration,
    /// Batches close one iteration after a movement contact pair is next
    /// selected for movement.
    MovementContact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Batch {
    pub duration: u64,
    pub active: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LedgerSummary {
    pub batches: usize,
    pub elapsed: u64,
    pub mean_duration: f64,
    pub mean_active: f64,
    /// Empirical mean of (1 - 1/n)^{C_k}.
    pub u_c_estimate: f64,
}

/// Batch counters (D_k, C_k) of the recurrence definition.
#[derive(Debug, Clone)]
pub struct RecurrenceLedger {
    rule: BatchRule,
    batches: Vec<Batch>,
    open: Batch,
    elapsed: u64,
    contact: Option<(usize, usize)>,
    step2_at: Option<u64>,
}

impl RecurrenceLedger {
    pub fn new(rule: BatchRule) -> Self {
        RecurrenceLedger { rule, batches: Vec::new(), open: Batch { duration: 0, active: 0 }, elapsed: 0, contact: None, step2_at: None }
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    pub fn open_batch(&self) -> Batch {
        self.open
    }

    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    /// Step 1: movement put Unaware `u` next to Aware `v`.
    pub fn note_contact(&mut self, u: usize, v: usize) {
        if self.contact.is_none() {
            self.contact = Some((u, v));
        }
    }

    /// Step 2 candidate: `agent` was selected for movement.
    pub fn note_selection(&mut self, agent: usize) {
        if let Some((u, v)) = self.contact {
            if self.step2_at.is_none() && (agent == u || agent == v) {
                self.step2_at = Some(self.elapsed);
            }
        }
    }

    /// Accounts one finished iteration.
    pub fn record_recurrence<T: Topology + ?Sized>(&mut self, world: &World, topo: &T) {
        let active = count_active(world, topo) as u64;
        self.record_active(active);
    }

    pub fn record_active(&mut self, active: u64) {
        let idx = self.elapsed;
        self.elapsed += 1;
        self.open.duration += 1;
        self.open.active += active;
        let close = match self.rule {
            BatchRule::PerIteration => true,
            BatchRule::MovementContact => matches!(self.step2_at, Some(s) if s < idx),
        };
        if close {
            self.batches.push(self.open);
            self.open = Batch { duration: 0, active: 0 };
            self.contact = None;
            self.step2_at = None;
        }
    }

    pub fn summary(&self, n: usize) -> LedgerSummary {
        let k = self.batches.len();
        let mean = |f: &dyn Fn(&Batch) -> f64| if k == 0 { 0.0 } else { self.batches.iter().map(f).sum::<f64>() / k as f64 };
        let base = if n == 0 { 0.0 } else { 1.0 - 1.0 / n as f64 };
        LedgerSummary {
            batches: k,
            elapsed: self.elapsed,
            mean_duration: mean(&|b| b.duration as f64),
            mean_active: mean(&|b| b.active as f64),
            u_c_estimate: mean(&|b| base.powf(b.active as f64)),
        }
    }

    /// Rows `k,D_k,C_k`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,D_k,C_k\n");
        for (k, b) in self.batches.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", k, b.duration, b.active));
        }
        s
    }
}

/// Unaware agents with at least one Aware neighbor.
pub fn count_active<T: Topology + ?Sized>(world: &World, topo: &T) -> usize {
    let mut buf = NeighborBuf::new();
    let states = world.states();
    (0..world.agent_count())
        .filter(|&u| {
            !states[u].is_aware() && {
                topo.neighbors_into(u, &mut buf);
                buf.iter().any(|&v| states[v].is_aware())
            }
        })
        .count()
}
