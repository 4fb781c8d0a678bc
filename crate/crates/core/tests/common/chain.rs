//! Exact Markov chain of the protocol on a small static graph with a fixed
//! witness set. Transitions are written out from the protocol rules and do
//! not call into the engine.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use stimuli_core::AgentState::{self, *};

pub struct Chain {
    pub adj: Vec<Vec<usize>>,
    pub witness: Vec<bool>,
    pub p: f64,
    pub delta: usize,
}

fn aware(s: AgentState) -> bool {
    s != Unaware
}

fn flagged(s: AgentState) -> bool {
    matches!(s, AwareWitness | AwareAlertWitness)
}

fn token(s: AgentState) -> bool {
    matches!(s, AwareAlert | AwareAlertWitness)
}

impl Chain {
    pub fn new(edges: &[(usize, usize)], n: usize, witness: &[usize], p: f64) -> Chain {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        let delta = adj.iter().map(Vec::len).max().unwrap_or(1).max(1);
        let mut w = vec![false; n];
        for &x in witness {
            w[x] = true;
        }
        Chain { adj, witness: w, p, delta }
    }

    pub fn path(n: usize, witness: &[usize], p: f64) -> Chain {
        let e: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Chain::new(&e, n, witness, p)
    }

    pub fn cycle(n: usize, witness: &[usize], p: f64) -> Chain {
        let e: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Chain::new(&e, n, witness, p)
    }

    fn clear_around(&self, s: &[AgentState], u: usize) -> Vec<AgentState> {
        let mut t = s.to_vec();
        for &v in &self.adj[u] {
            if aware(t[v]) {
                t[v] = AwareClear;
            }
        }
        t[u] = Unaware;
        t
    }

    /// Successor distribution of one iteration (uniform activation).
    pub fn transitions(&self, s: &[AgentState]) -> Vec<(Vec<AgentState>, f64)> {
        let n = s.len();
        let mut out = Vec::new();
        for u in 0..n {
            let pu = 1.0 / n as f64;
            let mut put = |t: Vec<AgentState>, q: f64| out.push((t, pu * q));
            let su = s[u];
            if self.witness[u] && !flagged(su) {
                let mut t = s.to_vec();
                t[u] = AwareWitness;
                put(t, self.p);
                put(s.to_vec(), 1.0 - self.p);
                continue;
            }
            if !self.witness[u] && flagged(su) {
                put(self.clear_around(s, u), 1.0);
                continue;
            }
            match su {
                Unaware => match self.adj[u].iter().copied().find(|&v| token(s[v])) {
                    Some(v) => {
                        let mut t = s.to_vec();
                        t[v] = if s[v] == AwareAlert { AwareEmpty } else { AwareWitness };
                        t[u] = AwareEmpty;
                        put(t, 1.0);
                    }
                    None => put(s.to_vec(), 1.0),
                },
                AwareAlert | AwareAlertWitness => {
                    let slot = 1.0 / self.delta as f64;
                    let mut stay = 1.0 - slot * self.adj[u].len() as f64;
                    for &v in &self.adj[u] {
                        let recv = match s[v] {
                            AwareEmpty => Some(AwareAlert),
                            AwareWitness => Some(AwareAlertWitness),
                            _ => None,
                        };
                        match recv {
                            Some(r) => {
                                let mut t = s.to_vec();
                                t[v] = r;
                                t[u] = if su == AwareAlert { AwareEmpty } else { AwareWitness };
                                put(t, slot);
                            }
                            None => stay += slot,
                        }
                    }
                    put(s.to_vec(), stay);
                }
                AwareWitness => {
                    let mut t = s.to_vec();
                    t[u] = AwareAlertWitness;
                    put(t, self.p);
                    put(s.to_vec(), 1.0 - self.p);
                }
                AwareClear => put(self.clear_around(s, u), 1.0),
                AwareEmpty => put(s.to_vec(), 1.0),
            }
        }
        out
    }

    /// Expected iterations until `target` holds, starting from `start`.
    pub fn hitting_time(&self, start: &[AgentState], target: impl Fn(&[AgentState]) -> bool) -> f64 {
        let mut index: HashMap<Vec<AgentState>, usize> = HashMap::new();
        let mut states = vec![start.to_vec()];
        index.insert(start.to_vec(), 0);
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut i = 0;
        while i < states.len() {
            let s = states[i].clone();
            let mut row = Vec::new();
            if !target(&s) {
                for (t, q) in self.transitions(&s) {
                    let next = states.len();
                    let j = *index.entry(t.clone()).or_insert_with(|| {
                        states.push(t);
                        next
                    });
                    row.push((j, q));
                }
            }
            rows.push(row);
            i += 1;
        }
        let m = states.len();
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for (i, row) in rows.iter().enumerate() {
            if target(&states[i]) {
                continue;
            }
            b[i] = 1.0;
            for &(j, q) in row {
                a[(i, j)] -= q;
            }
        }
        let x = a.lu().solve(&b).expect("absorbing chain");
        x[0]
    }
}

pub fn all_aware(s: &[AgentState]) -> bool {
    s.iter().all(|&x| aware(x))
}

pub fn all_unaware(s: &[AgentState]) -> bool {
    s.iter().all(|&x| x == Unaware)
}
