//! Conflict graph construction, online independence tests and the constants
//! `d2(G)` and `d`.

use std::collections::BTreeMap;

use crate::agentset::AgentSet;
use crate::error::{Error, Result};
use crate::instance::{arrival_time, ConflictSpec};
use crate::scalar::Scalar;

/// Largest vertex set handed to the exact independence-number search.
pub const ALPHA_GUARD: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EdgeSource {
    Explicit,
    Resource(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    adj: Vec<Vec<usize>>,
    provenance: BTreeMap<(usize, usize), Vec<EdgeSource>>,
}

impl ConflictGraph {
    pub fn build<S: Scalar>(c: &ConflictSpec<S>, n: usize) -> Self {
        Self::build_with_arrivals(c, n, arrival_time::<S>)
    }

    /// Vertex `v` holds each requested resource over `[arrival(v), end]`.
    pub fn build_with_arrivals<S: Scalar>(c: &ConflictSpec<S>, n: usize, arrival: impl Fn(usize) -> S) -> Self {
        let mut provenance: BTreeMap<(usize, usize), Vec<EdgeSource>> = BTreeMap::new();
        for &(a, b) in c.edges() {
            provenance.entry((a, b)).or_default().push(EdgeSource::Explicit);
        }
        let mut by_resource: BTreeMap<usize, Vec<(usize, S)>> = BTreeMap::new();
        for r in c.intervals() {
            by_resource.entry(r.resource).or_default().push((r.agent, r.end));
        }
        for (j, reqs) in &by_resource {
            for (i, &(a, end_a)) in reqs.iter().enumerate() {
                for &(b, end_b) in &reqs[i + 1..] {
                    let start = arrival(a).max(arrival(b));
                    if a != b && start <= end_a.min(end_b) {
                        provenance.entry((a.min(b), a.max(b))).or_default().push(EdgeSource::Resource(*j));
                    }
                }
            }
        }
        Self::from_provenance(n, provenance)
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut provenance: BTreeMap<(usize, usize), Vec<EdgeSource>> = BTreeMap::new();
        for &(a, b) in edges {
            if a != b {
                provenance.entry((a.min(b), a.max(b))).or_default().push(EdgeSource::Explicit);
            }
        }
        Self::from_provenance(n, provenance)
    }

    fn from_provenance(n: usize, provenance: BTreeMap<(usize, usize), Vec<EdgeSource>>) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in provenance.keys() {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        Self { adj, provenance }
    }

    pub fn vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, t: usize) -> &[usize] {
        &self.adj[t]
    }

    /// Neighbors arriving before `t`.
    pub fn earlier_neighbors(&self, t: usize) -> &[usize] {
        let l = &self.adj[t];
        &l[..l.partition_point(|&u| u < t)]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    /// Edges `(a, b)` with `a < b` and the reasons each exists.
    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &[EdgeSource])> {
        self.provenance.iter().map(|(e, p)| (e, p.as_slice()))
    }

    pub fn edge_count(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_independent_with(&self, y: &AgentSet, t: usize) -> bool {
        self.adj[t].iter().all(|&u| !y.contains(u))
    }

    pub fn is_independent(&self, s: &AgentSet) -> bool {
        s.iter().all(|t| self.earlier_neighbors(t).iter().all(|&u| !s.contains(u)))
    }

    /// Independence number of the subgraph induced by `vertices`.
    pub fn alpha(&self, vertices: &[usize]) -> Result<usize> {
        if vertices.len() > ALPHA_GUARD {
            return Err(Error::Guard {
                what: "independence-number search",
                limit: ALPHA_GUARD as u64,
                actual: vertices.len() as u64,
                hint: "; use the interval bound d instead",
            });
        }
        let adj: Vec<u32> = vertices
            .iter()
            .map(|&u| {
                vertices
                    .iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != u && self.has_edge(u, v))
                    .fold(0u32, |m, (i, _)| m | 1 << i)
            })
            .collect();
        Ok(max_independent(&adj))
    }

    /// `max_t α(G[N⁻(t)])`, where `N⁻(t)` are the earlier neighbors of `t`.
    pub fn d2(&self) -> Result<usize> {
        let mut best = 0;
        for t in 0..self.vertices() {
            best = best.max(self.alpha(self.earlier_neighbors(t))?);
        }
        Ok(best)
    }

    /// `d2` when "earlier" is decided by `order[v]` rather than the vertex index;
    /// vertices sharing an order key are never earlier than each other.
    pub fn d2_by_order(&self, order: &[usize]) -> Result<usize> {
        let mut best = 0;
        for t in 0..self.vertices() {
            let earlier: Vec<usize> = self.adj[t].iter().copied().filter(|&u| order[u] < order[t]).collect();
            best = best.max(self.alpha(&earlier)?);
        }
        Ok(best)
    }
}

/// Certified upper bound `max_t |U_t|` on `d2` for interval-only conflicts.
pub fn d_bound_intervals<S: Scalar>(c: &ConflictSpec<S>, n: usize) -> Result<usize> {
    if !c.edges().is_empty() {
        return Err(Error::Param("interval bound is not certified when explicit edges are present".into()));
    }
    Ok(c.max_requests(n))
}

/// Maximum independent set size for a graph on at most 32 vertices given as
/// adjacency bitmasks.
fn max_independent(adj: &[u32]) -> usize {
    let n = adj.len();
    let all: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut best = greedy_independent(adj, all);
    branch(adj, all, 0, &mut best);
    best
}

fn greedy_independent(adj: &[u32], mut live: u32) -> usize {
    let mut size = 0;
    while live != 0 {
        let v = min_degree_vertex(adj, live);
        size += 1;
        live &= !(adj[v] | 1 << v);
    }
    size
}

fn min_degree_vertex(adj: &[u32], live: u32) -> usize {
    bits(live).min_by_key(|&v| ((adj[v] & live).count_ones(), v)).expect("non-empty")
}

fn bits(mut m: u32) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let v = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(v)
        }
    })
}

fn branch(adj: &[u32], mut live: u32, mut size: usize, best: &mut usize) {
    // vertices of degree ≤ 1 can always be taken
    loop {
        let Some(v) = bits(live).find(|&v| (adj[v] & live).count_ones() <= 1) else { break };
        size += 1;
        live &= !(adj[v] | 1 << v);
    }
    if live == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + live.count_ones() as usize <= *best {
        return;
    }
    let v = bits(live).max_by_key(|&v| ((adj[v] & live).count_ones(), std::cmp::Reverse(v))).expect("non-empty");
    branch(adj, live & !(adj[v] | 1 << v), size + 1, best);
    branch(adj, live & !(1 << v), size, best);
}
