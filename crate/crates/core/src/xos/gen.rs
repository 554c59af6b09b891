//! Builders: random XOS instances, the singleton-item embedding of a scalar
//! instance, and the clique-copy reduction for items shared between agents.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{XosInstance, XosValuation};
use crate::error::{Error, Result};
use crate::instance::{arrival_time, random_matroid, CappedSet, ConflictSpec, Instance, IntervalRequest, MatroidKind, MatroidSpec};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XosGenParams {
    pub agents: usize,
    /// Each agent owns between 1 and this many items.
    pub max_items: usize,
    /// Outcomes per agent.
    pub k: usize,
    pub max_clauses: usize,
    pub kind: MatroidKind,
    pub edge_prob: f64,
    /// Interval resources; 0 disables interval requests.
    pub resources: usize,
    /// Requests per item, at most.
    pub d: usize,
    pub seed: u64,
}

impl Default for XosGenParams {
    fn default() -> Self {
        Self {
            agents: 3,
            max_items: 2,
            k: 2,
            max_clauses: 2,
            kind: MatroidKind::Free,
            edge_prob: 0.3,
            resources: 0,
            d: 0,
            seed: 0,
        }
    }
}

pub fn gen_random_xos<S: Scalar>(p: &XosGenParams) -> Result<XosInstance<S>> {
    if p.agents == 0 || p.max_items == 0 || p.k == 0 || p.max_clauses == 0 || !(0.0..=1.0).contains(&p.edge_prob) {
        return Err(Error::Param(format!("XOS generator got an empty dimension or a bad edge probability: {p:?}")));
    }
    if p.d > p.resources {
        return Err(Error::Param(format!("d = {} exceeds the {} resources", p.d, p.resources)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut items = Vec::with_capacity(p.agents);
    let mut next = 0;
    for _ in 0..p.agents {
        let m = rng.random_range(1..=p.max_items);
        items.push((next..next + m).collect::<Vec<_>>());
        next += m;
    }
    let n = next;
    let weight = |rng: &mut ChaCha8Rng| -> S {
        if rng.random_bool(0.2) {
            S::zero()
        } else {
            S::of((rng.random::<f64>() * 1000.0).round() / 100.0)
        }
    };
    let mut dists = Vec::with_capacity(p.agents);
    for list in &items {
        let mut w: Vec<f64> = (0..p.k).map(|_| 0.05 + rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let mut d = Vec::with_capacity(p.k);
        for &pk in &w {
            let l = rng.random_range(1..=p.max_clauses);
            let clauses = (0..l).map(|_| (0..list.len()).map(|_| weight(&mut rng)).collect()).collect();
            d.push((S::of(pk), XosValuation::new(clauses, list.len())?));
        }
        dists.push(d);
    }
    let matroid = random_matroid(&mut rng, p.kind, n)?;
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p.edge_prob) {
                edges.push((a, b));
            }
        }
    }
    let mut intervals = Vec::new();
    if p.d > 0 {
        let mut pool: Vec<usize> = (0..p.resources).collect();
        for (t, list) in items.iter().enumerate() {
            for &i in list {
                let count = rng.random_range(1..=p.d);
                pool.shuffle(&mut rng);
                let start = t + 1;
                for &j in &pool[..count] {
                    let end = start as f64 + rng.random_range(0..=2 * (p.agents - start)) as f64 / 2.0;
                    intervals.push(IntervalRequest { agent: i, resource: j, end: S::of(end) });
                }
            }
        }
    }
    let owner: Vec<usize> = items.iter().enumerate().flat_map(|(t, l)| l.iter().map(move |_| t)).collect();
    let conflicts = ConflictSpec::with_arrivals(edges, intervals, p.resources, n, |i| arrival_time::<S>(owner[i]))?;
    XosInstance::new(
        items,
        dists,
        matroid,
        conflicts,
        format!(
            "random xos T={} items≤{} K={} kind={:?} p={} J={} d={} seed={}",
            p.agents, p.max_items, p.k, p.kind, p.edge_prob, p.resources, p.d, p.seed
        ),
    )
}

/// One item per agent with additive value equal to the scalar realization.
/// Every support entry becomes an outcome, so outcome `k` is support index `k`.
pub fn singleton_from_scalar<S: Scalar>(inst: &Instance<S>) -> Result<XosInstance<S>> {
    let v = inst.valuations();
    let items = (0..inst.agents()).map(|t| vec![t]).collect();
    let dists = (0..inst.agents())
        .map(|t| {
            (0..v.k())
                .map(|k| Ok((v.prob(t, k), XosValuation::new(vec![vec![v.support()[k]]], 1)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    XosInstance::new(items, dists, inst.matroid().clone(), inst.conflicts().clone(), inst.metadata())
}

/// Items that several agents may each receive. Each agent gets a private copy
/// of every shared item it can use; copies of one item form a clique, so at
/// most one agent ends up with it.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedItemModel<S> {
    pub items: usize,
    /// Shared item ids usable by each agent; clause weights follow this order.
    pub access: Vec<Vec<usize>>,
    pub dists: Vec<Vec<(S, XosValuation<S>)>>,
    /// Over the shared items. Explicit matroids are not supported.
    pub matroid: MatroidSpec,
    /// Conflicts between shared items.
    pub edges: Vec<(usize, usize)>,
}

impl<S: Scalar> SharedItemModel<S> {
    /// The equivalent partitioned instance and, per copy, its shared item.
    pub fn to_xos(&self) -> Result<(XosInstance<S>, Vec<usize>)> {
        let mut origin = Vec::new();
        let mut items = Vec::with_capacity(self.access.len());
        for list in &self.access {
            if let Some(&bad) = list.iter().find(|&&i| i >= self.items) {
                return Err(Error::Invariant(format!("shared item {} outside 1..{}", bad + 1, self.items)));
            }
            let ids: Vec<usize> = (origin.len()..origin.len() + list.len()).collect();
            origin.extend_from_slice(list);
            items.push(ids);
        }
        let copies_of = |i: usize| -> Vec<usize> { (0..origin.len()).filter(|&c| origin[c] == i).collect() };
        let lift = |sets: &[CappedSet]| -> Vec<CappedSet> {
            sets.iter()
                .map(|s| CappedSet::new(s.members.iter().flat_map(|&i| copies_of(i)).collect(), s.capacity))
                .collect()
        };
        let matroid = match &self.matroid {
            MatroidSpec::Free => MatroidSpec::Free,
            MatroidSpec::Uniform { rank } => MatroidSpec::Uniform { rank: *rank },
            MatroidSpec::Partition { blocks } => MatroidSpec::Partition { blocks: lift(blocks) },
            MatroidSpec::Laminar { sets } => MatroidSpec::Laminar { sets: lift(sets) },
            MatroidSpec::Explicit { .. } => {
                return Err(Error::UnsupportedMatroid("clique copies need a capacity-based matroid".into()))
            }
        };
        let mut edges = Vec::new();
        for a in 0..origin.len() {
            for b in a + 1..origin.len() {
                if origin[a] == origin[b] {
                    edges.push((a, b));
                }
            }
        }
        for &(i, j) in &self.edges {
            for a in copies_of(i) {
                for b in copies_of(j) {
                    if a != b {
                        edges.push((a, b));
                    }
                }
            }
        }
        let conflicts = ConflictSpec::new(edges, vec![], 0, origin.len())?;
        let x = XosInstance::new(items, self.dists.clone(), matroid, conflicts, "clique copies")?;
        Ok((x, origin))
    }
}
