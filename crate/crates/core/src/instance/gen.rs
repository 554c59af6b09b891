//! Deterministic instance generators.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    CappedSet, ConflictSpec, Instance, IntervalRequest, MatroidSpec, ValuationTable, EXPLICIT_MAX_GROUND,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatroidKind {
    Free,
    Uniform,
    Partition,
    Laminar,
    Explicit,
}

impl MatroidKind {
    pub const ALL: [MatroidKind; 5] = [
        MatroidKind::Free,
        MatroidKind::Uniform,
        MatroidKind::Partition,
        MatroidKind::Laminar,
        MatroidKind::Explicit,
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "free" => Self::Free,
            "uniform" => Self::Uniform,
            "partition" => Self::Partition,
            "laminar" => Self::Laminar,
            "explicit" => Self::Explicit,
            _ => return None,
        })
    }
}

/// The long-interval instance: agent 1 holds the single server over `[1, T+1]`
/// and is worth `(C + T·eps)/eps` with probability `eps`; every later agent
/// is worth 1 and needs `[t, t + 1/2]`.
pub fn gen_example1<S: Scalar>(agents: usize, c: f64, eps: f64) -> Result<Instance<S>> {
    if agents < 2 || c.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Param(format!("example1 needs T ≥ 2, C > 0, 0 < eps < 1 (got {agents}, {c}, {eps})")));
    }
    let high = (c + agents as f64 * eps) / eps;
    let support = vec![S::zero(), S::one(), S::of(high)];
    let mut probs = Vec::with_capacity(agents);
    probs.push(vec![S::of(1.0 - eps), S::zero(), S::of(eps)]);
    for _ in 1..agents {
        probs.push(vec![S::zero(), S::one(), S::zero()]);
    }
    let valuations = ValuationTable::new(support, probs, false)?;
    let mut intervals = vec![IntervalRequest { agent: 0, resource: 0, end: S::from_usize_lossy(agents + 1) }];
    for a in 1..agents {
        intervals.push(IntervalRequest { agent: a, resource: 0, end: S::of(a as f64 + 1.5) });
    }
    let conflicts = ConflictSpec::new(vec![], intervals, 1, agents)?;
    Instance::new(valuations, MatroidSpec::Free, conflicts, format!("example1 T={agents} C={c} eps={eps}"))
}

/// Free matroid with `d`-dimensional interval requests over `resources` resources.
pub fn gen_interval_instance<S: Scalar>(
    agents: usize,
    resources: usize,
    d: usize,
    k: usize,
    seed: u64,
) -> Result<Instance<S>> {
    if agents == 0 || k == 0 || d > resources {
        return Err(Error::Param(format!(
            "interval generator needs T ≥ 1, K ≥ 1, d ≤ J (got T={agents}, J={resources}, d={d}, K={k})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valuations = random_valuations(&mut rng, agents, k)?;
    let intervals = random_intervals::<S, _>(&mut rng, agents, resources, d);
    let conflicts = ConflictSpec::new(vec![], intervals, resources, agents)?;
    Instance::new(
        valuations,
        MatroidSpec::Free,
        conflicts,
        format!("interval T={agents} J={resources} d={d} K={k} seed={seed}"),
    )
}

/// Erdős–Rényi conflicts with a random matroid of the requested kind.
pub fn gen_random<S: Scalar>(
    agents: usize,
    k: usize,
    kind: MatroidKind,
    edge_prob: f64,
    seed: u64,
) -> Result<Instance<S>> {
    if !(0.0..=1.0).contains(&edge_prob) || agents == 0 || k == 0 {
        return Err(Error::Param(format!(
            "random generator needs T ≥ 1, K ≥ 1, 0 ≤ edge_prob ≤ 1 (got {agents}, {k}, {edge_prob})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let valuations = random_valuations(&mut rng, agents, k)?;
    let matroid = random_matroid(&mut rng, kind, agents)?;
    let mut edges = Vec::new();
    for a in 0..agents {
        for b in a + 1..agents {
            if rng.random_bool(edge_prob) {
                edges.push((a, b));
            }
        }
    }
    let conflicts = ConflictSpec::new(edges, vec![], 0, agents)?;
    Instance::new(
        valuations,
        matroid,
        conflicts,
        format!("random T={agents} K={k} kind={kind:?} p={edge_prob} seed={seed}"),
    )
}

/// Sorted support in `[0, 10)` and random rows; roughly one entry in five is zeroed.
pub fn random_valuations<S: Scalar, R: Rng>(rng: &mut R, agents: usize, k: usize) -> Result<ValuationTable<S>> {
    let mut support: Vec<f64> = (0..k).map(|_| (rng.random::<f64>() * 1000.0).round() / 100.0).collect();
    support.sort_by(f64::total_cmp);
    let probs = (0..agents)
        .map(|_| {
            let mut w: Vec<f64> =
                (0..k).map(|_| if rng.random_bool(0.2) { 0.0 } else { 0.05 + rng.random::<f64>() }).collect();
            if w.iter().all(|&x| x == 0.0) {
                w[rng.random_range(0..k)] = 1.0;
            }
            let total: f64 = w.iter().sum();
            w.iter().map(|&x| S::of(x / total)).collect()
        })
        .collect();
    ValuationTable::new(support.into_iter().map(S::of).collect(), probs, false)
}

/// Each agent requests `1..=d` distinct resources, with half-integer end times in `[t, T]`.
pub fn random_intervals<S: Scalar, R: Rng>(
    rng: &mut R,
    agents: usize,
    resources: usize,
    d: usize,
) -> Vec<IntervalRequest<S>> {
    let mut out = Vec::new();
    if d == 0 || resources == 0 {
        return out;
    }
    let mut pool: Vec<usize> = (0..resources).collect();
    for a in 0..agents {
        let count = rng.random_range(1..=d.min(resources));
        pool.shuffle(rng);
        let start = a + 1;
        let span_halves = 2 * (agents - start);
        for &j in &pool[..count] {
            let end = start as f64 + rng.random_range(0..=span_halves) as f64 / 2.0;
            out.push(IntervalRequest { agent: a, resource: j, end: S::of(end) });
        }
    }
    out
}

pub fn random_matroid<R: Rng>(rng: &mut R, kind: MatroidKind, n: usize) -> Result<MatroidSpec> {
    Ok(match kind {
        MatroidKind::Free => MatroidSpec::Free,
        MatroidKind::Uniform => MatroidSpec::Uniform { rank: rng.random_range(1..=n.saturating_sub(1).max(1)) },
        MatroidKind::Partition => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let nblocks = n.div_ceil(2).max(1);
            let mut members = vec![Vec::new(); nblocks];
            for e in order {
                if !rng.random_bool(0.2) {
                    members[rng.random_range(0..nblocks)].push(e);
                }
            }
            let blocks = members
                .into_iter()
                .filter(|m| !m.is_empty())
                .map(|m| {
                    let cap = rng.random_range(1..=m.len());
                    CappedSet::new(m, cap)
                })
                .collect();
            MatroidSpec::Partition { blocks }
        }
        MatroidKind::Laminar => {
            let mut root: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.85)).collect();
            if root.is_empty() {
                root.push(rng.random_range(0..n));
            }
            let mut sets = Vec::new();
            laminar_split(rng, root, 0, &mut sets);
            MatroidSpec::Laminar { sets }
        }
        MatroidKind::Explicit => {
            if n > EXPLICIT_MAX_GROUND {
                return Err(Error::Guard {
                    what: "explicit matroid ground set",
                    limit: EXPLICIT_MAX_GROUND as u64,
                    actual: n as u64,
                    hint: "",
                });
            }
            binary_matroid_bases(rng, n)
        }
    })
}

fn laminar_split<R: Rng>(rng: &mut R, mut members: Vec<usize>, depth: usize, out: &mut Vec<CappedSet>) {
    let cap = rng.random_range(1..=members.len());
    out.push(CappedSet::new(members.clone(), cap));
    if members.len() < 2 || depth >= 2 || !rng.random_bool(0.75) {
        return;
    }
    members.shuffle(rng);
    let cut = rng.random_range(1..members.len());
    let right = members.split_off(cut);
    for part in [members, right] {
        if rng.random_bool(0.8) {
            laminar_split(rng, part, depth + 1, out);
        }
    }
}

/// Bases of a random binary (GF(2)-representable) matroid.
fn binary_matroid_bases<R: Rng>(rng: &mut R, n: usize) -> MatroidSpec {
    let dim = rng.random_range(1..=n.clamp(1, 4));
    let vectors: Vec<u64> = (0..n).map(|_| rng.random_range(1..(1u64 << dim))).collect();
    let independent = |mask: u32| -> bool {
        let mut basis = [0u64; 64];
        for e in 0..n {
            if mask >> e & 1 == 0 {
                continue;
            }
            let mut v = vectors[e];
            while v != 0 {
                let hb = 63 - v.leading_zeros() as usize;
                if basis[hb] == 0 {
                    basis[hb] = v;
                    break;
                }
                v ^= basis[hb];
            }
            if v == 0 {
                return false;
            }
        }
        true
    };
    let mut best = 0;
    let mut bases = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if independent(mask) {
            let size = mask.count_ones();
            if size > best {
                best = size;
                bases.clear();
            }
            if size == best {
                bases.push(mask);
            }
        }
    }
    let maximal = bases.into_iter().map(|m| (0..n).filter(|e| m >> e & 1 == 1).collect()).collect();
    MatroidSpec::Explicit { maximal }
}
