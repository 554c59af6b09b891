//! Problem instances: discrete valuation marginals, a matroid description and
//! the conflict structure (explicit edges and/or interval requests).
//!
//! Agents are 0-based inside the library. Agent `a` arrives at time `a + 1`,
//! and interval end times are stored in those 1-based time units so that the
//! file representation round-trips bit-exactly.

mod gen;
mod io;

pub use gen::{
    gen_example1, gen_interval_instance, gen_random, random_intervals, random_matroid,
    random_valuations, MatroidKind,
};
pub use io::{parse_instance, parse_instance_with, serialize_instance, ParseOptions};
pub(crate) use io::{parse_conflicts, parse_matroid, real_list, write_conflicts, write_matroid, RawConflicts};

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Explicit matroids are enumerated, so their ground set is capped.
pub const EXPLICIT_MAX_GROUND: usize = 20;

/// Shared support `v^1..v^K` plus one probability row per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationTable<S> {
    support: Vec<S>,
    probs: Vec<Vec<S>>,
}

impl<S: Scalar> ValuationTable<S> {
    pub fn new(support: Vec<S>, probs: Vec<Vec<S>>, allow_negative: bool) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Invariant("support must contain at least one value".into()));
        }
        for (k, v) in support.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Invariant(format!("support value {} is not finite", k + 1)));
            }
            if *v < S::zero() && !allow_negative {
                return Err(Error::Invariant(format!(
                    "support value {} is negative ({v}); negative values need allow_negative",
                    k + 1
                )));
            }
        }
        for (t, row) in probs.iter().enumerate() {
            if row.len() != support.len() {
                return Err(Error::Invariant(format!(
                    "agent {} has {} probabilities for {} support values",
                    t + 1,
                    row.len(),
                    support.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !(**p >= S::zero() && **p <= S::one())) {
                return Err(Error::Invariant(format!("agent {} has probability {p} outside [0,1]", t + 1)));
            }
            let sum: f64 = row.iter().map(|p| p.as_f64()).sum();
            if (sum - 1.0).abs() > S::FEAS_TOL {
                return Err(Error::Invariant(format!("agent {}: row sum {sum} ≠ 1", t + 1)));
            }
        }
        Ok(Self { support, probs })
    }

    pub fn agents(&self) -> usize {
        self.probs.len()
    }

    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn row(&self, t: usize) -> &[S] {
        &self.probs[t]
    }

    pub fn prob(&self, t: usize, k: usize) -> S {
        self.probs[t][k]
    }

    pub fn mean(&self, t: usize) -> S {
        self.probs[t].iter().zip(&self.support).map(|(&p, &v)| p * v).sum()
    }

    pub fn max_value(&self) -> S {
        self.support.iter().copied().fold(S::neg_infinity(), S::max)
    }

    /// Support indices with positive probability for agent `t`.
    pub fn live_support(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        self.probs[t].iter().enumerate().filter(|(_, p)| **p > S::zero()).map(|(k, _)| k)
    }

    pub fn has_negative(&self) -> bool {
        self.support.iter().any(|v| *v < S::zero())
    }

    /// Multiplies every support value by `c`.
    pub fn scaled(&self, c: S) -> Self {
        Self { support: self.support.iter().map(|&v| v * c).collect(), probs: self.probs.clone() }
    }
}

/// Capacity constraint `|S ∩ members| ≤ capacity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CappedSet {
    pub members: Vec<usize>,
    pub capacity: usize,
}

impl CappedSet {
    pub fn new(mut members: Vec<usize>, capacity: usize) -> Self {
        members.sort_unstable();
        members.dedup();
        Self { members, capacity }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatroidSpec {
    Free,
    Uniform { rank: usize },
    /// Disjoint blocks; elements in no block are unconstrained.
    Partition { blocks: Vec<CappedSet> },
    /// Pairwise nested-or-disjoint sets.
    Laminar { sets: Vec<CappedSet> },
    /// Maximal independent sets, listed in lexicographic order.
    Explicit { maximal: Vec<Vec<usize>> },
}

impl MatroidSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MatroidSpec::Free => "free",
            MatroidSpec::Uniform { .. } => "uniform",
            MatroidSpec::Partition { .. } => "partition",
            MatroidSpec::Laminar { .. } => "laminar",
            MatroidSpec::Explicit { .. } => "explicit",
        }
    }

    /// Validates against ground-set size `n` and returns the canonical form.
    pub fn canonical(self, n: usize) -> Result<Self> {
        let check_members = |sets: &[CappedSet], what: &str| -> Result<()> {
            for s in sets {
                if let Some(&e) = s.members.iter().find(|&&e| e >= n) {
                    return Err(Error::Invariant(format!("{what} member {} outside 1..{n}", e + 1)));
                }
            }
            Ok(())
        };
        Ok(match self {
            MatroidSpec::Free => MatroidSpec::Free,
            MatroidSpec::Uniform { rank } => MatroidSpec::Uniform { rank },
            MatroidSpec::Partition { blocks } => {
                let mut blocks: Vec<CappedSet> =
                    blocks.into_iter().map(|b| CappedSet::new(b.members, b.capacity)).collect();
                check_members(&blocks, "partition block")?;
                let mut seen = BTreeSet::new();
                for b in &blocks {
                    for &e in &b.members {
                        if !seen.insert(e) {
                            return Err(Error::Invariant(format!(
                                "partition blocks overlap at element {}",
                                e + 1
                            )));
                        }
                    }
                }
                blocks.retain(|b| !b.members.is_empty());
                blocks.sort();
                MatroidSpec::Partition { blocks }
            }
            MatroidSpec::Laminar { sets } => {
                let mut sets: Vec<CappedSet> =
                    sets.into_iter().map(|b| CappedSet::new(b.members, b.capacity)).collect();
                check_members(&sets, "laminar set")?;
                sets.retain(|b| !b.members.is_empty());
                for (i, a) in sets.iter().enumerate() {
                    for b in &sets[i + 1..] {
                        let sa: BTreeSet<_> = a.members.iter().collect();
                        let sb: BTreeSet<_> = b.members.iter().collect();
                        let inter = sa.intersection(&sb).count();
                        if inter != 0 && inter != sa.len() && inter != sb.len() {
                            return Err(Error::Invariant(format!(
                                "laminar sets {:?} and {:?} cross",
                                one_based(&a.members),
                                one_based(&b.members)
                            )));
                        }
                    }
                }
                sets.sort();
                sets.dedup();
                MatroidSpec::Laminar { sets }
            }
            MatroidSpec::Explicit { maximal } => {
                if n > EXPLICIT_MAX_GROUND {
                    return Err(Error::Guard {
                        what: "explicit matroid ground set",
                        limit: EXPLICIT_MAX_GROUND as u64,
                        actual: n as u64,
                        hint: "",
                    });
                }
                let mut masks: Vec<u32> = Vec::with_capacity(maximal.len());
                for set in &maximal {
                    let mut m = 0u32;
                    for &e in set {
                        if e >= n {
                            return Err(Error::Invariant(format!(
                                "explicit matroid element {} outside 1..{n}",
                                e + 1
                            )));
                        }
                        m |= 1 << e;
                    }
                    masks.push(m);
                }
                if masks.is_empty() {
                    masks.push(0);
                }
                // drop sets contained in another listed set
                let mut kept: Vec<u32> = Vec::new();
                for (i, &m) in masks.iter().enumerate() {
                    let dominated = masks
                        .iter()
                        .enumerate()
                        .any(|(j, &o)| j != i && m & !o == 0 && (m != o || j < i));
                    if !dominated {
                        kept.push(m);
                    }
                }
                let mut maximal: Vec<Vec<usize>> = kept
                    .into_iter()
                    .map(|m| (0..n).filter(|e| m >> e & 1 == 1).collect())
                    .collect();
                maximal.sort();
                MatroidSpec::Explicit { maximal }
            }
        })
    }
}

/// Agent `agent` holds `resource` over the closed interval `[agent + 1, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalRequest<S> {
    pub agent: usize,
    pub resource: usize,
    pub end: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictSpec<S> {
    edges: Vec<(usize, usize)>,
    intervals: Vec<IntervalRequest<S>>,
    resources: usize,
}

impl<S: Scalar> Default for ConflictSpec<S> {
    fn default() -> Self {
        Self { edges: Vec::new(), intervals: Vec::new(), resources: 0 }
    }
}

impl<S: Scalar> ConflictSpec<S> {
    /// Validates against `n` vertices. `resources` is raised to cover every request.
    pub fn new(
        edges: Vec<(usize, usize)>,
        intervals: Vec<IntervalRequest<S>>,
        resources: usize,
        n: usize,
    ) -> Result<Self> {
        Self::with_arrivals(edges, intervals, resources, n, arrival_time::<S>)
    }

    /// As [`ConflictSpec::new`], for vertices whose interval starts at `arrival(v)`
    /// rather than at `v + 1` (items owned by agents).
    pub fn with_arrivals(
        edges: Vec<(usize, usize)>,
        intervals: Vec<IntervalRequest<S>>,
        resources: usize,
        n: usize,
        arrival: impl Fn(usize) -> S,
    ) -> Result<Self> {
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a == b {
                return Err(Error::Invariant(format!("self-loop edge at {}", a + 1)));
            }
            if a >= n || b >= n {
                return Err(Error::Invariant(format!("edge [{}, {}] outside 1..{n}", a + 1, b + 1)));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        let mut resources = resources;
        for r in &intervals {
            if r.agent >= n {
                return Err(Error::Invariant(format!("interval request for {} outside 1..{n}", r.agent + 1)));
            }
            if !r.end.is_finite() || r.end < arrival(r.agent) {
                return Err(Error::Invariant(format!(
                    "interval end {} precedes arrival time {} of vertex {}",
                    r.end,
                    arrival(r.agent),
                    r.agent + 1
                )));
            }
            resources = resources.max(r.resource + 1);
        }
        let mut intervals = intervals;
        intervals.sort_by(|x, y| (x.agent, x.resource).cmp(&(y.agent, y.resource)));
        for w in intervals.windows(2) {
            if (w[0].agent, w[0].resource) == (w[1].agent, w[1].resource) {
                return Err(Error::Invariant(format!(
                    "agent {} requests resource {} twice",
                    w[0].agent + 1,
                    w[0].resource + 1
                )));
            }
        }
        Ok(Self { edges: norm, intervals, resources })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn intervals(&self) -> &[IntervalRequest<S>] {
        &self.intervals
    }

    pub fn resources(&self) -> usize {
        self.resources
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty() && self.intervals.is_empty()
    }

    /// `|U_t|` for every agent.
    pub fn request_counts(&self, n: usize) -> Vec<usize> {
        let mut c = vec![0; n];
        for r in &self.intervals {
            c[r.agent] += 1;
        }
        c
    }

    /// The interval parameter `d = max_t |U_t|`.
    pub fn max_requests(&self, n: usize) -> usize {
        self.request_counts(n).into_iter().max().unwrap_or(0)
    }
}

/// 1-based arrival time of a 0-based agent.
pub fn arrival_time<S: Scalar>(agent: usize) -> S {
    S::from_usize_lossy(agent + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance<S> {
    valuations: ValuationTable<S>,
    matroid: MatroidSpec,
    conflicts: ConflictSpec<S>,
    metadata: String,
}

impl<S: Scalar> Instance<S> {
    pub fn new(
        valuations: ValuationTable<S>,
        matroid: MatroidSpec,
        conflicts: ConflictSpec<S>,
        metadata: impl Into<String>,
    ) -> Result<Self> {
        let n = valuations.agents();
        if n == 0 {
            return Err(Error::Invariant("instance needs at least one agent".into()));
        }
        let matroid = matroid.canonical(n)?;
        // revalidate against n so a spec built for another size is rejected
        let conflicts = ConflictSpec::new(
            conflicts.edges,
            conflicts.intervals,
            conflicts.resources,
            n,
        )?;
        Ok(Self { valuations, matroid, conflicts, metadata: metadata.into() })
    }

    /// Number of agents `T`.
    pub fn agents(&self) -> usize {
        self.valuations.agents()
    }

    pub fn valuations(&self) -> &ValuationTable<S> {
        &self.valuations
    }

    pub fn matroid(&self) -> &MatroidSpec {
        &self.matroid
    }

    pub fn conflicts(&self) -> &ConflictSpec<S> {
        &self.conflicts
    }

    pub fn metadata(&self) -> &str {
        &self.metadata
    }

    /// Interval parameter `d` recorded by the conflict spec.
    pub fn d(&self) -> usize {
        self.conflicts.max_requests(self.agents())
    }

    pub fn with_valuations(&self, valuations: ValuationTable<S>) -> Result<Self> {
        Self::new(valuations, self.matroid.clone(), self.conflicts.clone(), self.metadata.clone())
    }

    pub fn with_matroid(&self, matroid: MatroidSpec) -> Result<Self> {
        Self::new(self.valuations.clone(), matroid, self.conflicts.clone(), self.metadata.clone())
    }

    pub fn with_conflicts(&self, conflicts: ConflictSpec<S>) -> Result<Self> {
        Self::new(self.valuations.clone(), self.matroid.clone(), conflicts, self.metadata.clone())
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(serialize_instance(self).as_bytes()))
    }
}

pub(crate) fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }

    #[test]
    fn row_sum_must_be_one() {
        let err = ValuationTable::new(vec![1.0, 2.0], vec![row(&[0.5, 0.4])], false).unwrap_err();
        assert!(err.to_string().contains("row sum 0.9"), "{err}");
    }

    #[test]
    fn negative_support_needs_flag() {
        assert!(ValuationTable::new(vec![-1.0, 2.0], vec![row(&[0.5, 0.5])], false).is_err());
        assert!(ValuationTable::new(vec![-1.0, 2.0], vec![row(&[0.5, 0.5])], true).is_ok());
    }

    #[test]
    fn conflict_spec_rejects_bad_input() {
        assert!(ConflictSpec::<f64>::new(vec![(1, 1)], vec![], 0, 3).is_err());
        let early = IntervalRequest { agent: 2, resource: 0, end: 2.5 };
        assert!(ConflictSpec::new(vec![], vec![early], 1, 3).is_err());
        let ok = IntervalRequest { agent: 2, resource: 0, end: 3.0 };
        let c = ConflictSpec::new(vec![(2, 0)], vec![ok], 0, 3).unwrap();
        assert_eq!(c.edges(), &[(0, 2)]);
        assert_eq!(c.resources(), 1);
    }

    #[test]
    fn laminar_rejects_crossing_sets() {
        let sets = vec![CappedSet::new(vec![0, 1], 1), CappedSet::new(vec![1, 2], 1)];
        assert!(MatroidSpec::Laminar { sets }.canonical(3).is_err());
    }

    #[test]
    fn partition_rejects_overlap() {
        let blocks = vec![CappedSet::new(vec![0, 1], 1), CappedSet::new(vec![1, 2], 1)];
        assert!(MatroidSpec::Partition { blocks }.canonical(3).is_err());
    }

    #[test]
    fn explicit_is_canonicalized() {
        let m = MatroidSpec::Explicit { maximal: vec![vec![2, 1], vec![0], vec![1]] }
            .canonical(3)
            .unwrap();
        assert_eq!(m, MatroidSpec::Explicit { maximal: vec![vec![0], vec![1, 2]] });
        assert!(MatroidSpec::Explicit { maximal: vec![] }.canonical(21).is_err());
    }
}
