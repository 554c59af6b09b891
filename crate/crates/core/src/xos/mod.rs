//! XOS valuations over per-agent item sets, at enumeration scale.
//!
//! Items are 0-based and partitioned among agents; the matroid and the
//! conflict graph live on items. The reference prophet is the optimum of the
//! independent product of the agents' valuation distributions.

mod gen;
mod io;
mod plan;
mod stats;

pub use gen::{gen_random_xos, singleton_from_scalar, SharedItemModel, XosGenParams};
pub use io::{parse_xos, serialize_xos};
pub use plan::{run_xos_policy, xos_simulate, XosPlan, XosRunTrace};
pub use stats::{feasible_item_sets, prophet_stats, ProphetRealization, ProphetStats};

use crate::agentset::AgentSet;
use crate::conflict::ConflictGraph;
use crate::error::{guard, Error, Result};
use crate::instance::{arrival_time, ConflictSpec, MatroidSpec};
use crate::matroid::MatroidOracle;
use crate::scalar::Scalar;

/// Largest item universe handled by the enumerations.
pub const MAX_ITEMS: usize = 14;
/// Largest number of joint valuation realizations.
pub const MAX_REALIZATIONS: u64 = 1_000_000;

/// `v(S) = max_ℓ Σ_{i∈S} w_ℓ(i)` over an agent's local items.
#[derive(Debug, Clone, PartialEq)]
pub struct XosValuation<S> {
    clauses: Vec<Vec<S>>,
}

impl<S: Scalar> XosValuation<S> {
    pub fn new(clauses: Vec<Vec<S>>, items: usize) -> Result<Self> {
        if clauses.is_empty() {
            return Err(Error::Invariant("an XOS valuation needs at least one clause".into()));
        }
        for (l, c) in clauses.iter().enumerate() {
            if c.len() != items {
                return Err(Error::Invariant(format!(
                    "clause {} has {} weights for {items} items",
                    l + 1,
                    c.len()
                )));
            }
            if let Some(w) = c.iter().find(|w| !(w.is_finite() && **w >= S::zero())) {
                return Err(Error::Invariant(format!("clause {} has weight {w}; weights must be finite and ≥ 0", l + 1)));
            }
        }
        Ok(Self { clauses })
    }

    /// A single additive clause.
    pub fn additive(weights: Vec<S>) -> Self {
        Self { clauses: vec![weights] }
    }

    pub fn clauses(&self) -> &[Vec<S>] {
        &self.clauses
    }

    fn clause_sum(&self, l: usize, local: u32) -> S {
        bits(local).map(|i| self.clauses[l][i]).sum()
    }

    /// Value of the local item set `local` (bit `i` = `i`-th item of the agent).
    pub fn value(&self, local: u32) -> S {
        (0..self.clauses.len()).map(|l| self.clause_sum(l, local)).fold(S::zero(), S::max)
    }

    /// Lowest-index clause attaining `v(S)`.
    pub fn supporting_clause(&self, local: u32) -> usize {
        let mut best = 0;
        let mut top = self.clause_sum(0, local);
        for l in 1..self.clauses.len() {
            let s = self.clause_sum(l, local);
            if s > top {
                top = s;
                best = l;
            }
        }
        best
    }

    /// `u(i, S)` for every local item: the supporting clause's weights.
    pub fn supporting_prices(&self, local: u32) -> &[S] {
        &self.clauses[self.supporting_clause(local)]
    }
}

pub(crate) fn bits(mut m: u32) -> impl Iterator<Item = usize> {
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

#[derive(Debug, Clone, PartialEq)]
pub struct XosInstance<S> {
    items: Vec<Vec<usize>>,
    owner: Vec<usize>,
    local: Vec<usize>,
    dists: Vec<Vec<(S, XosValuation<S>)>>,
    matroid: MatroidSpec,
    conflicts: ConflictSpec<S>,
    metadata: String,
}

impl<S: Scalar> XosInstance<S> {
    /// `items[t]` lists agent `t`'s items; clause weights follow that order.
    pub fn new(
        items: Vec<Vec<usize>>,
        dists: Vec<Vec<(S, XosValuation<S>)>>,
        matroid: MatroidSpec,
        conflicts: ConflictSpec<S>,
        metadata: impl Into<String>,
    ) -> Result<Self> {
        let t_count = items.len();
        if t_count == 0 {
            return Err(Error::Invariant("XOS instance needs at least one agent".into()));
        }
        if dists.len() != t_count {
            return Err(Error::Invariant(format!("{t_count} item lists but {} distributions", dists.len())));
        }
        let n: usize = items.iter().map(Vec::len).sum();
        guard("XOS item universe", MAX_ITEMS as u64, n as u64)?;
        let mut owner = vec![usize::MAX; n];
        let mut local = vec![0; n];
        for (t, list) in items.iter().enumerate() {
            for (pos, &i) in list.iter().enumerate() {
                if i >= n {
                    return Err(Error::Invariant(format!("item {} outside 1..{n}", i + 1)));
                }
                if owner[i] != usize::MAX {
                    return Err(Error::Invariant(format!("item {} belongs to two agents", i + 1)));
                }
                owner[i] = t;
                local[i] = pos;
            }
        }
        for (t, d) in dists.iter().enumerate() {
            if d.is_empty() {
                return Err(Error::Invariant(format!("agent {} has no valuation outcomes", t + 1)));
            }
            let sum: f64 = d.iter().map(|(p, _)| p.as_f64()).sum();
            if (sum - 1.0).abs() > S::FEAS_TOL || d.iter().any(|(p, _)| !(*p >= S::zero())) {
                return Err(Error::Invariant(format!("agent {}: row sum {sum} ≠ 1", t + 1)));
            }
            for (k, (_, v)) in d.iter().enumerate() {
                if v.clauses.iter().any(|c| c.len() != items[t].len()) {
                    return Err(Error::Invariant(format!(
                        "agent {} outcome {}: clauses must have {} weights",
                        t + 1,
                        k + 1,
                        items[t].len()
                    )));
                }
            }
        }
        let live: u64 = dists
            .iter()
            .map(|d| d.iter().filter(|(p, _)| *p > S::zero()).count() as u64)
            .try_fold(1u64, |a, c| a.checked_mul(c))
            .unwrap_or(u64::MAX);
        guard("XOS joint realizations", MAX_REALIZATIONS, live)?;
        let matroid = matroid.canonical(n)?;
        let arrivals = owner.clone();
        let conflicts = ConflictSpec::with_arrivals(
            conflicts.edges().to_vec(),
            conflicts.intervals().to_vec(),
            conflicts.resources(),
            n,
            |i| arrival_time::<S>(arrivals[i]),
        )?;
        Ok(Self { items, owner, local, dists, matroid, conflicts, metadata: metadata.into() })
    }

    pub fn agents(&self) -> usize {
        self.items.len()
    }

    pub fn item_count(&self) -> usize {
        self.owner.len()
    }

    pub fn items(&self, t: usize) -> &[usize] {
        &self.items[t]
    }

    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    pub fn local_index(&self, i: usize) -> usize {
        self.local[i]
    }

    pub fn outcomes(&self, t: usize) -> &[(S, XosValuation<S>)] {
        &self.dists[t]
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

    pub fn graph(&self) -> ConflictGraph {
        ConflictGraph::build_with_arrivals(&self.conflicts, self.item_count(), |i| arrival_time::<S>(self.owner[i]))
    }

    pub fn matroid_oracle(&self) -> Result<MatroidOracle> {
        MatroidOracle::new(&self.matroid, self.item_count())
    }

    /// `d2` with "earlier" meaning owned by an earlier agent.
    pub fn d2(&self) -> Result<usize> {
        self.graph().d2_by_order(&self.owner)
    }

    /// Global item set of agent `t`'s local mask.
    pub fn global_set(&self, t: usize, local: u32) -> AgentSet {
        bits(local).map(|p| self.items[t][p]).collect()
    }

    /// Agent `t`'s local mask within a global item mask.
    pub fn local_mask(&self, t: usize, global: u32) -> u32 {
        self.items[t].iter().enumerate().filter(|(_, &i)| global >> i & 1 == 1).fold(0, |m, (p, _)| m | 1 << p)
    }

    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(serialize_xos(self).as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn additive_prices_ignore_the_set() {
        let v = XosValuation::additive(vec![1.0, 2.0, 3.0]);
        for m in 0..8 {
            assert_eq!(v.supporting_prices(m), &[1.0, 2.0, 3.0]);
        }
        assert_eq!(v.value(0b101), 4.0);
        assert_eq!(v.value(0), 0.0);
    }

    #[test]
    fn two_clause_support() {
        let v = XosValuation::new(vec![vec![3.0, 0.0], vec![0.0, 2.0]], 2).unwrap();
        assert_eq!(v.supporting_clause(0b11), 0);
        assert_eq!(v.supporting_prices(0b11), &[3.0, 0.0]);
        assert_eq!(v.supporting_clause(0b10), 1);
        assert_eq!(v.value(0b11), 3.0);
    }

    #[test]
    fn invalid_valuations() {
        assert!(XosValuation::<f64>::new(vec![], 2).is_err());
        assert!(XosValuation::new(vec![vec![1.0]], 2).is_err());
        assert!(XosValuation::new(vec![vec![-1.0, 0.0]], 2).is_err());
    }

    #[test]
    fn item_partition_is_enforced() {
        let d = || vec![(1.0, XosValuation::additive(vec![1.0]))];
        let twice = XosInstance::new(vec![vec![0], vec![0]], vec![d(), d()], MatroidSpec::Free, ConflictSpec::default(), "");
        assert!(twice.is_err());
        let ok = XosInstance::new(vec![vec![1], vec![0]], vec![d(), d()], MatroidSpec::Free, ConflictSpec::default(), "")
            .unwrap();
        assert_eq!(ok.owner(0), 1);
        assert_eq!(ok.global_set(0, 1), AgentSet::from_mask(2));
        assert_eq!(ok.local_mask(1, 0b01), 1);
    }

    proptest! {
        #[test]
        fn supporting_prices_lower_bound_the_value(
            clauses in proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, 4), 1..4),
            s in 0u32..16,
            j in 0u32..16,
        ) {
            let v = XosValuation::new(clauses, 4).unwrap();
            let j = j & s;
            let u = v.supporting_prices(s);
            let lower: f64 = bits(j).map(|i| u[i]).sum();
            prop_assert!(lower <= v.value(j) + 1e-12);
        }
    }
}
