//! Independence and rank oracles for the supported matroid kinds.

use crate::agentset::AgentSet;
use crate::error::{guard, Error, Result};
use crate::instance::{MatroidSpec, EXPLICIT_MAX_GROUND};
use crate::scalar::Scalar;

/// Ground sets up to this size have their exchange property checked on construction.
pub const EXCHANGE_CHECK_MAX: usize = 12;

#[derive(Debug, Clone)]
enum Lookup {
    Free,
    Uniform(usize),
    /// Capacity sets containing each element, plus the capacities.
    Capped { sets_of: Vec<Vec<usize>>, caps: Vec<usize> },
    /// Rank of every subset; a subset is independent iff its rank equals its size.
    Explicit { rank: Vec<u8> },
}

#[derive(Debug, Clone)]
pub struct MatroidOracle {
    spec: MatroidSpec,
    n: usize,
    lookup: Lookup,
}

/// A rank inequality `Σ_{t∈members} x_t ≤ rank`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankConstraint {
    pub members: Vec<usize>,
    pub rank: usize,
}

impl MatroidOracle {
    pub fn new(spec: &MatroidSpec, n: usize) -> Result<Self> {
        let spec = spec.clone().canonical(n)?;
        let lookup = match &spec {
            MatroidSpec::Free => Lookup::Free,
            MatroidSpec::Uniform { rank } => Lookup::Uniform(*rank),
            MatroidSpec::Partition { blocks: sets } | MatroidSpec::Laminar { sets } => {
                let mut sets_of = vec![Vec::new(); n];
                for (i, s) in sets.iter().enumerate() {
                    for &e in &s.members {
                        sets_of[e].push(i);
                    }
                }
                Lookup::Capped { sets_of, caps: sets.iter().map(|s| s.capacity).collect() }
            }
            MatroidSpec::Explicit { maximal } => {
                guard("explicit matroid ground set", EXPLICIT_MAX_GROUND as u64, n as u64)?;
                let rank = explicit_rank_table(maximal, n);
                if n <= EXCHANGE_CHECK_MAX {
                    check_submodular(&rank, n)?;
                } else {
                    log::warn!("explicit matroid on {n} elements: exchange property not verified");
                }
                Lookup::Explicit { rank }
            }
        };
        Ok(Self { spec, n, lookup })
    }

    pub fn spec(&self) -> &MatroidSpec {
        &self.spec
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn is_free(&self) -> bool {
        self.d1() == 0
    }

    pub fn is_independent(&self, s: &AgentSet) -> bool {
        let mut tr = self.tracker();
        s.iter().all(|e| tr.try_add(e))
    }

    pub fn rank(&self, s: &AgentSet) -> usize {
        if let Lookup::Explicit { rank } = &self.lookup {
            return rank[mask_of(s)] as usize;
        }
        let mut tr = self.tracker();
        s.iter().filter(|&e| tr.try_add(e)).count()
    }

    pub fn rank_of(&self, members: &[usize]) -> usize {
        self.rank(&members.iter().copied().collect())
    }

    /// `0` when every subset is independent, `1` otherwise.
    pub fn d1(&self) -> usize {
        let all: AgentSet = (0..self.n).collect();
        usize::from(!self.is_independent(&all))
    }

    /// Incremental independence state starting from the empty set.
    pub fn tracker(&self) -> Tracker<'_> {
        let counts = match &self.lookup {
            Lookup::Capped { caps, .. } => vec![0; caps.len()],
            _ => Vec::new(),
        };
        Tracker { oracle: self, counts, size: 0, mask: 0 }
    }

    /// Tracker preloaded with `base`; fails if `base` is dependent.
    pub fn tracker_with(&self, base: &AgentSet) -> Result<Tracker<'_>> {
        let mut tr = self.tracker();
        for e in base.iter() {
            if !tr.try_add(e) {
                return Err(Error::InfeasibleBase);
            }
        }
        Ok(tr)
    }

    /// Maximizes `Σ_{t∈S} w_t` over `S ⊆ A` with `S ∪ Y` independent. Members of
    /// `Y` are already paid for, so any candidate in `Y` is always taken.
    /// Non-positive weights are skipped.
    pub fn greedy_max_weight<S: Scalar>(&self, candidates: &[(usize, S)], base: &AgentSet) -> Result<(AgentSet, S)> {
        let mut tr = self.tracker_with(base)?;
        let mut order: Vec<(usize, S)> = candidates.iter().copied().filter(|(_, w)| *w > S::zero()).collect();
        order.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
        let mut chosen = AgentSet::new();
        let mut value = S::zero();
        for (e, w) in order {
            if chosen.contains(e) {
                continue;
            }
            if base.contains(e) || tr.try_add(e) {
                chosen.insert(e);
                value += w;
            }
        }
        Ok((chosen, value))
    }

    /// A constraint family which, with `0 ≤ x_t ≤ 1`, cuts out the matroid polytope.
    pub fn rank_constraints(&self) -> Vec<RankConstraint> {
        match &self.spec {
            MatroidSpec::Free => Vec::new(),
            MatroidSpec::Uniform { rank } => {
                vec![RankConstraint { members: (0..self.n).collect(), rank: (*rank).min(self.n) }]
            }
            MatroidSpec::Partition { blocks: sets } | MatroidSpec::Laminar { sets } => sets
                .iter()
                .map(|s| RankConstraint { members: s.members.clone(), rank: self.rank_of(&s.members) })
                .collect(),
            MatroidSpec::Explicit { .. } => {
                let Lookup::Explicit { rank } = &self.lookup else { unreachable!() };
                // closed sets whose constraint is not implied by the unit bounds
                let n = self.n;
                let mut out = Vec::new();
                for m in 1usize..1 << n {
                    let r = rank[m];
                    if r as u32 >= m.count_ones() {
                        continue;
                    }
                    let closed = (0..n).all(|e| m >> e & 1 == 1 || rank[m | 1 << e] > r);
                    if closed {
                        out.push(RankConstraint { members: (0..n).filter(|e| m >> e & 1 == 1).collect(), rank: r as usize });
                    }
                }
                out
            }
        }
    }
}

fn mask_of(s: &AgentSet) -> usize {
    s.iter().fold(0usize, |m, e| m | 1 << e)
}

fn explicit_rank_table(maximal: &[Vec<usize>], n: usize) -> Vec<u8> {
    let size = 1usize << n;
    let mut indep = vec![false; size];
    for set in maximal {
        indep[set.iter().fold(0usize, |m, &e| m | 1 << e)] = true;
    }
    for m in (0..size).rev() {
        if indep[m] {
            let mut rest = m;
            while rest != 0 {
                let low = rest & rest.wrapping_neg();
                indep[m ^ low] = true;
                rest ^= low;
            }
        }
    }
    let mut rank = vec![0u8; size];
    for m in 1..size {
        rank[m] = if indep[m] {
            m.count_ones() as u8
        } else {
            let mut best = 0;
            let mut rest = m;
            while rest != 0 {
                let low = rest & rest.wrapping_neg();
                best = best.max(rank[m ^ low]);
                rest ^= low;
            }
            best
        };
    }
    rank
}

/// Local submodularity `r(X+e) + r(X+f) ≥ r(X+e+f) + r(X)` is equivalent to the
/// exchange axiom for a unit-increasing rank function.
fn check_submodular(rank: &[u8], n: usize) -> Result<()> {
    for x in 0usize..1 << n {
        for e in 0..n {
            if x >> e & 1 == 1 {
                continue;
            }
            for f in e + 1..n {
                if x >> f & 1 == 1 {
                    continue;
                }
                let lhs = rank[x | 1 << e] as i32 + rank[x | 1 << f] as i32;
                let rhs = rank[x | 1 << e | 1 << f] as i32 + rank[x] as i32;
                if lhs < rhs {
                    let members: Vec<usize> = (0..n).filter(|i| x >> i & 1 == 1).map(|i| i + 1).collect();
                    return Err(Error::Invariant(format!(
                        "explicit family is not a matroid: exchange fails at {members:?} with elements {} and {}",
                        e + 1,
                        f + 1
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Independence state of a growing set.
#[derive(Debug, Clone)]
pub struct Tracker<'a> {
    oracle: &'a MatroidOracle,
    counts: Vec<usize>,
    size: usize,
    mask: usize,
}

impl Tracker<'_> {
    /// Would adding `e` keep the set independent? `e` must not already be present.
    pub fn fits(&self, e: usize) -> bool {
        match &self.oracle.lookup {
            Lookup::Free => true,
            Lookup::Uniform(r) => self.size < *r,
            Lookup::Capped { sets_of, caps } => sets_of[e].iter().all(|&i| self.counts[i] < caps[i]),
            Lookup::Explicit { rank } => {
                let m = self.mask | 1 << e;
                rank[m] as u32 == m.count_ones()
            }
        }
    }

    pub fn add(&mut self, e: usize) {
        self.size += 1;
        match &self.oracle.lookup {
            Lookup::Capped { sets_of, .. } => {
                for &i in &sets_of[e] {
                    self.counts[i] += 1;
                }
            }
            Lookup::Explicit { .. } => self.mask |= 1 << e,
            _ => {}
        }
    }

    pub fn try_add(&mut self, e: usize) -> bool {
        let ok = self.fits(e);
        if ok {
            self.add(e);
        }
        ok
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::CappedSet;
    use proptest::prelude::*;

    fn set(v: &[usize]) -> AgentSet {
        v.iter().copied().collect()
    }

    fn oracle(spec: MatroidSpec, n: usize) -> MatroidOracle {
        MatroidOracle::new(&spec, n).unwrap()
    }

    fn subsets(n: usize) -> impl Iterator<Item = AgentSet> {
        (0u64..1 << n).map(AgentSet::from_mask)
    }

    fn brute_rank(m: &MatroidOracle, s: &AgentSet) -> usize {
        let v = s.to_vec();
        (0u64..1 << v.len())
            .map(|bits| v.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &e)| e).collect::<AgentSet>())
            .filter(|x| m.is_independent(x))
            .map(|x| x.len())
            .max()
            .unwrap()
    }

    #[test]
    fn basic_independence() {
        let free = oracle(MatroidSpec::Free, 4);
        assert!(free.is_independent(&set(&[0, 1, 2, 3])));
        let u2 = oracle(MatroidSpec::Uniform { rank: 2 }, 4);
        assert!(!u2.is_independent(&set(&[0, 1, 2])));
        let part = oracle(MatroidSpec::Partition { blocks: vec![CappedSet::new(vec![0, 1], 1)] }, 3);
        assert!(!part.is_independent(&set(&[0, 1])));
        assert!(part.is_independent(&set(&[0, 2])));
        for m in [&free, &u2, &part] {
            assert!(m.is_independent(&AgentSet::new()));
        }
    }

    #[test]
    fn ranks() {
        assert_eq!(oracle(MatroidSpec::Free, 3).rank(&set(&[0, 1, 2])), 3);
        assert_eq!(oracle(MatroidSpec::Uniform { rank: 2 }, 5).rank(&set(&[0, 1, 2, 3, 4])), 2);
        let lam = oracle(
            MatroidSpec::Laminar { sets: vec![CappedSet::new(vec![0, 1, 2], 2), CappedSet::new(vec![0, 1], 1)] },
            3,
        );
        assert_eq!(lam.rank(&set(&[0, 1, 2])), 2);
        assert_eq!(brute_rank(&lam, &set(&[0, 1, 2])), 2);
    }

    #[test]
    fn greedy_examples() {
        let free = oracle(MatroidSpec::Free, 3);
        let (s, v) = free.greedy_max_weight(&[(0, 1.0), (2, 2.5)], &AgentSet::new()).unwrap();
        assert_eq!(s, set(&[0, 2]));
        assert_eq!(v, 3.5);
        let u1 = oracle(MatroidSpec::Uniform { rank: 1 }, 2);
        let (s, v) = u1.greedy_max_weight(&[(0, 3.0), (1, 5.0)], &AgentSet::new()).unwrap();
        assert_eq!((s, v), (set(&[1]), 5.0));
        let u2 = oracle(MatroidSpec::Uniform { rank: 2 }, 3);
        let (s, v) = u2.greedy_max_weight(&[(0, 3.0), (1, 5.0)], &set(&[2])).unwrap();
        assert_eq!((s, v), (set(&[1]), 5.0));
        assert_eq!(
            u1.greedy_max_weight(&[(0, 1.0)], &set(&[0, 1])).unwrap_err(),
            Error::InfeasibleBase
        );
    }

    #[test]
    fn greedy_ties_prefer_smaller_index() {
        let u1 = oracle(MatroidSpec::Uniform { rank: 1 }, 3);
        let (s, _) = u1.greedy_max_weight(&[(2, 4.0), (1, 4.0)], &AgentSet::new()).unwrap();
        assert_eq!(s, set(&[1]));
    }

    #[test]
    fn base_members_are_free() {
        let u1 = oracle(MatroidSpec::Uniform { rank: 1 }, 3);
        let (s, v) = u1.greedy_max_weight(&[(0, 2.0), (1, 7.0)], &set(&[0])).unwrap();
        assert_eq!((s, v), (set(&[0]), 2.0));
    }

    #[test]
    fn d1_by_kind() {
        assert_eq!(oracle(MatroidSpec::Free, 3).d1(), 0);
        assert_eq!(oracle(MatroidSpec::Uniform { rank: 2 }, 3).d1(), 1);
        assert_eq!(oracle(MatroidSpec::Uniform { rank: 3 }, 3).d1(), 0);
        assert_eq!(oracle(MatroidSpec::Explicit { maximal: vec![vec![0, 1, 2]] }, 3).d1(), 0);
        assert_eq!(oracle(MatroidSpec::Explicit { maximal: vec![vec![0, 1], vec![0, 2]] }, 3).d1(), 1);
    }

    #[test]
    fn rank_constraint_families() {
        assert!(oracle(MatroidSpec::Free, 3).rank_constraints().is_empty());
        let part = oracle(
            MatroidSpec::Partition { blocks: vec![CappedSet::new(vec![0, 1], 1), CappedSet::new(vec![2, 3], 2)] },
            4,
        );
        assert_eq!(
            part.rank_constraints(),
            vec![RankConstraint { members: vec![0, 1], rank: 1 }, RankConstraint { members: vec![2, 3], rank: 2 }]
        );
        assert_eq!(
            oracle(MatroidSpec::Uniform { rank: 2 }, 3).rank_constraints(),
            vec![RankConstraint { members: vec![0, 1, 2], rank: 2 }]
        );
    }

    #[test]
    fn non_matroid_family_is_rejected() {
        // {1,2} and {3} are maximal but {3} cannot be extended from {1,2}
        let bad = MatroidSpec::Explicit { maximal: vec![vec![0, 1], vec![2]] };
        assert!(MatroidOracle::new(&bad, 3).is_err());
    }

    fn random_binary_matroid(seed: u64, n: usize) -> MatroidOracle {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let spec = crate::instance::random_matroid(&mut rng, crate::instance::MatroidKind::Explicit, n).unwrap();
        oracle(spec, n)
    }

    #[test]
    fn explicit_greedy_rank_matches_enumeration() {
        for seed in 0..20 {
            let m = random_binary_matroid(seed, 8);
            for s in subsets(8).step_by(7) {
                let mut tr = m.tracker();
                let greedy = s.iter().filter(|&e| tr.try_add(e)).count();
                assert_eq!(greedy, brute_rank(&m, &s));
                assert_eq!(m.rank(&s), greedy);
            }
        }
    }

    #[test]
    fn polytope_separates_vertices() {
        for seed in 0..10 {
            let n = 6;
            let m = random_binary_matroid(seed + 100, n);
            let cons = m.rank_constraints();
            for s in subsets(n) {
                let inside = cons.iter().all(|c| c.members.iter().filter(|&&e| s.contains(e)).count() <= c.rank);
                assert_eq!(inside, m.is_independent(&s), "{s:?}");
            }
        }
    }

    #[test]
    fn greedy_matches_brute_force_with_base() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..15 {
            let n = 7;
            let m = random_binary_matroid(seed + 200, n);
            let bases: Vec<AgentSet> = subsets(n).filter(|y| m.is_independent(y) && y.len() <= 2).collect();
            for y in bases.iter().take(6) {
                let mut cands: Vec<(usize, f64)> = Vec::new();
                for e in 0..n {
                    if rng.random_bool(0.7) {
                        cands.push((e, rng.random_range(0.1..5.0)));
                    }
                }
                let (s, v) = m.greedy_max_weight(&cands, y).unwrap();
                assert!(m.is_independent(&s.union(y)));
                let best = subsets(n)
                    .filter(|x| x.iter().all(|e| cands.iter().any(|c| c.0 == e)) && m.is_independent(&x.union(y)))
                    .map(|x| cands.iter().filter(|c| x.contains(c.0)).map(|c| c.1).sum::<f64>())
                    .fold(0.0, f64::max);
                assert!((v - best).abs() < 1e-9, "{v} vs {best}");
            }
        }
    }

    proptest! {
        #[test]
        fn explicit_downward_closed(seed in 0u64..500, pick in 0u64..256) {
            let m = random_binary_matroid(seed, 8);
            let s = AgentSet::from_mask(pick);
            if m.is_independent(&s) {
                for e in s.iter() {
                    let mut sub = s.clone();
                    sub.remove(e);
                    prop_assert!(m.is_independent(&sub));
                }
            }
        }
    }
}
