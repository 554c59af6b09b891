//! Item prices, the restricted residual over cached prophet allocations, and
//! the surplus-maximizing allocation rule.

use rand::Rng;

use super::stats::{prophet_stats, ProphetStats};
use super::{bits, XosInstance};
use crate::agentset::AgentSet;
use crate::conflict::ConflictGraph;
use crate::error::Result;
use crate::matroid::MatroidOracle;
use crate::policy::ResidualCache;
use crate::scalar::Scalar;
use crate::sim::{estimate, Estimate};

#[derive(Debug, Clone)]
pub struct XosPlan {
    /// `π(i)` per item; the owner is implied.
    pub pi: Vec<f64>,
    pub stats: ProphetStats,
    pub matroid: MatroidOracle,
    pub graph: ConflictGraph,
    pub d1: usize,
    /// `û[t][k][S][pos]` for local masks `S` and local positions `pos ∈ S`.
    u_hat: Vec<Vec<Vec<Vec<f64>>>>,
    /// `v[t][k][S]`.
    value: Vec<Vec<Vec<f64>>>,
    /// Per realization: items of `PROPH(v)` with positive `û`.
    candidates: Vec<Vec<(usize, f64)>>,
    /// Local masks of each agent by size, then lexicographically by item id.
    order: Vec<Vec<u32>>,
    items: Vec<Vec<usize>>,
    owner: Vec<usize>,
}

impl XosPlan {
    pub fn new<S: Scalar>(x: &XosInstance<S>) -> Result<Self> {
        Self::with_stats(x, prophet_stats(x)?)
    }

    pub fn with_stats<S: Scalar>(x: &XosInstance<S>, stats: ProphetStats) -> Result<Self> {
        let matroid = x.matroid_oracle()?;
        let graph = x.graph();
        let agents = x.agents();
        let n = x.item_count();
        let owner: Vec<usize> = (0..n).map(|i| x.owner(i)).collect();
        let items: Vec<Vec<usize>> = (0..agents).map(|t| x.items(t).to_vec()).collect();
        let value: Vec<Vec<Vec<f64>>> = (0..agents)
            .map(|t| {
                let width = 1u32 << items[t].len();
                x.outcomes(t).iter().map(|(_, v)| (0..width).map(|s| v.value(s).as_f64()).collect()).collect()
            })
            .collect();

        let mut pi = vec![0.0; n];
        let mut u_hat: Vec<Vec<Vec<Vec<f64>>>> = vec![Vec::new(); agents];
        // blocked[i] = Σ_k p Σ_{S∋i} x^{k*}(S) û(i, S)
        let mut blocked = vec![0.0; n];
        for t in (0..agents).rev() {
            for &i in &items[t] {
                pi[i] = graph.neighbors(i).iter().filter(|&&j| owner[j] > t).map(|&j| blocked[j]).sum();
            }
            let width = 1u32 << items[t].len();
            u_hat[t] = x
                .outcomes(t)
                .iter()
                .map(|(_, v)| {
                    (0..width)
                        .map(|s| {
                            let u = v.supporting_prices(s);
                            (0..items[t].len())
                                .map(|pos| {
                                    if s >> pos & 1 == 1 {
                                        (u[pos].as_f64() - pi[items[t][pos]]).max(0.0)
                                    } else {
                                        0.0
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            for (k, (p, _)) in x.outcomes(t).iter().enumerate() {
                for (s, &q) in stats.x_star[t][k].iter().enumerate() {
                    for pos in bits(s as u32) {
                        blocked[items[t][pos]] += p.as_f64() * q * u_hat[t][k][s][pos];
                    }
                }
            }
        }

        let candidates = stats
            .realizations
            .iter()
            .map(|r| {
                let mut c = Vec::new();
                for t in 0..agents {
                    let s = x.local_mask(t, r.allocation) as usize;
                    for pos in bits(s as u32) {
                        let w = u_hat[t][r.outcome[t]][s][pos];
                        if w > 0.0 {
                            c.push((items[t][pos], w));
                        }
                    }
                }
                c
            })
            .collect();

        let order = items
            .iter()
            .map(|list| {
                let mut masks: Vec<(usize, Vec<usize>, u32)> = (0..1u32 << list.len())
                    .map(|s| {
                        let mut ids: Vec<usize> = bits(s).map(|p| list[p]).collect();
                        ids.sort_unstable();
                        (ids.len(), ids, s)
                    })
                    .collect();
                masks.sort();
                masks.into_iter().map(|(_, _, s)| s).collect()
            })
            .collect();

        let d1 = matroid.d1();
        Ok(Self { pi, stats, matroid, graph, d1, u_hat, value, candidates, order, items, owner })
    }

    pub fn agents(&self) -> usize {
        self.items.len()
    }

    /// `û_t^k(i, S)` for the item at local position `pos` of agent `t`.
    pub fn u_hat(&self, t: usize, k: usize, local: u32, pos: usize) -> f64 {
        self.u_hat[t][k][local as usize][pos]
    }

    /// Closed form `Σ_t Σ_k p_t^k Σ_S x_t^{k*}(S) Σ_{i∈S} û_t^k(i, S)`.
    pub fn restricted_prophet_value<S: Scalar>(&self, x: &XosInstance<S>) -> f64 {
        let mut total = 0.0;
        for t in 0..self.agents() {
            for (k, (p, _)) in x.outcomes(t).iter().enumerate() {
                for (s, &q) in self.stats.x_star[t][k].iter().enumerate() {
                    let sum: f64 = self.u_hat[t][k][s].iter().sum();
                    total += p.as_f64() * q * sum;
                }
            }
        }
        total
    }

    /// `R̂(Y)` by enumeration of the cached prophet allocations; `−∞` if `Y` is dependent.
    pub fn restricted_residual(&self, y: &AgentSet) -> f64 {
        if !self.matroid.is_independent(y) {
            return f64::NEG_INFINITY;
        }
        self.stats
            .realizations
            .iter()
            .zip(&self.candidates)
            .map(|(r, c)| r.prob * self.matroid.greedy_max_weight(c, y).expect("base checked independent").1)
            .sum()
    }

    /// `τ(S|Y)`: zero on a free matroid, `+∞` when `Y ∪ S` is dependent.
    pub fn tau(&self, s: &AgentSet, y: &AgentSet, cache: &mut ResidualCache<f64>) -> f64 {
        if self.d1 == 0 {
            return 0.0;
        }
        let with = y.union(s);
        if !self.matroid.is_independent(&with) {
            return f64::INFINITY;
        }
        let before = cache.get_or(y, || self.restricted_residual(y));
        let after = cache.get_or(&with, || self.restricted_residual(&with));
        (before - after) / (self.d1 + 1) as f64
    }

    fn global(&self, t: usize, local: u32) -> AgentSet {
        bits(local).map(|p| self.items[t][p]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct XosRunTrace {
    pub outcome: Vec<usize>,
    /// Items allocated to each agent.
    pub allocation: Vec<AgentSet>,
    /// Surplus of the chosen set per agent (zero for `∅`).
    pub surplus: Vec<f64>,
    pub welfare: f64,
}

impl XosRunTrace {
    pub fn allocated(&self) -> AgentSet {
        self.allocation.iter().fold(AgentSet::new(), |a, s| a.union(s))
    }
}

/// Allocates to each agent the graph-feasible subset with the largest
/// `v(S) − Σ π(i) − τ(S|Y)`. `∅` starts with surplus 0; a later candidate must
/// beat the incumbent by more than the tie tolerance.
pub fn run_xos_policy(plan: &XosPlan, outcome: &[usize], cache: &mut ResidualCache<f64>) -> XosRunTrace {
    let mut y = AgentSet::new();
    let mut allocation = Vec::with_capacity(plan.agents());
    let mut surplus = Vec::with_capacity(plan.agents());
    let mut welfare = 0.0;
    for (t, &k) in outcome.iter().enumerate() {
        let mut best = (0u32, 0.0);
        for &s in &plan.order[t][1..] {
            let set = plan.global(t, s);
            if !plan.graph.is_independent(&y.union(&set)) {
                continue;
            }
            let tau = plan.tau(&set, &y, cache);
            if !tau.is_finite() {
                continue;
            }
            let price: f64 = set.iter().map(|i| plan.pi[i]).sum();
            let gain = plan.value[t][k][s as usize] - price - tau;
            if gain > best.1 + f64::TIE_TOL {
                best = (s, gain);
            }
        }
        let set = plan.global(t, best.0);
        welfare += plan.value[t][k][best.0 as usize];
        y = y.union(&set);
        allocation.push(set);
        surplus.push(best.1);
    }
    debug_assert!(y.iter().all(|i| plan.owner[i] < outcome.len()));
    XosRunTrace { outcome: outcome.to_vec(), allocation, surplus, welfare }
}

/// Mean welfare of the XOS rule over independent valuation draws.
pub fn xos_simulate<S: Scalar>(
    x: &XosInstance<S>,
    plan: &XosPlan,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<Estimate> {
    let cdf: Vec<Vec<(f64, usize)>> = (0..x.agents())
        .map(|t| {
            let mut acc = 0.0;
            x.outcomes(t)
                .iter()
                .enumerate()
                .filter(|(_, (p, _))| *p > S::zero())
                .map(|(k, (p, _))| {
                    acc += p.as_f64();
                    (acc, k)
                })
                .collect()
        })
        .collect();
    estimate(samples, seed, threads, ResidualCache::new, |cache, rng| {
        let outcome: Vec<usize> = cdf
            .iter()
            .map(|c| {
                let u = rng.random::<f64>() * c.last().map_or(1.0, |l| l.0);
                c.iter().find(|(p, _)| u < *p).or(c.last()).map_or(0, |e| e.1)
            })
            .collect();
        Ok(run_xos_policy(plan, &outcome, cache).welfare)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{ConflictSpec, MatroidSpec};
    use crate::xos::XosValuation;

    fn instance(
        items: Vec<Vec<usize>>,
        dists: Vec<Vec<(f64, XosValuation<f64>)>>,
        matroid: MatroidSpec,
        edges: Vec<(usize, usize)>,
    ) -> XosInstance<f64> {
        let n = items.iter().map(Vec::len).sum();
        let c = ConflictSpec::new(edges, vec![], 0, n).unwrap();
        XosInstance::new(items, dists, matroid, c, "").unwrap()
    }

    fn det(w: Vec<f64>) -> Vec<(f64, XosValuation<f64>)> {
        vec![(1.0, XosValuation::additive(w))]
    }

    #[test]
    fn single_term_price() {
        let x = instance(vec![vec![0], vec![1]], vec![det(vec![1.0]), det(vec![4.0])], MatroidSpec::Free, vec![(0, 1)]);
        let plan = XosPlan::new(&x).unwrap();
        // the prophet takes item 2 (value 4) and skips item 1
        assert_eq!(plan.pi, vec![4.0, 0.0]);
        let run = run_xos_policy(&plan, &[0, 0], &mut ResidualCache::new());
        assert!(run.allocation[0].is_empty());
        assert_eq!(run.allocation[1], AgentSet::from_mask(2));
        assert_eq!(run.welfare, 4.0);
    }

    #[test]
    fn no_constraints_take_everything() {
        let v = XosValuation::new(vec![vec![1.0, 2.0, 0.5], vec![3.0, 0.0, 0.0]], 3).unwrap();
        let x = instance(vec![vec![0, 1, 2]], vec![vec![(1.0, v)]], MatroidSpec::Free, vec![]);
        let plan = XosPlan::new(&x).unwrap();
        assert_eq!(plan.pi, vec![0.0; 3]);
        let run = run_xos_policy(&plan, &[0], &mut ResidualCache::new());
        assert_eq!(run.allocation[0].len(), 3);
        assert_eq!(run.welfare, 3.5);
    }

    #[test]
    fn price_above_every_weight_blocks_the_item() {
        let x = instance(
            vec![vec![0], vec![1]],
            vec![det(vec![2.0]), det(vec![5.0])],
            MatroidSpec::Free,
            vec![(0, 1)],
        );
        let plan = XosPlan::new(&x).unwrap();
        assert!(plan.pi[0] > 2.0);
        let run = run_xos_policy(&plan, &[0, 0], &mut ResidualCache::new());
        assert!(run.allocation[0].is_empty());
    }

    #[test]
    fn residual_at_empty_matches_closed_form() {
        let a = |w: f64, z: f64| XosValuation::new(vec![vec![w, z], vec![z, w]], 2).unwrap();
        let x = instance(
            vec![vec![0, 1], vec![2, 3]],
            vec![vec![(0.4, a(3.0, 1.0)), (0.6, a(1.0, 0.5))], vec![(0.5, a(2.0, 2.0)), (0.5, a(4.0, 0.0))]],
            MatroidSpec::Uniform { rank: 2 },
            vec![(0, 2), (1, 3)],
        );
        let plan = XosPlan::new(&x).unwrap();
        let closed = plan.restricted_prophet_value(&x);
        let enumerated = plan.restricted_residual(&AgentSet::new());
        assert!((closed - enumerated).abs() < 1e-12, "{closed} vs {enumerated}");
        assert!(closed > 0.0);
        let mut cache = ResidualCache::new();
        let t = plan.tau(&AgentSet::from_mask(0b111), &AgentSet::new(), &mut cache);
        assert_eq!(t, f64::INFINITY);
    }

    #[test]
    fn deterministic_simulation_has_no_variance() {
        let x = instance(
            vec![vec![0], vec![1]],
            vec![det(vec![1.0]), det(vec![4.0])],
            MatroidSpec::Uniform { rank: 1 },
            vec![],
        );
        let plan = XosPlan::new(&x).unwrap();
        let est = xos_simulate(&x, &plan, 2000, 5, 2).unwrap();
        assert_eq!(est.std, 0.0);
        assert!(est.mean > 0.0);
    }
}
