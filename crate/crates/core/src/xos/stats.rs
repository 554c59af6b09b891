//! The independent-product prophet: `PROPH(v)` per joint realization and the
//! conditional allocation frequencies `x_t^{k*}(S)`.

use super::{bits, XosInstance};
use crate::agentset::AgentSet;
use crate::error::Result;
use crate::scalar::Scalar;

/// Realizations per worker chunk before the argmax is split across threads.
const PARALLEL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ProphetRealization {
    pub prob: f64,
    /// Outcome index per agent.
    pub outcome: Vec<usize>,
    /// `PROPH(v)` as a global item mask.
    pub allocation: u32,
}

#[derive(Debug, Clone)]
pub struct ProphetStats {
    pub opt: f64,
    /// `x[t][k][S]` over local masks `S ⊆ N_t`. Zero-probability outcomes get
    /// all their mass on `∅`.
    pub x_star: Vec<Vec<Vec<f64>>>,
    pub realizations: Vec<ProphetRealization>,
    /// Number of item sets independent in both the matroid and the graph.
    pub feasible_sets: usize,
}

impl ProphetStats {
    /// `P(item i is allocated)`, the left side of the graph-rank inequality.
    pub fn item_marginals<S: Scalar>(&self, x: &XosInstance<S>) -> Vec<f64> {
        let mut m = vec![0.0; x.item_count()];
        for t in 0..x.agents() {
            for (k, (p, _)) in x.outcomes(t).iter().enumerate() {
                for (s, &q) in self.x_star[t][k].iter().enumerate() {
                    for pos in bits(s as u32) {
                        m[x.items(t)[pos]] += p.as_f64() * q;
                    }
                }
            }
        }
        m
    }

    /// `Σ_t Σ_k p_t^k Σ_S x_t^{k*}(S) v_t^k(S)`.
    pub fn opt_from_marginals<S: Scalar>(&self, x: &XosInstance<S>) -> f64 {
        let mut total = 0.0;
        for t in 0..x.agents() {
            for (k, (p, v)) in x.outcomes(t).iter().enumerate() {
                for (s, &q) in self.x_star[t][k].iter().enumerate() {
                    total += p.as_f64() * q * v.value(s as u32).as_f64();
                }
            }
        }
        total
    }
}

/// Every `u32` item mask independent in both the matroid and the graph, ascending.
pub fn feasible_item_sets<S: Scalar>(x: &XosInstance<S>) -> Result<Vec<u32>> {
    let m = x.matroid_oracle()?;
    let g = x.graph();
    let n = x.item_count();
    Ok((0..1u32 << n)
        .filter(|&s| {
            let set = AgentSet::from_mask(u64::from(s));
            g.is_independent(&set) && m.is_independent(&set)
        })
        .collect())
}

/// Enumerates every positive-probability joint realization and solves the
/// prophet's problem exactly. Ties go to the smallest item mask.
pub fn prophet_stats<S: Scalar>(x: &XosInstance<S>) -> Result<ProphetStats> {
    let feasible = feasible_item_sets(x)?;
    let agents = x.agents();
    // value[t][k][local mask]
    let value: Vec<Vec<Vec<f64>>> = (0..agents)
        .map(|t| {
            let width = 1u32 << x.items(t).len();
            x.outcomes(t).iter().map(|(_, v)| (0..width).map(|s| v.value(s).as_f64()).collect()).collect()
        })
        .collect();
    let locals: Vec<Vec<u32>> = feasible.iter().map(|&s| (0..agents).map(|t| x.local_mask(t, s)).collect()).collect();

    let mut realizations = vec![ProphetRealization { prob: 1.0, outcome: Vec::new(), allocation: 0 }];
    for t in 0..agents {
        let mut next = Vec::new();
        for r in &realizations {
            for (k, (p, _)) in x.outcomes(t).iter().enumerate() {
                if *p > S::zero() {
                    let mut outcome = r.outcome.clone();
                    outcome.push(k);
                    next.push(ProphetRealization { prob: r.prob * p.as_f64(), outcome, allocation: 0 });
                }
            }
        }
        realizations = next;
    }

    let argmax = |r: &ProphetRealization| -> (u32, f64) {
        let mut best = (0u32, f64::NEG_INFINITY);
        for (&s, loc) in feasible.iter().zip(&locals) {
            let v: f64 = (0..agents).map(|t| value[t][r.outcome[t]][loc[t] as usize]).sum();
            if v > best.1 {
                best = (s, v);
            }
        }
        best
    };
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let best: Vec<(u32, f64)> = if realizations.len() <= PARALLEL_CHUNK || threads == 1 {
        realizations.iter().map(argmax).collect()
    } else {
        let chunk = realizations.len().div_ceil(threads).max(PARALLEL_CHUNK);
        std::thread::scope(|scope| {
            let handles: Vec<_> = realizations
                .chunks(chunk)
                .map(|c| {
                    let argmax = &argmax;
                    scope.spawn(move || c.iter().map(argmax).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().flat_map(|h| h.join().expect("prophet worker panicked")).collect()
        })
    };

    let mut x_star: Vec<Vec<Vec<f64>>> =
        (0..agents).map(|t| vec![vec![0.0; 1 << x.items(t).len()]; x.outcomes(t).len()]).collect();
    let mut opt = 0.0;
    for (r, (s, v)) in realizations.iter_mut().zip(best) {
        r.allocation = s;
        opt += r.prob * v;
        for t in 0..agents {
            x_star[t][r.outcome[t]][x.local_mask(t, s) as usize] += r.prob;
        }
    }
    for t in 0..agents {
        for (k, (p, _)) in x.outcomes(t).iter().enumerate() {
            let row = &mut x_star[t][k];
            if *p > S::zero() {
                let p = p.as_f64();
                row.iter_mut().for_each(|q| *q /= p);
            } else {
                row[0] = 1.0;
            }
        }
    }
    Ok(ProphetStats { opt, x_star, realizations, feasible_sets: feasible.len() })
}
