//! The unrestricted residual `R(Y)` used by the plain threshold comparator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::run::RealizationSampler;
use crate::agentset::AgentSet;
use crate::conflict::ConflictGraph;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matroid::{MatroidOracle, Tracker};
use crate::scalar::Scalar;

/// Realizations enumerated by the exact residual.
pub const EXACT_REALIZATION_LIMIT: u64 = 1_000_000;
pub const MC_RESIDUAL_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineMode {
    Exact,
    /// Fresh draws per evaluation, from a fixed seed so that differences
    /// `R(Y) − R(Y∪{t})` use common random numbers.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Positive-probability realizations as `(probability, support index per agent)`.
pub fn enumerate_realizations<S: Scalar>(inst: &Instance<S>, limit: u64) -> Result<Vec<(f64, Vec<usize>)>> {
    let vals = inst.valuations();
    let live: Vec<Vec<usize>> = (0..inst.agents()).map(|t| vals.live_support(t).collect()).collect();
    let count = live.iter().try_fold(1u64, |acc, l| acc.checked_mul(l.len() as u64)).unwrap_or(u64::MAX);
    if count > limit {
        return Err(Error::Guard {
            what: "realization enumeration",
            limit,
            actual: count,
            hint: "; use the Monte Carlo residual",
        });
    }
    let mut out = vec![(1.0, Vec::with_capacity(inst.agents()))];
    for (t, l) in live.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * l.len());
        for (p, ks) in &out {
            for &k in l {
                let mut ks = ks.clone();
                ks.push(k);
                next.push((p * vals.prob(t, k).as_f64(), ks));
            }
        }
        out = next;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct BaselineEvaluator<S> {
    support: Vec<f64>,
    realizations: Vec<(f64, Vec<usize>)>,
    sampler: RealizationSampler<S>,
    mode: BaselineMode,
    pub matroid: MatroidOracle,
    pub graph: ConflictGraph,
}

impl<S: Scalar> BaselineEvaluator<S> {
    pub fn new(inst: &Instance<S>, mode: BaselineMode) -> Result<Self> {
        let realizations = match mode {
            BaselineMode::Exact => enumerate_realizations(inst, EXACT_REALIZATION_LIMIT)?,
            BaselineMode::MonteCarlo { samples, .. } => {
                if samples == 0 {
                    return Err(Error::Param("Monte Carlo residual needs at least one sample".into()));
                }
                Vec::new()
            }
        };
        Ok(Self {
            support: inst.valuations().support().iter().map(|v| v.as_f64()).collect(),
            realizations,
            sampler: RealizationSampler::new(inst.valuations()),
            mode,
            matroid: MatroidOracle::new(inst.matroid(), inst.agents())?,
            graph: ConflictGraph::build(inst.conflicts(), inst.agents()),
        })
    }

    pub fn mode(&self) -> BaselineMode {
        self.mode
    }

    /// `E[max_{S: S∪Y feasible} Σ_{t∈S} V_t]`; `−∞` if `Y` itself is infeasible.
    pub fn residual(&self, y: &AgentSet) -> f64 {
        if !self.graph.is_independent(y) || !self.matroid.is_independent(y) {
            return f64::NEG_INFINITY;
        }
        match self.mode {
            BaselineMode::Exact => self
                .realizations
                .iter()
                .map(|(p, ks)| {
                    let v: Vec<f64> = ks.iter().map(|&k| self.support[k]).collect();
                    p * self.best_extension(&v, y)
                })
                .sum(),
            BaselineMode::MonteCarlo { samples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut total = 0.0;
                for _ in 0..samples {
                    let v: Vec<f64> = self.sampler.sample(&mut rng).iter().map(|&k| self.support[k]).collect();
                    total += self.best_extension(&v, y);
                }
                total / samples as f64
            }
        }
    }

    /// Best value of a feasible set containing `Y`, where members of `Y`
    /// count only when their value is positive.
    pub fn best_extension(&self, values: &[f64], y: &AgentSet) -> f64 {
        let base: f64 = y.iter().map(|t| values[t].max(0.0)).sum();
        let tracker = self.matroid.tracker_with(y).expect("caller checked independence");
        let mut cands: Vec<usize> = (0..values.len())
            .filter(|&t| values[t] > 0.0 && !y.contains(t) && self.graph.is_independent_with(y, t) && tracker.fits(t))
            .collect();
        cands.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let mut suffix = vec![0.0; cands.len() + 1];
        for i in (0..cands.len()).rev() {
            suffix[i] = suffix[i + 1] + values[cands[i]];
        }
        let mut search = Search { values, cands: &cands, suffix: &suffix, graph: &self.graph, best: 0.0 };
        search.go(0, &mut AgentSet::new(), tracker, 0.0);
        base + search.best
    }
}

struct Search<'a> {
    values: &'a [f64],
    cands: &'a [usize],
    suffix: &'a [f64],
    graph: &'a ConflictGraph,
    best: f64,
}

impl Search<'_> {
    fn go(&mut self, i: usize, chosen: &mut AgentSet, tracker: Tracker<'_>, value: f64) {
        if value > self.best {
            self.best = value;
        }
        if i == self.cands.len() || value + self.suffix[i] <= self.best {
            return;
        }
        let t = self.cands[i];
        if self.graph.is_independent_with(chosen, t) && tracker.fits(t) {
            let mut with = tracker.clone();
            with.add(t);
            chosen.insert(t);
            self.go(i + 1, chosen, with, value + self.values[t]);
            chosen.remove(t);
        }
        self.go(i + 1, chosen, tracker, value);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_example1;

    #[test]
    fn example1_residuals() {
        let (t, c, eps) = (6, 2.5, 0.01);
        let inst = gen_example1::<f64>(t, c, eps).unwrap();
        let ev = BaselineEvaluator::new(&inst, BaselineMode::Exact).unwrap();
        let r0 = ev.residual(&AgentSet::new());
        assert!((r0 - (c + t as f64 - 1.0 + eps)).abs() < 1e-9, "{r0}");
        for a in 1..t {
            let r = ev.residual(&AgentSet::from_mask(1 << a));
            assert!((r - (t as f64 - 1.0)).abs() < 1e-9, "{r}");
        }
        assert_eq!(ev.residual(&AgentSet::from_mask(0b11)), f64::NEG_INFINITY);
    }

    #[test]
    fn monte_carlo_is_close_to_exact() {
        let inst = gen_example1::<f64>(4, 2.5, 0.2).unwrap();
        let exact = BaselineEvaluator::new(&inst, BaselineMode::Exact).unwrap().residual(&AgentSet::new());
        let mc = BaselineEvaluator::new(&inst, BaselineMode::MonteCarlo { samples: 20_000, seed: 3 })
            .unwrap()
            .residual(&AgentSet::new());
        // values are 3 or 16.5 with p = 0.2: std ≈ 5.4, 3σ/√n ≈ 0.11
        assert!((exact - mc).abs() < 0.2, "{exact} vs {mc}");
    }

    #[test]
    fn enumeration_guard() {
        let inst = crate::instance::gen_random::<f64>(14, 3, crate::instance::MatroidKind::Free, 0.2, 1).unwrap();
        let r = enumerate_realizations(&inst, 10);
        assert!(matches!(r, Err(Error::Guard { .. })));
    }
}
