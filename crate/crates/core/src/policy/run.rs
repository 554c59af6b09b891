//! Single runs of the online rule and of the baseline, and their simulation.

use std::collections::HashMap;

use rand::Rng;

use super::baseline::BaselineEvaluator;
use super::{PricePlan, ResidualCache};
use crate::agentset::AgentSet;
use crate::error::Result;
use crate::instance::ValuationTable;
use crate::scalar::Scalar;
use crate::sim::{estimate, Estimate};

/// Draws one support index per agent from its probability row.
#[derive(Debug, Clone)]
pub struct RealizationSampler<S> {
    cdf: Vec<Vec<(f64, usize)>>,
    support: Vec<S>,
}

impl<S: Scalar> RealizationSampler<S> {
    pub fn new(v: &ValuationTable<S>) -> Self {
        let cdf = (0..v.agents())
            .map(|t| {
                let mut acc = 0.0;
                v.live_support(t)
                    .map(|k| {
                        acc += v.prob(t, k).as_f64();
                        (acc, k)
                    })
                    .collect()
            })
            .collect();
        Self { cdf, support: v.support().to_vec() }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.cdf
            .iter()
            .map(|c| {
                let u = rng.random::<f64>() * c.last().map_or(1.0, |l| l.0);
                c.iter().find(|(p, _)| u < *p).or(c.last()).map_or(0, |e| e.1)
            })
            .collect()
    }

    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<S> {
        self.sample(rng).into_iter().map(|k| self.support[k]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision<S> {
    /// Only evaluated when the agent is graph-feasible.
    pub tau: Option<S>,
    pub pi: S,
    pub graph_feasible: bool,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<S> {
    pub values: Vec<S>,
    pub accepted: AgentSet,
    pub decisions: Vec<Decision<S>>,
    pub welfare: S,
}

/// Accepts `t` iff it is graph-feasible with `Y` and `V_t ≥ τ(t|Y) + π_t`.
pub fn run_policy<S: Scalar>(plan: &PricePlan<S>, values: &[S], cache: &mut ResidualCache<S>) -> RunTrace<S> {
    let mut y = AgentSet::new();
    let mut decisions = Vec::with_capacity(values.len());
    let mut welfare = S::zero();
    for (t, &v) in values.iter().enumerate() {
        let pi = plan.pi[t];
        let graph_feasible = plan.graph.is_independent_with(&y, t);
        let mut tau = None;
        let mut accepted = false;
        if graph_feasible {
            let th = plan.tau(t, &y, cache);
            tau = Some(th);
            accepted = th.is_finite() && v >= th + pi - S::tie_tol();
        }
        if accepted {
            y.insert(t);
            welfare += v;
        }
        decisions.push(Decision { tau, pi, graph_feasible, accepted });
    }
    RunTrace { values: values.to_vec(), accepted: y, decisions, welfare }
}

/// Accepts `t` iff `Y∪{t}` is feasible and `V_t ≥ γ(R(Y) − R(Y∪{t}))`.
/// The recorded `tau` is that threshold and `pi` is zero.
pub fn run_baseline<S: Scalar>(
    eval: &BaselineEvaluator<S>,
    gamma: f64,
    values: &[S],
    cache: &mut HashMap<AgentSet, f64>,
) -> RunTrace<S> {
    let mut y = AgentSet::new();
    let mut decisions = Vec::with_capacity(values.len());
    let mut welfare = S::zero();
    let mut residual = |s: &AgentSet| *cache.entry(s.clone()).or_insert_with(|| eval.residual(s));
    for (t, &v) in values.iter().enumerate() {
        let graph_feasible = eval.graph.is_independent_with(&y, t);
        let mut tau = None;
        let mut accepted = false;
        if graph_feasible {
            let with = y.with(t);
            let th = if eval.matroid.is_independent(&with) {
                gamma * (residual(&y) - residual(&with))
            } else {
                f64::INFINITY
            };
            tau = Some(S::of(th));
            accepted = th.is_finite() && v.as_f64() >= th - S::TIE_TOL;
        }
        if accepted {
            y.insert(t);
            welfare += v;
        }
        decisions.push(Decision { tau, pi: S::zero(), graph_feasible, accepted });
    }
    RunTrace { values: values.to_vec(), accepted: y, decisions, welfare }
}

/// Mean welfare of the online rule over i.i.d. realizations.
pub fn simulate<S: Scalar>(
    plan: &PricePlan<S>,
    valuations: &ValuationTable<S>,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<Estimate> {
    let sampler = RealizationSampler::new(valuations);
    estimate(samples, seed, threads, ResidualCache::new, |cache, rng| {
        let values = sampler.sample_values(rng);
        Ok(run_policy(plan, &values, cache).welfare.as_f64())
    })
}

/// Mean welfare of the baseline comparator.
pub fn simulate_baseline<S: Scalar>(
    eval: &BaselineEvaluator<S>,
    valuations: &ValuationTable<S>,
    gamma: f64,
    samples: usize,
    seed: u64,
    threads: usize,
) -> Result<Estimate> {
    let sampler = RealizationSampler::new(valuations);
    estimate(samples, seed, threads, HashMap::new, |cache, rng| {
        let values = sampler.sample_values(rng);
        Ok(run_baseline(eval, gamma, &values, cache).welfare.as_f64())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exante::solve_exante;
    use crate::instance::{gen_example1, ConflictSpec, Instance, MatroidSpec};
    use crate::policy::BaselineMode;

    fn example1(t: usize, c: f64, eps: f64) -> (Instance<f64>, PricePlan<f64>) {
        let inst = gen_example1::<f64>(t, c, eps).unwrap();
        let ex = solve_exante(&inst).unwrap();
        let plan = PricePlan::new(&inst, &ex).unwrap();
        (inst, plan)
    }

    #[test]
    fn example1_runs() {
        let (t, c, eps) = (5, 2.5, 0.01);
        let (inst, plan) = example1(t, c, eps);
        let high = *inst.valuations().support().last().unwrap();
        let mut cache = ResidualCache::new();
        let low_run = run_policy(&plan, &[0.0, 1.0, 1.0, 1.0, 1.0], &mut cache);
        assert!(!low_run.decisions[0].accepted);
        assert_eq!(low_run.accepted, AgentSet::from_mask(0b11110));
        assert_eq!(low_run.welfare, 4.0);
        let high_run = run_policy(&plan, &[high, 1.0, 1.0, 1.0, 1.0], &mut cache);
        assert_eq!(high_run.accepted, AgentSet::from_mask(1));
        assert!(high_run.decisions[1..].iter().all(|d| !d.graph_feasible && d.tau.is_none()));
        assert_eq!(high_run.welfare, high);
    }

    #[test]
    fn zero_values_are_all_accepted() {
        let vt = ValuationTable::new(vec![0.0], vec![vec![1.0]; 3], false).unwrap();
        let inst = Instance::new(vt, MatroidSpec::Free, ConflictSpec::default(), "").unwrap();
        let ex = solve_exante(&inst).unwrap();
        let plan = PricePlan::new(&inst, &ex).unwrap();
        let run = run_policy(&plan, &[0.0; 3], &mut ResidualCache::new());
        assert_eq!(run.accepted.len(), 3);
        let est = simulate(&plan, inst.valuations(), 100, 1, 2).unwrap();
        assert_eq!((est.mean, est.std), (0.0, 0.0));
    }

    #[test]
    fn example1_baseline_threshold() {
        let (t, c, eps) = (6, 2.5, 0.01);
        let (inst, _) = example1(t, c, eps);
        let ev = BaselineEvaluator::new(&inst, BaselineMode::Exact).unwrap();
        let run = run_baseline(&ev, 0.5, &[0.0, 1.0, 1.0, 1.0, 1.0, 1.0], &mut HashMap::new());
        let th = run.decisions[1].tau.unwrap();
        assert!((th - 0.5 * (c + eps)).abs() < 1e-9, "{th}");
        assert!(run.accepted.is_empty());
    }

    #[test]
    fn sampler_frequencies() {
        let inst = gen_example1::<f64>(3, 2.5, 0.3).unwrap();
        let s = RealizationSampler::new(inst.valuations());
        let mut rng = crate::sim::batch_rng(9, 0);
        let n = 50_000;
        let hits = (0..n).filter(|_| s.sample(&mut rng)[0] == 2).count() as f64 / n as f64;
        assert!((hits - 0.3).abs() < 3.0 * (0.21f64 / n as f64).sqrt());
    }
}
