//! Prices `π`, the restricted residual `R̂`, thresholds `τ`, and the online rule.

mod baseline;
mod run;

pub use baseline::{enumerate_realizations, BaselineEvaluator, BaselineMode, EXACT_REALIZATION_LIMIT, MC_RESIDUAL_SAMPLES};
pub use run::{run_baseline, run_policy, simulate, simulate_baseline, Decision, RealizationSampler, RunTrace};

use std::collections::HashMap;

use crate::agentset::AgentSet;
use crate::conflict::ConflictGraph;
use crate::error::Result;
use crate::exante::ExAnteSolution;
use crate::instance::Instance;
use crate::matroid::MatroidOracle;
use crate::mixture::{decompose, Mixture};
use crate::scalar::Scalar;

/// `π_t = Σ_{t'>t, {t,t'}∈E} x*_{t'}·[y*_{t'} − π_{t'}]^+`, by backward induction.
pub fn compute_pi<S: Scalar>(x_star: &[S], y_star: &[S], g: &ConflictGraph) -> Vec<S> {
    let n = x_star.len();
    let mut pi = vec![S::zero(); n];
    for t in (0..n).rev() {
        let nb = g.neighbors(t);
        let later = &nb[nb.partition_point(|&u| u <= t)..];
        pi[t] = later.iter().map(|&u| x_star[u] * (y_star[u] - pi[u]).max(S::zero())).sum();
    }
    pi
}

/// `R̂(∅) = Σ_t x*_t·[y*_t − π_t]^+`.
pub fn restricted_prophet_value<S: Scalar>(x_star: &[S], y_star: &[S], pi: &[S]) -> S {
    x_star.iter().zip(y_star).zip(pi).map(|((&x, &y), &p)| x * (y - p).max(S::zero())).sum()
}

/// Everything the online rule needs, computed once per instance.
#[derive(Debug, Clone)]
pub struct PricePlan<S> {
    pub x_star: Vec<S>,
    pub y_star: Vec<S>,
    pub pi: Vec<S>,
    pub mixture: Mixture<S>,
    pub matroid: MatroidOracle,
    pub graph: ConflictGraph,
    pub d1: usize,
    /// Per atom: members with positive surplus `y*_t − π_t`, with that surplus.
    candidates: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> PricePlan<S> {
    pub fn new(inst: &Instance<S>, ex: &ExAnteSolution<S>) -> Result<Self> {
        Self::from_marginals(inst, ex.x_star.clone(), ex.y_star.clone())
    }

    /// Builds a plan from any marginals in the matroid polytope, not only LP optima.
    pub fn from_marginals(inst: &Instance<S>, x_star: Vec<S>, y_star: Vec<S>) -> Result<Self> {
        let matroid = MatroidOracle::new(inst.matroid(), inst.agents())?;
        let graph = ConflictGraph::build(inst.conflicts(), inst.agents());
        let mixture = decompose(&matroid, &x_star)?;
        Ok(Self::assemble(x_star, y_star, mixture, matroid, graph))
    }

    /// Uses a caller-supplied mixture, which must realize `x_star`.
    pub fn with_mixture(
        x_star: Vec<S>,
        y_star: Vec<S>,
        mixture: Mixture<S>,
        matroid: MatroidOracle,
        graph: ConflictGraph,
    ) -> Self {
        Self::assemble(x_star, y_star, mixture, matroid, graph)
    }

    fn assemble(x_star: Vec<S>, y_star: Vec<S>, mixture: Mixture<S>, matroid: MatroidOracle, graph: ConflictGraph) -> Self {
        let pi = compute_pi(&x_star, &y_star, &graph);
        let candidates = mixture
            .atoms()
            .iter()
            .map(|(s, _)| {
                let mut c: Vec<(usize, S)> =
                    s.iter().map(|t| (t, y_star[t] - pi[t])).filter(|(_, w)| *w > S::zero()).collect();
                c.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)));
                c
            })
            .collect();
        let d1 = matroid.d1();
        Self { x_star, y_star, pi, mixture, matroid, graph, d1, candidates }
    }

    pub fn agents(&self) -> usize {
        self.x_star.len()
    }

    pub fn restricted_prophet_value(&self) -> S {
        restricted_prophet_value(&self.x_star, &self.y_star, &self.pi)
    }

    /// `R̂(Y)`, averaged atom by atom; `−∞` for matroid-dependent `Y`.
    pub fn restricted_residual(&self, y: &AgentSet) -> S {
        if !self.matroid.is_independent(y) {
            return S::neg_infinity();
        }
        let mut total = S::zero();
        for ((_, w), cands) in self.mixture.atoms().iter().zip(&self.candidates) {
            let (_, v) = self.matroid.greedy_max_weight(cands, y).expect("base checked independent");
            total += *w * v;
        }
        total
    }

    /// `τ(t|Y) = (R̂(Y) − R̂(Y∪{t}))/(d1+1)`, `+∞` when `Y∪{t}` is dependent.
    pub fn tau(&self, t: usize, y: &AgentSet, cache: &mut ResidualCache<S>) -> S {
        if self.d1 == 0 {
            return S::zero();
        }
        let with = y.with(t);
        if !self.matroid.is_independent(&with) {
            return S::infinity();
        }
        let before = cache.get_or(y, || self.restricted_residual(y));
        let after = cache.get_or(&with, || self.restricted_residual(&with));
        (before - after) / S::from_usize_lossy(self.d1 + 1)
    }
}

/// Memo of residual values keyed by the accepted set; one per worker.
#[derive(Debug, Default)]
pub struct ResidualCache<S> {
    map: HashMap<AgentSet, S>,
}

impl<S: Scalar> ResidualCache<S> {
    pub fn new() -> Self {
        Self { map: HashMap::new() }
    }

    pub fn get_or(&mut self, y: &AgentSet, f: impl FnOnce() -> S) -> S {
        if let Some(&v) = self.map.get(y) {
            return v;
        }
        let v = f();
        self.map.insert(y.clone(), v);
        v
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
