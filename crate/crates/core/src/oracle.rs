//! Exact references by enumeration, and the checks that tie every stage of the
//! pipeline to them.

use crate::agentset::AgentSet;
use crate::conflict::{d_bound_intervals, ConflictGraph, ALPHA_GUARD};
use crate::error::{guard, Result};
use crate::exante::{build_lp, solve_exante_with, ExAnteSolution};
use crate::instance::Instance;
use crate::matroid::MatroidOracle;
use crate::mixture::verify_mixture;
use crate::policy::{enumerate_realizations, run_policy, simulate, PricePlan, ResidualCache, EXACT_REALIZATION_LIMIT};
use crate::scalar::Scalar;
use crate::sim::Estimate;
use crate::xos::{run_xos_policy, singleton_from_scalar, xos_simulate, XosInstance, XosPlan};

/// Largest ground set enumerated by [`enumerate_feasible`].
pub const FEASIBLE_MAX_AGENTS: usize = 20;
/// Additive slack on every verified inequality.
pub const CHECK_SLACK: f64 = 1e-6;

/// Every set independent in both the matroid and the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleFamily {
    n: usize,
    sets: Vec<u32>,
    maximal: Vec<u32>,
}

impl FeasibleFamily {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    /// All feasible sets in increasing mask order, `∅` first.
    pub fn sets(&self) -> &[u32] {
        &self.sets
    }

    pub fn maximal(&self) -> &[u32] {
        &self.maximal
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn contains(&self, s: u32) -> bool {
        self.sets.binary_search(&s).is_ok()
    }
}

pub fn enumerate_feasible<S: Scalar>(inst: &Instance<S>) -> Result<FeasibleFamily> {
    let n = inst.agents();
    guard("feasible-family enumeration (agents)", FEASIBLE_MAX_AGENTS as u64, n as u64)?;
    let m = MatroidOracle::new(inst.matroid(), n)?;
    let g = ConflictGraph::build(inst.conflicts(), n);
    Ok(feasible_family(&m, &g))
}

pub fn feasible_family(m: &MatroidOracle, g: &ConflictGraph) -> FeasibleFamily {
    let n = m.ground_size();
    let mut sets = Vec::new();
    let mut maximal = Vec::new();
    // depth-first over sets grown in increasing element order
    let mut stack = vec![(0u32, AgentSet::new(), 0usize)];
    while let Some((mask, set, from)) = stack.pop() {
        sets.push(mask);
        let mut extendable = false;
        for e in 0..n {
            if mask >> e & 1 == 1 || !g.is_independent_with(&set, e) || !m.is_independent(&set.with(e)) {
                continue;
            }
            extendable = true;
            if e >= from {
                stack.push((mask | 1 << e, set.with(e), e + 1));
            }
        }
        if !extendable {
            maximal.push(mask);
        }
    }
    sets.sort_unstable();
    maximal.sort_unstable();
    FeasibleFamily { n, sets, maximal }
}

/// `E[max_{S∈F} Σ_{t∈S} V_t]` by enumeration of the joint realizations.
pub fn brute_force_opt<S: Scalar>(inst: &Instance<S>) -> Result<f64> {
    let fam = enumerate_feasible(inst)?;
    let support: Vec<f64> = inst.valuations().support().iter().map(|v| v.as_f64()).collect();
    let candidates = if inst.valuations().has_negative() { fam.sets() } else { fam.maximal() };
    let reals = enumerate_realizations(inst, EXACT_REALIZATION_LIMIT)?;
    Ok(reals
        .iter()
        .map(|(p, ks)| {
            let best = candidates
                .iter()
                .map(|&s| crate::xos::bits(s).map(|t| support[ks[t]]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            p * best
        })
        .sum())
}

/// The prophet as an LP point: `x_tk = P(t accepted ∧ V_t = v^k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProphetWitness {
    pub x: Vec<Vec<f64>>,
    pub value: f64,
    /// Whether every realization had a unique best feasible set.
    pub unique: bool,
    /// Largest excess over any LP row or box bound (≤ 0 when feasible).
    pub max_violation: f64,
}

pub fn prophet_witness<S: Scalar>(inst: &Instance<S>) -> Result<ProphetWitness> {
    let n = inst.agents();
    let fam = enumerate_feasible(inst)?;
    let vals = inst.valuations();
    let support: Vec<f64> = vals.support().iter().map(|v| v.as_f64()).collect();
    let mut x = vec![vec![0.0; vals.k()]; n];
    let mut value = 0.0;
    let mut unique = true;
    for (p, ks) in enumerate_realizations(inst, EXACT_REALIZATION_LIMIT)? {
        let mut best = (0u32, f64::NEG_INFINITY);
        let mut ties = 0;
        for &s in fam.sets() {
            let v: f64 = crate::xos::bits(s).map(|t| support[ks[t]]).sum();
            if v > best.1 + 1e-12 {
                best = (s, v);
                ties = 0;
            } else if (v - best.1).abs() <= 1e-12 {
                ties += 1;
            }
        }
        if ties > 0 {
            unique = false;
        }
        value += p * best.1;
        for t in crate::xos::bits(best.0) {
            x[t][ks[t]] += p;
        }
    }
    let m = MatroidOracle::new(inst.matroid(), n)?;
    let g = ConflictGraph::build(inst.conflicts(), n);
    let marg: Vec<f64> = x.iter().map(|r| r.iter().sum()).collect();
    let mut max_violation = f64::NEG_INFINITY;
    for row in build_lp(inst, &m, &g).rows() {
        let lhs: f64 = row.agents.iter().map(|&t| marg[t]).sum();
        max_violation = max_violation.max(lhs - row.rhs);
    }
    for t in 0..n {
        let nb = g.earlier_neighbors(t);
        if !nb.is_empty() && nb.len() <= ALPHA_GUARD {
            let lhs: f64 = nb.iter().map(|&u| marg[u]).sum();
            max_violation = max_violation.max(lhs - g.alpha(nb)? as f64);
        }
        for (k, &q) in x[t].iter().enumerate() {
            max_violation = max_violation.max(q - vals.prob(t, k).as_f64());
        }
    }
    Ok(ProphetWitness { x, value, unique, max_violation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Distance to the pass threshold; negative exactly when the check fails.
    pub margin: f64,
    /// `Some(pass)`; `None` when skipped (outside a guard or not applicable).
    pub pass: Option<bool>,
    pub note: String,
}

impl Check {
    pub fn new(name: &'static str, lhs: f64, rhs: f64, margin: f64) -> Self {
        Self { name, lhs, rhs, margin, pass: Some(margin >= 0.0), note: String::new() }
    }

    /// `lhs ≥ rhs − CHECK_SLACK`.
    pub fn at_least(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, lhs - rhs + CHECK_SLACK)
    }

    /// `lhs ≤ rhs + tol`.
    pub fn at_most(name: &'static str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, rhs, rhs + tol - lhs)
    }

    /// `|lhs − rhs| ≤ tol`.
    pub fn within(name: &'static str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(name, lhs, rhs, tol - (lhs - rhs).abs())
    }

    pub fn skipped(name: &'static str, note: impl Into<String>) -> Self {
        Self { name, lhs: f64::NAN, rhs: f64::NAN, margin: f64::NAN, pass: None, note: note.into() }
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

#[derive(Debug, Clone)]
pub struct Verification {
    pub lp: f64,
    pub opt: Option<f64>,
    pub restricted: f64,
    pub d1: usize,
    pub d2: usize,
    pub estimate: Estimate,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Everything the verifier needs that does not depend on sampling.
#[derive(Debug, Clone)]
pub struct ExactPart<S> {
    pub ex: ExAnteSolution<S>,
    pub plan: PricePlan<S>,
    pub d2: usize,
    pub opt: Option<f64>,
}

pub fn exact_part<S: Scalar>(inst: &Instance<S>) -> Result<ExactPart<S>> {
    let n = inst.agents();
    let m = MatroidOracle::new(inst.matroid(), n)?;
    let g = ConflictGraph::build(inst.conflicts(), n);
    let ex = solve_exante_with(inst, &m, &g)?;
    let d2 = g.d2()?;
    let plan = PricePlan::new(inst, &ex)?;
    let opt = if n <= FEASIBLE_MAX_AGENTS { brute_force_opt(inst).ok() } else { None };
    Ok(ExactPart { ex, plan, d2, opt })
}

/// Checks, with margins:
/// `lp-vs-opt` LP ≥ OPT; `restricted-vs-lp` R̂(∅) ≥ LP/(d2+1);
/// `policy-vs-restricted` mean+3σ ≥ R̂(∅)/(d1+1); `policy-vs-lp` mean+3σ ≥ LP/((d1+1)(d2+1));
/// `mixture`; `closed-form` atom-wise R̂(∅) equals `Σ x*[y*−π]^+`; `d2-vs-d` for interval-only conflicts.
pub fn verify_all<S: Scalar>(inst: &Instance<S>, samples: usize, seed: u64, threads: usize) -> Result<Verification> {
    let ExactPart { ex, plan, d2, opt } = exact_part(inst)?;
    let lp = ex.objective.as_f64();
    let d1 = plan.d1;
    let restricted = plan.restricted_prophet_value().as_f64();
    let est = simulate(&plan, inst.valuations(), samples, seed, threads)?;
    let mut checks = Vec::new();
    checks.push(match opt {
        Some(o) => Check::at_least("lp-vs-opt", lp, o),
        None => Check::skipped("lp-vs-opt", "outside the enumeration guard"),
    });
    checks.push(Check::at_least("restricted-vs-lp", restricted, lp / (d2 + 1) as f64));
    checks.push(Check::at_least("policy-vs-restricted", est.upper(), restricted / (d1 + 1) as f64));
    checks.push(Check::at_least("policy-vs-lp", est.upper(), lp / ((d1 + 1) * (d2 + 1)) as f64));
    let verdict = verify_mixture(&plan.matroid, &plan.mixture, &plan.x_star);
    let mut mixture = Check::at_most("mixture", verdict.max_error, S::FEAS_TOL, 0.0);
    mixture.pass = Some(verdict.ok() && mixture.margin >= 0.0);
    mixture.note = verdict.violations.join("; ");
    checks.push(mixture);
    let atomwise = plan.restricted_residual(&AgentSet::new()).as_f64();
    checks.push(Check::within("closed-form", atomwise, restricted, S::FEAS_TOL * restricted.abs().max(1.0)));
    checks.push(match d_bound_intervals(inst.conflicts(), inst.agents()) {
        Ok(d) if !inst.conflicts().intervals().is_empty() => Check::at_most("d2-vs-d", d2 as f64, d as f64, 0.0),
        _ => Check::skipped("d2-vs-d", "conflicts are not interval-only"),
    });
    Ok(Verification { lp, opt, restricted, d1, d2, estimate: est, checks })
}

#[derive(Debug, Clone)]
pub struct XosVerification {
    pub opt: f64,
    pub restricted: f64,
    pub d1: usize,
    pub d2: usize,
    pub estimate: Estimate,
    pub checks: Vec<Check>,
}

impl XosVerification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !c.failed())
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `policy-vs-opt` mean+3σ ≥ OPT/((d1+1)(d2+1)); `restricted-vs-opt` R̂(∅) ≥ OPT/(d2+1);
/// `closed-form` R̂(∅) by enumeration equals the closed form; `opt-identity` OPT from
/// the conditional frequencies; `graph-rank` allocation marginals respect `α` on every
/// earlier neighborhood.
pub fn verify_xos<S: Scalar>(x: &XosInstance<S>, samples: usize, seed: u64, threads: usize) -> Result<XosVerification> {
    let plan = XosPlan::new(x)?;
    let d1 = plan.d1;
    let d2 = x.d2()?;
    let opt = plan.stats.opt;
    let restricted = plan.restricted_prophet_value(x);
    let est = xos_simulate(x, &plan, samples, seed, threads)?;
    let mut checks = vec![
        Check::at_least("policy-vs-opt", est.upper(), opt / ((d1 + 1) * (d2 + 1)) as f64),
        Check::at_least("restricted-vs-opt", restricted, opt / (d2 + 1) as f64),
    ];
    let enumerated = plan.restricted_residual(&AgentSet::new());
    checks.push(Check::within("closed-form", enumerated, restricted, 1e-9 * restricted.abs().max(1.0)));
    let from_marginals = plan.stats.opt_from_marginals(x);
    checks.push(Check::within("opt-identity", from_marginals, opt, 1e-9 * opt.abs().max(1.0)));
    let marg = plan.stats.item_marginals(x);
    let owner: Vec<usize> = (0..x.item_count()).map(|i| x.owner(i)).collect();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..x.item_count() {
        let earlier: Vec<usize> = plan.graph.neighbors(i).iter().copied().filter(|&j| owner[j] < owner[i]).collect();
        if !earlier.is_empty() {
            let lhs: f64 = earlier.iter().map(|&j| marg[j]).sum();
            worst = worst.max(lhs - plan.graph.alpha(&earlier)? as f64);
        }
    }
    checks.push(if worst.is_finite() {
        // largest excess of an earlier neighborhood's allocation mass over its α
        Check::at_most("graph-rank", worst, 0.0, 1e-9)
    } else {
        Check::skipped("graph-rank", "no earlier neighborhoods")
    });
    Ok(XosVerification { opt, restricted, d1, d2, estimate: est, checks })
}

/// Outcome of running the scalar rule and the XOS rule side by side on the
/// singleton embedding of a scalar instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Consistency {
    pub realizations: usize,
    pub mismatches: usize,
    pub xos_opt: f64,
    pub brute_opt: f64,
}

impl Consistency {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && (self.xos_opt - self.brute_opt).abs() <= 1e-9
    }
}

/// Builds the scalar plan from the singleton prophet's marginals
/// `x_t = P(t allocated)`, `x_t y_t = E[V_t; t allocated]` and compares
/// accept decisions on every positive-probability realization.
pub fn singleton_consistency<S: Scalar>(inst: &Instance<S>) -> Result<Consistency> {
    let x = singleton_from_scalar(inst)?;
    let xplan = XosPlan::new(&x)?;
    let vals = inst.valuations();
    let n = inst.agents();
    let mut xs = vec![S::zero(); n];
    let mut ys = vec![S::zero(); n];
    for t in 0..n {
        let (mut mass, mut weighted) = (0.0, 0.0);
        for k in 0..vals.k() {
            let q = vals.prob(t, k).as_f64() * xplan.stats.x_star[t][k][1];
            mass += q;
            weighted += q * vals.support()[k].as_f64();
        }
        xs[t] = S::of(mass.min(1.0));
        ys[t] = if mass > 0.0 { S::of(weighted / mass) } else { S::zero() };
    }
    let splan = PricePlan::from_marginals(inst, xs, ys)?;
    let mut scache = ResidualCache::new();
    let mut xcache = ResidualCache::new();
    let mut mismatches = 0;
    let reals = enumerate_realizations(inst, EXACT_REALIZATION_LIMIT)?;
    for (_, ks) in &reals {
        let values: Vec<S> = ks.iter().map(|&k| vals.support()[k]).collect();
        let srun = run_policy(&splan, &values, &mut scache);
        let xrun = run_xos_policy(&xplan, ks, &mut xcache);
        if srun.accepted != xrun.allocated() {
            mismatches += 1;
        }
    }
    Ok(Consistency { realizations: reals.len(), mismatches, xos_opt: xplan.stats.opt, brute_opt: brute_force_opt(inst)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_example1, ConflictSpec, MatroidSpec, ValuationTable};

    fn two_agents(v1: Vec<f64>, edges: Vec<(usize, usize)>) -> Instance<f64> {
        // support [v1..., 2]; agent 1 uniform over v1, agent 2 always 2
        let k = v1.len();
        let mut support = v1.clone();
        support.push(2.0);
        let mut r1 = vec![1.0 / k as f64; k];
        r1.push(0.0);
        let mut r2 = vec![0.0; k];
        r2.push(1.0);
        let vt = ValuationTable::new(support, vec![r1, r2], false).unwrap();
        Instance::new(vt, MatroidSpec::Free, ConflictSpec::new(edges, vec![], 0, 2).unwrap(), "").unwrap()
    }

    #[test]
    fn brute_force_small_cases() {
        assert!((brute_force_opt(&two_agents(vec![0.0, 1.0], vec![])).unwrap() - 2.5).abs() < 1e-12);
        assert!((brute_force_opt(&two_agents(vec![0.0, 3.0], vec![(0, 1)])).unwrap() - 2.5).abs() < 1e-12);
        let ex1 = gen_example1::<f64>(4, 1.0, 0.5).unwrap();
        assert!((brute_force_opt(&ex1).unwrap() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn families() {
        let ex1 = gen_example1::<f64>(3, 1.0, 0.5).unwrap();
        let fam = enumerate_feasible(&ex1).unwrap();
        assert_eq!(fam.maximal(), &[0b001, 0b110]);
        let free = two_agents(vec![1.0], vec![]);
        assert_eq!(enumerate_feasible(&free).unwrap().len(), 4);
        let vt = ValuationTable::new(vec![1.0], vec![vec![1.0]; 4], false).unwrap();
        let edges: Vec<(usize, usize)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        let k4 = Instance::new(vt, MatroidSpec::Free, ConflictSpec::new(edges, vec![], 0, 4).unwrap(), "").unwrap();
        assert_eq!(enumerate_feasible(&k4).unwrap().sets(), &[0, 1, 2, 4, 8]);
    }

    #[test]
    fn witness_is_feasible_for_example1() {
        let ex1 = gen_example1::<f64>(5, 2.5, 0.1).unwrap();
        let w = prophet_witness(&ex1).unwrap();
        assert!(w.max_violation <= 1e-12, "{}", w.max_violation);
        assert!((w.value - brute_force_opt(&ex1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn example1_verifies() {
        let ex1 = gen_example1::<f64>(6, 2.5, 0.05).unwrap();
        let v = verify_all(&ex1, 4000, 3, 2).unwrap();
        assert!(v.passed(), "{:?}", v.checks);
        assert_eq!(v.d2, 1);
    }

    #[test]
    fn singleton_consistency_on_a_path() {
        let vt = ValuationTable::new(vec![1.3, 2.7, 4.1], vec![vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]], false)
            .unwrap();
        let inst = Instance::new(
            vt,
            MatroidSpec::Uniform { rank: 1 },
            ConflictSpec::new(vec![(0, 1), (1, 2)], vec![], 0, 3).unwrap(),
            "",
        )
        .unwrap();
        let c = singleton_consistency(&inst).unwrap();
        assert!(c.passed(), "{c:?}");
    }
}
