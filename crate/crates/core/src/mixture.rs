//! Convex decomposition of a point of the matroid polytope into independent sets.

use rand::Rng;

use crate::agentset::AgentSet;
use crate::error::{guard, Error, Result};
use crate::lp::LinearProgram;
use crate::matroid::{MatroidOracle, RankConstraint};
use crate::scalar::Scalar;

pub const MIXTURE_TOL: f64 = 1e-9;
const ZERO: f64 = 1e-13;
/// Largest support enumerated by the LP fallback.
pub const FALLBACK_MAX_SUPPORT: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture<S> {
    atoms: Vec<(AgentSet, S)>,
    marginals: Vec<S>,
}

impl<S: Scalar> Mixture<S> {
    pub fn atoms(&self) -> &[(AgentSet, S)] {
        &self.atoms
    }

    pub fn marginals(&self) -> &[S] {
        &self.marginals
    }

    /// Builds a mixture from raw atoms; call [`verify_mixture`] before trusting it.
    pub fn from_atoms(atoms: Vec<(AgentSet, S)>, agents: usize) -> Self {
        let mut marginals = vec![S::zero(); agents];
        for (s, w) in &atoms {
            for t in s.iter() {
                if t < agents {
                    marginals[t] += *w;
                }
            }
        }
        Self { atoms, marginals }
    }

    /// Draws atom `i` with probability `λ_i`.
    pub fn sample_set<R: Rng + ?Sized>(&self, rng: &mut R) -> &AgentSet {
        let total: f64 = self.atoms.iter().map(|(_, w)| w.as_f64()).sum();
        let mut u = rng.random::<f64>() * total;
        for (s, w) in &self.atoms {
            u -= w.as_f64();
            if u < 0.0 {
                return s;
            }
        }
        &self.atoms.last().expect("mixture has atoms").0
    }

    /// Index-returning variant of [`Mixture::sample_set`].
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total: f64 = self.atoms.iter().map(|(_, w)| w.as_f64()).sum();
        let mut u = rng.random::<f64>() * total;
        for (i, (_, w)) in self.atoms.iter().enumerate() {
            u -= w.as_f64();
            if u < 0.0 {
                return i;
            }
        }
        self.atoms.len() - 1
    }
}

/// Every violated mixture invariant, rendered for humans; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MixtureVerdict {
    pub violations: Vec<String>,
    /// Largest deviation of a marginal or of the total weight.
    pub max_error: f64,
}

impl MixtureVerdict {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn verify_mixture<S: Scalar>(m: &MatroidOracle, mix: &Mixture<S>, x: &[S]) -> MixtureVerdict {
    let mut v = Vec::new();
    let n = x.len();
    for (i, (s, w)) in mix.atoms.iter().enumerate() {
        if !m.is_independent(s) {
            v.push(format!("atom {} is dependent", i + 1));
        }
        if s.iter().any(|t| t >= n) {
            v.push(format!("atom {} mentions an agent outside 1..{n}", i + 1));
        }
        if !(w.as_f64() > 0.0) {
            v.push(format!("atom {} has non-positive weight {w}", i + 1));
        }
    }
    let total: f64 = mix.atoms.iter().map(|(_, w)| w.as_f64()).sum();
    let mut max_error = (total - 1.0).abs();
    if (total - 1.0).abs() > S::FEAS_TOL {
        v.push(format!("weights sum to {total}"));
    }
    let mut marg = vec![0.0; n];
    for (s, w) in &mix.atoms {
        for t in s.iter().filter(|&t| t < n) {
            marg[t] += w.as_f64();
        }
    }
    for t in 0..n {
        max_error = max_error.max((marg[t] - x[t].as_f64()).abs());
        if (marg[t] - x[t].as_f64()).abs() > S::FEAS_TOL {
            v.push(format!("agent {} marginal {} differs from target {}", t + 1, marg[t], x[t]));
        }
    }
    if mix.atoms.len() > n + 1 {
        v.push(format!("{} atoms exceed the bound {}", mix.atoms.len(), n + 1));
    }
    MixtureVerdict { violations: v, max_error }
}

/// Peeling first, the LP over enumerated independent sets if peeling fails.
pub fn decompose<S: Scalar>(m: &MatroidOracle, x: &[S]) -> Result<Mixture<S>> {
    let target = checked_point(m, x)?;
    let peeled = peel(m, &target).map(|atoms| finish(atoms, x.len()));
    match peeled {
        Ok(mix) if verify_mixture(m, &mix, x).ok() => Ok(mix),
        other => {
            let support = target.iter().filter(|&&v| v > ZERO).count();
            if support <= FALLBACK_MAX_SUPPORT {
                decompose_lp(m, x)
            } else {
                match other {
                    Ok(mix) => Err(Error::Decomposition(verify_mixture(m, &mix, x).violations.join("; "))),
                    Err(e) => Err(e),
                }
            }
        }
    }
}

/// Only the peeling pass, with its step cap reported as an error.
pub fn decompose_peel<S: Scalar>(m: &MatroidOracle, x: &[S]) -> Result<Mixture<S>> {
    let target = checked_point(m, x)?;
    Ok(finish(peel(m, &target)?, x.len()))
}

/// Maximizes `Σ_S λ_S (|S| + 1)` subject to `Σ_{S∋t} λ_S ≤ x_t`, `Σ λ_S ≤ 1`
/// over the independent subsets of the support; the optimum reaches `Σx + 1`
/// exactly when an exact decomposition exists.
pub fn decompose_lp<S: Scalar>(m: &MatroidOracle, x: &[S]) -> Result<Mixture<S>> {
    let target = checked_point(m, x)?;
    let support: Vec<usize> = (0..target.len()).filter(|&t| target[t] > ZERO).collect();
    guard("mixture fallback support", FALLBACK_MAX_SUPPORT as u64, support.len() as u64)?;
    let sets: Vec<AgentSet> = (0u64..1 << support.len())
        .map(|bits| support.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &t)| t).collect())
        .filter(|s: &AgentSet| m.is_independent(s))
        .collect();
    let mut lp = LinearProgram::new(sets.iter().map(|s| s.len() as f64 + 1.0).collect());
    for &t in &support {
        let coeffs = sets.iter().enumerate().filter(|(_, s)| s.contains(t)).map(|(j, _)| (j, 1.0)).collect();
        lp.add_row(coeffs, target[t]);
    }
    lp.add_row((0..sets.len()).map(|j| (j, 1.0)).collect(), 1.0);
    let sol = lp.solve()?;
    let want: f64 = target.iter().sum::<f64>() + 1.0;
    if sol.objective < want - MIXTURE_TOL {
        return Err(Error::OutsidePolytope(format!("best convex combination covers {} of {want}", sol.objective)));
    }
    let atoms = sets.into_iter().zip(sol.x).filter(|(_, w)| *w > ZERO).collect();
    let mix = finish(atoms, x.len());
    let verdict = verify_mixture(m, &mix, x);
    if verdict.ok() {
        Ok(mix)
    } else {
        Err(Error::Decomposition(verdict.violations.join("; ")))
    }
}

fn checked_point<S: Scalar>(m: &MatroidOracle, x: &[S]) -> Result<Vec<f64>> {
    if x.len() != m.ground_size() {
        return Err(Error::Param(format!("point has {} coordinates for {} agents", x.len(), m.ground_size())));
    }
    let mut out = Vec::with_capacity(x.len());
    for (t, v) in x.iter().enumerate() {
        let v = v.as_f64();
        if !(-MIXTURE_TOL..=1.0 + MIXTURE_TOL).contains(&v) {
            return Err(Error::OutsidePolytope(format!("x_{} = {v} outside [0,1]", t + 1)));
        }
        out.push(v.clamp(0.0, 1.0));
    }
    for c in m.rank_constraints() {
        let lhs: f64 = c.members.iter().map(|&t| out[t]).sum();
        if lhs > c.rank as f64 + MIXTURE_TOL {
            return Err(Error::OutsidePolytope(format!(
                "constraint on {:?} has load {lhs} above rank {}",
                crate::instance::one_based(&c.members),
                c.rank
            )));
        }
    }
    Ok(out)
}

/// Repeatedly removes `λ·1_S` for an independent `S` on the minimal face
/// containing the scaled residual.
fn peel(m: &MatroidOracle, x: &[f64]) -> Result<Vec<(AgentSet, f64)>> {
    let n = x.len();
    let cons: Vec<RankConstraint> = m.rank_constraints();
    let mut r = x.to_vec();
    let mut mu = 1.0f64;
    let mut atoms = Vec::new();
    let cap = 4 * n + 4;
    for _ in 0..=cap {
        for v in r.iter_mut() {
            if *v < ZERO {
                *v = 0.0;
            }
        }
        if mu <= ZERO {
            return Ok(atoms);
        }
        if r.iter().all(|&v| v <= ZERO) {
            atoms.push((AgentSet::new(), mu));
            return Ok(atoms);
        }
        let tol = 1e-11;
        // tight sets, smallest first; singletons at the scale bound come first
        let mut tight: Vec<Vec<usize>> = (0..n).filter(|&t| r[t] >= mu - tol).map(|t| vec![t]).collect();
        let mut tight_cons: Vec<&RankConstraint> = cons
            .iter()
            .filter(|c| mu * c.rank as f64 - c.members.iter().map(|&t| r[t]).sum::<f64>() <= tol)
            .collect();
        tight_cons.sort_by_key(|c| c.members.len());
        tight.extend(tight_cons.iter().map(|c| c.members.clone()));
        let mut by_residual: Vec<usize> = (0..n).filter(|&t| r[t] > 0.0).collect();
        by_residual.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
        let mut tr = m.tracker();
        let mut s = AgentSet::new();
        let sets = tight.iter().map(Vec::as_slice).chain(std::iter::once(&[][..]));
        for (i, set) in sets.enumerate() {
            let last = i == tight.len();
            for &t in &by_residual {
                if (last || set.binary_search(&t).is_ok()) && !s.contains(t) && tr.try_add(t) {
                    s.insert(t);
                }
            }
        }
        let mut lambda = mu;
        for t in 0..n {
            if s.contains(t) {
                lambda = lambda.min(r[t]);
            } else if r[t] > 0.0 {
                lambda = lambda.min(mu - r[t]);
            }
        }
        for c in &cons {
            let inside = c.members.iter().filter(|&&t| s.contains(t)).count();
            if c.rank > inside {
                let slack = mu * c.rank as f64 - c.members.iter().map(|&t| r[t]).sum::<f64>();
                lambda = lambda.min(slack.max(0.0) / (c.rank - inside) as f64);
            }
        }
        if lambda <= ZERO {
            return Err(Error::Decomposition("peeling stalled on a face it cannot leave".into()));
        }
        for t in s.iter() {
            r[t] -= lambda;
        }
        mu -= lambda;
        atoms.push((s, lambda));
    }
    Err(Error::Decomposition(format!("peeling exceeded {cap} steps")))
}

/// Merges identical atoms and reduces to at most `T + 1` of them.
fn finish<S: Scalar>(atoms: Vec<(AgentSet, f64)>, n: usize) -> Mixture<S> {
    let mut merged: Vec<(AgentSet, f64)> = Vec::new();
    for (s, w) in atoms {
        match merged.iter_mut().find(|(o, _)| *o == s) {
            Some(slot) => slot.1 += w,
            None => merged.push((s, w)),
        }
    }
    let reduced = caratheodory(merged, n);
    Mixture::from_atoms(reduced.into_iter().map(|(s, w)| (s, S::of(w))).collect(), n)
}

/// Removes atoms while the vectors `(1_S, 1)` are linearly dependent.
fn caratheodory(mut atoms: Vec<(AgentSet, f64)>, n: usize) -> Vec<(AgentSet, f64)> {
    while let Some(c) = null_combination(&atoms, n) {
        let theta = atoms
            .iter()
            .zip(&c)
            .filter(|(_, &ci)| ci > 1e-12)
            .map(|((_, w), &ci)| w / ci)
            .fold(f64::INFINITY, f64::min);
        if !theta.is_finite() {
            break;
        }
        let mut drop = None;
        for (i, ((_, w), &ci)) in atoms.iter_mut().zip(&c).enumerate() {
            *w -= theta * ci;
            if ci > 1e-12 && drop.is_none() && *w <= 1e-15 {
                drop = Some(i);
            }
        }
        match drop {
            Some(i) => {
                atoms.remove(i);
            }
            None => break,
        }
        atoms.retain(|(_, w)| *w > ZERO);
    }
    atoms
}

fn null_combination(atoms: &[(AgentSet, f64)], n: usize) -> Option<Vec<f64>> {
    let k = atoms.len();
    let rows = n + 1;
    let mut a: Vec<Vec<f64>> = (0..rows)
        .map(|i| atoms.iter().map(|(s, _)| if i == n || s.contains(i) { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut pivot_cols = Vec::new();
    let mut row = 0;
    for col in 0..k {
        let Some(p) = (row..rows).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())) else { break };
        if a[p][col].abs() < 1e-9 {
            // free column: express it through earlier pivots
            let mut c = vec![0.0; k];
            c[col] = 1.0;
            for (r, &pc) in pivot_cols.iter().enumerate() {
                c[pc] = -a[r][col];
            }
            return Some(c);
        }
        a.swap(row, p);
        let inv = 1.0 / a[row][col];
        for v in a[row].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows {
            if i != row && a[i][col] != 0.0 {
                let f = a[i][col];
                for j in 0..k {
                    a[i][j] -= f * a[row][j];
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == rows && col + 1 < k {
            let free = col + 1;
            let mut c = vec![0.0; k];
            c[free] = 1.0;
            for (r, &pc) in pivot_cols.iter().enumerate() {
                c[pc] = -a[r][free];
            }
            return Some(c);
        }
    }
    None
}
