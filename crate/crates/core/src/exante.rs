//! The ex-ante LP relaxation and the surrogate `(x*, y*)` it yields.

use std::collections::BTreeSet;

use crate::conflict::{ConflictGraph, ALPHA_GUARD};
use crate::error::Result;
use crate::instance::{arrival_time, Instance};
use crate::lp::LinearProgram;
use crate::matroid::MatroidOracle;
use crate::scalar::Scalar;

/// Cap on cliques emitted per agent for explicit edges.
const CLIQUES_PER_AGENT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Rank,
    /// Agents holding `resource` at the arrival of `agent`.
    Interval { agent: usize, resource: usize },
    Clique,
    /// Earlier neighbors of `agent`, bounded by their independence number.
    Neighborhood { agent: usize },
}

/// `Σ_{t ∈ agents} x*_t ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub kind: RowKind,
    pub agents: Vec<usize>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct LpModel {
    n: usize,
    support: Vec<f64>,
    caps: Vec<Vec<f64>>,
    rows: Vec<AggregateRow>,
}

impl LpModel {
    pub fn agents(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[AggregateRow] {
        &self.rows
    }

    pub fn add_row(&mut self, row: AggregateRow) {
        self.rows.push(row);
    }

    /// Solves and applies the quantile normalization.
    pub fn solve<S: Scalar>(&self) -> Result<ExAnteSolution<S>> {
        // variables only for support points of positive probability
        let mut vars: Vec<(usize, usize)> = Vec::new();
        let mut index = vec![Vec::new(); self.n];
        for t in 0..self.n {
            for (k, &p) in self.caps[t].iter().enumerate() {
                if p > 0.0 {
                    index[t].push((k, vars.len()));
                    vars.push((t, k));
                }
            }
        }
        let mut lp = LinearProgram::new(vars.iter().map(|&(_, k)| self.support[k]).collect());
        for (j, &(t, k)) in vars.iter().enumerate() {
            lp.add_row(vec![(j, 1.0)], self.caps[t][k]);
        }
        for r in &self.rows {
            let coeffs = r.agents.iter().flat_map(|&t| index[t].iter().map(|&(_, j)| (j, 1.0))).collect();
            lp.add_row(coeffs, r.rhs);
        }
        let sol = lp.solve()?;
        let mut x = vec![vec![0.0; self.support.len()]; self.n];
        for (j, &(t, k)) in vars.iter().enumerate() {
            x[t][k] = if sol.x[j] < 1e-12 { 0.0 } else { sol.x[j].min(self.caps[t][k]) };
        }
        let raw_objective = sol.objective;
        let order = value_order(&self.support);
        for t in 0..self.n {
            let mut mass: f64 = x[t].iter().sum();
            for &k in &order {
                let take = mass.min(self.caps[t][k]).max(0.0);
                x[t][k] = take;
                mass -= take;
            }
        }
        let x_star: Vec<f64> = x.iter().map(|r| r.iter().sum()).collect();
        let y_star: Vec<f64> = x
            .iter()
            .zip(&x_star)
            .map(|(r, &m)| if m > 0.0 { r.iter().zip(&self.support).map(|(a, v)| a * v).sum::<f64>() / m } else { 0.0 })
            .collect();
        let objective = x.iter().flat_map(|r| r.iter().zip(&self.support).map(|(a, v)| a * v)).sum();
        let slacks = self.rows.iter().map(|r| r.rhs - r.agents.iter().map(|&t| x_star[t]).sum::<f64>()).collect();
        Ok(ExAnteSolution {
            x: x.into_iter().map(|r| r.into_iter().map(S::of).collect()).collect(),
            x_star: x_star.into_iter().map(S::of).collect(),
            y_star: y_star.into_iter().map(S::of).collect(),
            objective: S::of(objective),
            raw_objective: S::of(raw_objective),
            rows: self.rows.clone(),
            slacks,
        })
    }
}

fn value_order(support: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..support.len()).collect();
    order.sort_by(|&a, &b| support[b].total_cmp(&support[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone)]
pub struct ExAnteSolution<S> {
    pub x: Vec<Vec<S>>,
    pub x_star: Vec<S>,
    pub y_star: Vec<S>,
    pub objective: S,
    /// Objective reported by the simplex before normalization.
    pub raw_objective: S,
    pub rows: Vec<AggregateRow>,
    /// `rhs − lhs` for every aggregate row; unit bounds are not listed.
    pub slacks: Vec<f64>,
}

impl<S: Scalar> ExAnteSolution<S> {
    pub fn max_violation(&self) -> f64 {
        self.slacks.iter().fold(0.0, |m, &s| m.max(-s))
    }
}

/// Rank rows, interval rows and (for explicit edges) clique rows.
pub fn build_lp<S: Scalar>(inst: &Instance<S>, matroid: &MatroidOracle, graph: &ConflictGraph) -> LpModel {
    let n = inst.agents();
    let vals = inst.valuations();
    let mut rows: Vec<AggregateRow> = matroid
        .rank_constraints()
        .into_iter()
        .map(|c| AggregateRow { kind: RowKind::Rank, agents: c.members, rhs: c.rank as f64 })
        .collect();
    let reqs = inst.conflicts().intervals();
    for r in reqs {
        let here = arrival_time::<S>(r.agent);
        let agents: Vec<usize> = reqs
            .iter()
            .filter(|o| o.resource == r.resource && o.agent <= r.agent && o.end >= here)
            .map(|o| o.agent)
            .collect();
        rows.push(AggregateRow { kind: RowKind::Interval { agent: r.agent, resource: r.resource }, agents, rhs: 1.0 });
    }
    if !inst.conflicts().edges().is_empty() {
        let mut seen = BTreeSet::new();
        for t in 0..n {
            for q in cliques_through(graph, t) {
                if q.len() >= 2 && seen.insert(q.clone()) {
                    rows.push(AggregateRow { kind: RowKind::Clique, agents: q, rhs: 1.0 });
                }
            }
        }
    }
    LpModel {
        n,
        support: vals.support().iter().map(|v| v.as_f64()).collect(),
        caps: (0..n).map(|t| vals.row(t).iter().map(|p| p.as_f64()).collect()).collect(),
        rows,
    }
}

/// Maximal cliques of `G[{t} ∪ N⁻(t)]` that contain `t`, sorted.
fn cliques_through(g: &ConflictGraph, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let cand: Vec<usize> = g.earlier_neighbors(t).to_vec();
    bron_kerbosch(g, vec![t], cand, Vec::new(), &mut out);
    out
}

fn bron_kerbosch(g: &ConflictGraph, r: Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if out.len() >= CLIQUES_PER_AGENT {
        return;
    }
    if p.is_empty() && x.is_empty() {
        let mut q = r;
        q.sort_unstable();
        out.push(q);
        return;
    }
    let mut p = p;
    let mut x = x;
    while let Some(&v) = p.first() {
        let nr: Vec<usize> = r.iter().copied().chain([v]).collect();
        let np = p.iter().copied().filter(|&u| g.has_edge(u, v)).collect();
        let nx = x.iter().copied().filter(|&u| g.has_edge(u, v)).collect();
        bron_kerbosch(g, nr, np, nx, out);
        p.remove(0);
        x.push(v);
    }
}

/// Builds, solves, and adds violated earlier-neighborhood rows
/// `Σ_{N⁻(t)} x*_t ≤ α(G[N⁻(t)])` until none remain (at most `T` rounds).
/// Neighborhoods beyond the exact-search guard are skipped.
pub fn solve_exante<S: Scalar>(inst: &Instance<S>) -> Result<ExAnteSolution<S>> {
    let matroid = MatroidOracle::new(inst.matroid(), inst.agents())?;
    let graph = ConflictGraph::build(inst.conflicts(), inst.agents());
    solve_exante_with(inst, &matroid, &graph)
}

pub fn solve_exante_with<S: Scalar>(
    inst: &Instance<S>,
    matroid: &MatroidOracle,
    graph: &ConflictGraph,
) -> Result<ExAnteSolution<S>> {
    let mut model = build_lp(inst, matroid, graph);
    let n = inst.agents();
    let mut alphas: Vec<Option<usize>> = vec![None; n];
    let mut added = vec![false; n];
    let mut sol = model.solve::<S>()?;
    for _ in 0..n {
        let mut violated = false;
        for t in 0..n {
            let nb = graph.earlier_neighbors(t);
            if added[t] || nb.len() < 2 || nb.len() > ALPHA_GUARD {
                continue;
            }
            let alpha = match alphas[t] {
                Some(a) => a,
                None => {
                    let a = graph.alpha(nb)?;
                    alphas[t] = Some(a);
                    a
                }
            };
            let lhs: f64 = nb.iter().map(|&u| sol.x_star[u].as_f64()).sum();
            if lhs > alpha as f64 + 1e-9 {
                model.add_row(AggregateRow { kind: RowKind::Neighborhood { agent: t }, agents: nb.to_vec(), rhs: alpha as f64 });
                added[t] = true;
                violated = true;
            }
        }
        if !violated {
            break;
        }
        sol = model.solve::<S>()?;
    }
    Ok(sol)
}
