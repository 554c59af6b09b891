//! Dense tableau simplex for `max c·x` subject to `A x ≤ b`, `x ≥ 0`, `b ≥ 0`.
//!
//! The slack basis is feasible because `b ≥ 0`, so no first phase is needed.
//! Pivoting uses Dantzig's rule and switches to Bland's rule for good once a
//! run of degenerate pivots is seen.

use crate::error::LpError;

pub const PIVOT_TOL: f64 = 1e-10;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<LpRow>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self { objective, rows: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn rows(&self) -> &[LpRow] {
        &self.rows
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(LpRow { coeffs, rhs });
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let n = self.vars();
        let m = self.rows.len();
        if self.rows.iter().any(|r| !(r.rhs >= 0.0) || !r.rhs.is_finite()) {
            return Err(LpError::Infeasible);
        }
        let width = n + m + 1;
        let mut tab = vec![0.0; m * width];
        for (i, r) in self.rows.iter().enumerate() {
            let row = &mut tab[i * width..(i + 1) * width];
            for &(j, a) in &r.coeffs {
                row[j] += a;
            }
            row[n + i] = 1.0;
            row[width - 1] = r.rhs;
        }
        // reduced costs for the maximization; the last entry tracks -objective
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&self.objective);
        let mut basis: Vec<usize> = (n..n + m).collect();
        let cap = 50 * (n + m) + 1000;
        let mut pivots = 0;
        let mut streak = 0;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..n + m).find(|&j| cost[j] > PIVOT_TOL)
            } else {
                let mut best = None;
                let mut top = PIVOT_TOL;
                for (j, &c) in cost[..n + m].iter().enumerate() {
                    if c > top {
                        top = c;
                        best = Some(j);
                    }
                }
                best
            };
            let Some(e) = entering else { break };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = tab[i * width + e];
                if a > PIVOT_TOL {
                    let ratio = tab[i * width + width - 1] / a;
                    let better = match leave {
                        None => true,
                        Some((l, r)) => ratio < r - PIVOT_TOL || (ratio <= r + PIVOT_TOL && basis[i] < basis[l]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((l, ratio)) = leave else { return Err(LpError::Unbounded) };
            pivots += 1;
            if pivots > cap {
                return Err(LpError::IterationCap(cap));
            }
            if ratio <= PIVOT_TOL {
                streak += 1;
                if streak >= DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            pivot(&mut tab, &mut cost, width, l, e);
            basis[l] = e;
        }
        let mut x = vec![0.0; n];
        for (i, &b) in basis.iter().enumerate() {
            if b < n {
                x[b] = tab[i * width + width - 1].max(0.0);
            }
        }
        let objective = x.iter().zip(&self.objective).map(|(a, c)| a * c).sum();
        Ok(LpSolution { x, objective, pivots })
    }
}

fn pivot(tab: &mut [f64], cost: &mut [f64], width: usize, l: usize, e: usize) {
    let m = tab.len() / width;
    let inv = 1.0 / tab[l * width + e];
    for v in &mut tab[l * width..(l + 1) * width] {
        *v *= inv;
    }
    tab[l * width + e] = 1.0;
    let (before, rest) = tab.split_at_mut(l * width);
    let (prow, after) = rest.split_at_mut(width);
    let eliminate = |row: &mut [f64]| {
        let f = row[e];
        if f != 0.0 {
            for (v, p) in row.iter_mut().zip(prow.iter()) {
                *v -= f * p;
            }
            row[e] = 0.0;
        }
    };
    for i in 0..m {
        if i < l {
            eliminate(&mut before[i * width..(i + 1) * width]);
        } else if i > l {
            let k = i - l - 1;
            eliminate(&mut after[k * width..(k + 1) * width]);
        }
    }
    eliminate(cost);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(vec![3.0, 5.0]);
        lp.add_row(vec![(0, 1.0)], 4.0);
        lp.add_row(vec![(1, 2.0)], 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], 18.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9 && (s.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn unbounded_and_negative_rhs() {
        let lp = LinearProgram::new(vec![1.0]);
        assert_eq!(lp.solve().unwrap_err(), LpError::Unbounded);
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![(0, 1.0)], -1.0);
        assert_eq!(lp.solve().unwrap_err(), LpError::Infeasible);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example, which cycles under the textbook rule without anti-cycling
        let mut lp = LinearProgram::new(vec![0.75, -150.0, 0.02, -6.0]);
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], 0.0);
        lp.add_row(vec![(2, 1.0)], 1.0);
        let s = lp.solve().unwrap();
        assert!((s.objective - 0.05).abs() < 1e-9, "{}", s.objective);
    }

    #[test]
    fn matches_vertex_enumeration_in_two_dimensions() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let c = vec![rng.random_range(-1.0..3.0), rng.random_range(-1.0..3.0)];
            let mut lp = LinearProgram::new(c.clone());
            let mut rows = vec![(1.0, 0.0, 5.0), (0.0, 1.0, 5.0)];
            for _ in 0..4 {
                rows.push((rng.random_range(0.0..2.0), rng.random_range(0.0..2.0), rng.random_range(0.0..6.0)));
            }
            for &(a, b, r) in &rows {
                lp.add_row(vec![(0, a), (1, b)], r);
            }
            let s = lp.solve().unwrap();
            // candidate vertices: intersections of all pairs of lines incl. axes
            let mut lines = rows.clone();
            lines.push((1.0, 0.0, 0.0));
            lines.push((0.0, 1.0, 0.0));
            let mut best = f64::NEG_INFINITY;
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    let (a1, b1, r1) = lines[i];
                    let (a2, b2, r2) = lines[j];
                    let det = a1 * b2 - a2 * b1;
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let x = (r1 * b2 - r2 * b1) / det;
                    let y = (a1 * r2 - a2 * r1) / det;
                    if x >= -1e-9 && y >= -1e-9 && rows.iter().all(|&(a, b, r)| a * x + b * y <= r + 1e-9) {
                        best = best.max(c[0] * x + c[1] * y);
                    }
                }
            }
            assert!((s.objective - best).abs() < 1e-7, "{} vs {best}", s.objective);
        }
    }
}
