//! Exact two-phase simplex for `min c.z  s.t.  L z >= b, z >= 0`, plus an
//! exhaustive grid-search oracle.
//!
//! All arithmetic is over arbitrary-precision rationals. Pivoting follows
//! Bland's rule (lowest-index entering column, lowest-index basic variable on
//! ratio ties), so every solve is deterministic and cannot cycle.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flowgraph::{build_flow_graph, enumerate_raw_cuts, link_costs, ConstraintSet, FlowGraph, Subgraph};
use crate::netmodel::NetworkSpec;
use crate::par::Exec;
use crate::ratio::{int, lcm_of_denominators, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve_min_cost`]. `value`, `z_star` and `dual` are only
/// meaningful when `status` is `Optimal`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: Rational,
    pub z_star: Subgraph,
    /// One multiplier per constraint row: `y >= 0`, `y'L <= c'`, `y'b = value`.
    pub dual: Vec<Rational>,
    pub pivots: usize,
}

struct Tableau {
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cols: usize,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, row: usize) -> &Rational {
        &self.t[row][self.cols]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col].clone();
        for v in self.t[row].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.t[row].clone();
        for (r, line) in self.t.iter_mut().enumerate() {
            if r == row || line[col].is_zero() {
                continue;
            }
            let factor = line[col].clone();
            for (v, pv) in line.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &factor * pv;
                }
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` for every column, and the current
    /// objective value.
    fn reduced_costs(&self, costs: &[Rational]) -> Vec<Rational> {
        (0..self.cols)
            .map(|j| {
                self.t.iter().zip(&self.basis).fold(costs[j].clone(), |acc, (line, &b)| {
                    if costs[b].is_zero() || line[j].is_zero() {
                        acc
                    } else {
                        acc - &costs[b] * &line[j]
                    }
                })
            })
            .collect()
    }

    /// Runs simplex iterations over columns `< allowed`. Returns false when
    /// the objective is unbounded below.
    fn optimize(&mut self, costs: &[Rational], allowed: usize) -> bool {
        loop {
            let reduced = self.reduced_costs(costs);
            let Some(enter) = (0..allowed).find(|&j| reduced[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.t.len() {
                let a = &self.t[r][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }
}

/// Minimizes `sum c_l z_l` over the cut polytope.
pub fn solve_min_cost(cs: &ConstraintSet, costs: &[Rational]) -> Result<LpSolution> {
    let nz = cs.edge_index.len();
    if costs.len() != nz {
        return Err(Error::DimensionMismatch { expected: nz, got: costs.len() });
    }
    if let Some(i) = costs.iter().position(|c| c.is_negative()) {
        return Err(Error::NegativeCost(cs.edge_index[i].to_string()));
    }
    for row in &cs.rows {
        if row.len() != nz {
            return Err(Error::DimensionMismatch { expected: nz, got: row.len() });
        }
    }
    let r = cs.len();

    // columns: z (nz) | surplus (r) | artificial (one per row with b >= 0)
    let needs_artificial: Vec<bool> = cs.rhs.iter().map(|b| !b.is_negative()).collect();
    let n_art = needs_artificial.iter().filter(|&&x| x).count();
    let cols = nz + r + n_art;
    let mut t = vec![vec![int(0); cols + 1]; r];
    let mut basis = vec![0; r];
    let mut next_art = nz + r;
    for i in 0..r {
        let sign = if needs_artificial[i] { int(1) } else { int(-1) };
        for (j, &c) in cs.rows[i].iter().enumerate() {
            t[i][j] = &sign * int(c as i64);
        }
        t[i][nz + i] = -&sign;
        t[i][cols] = &sign * &cs.rhs[i];
        if needs_artificial[i] {
            t[i][next_art] = int(1);
            basis[i] = next_art;
            next_art += 1;
        } else {
            basis[i] = nz + i;
        }
    }
    let mut tab = Tableau { t, basis, cols, pivots: 0 };

    let phase1_costs: Vec<Rational> = (0..cols).map(|j| int(i64::from(j >= nz + r))).collect();
    tab.optimize(&phase1_costs, cols);
    let infeasibility = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b >= nz + r)
        .fold(int(0), |acc, (row, _)| acc + tab.rhs(row));
    if infeasibility.is_positive() {
        return Ok(non_optimal(cs, LpStatus::Infeasible, tab.pivots));
    }
    // drive zero-level artificials out of the basis
    for row in 0..r {
        if tab.basis[row] >= nz + r {
            if let Some(col) = (0..nz + r).find(|&j| !tab.t[row][j].is_zero()) {
                tab.pivot(row, col);
            }
        }
    }

    let mut phase2_costs = costs.to_vec();
    phase2_costs.resize(cols, int(0));
    if !tab.optimize(&phase2_costs, nz + r) {
        return Ok(non_optimal(cs, LpStatus::Unbounded, tab.pivots));
    }

    let mut z = vec![int(0); nz];
    for (row, &b) in tab.basis.iter().enumerate() {
        if b < nz {
            z[b] = tab.rhs(row).clone();
        }
    }
    let reduced = tab.reduced_costs(&phase2_costs);
    let dual: Vec<Rational> = (0..r).map(|i| reduced[nz + i].clone()).collect();
    let z_star = Subgraph::new(cs.edge_index.clone(), z)?;
    let value = z_star.cost(costs);
    Ok(LpSolution { status: LpStatus::Optimal, value, z_star, dual, pivots: tab.pivots })
}

fn non_optimal(cs: &ConstraintSet, status: LpStatus, pivots: usize) -> LpSolution {
    LpSolution {
        status,
        value: int(0),
        z_star: Subgraph::zeros(&cs.edge_index),
        dual: Vec::new(),
        pivots,
    }
}

/// Checks the dual certificate of an optimal solution in exact arithmetic:
/// `y >= 0`, `y'L <= c'` and `y'b = value`.
pub fn verify_dual(cs: &ConstraintSet, costs: &[Rational], sol: &LpSolution) -> bool {
    if sol.status != LpStatus::Optimal || sol.dual.len() != cs.len() {
        return false;
    }
    if sol.dual.iter().any(|y| y.is_negative()) {
        return false;
    }
    let within_costs = (0..cs.edge_index.len()).all(|j| {
        let lhs = cs.rows.iter().zip(&sol.dual).fold(int(0), |acc, (row, y)| acc + y * int(row[j] as i64));
        lhs <= costs[j]
    });
    let dual_value = cs.rhs.iter().zip(&sol.dual).fold(int(0), |acc, (b, y)| acc + b * y);
    within_costs && dual_value == sol.value
}

/// Largest grid the exhaustive oracle will walk.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000_000;
pub const BRUTE_FORCE_MAX_LINKS: usize = 8;

/// Exhaustive minimum of `c.z` over `z` in `{0, 1/g, ..., cap}^|A|` with
/// `L z >= b`. Returns `None` if no grid point is feasible.
pub fn brute_force_optimum(cs: &ConstraintSet, costs: &[Rational], granularity: u32, cap: &Rational) -> Result<Option<Rational>> {
    brute_force_optimum_with(cs, costs, granularity, cap, Exec::default())
}

pub fn brute_force_optimum_with(
    cs: &ConstraintSet,
    costs: &[Rational],
    granularity: u32,
    cap: &Rational,
    exec: Exec,
) -> Result<Option<Rational>> {
    let nz = cs.edge_index.len();
    if costs.len() != nz {
        return Err(Error::DimensionMismatch { expected: nz, got: costs.len() });
    }
    if nz > BRUTE_FORCE_MAX_LINKS {
        return Err(Error::SearchSpaceTooLarge { size: u128::MAX, limit: BRUTE_FORCE_LIMIT });
    }
    if granularity == 0 {
        return Err(Error::InvalidSpec("granularity must be positive".into()));
    }
    if let Some(i) = costs.iter().position(|c| c.is_negative()) {
        return Err(Error::NegativeCost(cs.edge_index[i].to_string()));
    }
    let g = int(granularity as i64);
    let top = (cap * &g).floor().to_integer().to_u64().unwrap_or(0);
    let size = (top as u128 + 1).checked_pow(nz as u32).unwrap_or(u128::MAX);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge { size, limit: BRUTE_FORCE_LIMIT });
    }

    let cost_scale = lcm_of_denominators(costs.iter());
    let unit_costs: Vec<i128> = costs.iter().map(|c| to_i128(&(c * Rational::from_integer(cost_scale.clone())).to_integer())).collect();
    let need: Vec<i128> = cs.rhs.iter().map(|b| to_i128(&(b * &g).ceil().to_integer())).collect();
    let search = GridSearch {
        rows: cs.rows.iter().map(|r| r.iter().map(|&c| c as i128).collect()).collect(),
        need,
        costs: unit_costs,
        top: top as i128,
    };

    if nz == 0 {
        return Ok(search.need.iter().all(|&x| x <= 0).then(|| int(0)));
    }
    let firsts: Vec<i128> = (0..=top as i128).collect();
    let best = exec
        .map(&firsts, |&u0| search.best_with_first(u0))
        .into_iter()
        .flatten()
        .min();
    let denom = Rational::from_integer(cost_scale * BigInt::from(granularity));
    Ok(best.map(|b| Rational::from_integer(BigInt::from(b)) / denom))
}

fn to_i128(v: &BigInt) -> i128 {
    v.to_i128().expect("grid values fit in i128")
}

struct GridSearch {
    rows: Vec<Vec<i128>>,
    need: Vec<i128>,
    costs: Vec<i128>,
    top: i128,
}

impl GridSearch {
    fn best_with_first(&self, u0: i128) -> Option<i128> {
        let nz = self.costs.len();
        // headroom[i][j]: most that coordinates j.. can still add to row i
        let headroom: Vec<Vec<i128>> = self
            .rows
            .iter()
            .map(|row| {
                let mut h = vec![0; nz + 1];
                for j in (0..nz).rev() {
                    h[j] = h[j + 1] + row[j] * self.top;
                }
                h
            })
            .collect();
        let mut sums: Vec<i128> = self.rows.iter().map(|r| r[0] * u0).collect();
        let mut best = None;
        self.descend(1, self.costs[0] * u0, &mut sums, &headroom, &mut best);
        best
    }

    fn descend(&self, j: usize, cost: i128, sums: &mut [i128], headroom: &[Vec<i128>], best: &mut Option<i128>) {
        if best.is_some_and(|b| cost >= b) {
            return;
        }
        if sums.iter().zip(&self.need).zip(headroom).any(|((s, n), h)| s + h[j] < *n) {
            return;
        }
        if j == self.costs.len() {
            *best = Some(cost);
            return;
        }
        for u in 0..=self.top {
            for (s, row) in sums.iter_mut().zip(&self.rows) {
                *s += row[j] * u;
            }
            self.descend(j + 1, cost + self.costs[j] * u, sums, headroom, best);
            for (s, row) in sums.iter_mut().zip(&self.rows) {
                *s -= row[j] * u;
            }
        }
    }
}

/// Everything produced by planning one repair: the flow graph, the cut
/// constraints at each reduction level, and the LP optimum.
#[derive(Debug, Clone)]
pub struct Optimum {
    pub graph: FlowGraph,
    pub raw_rows: usize,
    pub nontrivial_rows: usize,
    pub constraints: ConstraintSet,
    pub costs: Vec<Rational>,
    pub solution: LpSolution,
}

pub fn optimize(spec: &NetworkSpec) -> Result<Optimum> {
    let graph = build_flow_graph(spec)?;
    let raw = enumerate_raw_cuts(&graph, spec)?;
    let nontrivial = raw.drop_trivial();
    let constraints = nontrivial.drop_dominated();
    let costs = link_costs(spec, &constraints.edge_index);
    let solution = solve_min_cost(&constraints, &costs)?;
    Ok(Optimum {
        graph,
        raw_rows: raw.len(),
        nontrivial_rows: nontrivial.len(),
        constraints,
        costs,
        solution,
    })
}

/// Least common multiple of the denominators in an optimal vertex.
pub fn vertex_denominator(sol: &LpSolution) -> BigInt {
    sol.z_star.values.iter().fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()))
}
