//! Exact repair on a tandem line with a Vandermonde code.
//!
//! Each node stores one symbol `v_t = m_1 + m_2 a_t + ... + m_k a_t^(k-1)`.
//! To rebuild `v_t`, `k1` helpers to the left and `k2` to the right each
//! scale their symbol by a coefficient `xi` and add it to a running sum
//! relayed one hop toward `t`. The two partial sums add up to `v_t`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinatorics::subsets;
use crate::error::{Error, Result};
use crate::gf::{FieldMatrix, PrimeField};
use crate::netmodel::NodeId;
use crate::par::{derive_seed, Exec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VandermondeCode {
    pub field: PrimeField,
    pub n: usize,
    pub k: usize,
    /// Evaluation point of node `t` at index `t - 1`.
    pub points: Vec<u64>,
}

/// Builds the code with the given evaluation points, or `1..=n` if none.
pub fn init_vandermonde(n: usize, k: usize, q: u64, points: Option<Vec<u64>>) -> Result<VandermondeCode> {
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if q <= n as u64 {
        return Err(Error::FieldTooSmall { q, reason: format!("must exceed n = {n}") });
    }
    let field = PrimeField::new(q)?;
    let points = match points {
        Some(p) => p.into_iter().map(|x| x % q).collect::<Vec<_>>(),
        None => (1..=n as u64).collect(),
    };
    if points.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: points.len() });
    }
    let mut sorted = points.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidSpec("evaluation points must be distinct".into()));
    }
    Ok(VandermondeCode { field, n, k, points })
}

impl VandermondeCode {
    /// The `k x n` generator; column `t` is `(1, a_t, ..., a_t^(k-1))`.
    pub fn generator(&self) -> FieldMatrix {
        let cols: Vec<Vec<u64>> = self.points.iter().map(|&a| self.powers(a)).collect();
        FieldMatrix::from_columns(self.field, self.k, &cols)
    }

    fn powers(&self, a: u64) -> Vec<u64> {
        (0..self.k as u64).map(|e| self.field.pow(a, e)).collect()
    }

    pub fn encode(&self, message: &[u64]) -> Result<Vec<u64>> {
        if message.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: message.len() });
        }
        let m: Vec<u64> = message.iter().map(|&x| x % self.field.modulus()).collect();
        self.generator().transpose().mul_vec(&m)
    }

    /// Recovers the message from any `k` nodes' symbols.
    pub fn decode(&self, nodes: &[NodeId], symbols: &[u64]) -> Result<Vec<u64>> {
        if nodes.len() != self.k || symbols.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: nodes.len() });
        }
        let rows: Vec<Vec<u64>> = nodes.iter().map(|v| self.powers(self.points[v.index()])).collect();
        let a = FieldMatrix::from_columns(self.field, self.k, &rows).transpose();
        a.solve(symbols)
    }

    /// True when every `k`-subset of nodes can reconstruct.
    pub fn all_subsets_decodable(&self) -> bool {
        let g = self.generator();
        let idx: Vec<usize> = (0..self.n).collect();
        subsets(&idx, self.k).iter().all(|s| {
            let cols: Vec<Vec<u64>> = s.iter().map(|&c| g.column(c)).collect();
            FieldMatrix::from_columns(self.field, self.k, &cols).rank() == self.k
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    /// Running partial sum carried on this hop.
    pub symbol: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactRepair {
    pub failed: NodeId,
    pub k1: usize,
    pub k2: usize,
    pub helpers: Vec<NodeId>,
    pub xi: Vec<u64>,
    pub hops: Vec<Hop>,
    pub restored: u64,
    pub original: u64,
    pub exact: bool,
    /// Unit-cost transmissions.
    pub cost: usize,
}

/// Split with `k1 = min(t - 1, k / 2)`, shifted when one side is too short.
pub fn default_split(n: usize, k: usize, t: NodeId) -> Result<(usize, usize)> {
    let left = t.0 - 1;
    let right = n - t.0;
    if left + right < k {
        return Err(Error::InsufficientHelpers(format!("{} survivors for k = {k}", left + right)));
    }
    let mut k1 = left.min(k / 2);
    if k - k1 > right {
        k1 = k - right;
    }
    Ok((k1, k - k1))
}

/// Rebuilds node `t`'s symbol from `k1` left and `k2` right helpers.
pub fn exact_repair(code: &VandermondeCode, symbols: &[u64], t: NodeId, k1: usize, k2: usize) -> Result<ExactRepair> {
    let n = code.n;
    if symbols.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: symbols.len() });
    }
    if t.0 == 0 || t.0 > n {
        return Err(Error::InvalidSpec(format!("node {} out of range 1..={n}", t.0)));
    }
    if k1 + k2 != code.k {
        return Err(Error::InvalidSpec(format!("k1 + k2 = {} but k = {}", k1 + k2, code.k)));
    }
    if k1 > t.0 - 1 || k2 > n - t.0 {
        return Err(Error::InsufficientHelpers(format!(
            "node {} has {} nodes on the left and {} on the right; asked for {k1} and {k2}",
            t.0,
            t.0 - 1,
            n - t.0
        )));
    }
    let f = code.field;
    let left: Vec<NodeId> = (t.0 - k1..t.0).map(NodeId).collect();
    let right: Vec<NodeId> = (t.0 + 1..=t.0 + k2).rev().map(NodeId).collect();
    let helpers: Vec<NodeId> = left.iter().chain(right.iter()).copied().collect();

    // Columns of A are the helpers' generator columns; solve A xi = g_t.
    let cols: Vec<Vec<u64>> = helpers.iter().map(|v| code.powers(code.points[v.index()])).collect();
    let a = FieldMatrix::from_columns(f, code.k, &cols);
    let xi = a.solve(&code.powers(code.points[t.index()]))?;

    let mut hops = Vec::with_capacity(code.k);
    let mut total = 0;
    for (chain, offset) in [(&left, 0usize), (&right, left.len())] {
        let mut acc = 0;
        for (j, v) in chain.iter().enumerate() {
            acc = f.add(acc, f.mul(xi[offset + j], symbols[v.index()] % f.modulus()));
            let to = chain.get(j + 1).copied().unwrap_or(t);
            hops.push(Hop { from: *v, to, symbol: acc });
        }
        total = f.add(total, acc);
    }
    let original = symbols[t.index()] % f.modulus();
    Ok(ExactRepair {
        failed: t,
        k1,
        k2,
        helpers,
        xi,
        cost: hops.len(),
        hops,
        restored: total,
        original,
        exact: total == original,
    })
}

/// Repairs `t` in each of several independent instances (one per stored
/// symbol when a node holds more than one).
pub fn exact_repair_instances(
    code: &VandermondeCode,
    instances: &[Vec<u64>],
    t: NodeId,
    k1: usize,
    k2: usize,
) -> Result<Vec<ExactRepair>> {
    instances.iter().map(|s| exact_repair(code, s, t, k1, k2)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub exact: usize,
    pub max_cost: usize,
    pub min_cost: usize,
}

/// Random message, failed node and split per trial, seeded per trial index.
pub fn random_trials(code: &VandermondeCode, trials: usize, seed: u64, exec: Exec) -> Result<TrialSummary> {
    use rand::Rng;
    let results = exec.map_range(trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let m: Vec<u64> = (0..code.k).map(|_| code.field.random(&mut rng)).collect();
        let symbols = code.encode(&m)?;
        let candidates: Vec<(usize, usize, usize)> = (1..=code.n)
            .flat_map(|t| (0..=code.k).map(move |k1| (t, k1, code.k - k1)))
            .filter(|&(t, k1, k2)| k1 < t && k2 <= code.n - t)
            .collect();
        if candidates.is_empty() {
            return Err(Error::InsufficientHelpers("no valid split".into()));
        }
        let (t, k1, k2) = candidates[rng.gen_range(0..candidates.len())];
        exact_repair(code, &symbols, NodeId(t), k1, k2)
    });
    let mut summary = TrialSummary { trials, exact: 0, max_cost: 0, min_cost: usize::MAX };
    for r in results {
        let r = r?;
        summary.exact += r.exact as usize;
        summary.max_cost = summary.max_cost.max(r.cost);
        summary.min_cost = summary.min_cost.min(r.cost);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_mod5() {
        let code = init_vandermonde(4, 2, 5, None).unwrap();
        let v = code.encode(&[1, 3]).unwrap();
        assert_eq!(v, vec![4, 2, 0, 3]);
        let r = exact_repair(&code, &v, NodeId(2), 1, 1).unwrap();
        assert_eq!(r.restored, 2);
        assert!(r.exact);
        assert_eq!(r.cost, 2);
    }

    #[test]
    fn one_sided_chain_from_end() {
        let code = init_vandermonde(5, 3, 7, None).unwrap();
        let v = code.encode(&[2, 5, 1]).unwrap();
        let r = exact_repair(&code, &v, NodeId(1), 0, 3).unwrap();
        assert!(r.exact);
        assert_eq!(r.hops.len(), 3);
        assert_eq!(r.hops.last().unwrap().to, NodeId(1));
        assert_eq!(r.hops[0].from, NodeId(4));
    }

    #[test]
    fn zero_message_restores_zero() {
        let code = init_vandermonde(4, 2, 5, None).unwrap();
        let r = exact_repair(&code, &[0; 4], NodeId(3), 1, 1).unwrap();
        assert_eq!(r.restored, 0);
    }

    #[test]
    fn rejects_small_field_and_duplicates() {
        assert!(init_vandermonde(5, 2, 5, None).is_err());
        assert!(init_vandermonde(3, 2, 5, Some(vec![1, 1, 2])).is_err());
        assert!(init_vandermonde(4, 2, 5, None).unwrap().all_subsets_decodable());
    }

    #[test]
    fn rejects_unavailable_split() {
        let code = init_vandermonde(4, 2, 5, None).unwrap();
        let v = code.encode(&[1, 1]).unwrap();
        assert!(matches!(exact_repair(&code, &v, NodeId(1), 1, 1), Err(Error::InsufficientHelpers(_))));
        assert!(exact_repair(&code, &v, NodeId(2), 2, 1).is_err());
    }

    #[test]
    fn default_split_balances() {
        assert_eq!(default_split(6, 3, NodeId(3)).unwrap(), (1, 2));
        assert_eq!(default_split(6, 4, NodeId(6)).unwrap(), (4, 0));
        assert_eq!(default_split(6, 4, NodeId(1)).unwrap(), (0, 4));
        assert!(default_split(3, 3, NodeId(2)).is_err());
    }

    #[test]
    fn decode_any_k() {
        let code = init_vandermonde(5, 3, 11, None).unwrap();
        let m = vec![3, 9, 4];
        let v = code.encode(&m).unwrap();
        let nodes = [NodeId(1), NodeId(3), NodeId(5)];
        let syms: Vec<u64> = nodes.iter().map(|n| v[n.index()]).collect();
        assert_eq!(code.decode(&nodes, &syms).unwrap(), m);
    }
}
