//! Storage network model: parameters, directed link costs, helper selection,
//! topology generators and path costs.

use std::collections::VecDeque;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::bounds::msr_beta;
use crate::error::{Error, Result};
use crate::ratio::{self, int, serde_rational, serde_rational_opt, Cost, Rational};

/// Storage node identifier, 1-based as in the usual node numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(i: usize) -> Self {
        NodeId(i + 1)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Square matrix of directed unit-transmission costs. `Cost::Infinite`
/// marks a missing link.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostMatrix {
    entries: Vec<Vec<Cost>>,
}

impl CostMatrix {
    /// All-infinite matrix with a zero diagonal.
    pub fn empty(n: usize) -> Self {
        let entries = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Cost::Finite(int(0)) } else { Cost::Infinite })
                    .collect()
            })
            .collect();
        CostMatrix { entries }
    }

    pub fn from_rows(entries: Vec<Vec<Cost>>) -> Result<Self> {
        let n = entries.len();
        if let Some(bad) = entries.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
        }
        Ok(CostMatrix { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, from: NodeId, to: NodeId) -> &Cost {
        &self.entries[from.index()][to.index()]
    }

    pub fn set(&mut self, from: NodeId, to: NodeId, cost: Cost) {
        self.entries[from.index()][to.index()] = cost;
    }

    pub fn rows(&self) -> &[Vec<Cost>] {
        &self.entries
    }

    /// Finite off-diagonal links as `(from, to, cost)` in row-major order.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId, &Rational)> + '_ {
        self.entries.iter().enumerate().flat_map(|(i, row)| {
            row.iter().enumerate().filter_map(move |(j, c)| match c {
                Cost::Finite(r) if i != j => Some((NodeId::from_index(i), NodeId::from_index(j), r)),
                _ => None,
            })
        })
    }

    fn validate(&self) -> Result<()> {
        let n = self.size();
        for (i, row) in self.entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            match &row[i] {
                Cost::Finite(r) if r.is_zero() => {}
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "diagonal entry ({},{}) must be 0",
                        i + 1,
                        i + 1
                    )))
                }
            }
            for (j, c) in row.iter().enumerate() {
                if let Cost::Finite(r) = c {
                    if !ratio::is_nonnegative(r) {
                        return Err(Error::NegativeCost(format!("{}->{}", i + 1, j + 1)));
                    }
                }
            }
        }
        self.check_acyclic()
    }

    fn check_acyclic(&self) -> Result<()> {
        let n = self.size();
        let mut indegree = vec![0usize; n];
        for (_, to, _) in self.links() {
            indegree[to.index()] += 1;
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop_front() {
            seen += 1;
            for (w, c) in self.entries[v].iter().enumerate() {
                if w != v && c.is_finite() {
                    indegree[w] -= 1;
                    if indegree[w] == 0 {
                        queue.push_back(w);
                    }
                }
            }
        }
        if seen == n {
            Ok(())
        } else {
            let v = (0..n).find(|&v| indegree[v] > 0).unwrap_or(0);
            Err(Error::Cyclic(v + 1))
        }
    }
}

/// Which generator produced a network; kept so a spec can be rebuilt for a
/// different failed position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TopologyKind {
    Tandem,
    Star {
        center: NodeId,
    },
    Grid {
        rows: usize,
        cols: usize,
    },
    Complete {
        #[serde(default, with = "serde_rational_opt", skip_serializing_if = "Option::is_none")]
        new_link_cost: Option<Rational>,
    },
}

/// Input to [`build_topology`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    Generated(TopologyKind),
    Custom(CostMatrix),
}

/// Storage-code parameters common to every topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageParams {
    pub k: usize,
    /// Helper count; `None` means every survivor helps.
    pub d: Option<usize>,
    pub alpha: Rational,
    pub file_size: Rational,
    pub failed: NodeId,
    pub helpers: Option<Vec<NodeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    #[serde(with = "serde_rational")]
    pub alpha: Rational,
    #[serde(rename = "M", with = "serde_rational")]
    pub file_size: Rational,
    pub failed: NodeId,
    pub helpers: Vec<NodeId>,
    pub cost: CostMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyKind>,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::InvalidSpec(format!("n = {n} is too small")));
        }
        if self.k == 0 {
            return Err(Error::InvalidSpec("k must be at least 1".into()));
        }
        if !(self.k <= self.d && self.d < n) {
            return Err(Error::InvalidSpec(format!(
                "need k <= d <= n-1, got k={}, d={}, n={}",
                self.k, self.d, n
            )));
        }
        if self.alpha <= Rational::zero() || self.file_size <= Rational::zero() {
            return Err(Error::InvalidSpec("alpha and M must be positive".into()));
        }
        if self.cost.size() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.cost.size() });
        }
        if !(1..=n).contains(&self.failed.0) {
            return Err(Error::InvalidSpec(format!("failed node {} out of range", self.failed)));
        }
        if self.helpers.len() != self.d {
            return Err(Error::InvalidSpec(format!(
                "{} helpers listed for d = {}",
                self.helpers.len(),
                self.d
            )));
        }
        let mut seen = vec![false; n];
        for &h in &self.helpers {
            if !(1..=n).contains(&h.0) || h == self.failed {
                return Err(Error::InvalidSpec(format!("invalid helper {h}")));
            }
            if std::mem::replace(&mut seen[h.index()], true) {
                return Err(Error::InvalidSpec(format!("duplicate helper {h}")));
            }
        }
        self.cost.validate()?;
        let reach = self.reaches_new_node();
        if let Some(&h) = self.helpers.iter().find(|h| !reach[h.index()]) {
            return Err(Error::Unreachable(h.0));
        }
        Ok(())
    }

    pub fn is_helper(&self, v: NodeId) -> bool {
        self.helpers.contains(&v)
    }

    /// Surviving storage nodes in id order.
    pub fn survivors(&self) -> Vec<NodeId> {
        (1..=self.n).map(NodeId).filter(|&v| v != self.failed).collect()
    }

    pub fn is_msr(&self) -> bool {
        self.alpha.clone() * int(self.k as i64) == self.file_size
    }

    /// Links usable during repair: helper to helper, or helper into the
    /// failed position (which the new node occupies).
    pub fn repair_links(&self) -> Vec<(NodeId, NodeId, Rational)> {
        self.cost
            .links()
            .filter(|&(i, j, _)| self.is_helper(i) && (j == self.failed || self.is_helper(j)))
            .map(|(i, j, c)| (i, j, c.clone()))
            .collect()
    }

    /// `reach[v]` is true when helper `v` (or the new node itself) has a
    /// directed path over repair links to the new node.
    pub fn reaches_new_node(&self) -> Vec<bool> {
        let mut reach = vec![false; self.n];
        reach[self.failed.index()] = true;
        let links = self.repair_links();
        loop {
            let mut changed = false;
            for (i, j, _) in &links {
                if reach[j.index()] && !reach[i.index()] {
                    reach[i.index()] = true;
                    changed = true;
                }
            }
            if !changed {
                return reach;
            }
        }
    }

    /// Same network, different failed node. Generated topologies are rebuilt
    /// so link orientation follows the new failure; custom matrices are kept.
    pub fn with_failed(&self, failed: NodeId) -> Result<NetworkSpec> {
        let params = StorageParams {
            k: self.k,
            d: Some(self.d),
            alpha: self.alpha.clone(),
            file_size: self.file_size.clone(),
            failed,
            helpers: None,
        };
        let topology = match &self.topology {
            Some(kind) => Topology::Generated(kind.clone()),
            None => Topology::Custom(self.cost.clone()),
        };
        build_topology(&topology, self.n, &params)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<NetworkSpec> {
        let raw: RawSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        raw.into_spec()
    }
}

/// Accepts either a full n×n cost matrix or the compact form with one row
/// per helper (in `helpers` order).
#[derive(Deserialize)]
struct RawSpec {
    n: usize,
    k: usize,
    d: Option<usize>,
    #[serde(with = "serde_rational")]
    alpha: Rational,
    #[serde(rename = "M", with = "serde_rational")]
    file_size: Rational,
    failed: NodeId,
    helpers: Option<Vec<NodeId>>,
    cost: Vec<Vec<Cost>>,
    #[serde(default)]
    topology: Option<TopologyKind>,
}

impl RawSpec {
    fn into_spec(self) -> Result<NetworkSpec> {
        let n = self.n;
        if n == 0 {
            return Err(Error::InvalidSpec("empty network".into()));
        }
        let cost = if self.cost.len() == n {
            CostMatrix::from_rows(self.cost)?
        } else {
            let helpers = self.helpers.as_ref().ok_or_else(|| {
                Error::InvalidSpec("compact cost matrix needs an explicit helper list".into())
            })?;
            if helpers.len() != self.cost.len() {
                return Err(Error::DimensionMismatch { expected: helpers.len(), got: self.cost.len() });
            }
            let mut m = CostMatrix::empty(n);
            for (h, row) in helpers.iter().zip(self.cost) {
                if row.len() != n || !(1..=n).contains(&h.0) {
                    return Err(Error::DimensionMismatch { expected: n, got: row.len() });
                }
                for (j, c) in row.into_iter().enumerate() {
                    m.set(*h, NodeId::from_index(j), c);
                }
            }
            m
        };
        let params = StorageParams {
            k: self.k,
            d: self.d,
            alpha: self.alpha,
            file_size: self.file_size,
            failed: self.failed,
            helpers: self.helpers,
        };
        let spec = assemble(n, cost, &params)?;
        Ok(NetworkSpec { topology: self.topology, ..spec })
    }
}

/// Builds a validated spec for one of the standard topologies or a custom
/// cost matrix.
///
/// Generated links have unit cost and point from the endpoint farther (in
/// hops) from the failed position to the nearer one, ties going from lower
/// to higher id. This yields the lower-to-higher orientation on tandem, grid
/// and complete networks failing at their last node, routes star traffic
/// through the center, and makes both halves of a tandem flow toward an
/// interior failure.
pub fn build_topology(topology: &Topology, n: usize, params: &StorageParams) -> Result<NetworkSpec> {
    if n < 3 {
        return Err(Error::InvalidSpec(format!("need n >= 3, got {n}")));
    }
    if !(1..=n).contains(&params.failed.0) {
        return Err(Error::InvalidSpec(format!("failed node {} out of range", params.failed)));
    }
    let (cost, kind) = match topology {
        Topology::Custom(m) => {
            if m.size() != n {
                return Err(Error::DimensionMismatch { expected: n, got: m.size() });
            }
            (m.clone(), None)
        }
        Topology::Generated(kind) => {
            let links = undirected_links(kind, n)?;
            let mut m = orient(n, &links, params.failed);
            if let TopologyKind::Complete { new_link_cost: Some(c) } = kind {
                for i in (1..=n).map(NodeId).filter(|&i| i != params.failed) {
                    m.set(i, params.failed, Cost::Finite(c.clone()));
                }
            }
            (m, Some(kind.clone()))
        }
    };
    let spec = assemble(n, cost, params)?;
    Ok(NetworkSpec { topology: kind, ..spec })
}

fn assemble(n: usize, cost: CostMatrix, params: &StorageParams) -> Result<NetworkSpec> {
    let d = params
        .d
        .or_else(|| params.helpers.as_ref().map(Vec::len))
        .unwrap_or(n.saturating_sub(1));
    let mut spec = NetworkSpec {
        n,
        k: params.k,
        d,
        alpha: params.alpha.clone(),
        file_size: params.file_size.clone(),
        failed: params.failed,
        helpers: Vec::new(),
        cost,
        topology: None,
    };
    spec.helpers = match &params.helpers {
        Some(h) => h.clone(),
        None => default_helpers(&spec, d),
    };
    spec.validate()?;
    Ok(spec)
}

/// All survivors when `d = n-1`; otherwise the `d` survivors with the
/// cheapest shortest path to the new node (ties by id).
fn default_helpers(spec: &NetworkSpec, d: usize) -> Vec<NodeId> {
    let survivors = spec.survivors();
    if d >= survivors.len() {
        return survivors;
    }
    let dist = shortest_paths_to(spec, spec.failed, &all_links(spec));
    let mut ranked: Vec<(Cost, NodeId)> = survivors.iter().map(|&v| (dist[v.index()].clone(), v)).collect();
    ranked.sort_by(|a, b| cmp_cost(&a.0, &b.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<NodeId> = ranked.into_iter().take(d).map(|(_, v)| v).collect();
    chosen.sort();
    chosen
}

fn cmp_cost(a: &Cost, b: &Cost) -> std::cmp::Ordering {
    use std::cmp::Ordering::*;
    match (a, b) {
        (Cost::Finite(x), Cost::Finite(y)) => x.cmp(y),
        (Cost::Finite(_), Cost::Infinite) => Less,
        (Cost::Infinite, Cost::Finite(_)) => Greater,
        (Cost::Infinite, Cost::Infinite) => Equal,
    }
}

fn undirected_links(kind: &TopologyKind, n: usize) -> Result<Vec<(usize, usize)>> {
    let links = match kind {
        TopologyKind::Tandem => (1..n).map(|i| (i - 1, i)).collect(),
        TopologyKind::Star { center } => {
            if !(1..=n).contains(&center.0) {
                return Err(Error::InvalidSpec(format!("star center {center} out of range")));
            }
            (0..n).filter(|&i| i != center.index()).map(|i| (i, center.index())).collect()
        }
        TopologyKind::Grid { rows, cols } => {
            if rows * cols != n || *rows == 0 || *cols == 0 {
                return Err(Error::InvalidSpec(format!("grid {rows}x{cols} does not have {n} nodes")));
            }
            let mut links = Vec::new();
            for r in 0..*rows {
                for c in 0..*cols {
                    let v = r * cols + c;
                    if c + 1 < *cols {
                        links.push((v, v + 1));
                    }
                    if r + 1 < *rows {
                        links.push((v, v + cols));
                    }
                }
            }
            links
        }
        TopologyKind::Complete { .. } => {
            (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
        }
    };
    Ok(links)
}

fn orient(n: usize, links: &[(usize, usize)], failed: NodeId) -> CostMatrix {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in links {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut hops = vec![usize::MAX; n];
    hops[failed.index()] = 0;
    let mut queue = VecDeque::from([failed.index()]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if hops[w] == usize::MAX {
                hops[w] = hops[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut m = CostMatrix::empty(n);
    for &(a, b) in links {
        // (farther, lower id) first
        let key = |v: usize| (std::cmp::Reverse(hops[v]), v);
        let (from, to) = if key(a) < key(b) { (a, b) } else { (b, a) };
        m.set(NodeId::from_index(from), NodeId::from_index(to), Cost::Finite(int(1)));
    }
    m
}

fn all_links(spec: &NetworkSpec) -> Vec<(NodeId, NodeId, Rational)> {
    spec.cost
        .links()
        .filter(|&(i, _, _)| i != spec.failed)
        .map(|(i, j, c)| (i, j, c.clone()))
        .collect()
}

/// Dijkstra toward `target` over reversed links.
fn shortest_paths_to(spec: &NetworkSpec, target: NodeId, links: &[(NodeId, NodeId, Rational)]) -> Vec<Cost> {
    let n = spec.n;
    let mut dist: Vec<Option<Rational>> = vec![None; n];
    let mut done = vec![false; n];
    dist[target.index()] = Some(int(0));
    loop {
        let next = (0..n)
            .filter(|&v| !done[v])
            .filter_map(|v| dist[v].as_ref().map(|d| (d.clone(), v)))
            .min();
        let Some((dv, v)) = next else { break };
        done[v] = true;
        for (i, j, c) in links {
            if j.index() == v {
                let cand = &dv + c;
                let slot = &mut dist[i.index()];
                if slot.as_ref().is_none_or(|cur| cand < *cur) {
                    *slot = Some(cand);
                }
            }
        }
    }
    dist.into_iter()
        .map(|d| d.map_or(Cost::Infinite, Cost::Finite))
        .collect()
}

/// Cheapest directed path cost from `from` to `to`. Links leaving the failed
/// node are ignored; unreachable pairs give `Cost::Infinite`.
pub fn shortest_path_cost(spec: &NetworkSpec, from: NodeId, to: NodeId) -> Cost {
    shortest_paths_to(spec, to, &all_links(spec))[from.index()].clone()
}

/// Cost of the bandwidth-optimal repair without cooperation: every helper
/// ships `beta` fragments along its cheapest path to the new node.
pub fn baseline_cost(spec: &NetworkSpec) -> Result<Rational> {
    if !spec.is_msr() {
        return Err(Error::NotMsr);
    }
    let beta = msr_beta(&spec.file_size, spec.k, spec.d)?;
    let dist = shortest_paths_to(spec, spec.failed, &all_links(spec));
    let mut total = int(0);
    for h in &spec.helpers {
        match &dist[h.index()] {
            Cost::Finite(c) => total += c,
            Cost::Infinite => return Err(Error::Unreachable(h.0)),
        }
    }
    Ok(total * beta)
}
