//! First-stage information flow graph and its cut-set constraints.
//!
//! Every surviving node `i` is split into `in_i -> out_i` with capacity
//! alpha and fed by the source over an infinite edge. Its stored content
//! reaches a forwarding vertex `fwd_i` over an infinite edge, and a network
//! link between helpers becomes a relay edge `fwd_i -> fwd_j`. Forwarded
//! fragments therefore neither consume the receiver's storage edge nor
//! become readable by a data collector attached to `out_j`. Links into the
//! failed position become `fwd_i -> in_new`, and the new node stores alpha
//! via `in_new -> out_new`. A data collector attached to the new node and
//! `k-1` survivors must see a cut of at least `M`; each such cut is one row
//! of `L z >= b`.

use std::cmp::Ordering;
use std::fmt;

use num_traits::Zero;
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::combinatorics::subsets;
use crate::error::{Error, Result};
use crate::netmodel::{NetworkSpec, NodeId};
use crate::par::Exec;
use crate::ratio::{fmt_rational, int, Rational};

/// Largest network the exhaustive cut scan accepts.
pub const MAX_NODES: usize = 12;

/// A directed network link carrying repair traffic. When `to` is the failed
/// node's id the link ends at the new node occupying that position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
}

impl Link {
    pub fn new(from: usize, to: usize) -> Self {
        Link { from: NodeId(from), to: NodeId(to) }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Source,
    In(NodeId),
    Out(NodeId),
    Forward(NodeId),
    NewIn,
    NewOut,
    Collector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Capacity {
    Infinite,
    /// One node's storage, alpha.
    Storage,
    /// Symbolic capacity `z` of the link at this position in `links`.
    Symbolic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub capacity: Capacity,
}

#[derive(Debug, Clone)]
pub struct FlowGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<FlowEdge>,
    /// Retained network links, one symbolic variable each, sorted by `(from, to)`.
    pub links: Vec<Link>,
    pub failed: NodeId,
    pub survivors: Vec<NodeId>,
}

impl FlowGraph {
    pub fn vertex_index(&self, v: Vertex) -> Option<usize> {
        self.vertices.iter().position(|&x| x == v)
    }

    /// Flow edges from the collector's attachment points. Not stored in
    /// `edges`; the collector changes with every cut family.
    pub fn collector_edges(&self, attached: &[NodeId]) -> Vec<FlowEdge> {
        let dc = self.vertex_index(Vertex::Collector).expect("collector vertex");
        let mut out = vec![FlowEdge {
            from: self.vertex_index(Vertex::NewOut).expect("new-out vertex"),
            to: dc,
            capacity: Capacity::Infinite,
        }];
        out.extend(attached.iter().map(|&v| FlowEdge {
            from: self.vertex_index(Vertex::Out(v)).expect("storage vertex"),
            to: dc,
            capacity: Capacity::Infinite,
        }));
        out
    }
}

/// Builds the modified flow graph for repairing `spec.failed`. Links that
/// cannot reach the new node are left out (their traffic is pinned to 0).
pub fn build_flow_graph(spec: &NetworkSpec) -> Result<FlowGraph> {
    let reach = spec.reaches_new_node();
    let links: Vec<Link> = spec
        .repair_links()
        .into_iter()
        .filter(|(_, j, _)| reach[j.index()])
        .map(|(i, j, _)| Link { from: i, to: j })
        .collect();
    if !links.iter().any(|l| l.to == spec.failed) {
        return Err(Error::NoRepairPath);
    }

    let survivors = spec.survivors();
    let mut vertices = vec![Vertex::Source];
    for &v in &survivors {
        vertices.push(Vertex::In(v));
        vertices.push(Vertex::Out(v));
        vertices.push(Vertex::Forward(v));
    }
    vertices.extend([Vertex::NewIn, Vertex::NewOut, Vertex::Collector]);
    let at = |v: Vertex| vertices.iter().position(|&x| x == v).expect("vertex exists");

    let mut edges = Vec::new();
    for &v in &survivors {
        edges.push(FlowEdge { from: 0, to: at(Vertex::In(v)), capacity: Capacity::Infinite });
        edges.push(FlowEdge { from: at(Vertex::In(v)), to: at(Vertex::Out(v)), capacity: Capacity::Storage });
        edges.push(FlowEdge { from: at(Vertex::Out(v)), to: at(Vertex::Forward(v)), capacity: Capacity::Infinite });
    }
    for (idx, link) in links.iter().enumerate() {
        let to = if link.to == spec.failed { Vertex::NewIn } else { Vertex::Forward(link.to) };
        edges.push(FlowEdge { from: at(Vertex::Forward(link.from)), to: at(to), capacity: Capacity::Symbolic(idx) });
    }
    edges.push(FlowEdge { from: at(Vertex::NewIn), to: at(Vertex::NewOut), capacity: Capacity::Storage });

    Ok(FlowGraph { vertices, edges, links, failed: spec.failed, survivors })
}

/// The cut polytope `{ z >= 0 : L z >= b }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    pub edge_index: Vec<Link>,
    pub rows: Vec<Vec<u32>>,
    pub rhs: Vec<Rational>,
}

impl Serialize for ConstraintSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ConstraintSet", 3)?;
        let idx: Vec<[usize; 2]> = self.edge_index.iter().map(|l| [l.from.0, l.to.0]).collect();
        st.serialize_field("edge_index", &idx)?;
        st.serialize_field("L", &self.rows)?;
        let b: Vec<String> = self.rhs.iter().map(fmt_rational).collect();
        st.serialize_field("b", &b)?;
        st.end()
    }
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn sort_rows(&mut self) {
        let mut pairs: Vec<(Vec<u32>, Rational)> =
            self.rows.drain(..).zip(self.rhs.drain(..)).collect();
        pairs.sort_by(cmp_row);
        pairs.dedup();
        (self.rows, self.rhs) = pairs.into_iter().unzip();
    }

    /// Drops rows with `b <= 0` (always satisfied for `z >= 0`) and exact
    /// duplicates. Rows end up in lexicographic order.
    pub fn drop_trivial(&self) -> ConstraintSet {
        let (rows, rhs) = self
            .rows
            .iter()
            .zip(&self.rhs)
            .filter(|(_, b)| **b > Rational::zero())
            .map(|(r, b)| (r.clone(), b.clone()))
            .unzip();
        let mut out = ConstraintSet { edge_index: self.edge_index.clone(), rows, rhs };
        out.sort_rows();
        out
    }

    /// Removes every row implied by another: `u` implies `v` when
    /// `L_u <= L_v` coefficient-wise and `b_u >= b_v`.
    pub fn drop_dominated(&self) -> ConstraintSet {
        let mut base = self.clone();
        base.sort_rows();
        let n = base.rows.len();
        let dominated = |v: usize| {
            (0..n).any(|u| {
                u != v
                    && base.rhs[u] >= base.rhs[v]
                    && base.rows[u].iter().zip(&base.rows[v]).all(|(a, b)| a <= b)
                    && (base.rows[u] != base.rows[v] || base.rhs[u] != base.rhs[v])
            })
        };
        let keep: Vec<usize> = (0..n).filter(|&v| !dominated(v)).collect();
        ConstraintSet {
            edge_index: base.edge_index.clone(),
            rows: keep.iter().map(|&i| base.rows[i].clone()).collect(),
            rhs: keep.iter().map(|&i| base.rhs[i].clone()).collect(),
        }
    }

    pub fn row_value(&self, row: usize, z: &[Rational]) -> Rational {
        self.rows[row]
            .iter()
            .zip(z)
            .filter(|(c, _)| **c != 0)
            .fold(int(0), |acc, (c, x)| acc + x * int(*c as i64))
    }
}

fn cmp_row(a: &(Vec<u32>, Rational), b: &(Vec<u32>, Rational)) -> Ordering {
    a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1))
}

/// Every cut row, unreduced: one per (collector attachment, vertex
/// partition) pair, including trivially satisfied and duplicate rows.
pub fn enumerate_raw_cuts(fg: &FlowGraph, spec: &NetworkSpec) -> Result<ConstraintSet> {
    enumerate_raw_cuts_with(fg, spec, Exec::default())
}

pub fn enumerate_raw_cuts_with(fg: &FlowGraph, spec: &NetworkSpec, exec: Exec) -> Result<ConstraintSet> {
    if spec.n > MAX_NODES {
        return Err(Error::InvalidSpec(format!(
            "cut enumeration supports at most {MAX_NODES} nodes, got {}",
            spec.n
        )));
    }
    let attachments = subsets(&fg.survivors, spec.k - 1);
    let per_attachment = exec.map(&attachments, |attached| cuts_for_attachment(fg, spec, attached));
    let (rows, rhs) = per_attachment.into_iter().flatten().unzip();
    Ok(ConstraintSet { edge_index: fg.links.clone(), rows, rhs })
}

/// Enumerates the finite cuts directly: `out_i` on the collector side with
/// `fwd_i` on the source side would cross an infinite edge, so each
/// unattached survivor has three placements and each attached one two.
fn cuts_for_attachment(fg: &FlowGraph, spec: &NetworkSpec, attached: &[NodeId]) -> Vec<(Vec<u32>, Rational)> {
    let at = |v: Vertex| fg.vertex_index(v).expect("vertex exists");
    let mut fixed: u64 = 0;
    for v in [Vertex::Collector, Vertex::NewOut] {
        fixed |= 1 << at(v);
    }
    for &v in attached {
        fixed |= 1 << at(Vertex::Out(v));
    }
    // Each unit lists the sink-side masks it may contribute.
    let mut units: Vec<Vec<u64>> = vec![vec![0, 1 << at(Vertex::NewIn)]];
    for &v in &fg.survivors {
        let out = 1u64 << at(Vertex::Out(v));
        let fwd = 1u64 << at(Vertex::Forward(v));
        if attached.contains(&v) {
            units.push(vec![0, fwd]);
        } else {
            units.push(vec![0, out, out | fwd]);
        }
    }

    let mut edges = fg.edges.clone();
    edges.extend(fg.collector_edges(attached));

    let total: usize = units.iter().map(Vec::len).product();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; units.len()];
    for _ in 0..total {
        let sink_side = units.iter().zip(&digits).fold(fixed, |acc, (u, &d)| acc | u[d]);
        if let Some(row) = cut_row(&edges, fg.links.len(), sink_side, spec) {
            out.push(row);
        }
        for (d, u) in digits.iter_mut().zip(&units) {
            *d += 1;
            if *d < u.len() {
                break;
            }
            *d = 0;
        }
    }
    out
}

fn cut_row(edges: &[FlowEdge], n_links: usize, sink_side: u64, spec: &NetworkSpec) -> Option<(Vec<u32>, Rational)> {
    let mut coeffs = vec![0u32; n_links];
    let mut storage = 0i64;
    for e in edges {
        let crosses = sink_side >> e.from & 1 == 0 && sink_side >> e.to & 1 == 1;
        if !crosses {
            continue;
        }
        match e.capacity {
            Capacity::Infinite => return None,
            Capacity::Storage => storage += 1,
            Capacity::Symbolic(i) => coeffs[i] += 1,
        }
    }
    Some((coeffs, &spec.file_size - &spec.alpha * int(storage)))
}

/// Active cut constraints: trivial rows, duplicates and dominated rows removed.
pub fn enumerate_cut_constraints(fg: &FlowGraph, spec: &NetworkSpec) -> Result<ConstraintSet> {
    Ok(enumerate_raw_cuts(fg, spec)?.drop_trivial().drop_dominated())
}

/// Per-link repair traffic `z`, aligned with a constraint set's `edge_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subgraph {
    pub links: Vec<Link>,
    pub values: Vec<Rational>,
}

impl Subgraph {
    pub fn new(links: Vec<Link>, values: Vec<Rational>) -> Result<Self> {
        if links.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: links.len(), got: values.len() });
        }
        Ok(Subgraph { links, values })
    }

    pub fn zeros(links: &[Link]) -> Self {
        Subgraph { links: links.to_vec(), values: vec![int(0); links.len()] }
    }

    pub fn get(&self, link: Link) -> Option<&Rational> {
        self.links.iter().position(|&l| l == link).map(|i| &self.values[i])
    }

    /// `sum c_l z_l`.
    pub fn cost(&self, costs: &[Rational]) -> Rational {
        self.values.iter().zip(costs).fold(int(0), |acc, (z, c)| acc + z * c)
    }

    pub fn active(&self) -> impl Iterator<Item = (Link, &Rational)> + '_ {
        self.links
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| !v.is_zero())
            .map(|(&l, v)| (l, v))
    }
}

/// `z >= 0` and `L z >= b`, exactly.
pub fn check_feasible(cs: &ConstraintSet, z: &Subgraph) -> Result<bool> {
    if z.links != cs.edge_index {
        return Err(Error::DimensionMismatch { expected: cs.edge_index.len(), got: z.links.len() });
    }
    if z.values.iter().any(|v| *v < Rational::zero()) {
        return Ok(false);
    }
    Ok((0..cs.len()).all(|r| cs.row_value(r, &z.values) >= cs.rhs[r]))
}

/// Unit costs of the given links in `spec`.
pub fn link_costs(spec: &NetworkSpec, links: &[Link]) -> Vec<Rational> {
    links
        .iter()
        .map(|l| {
            spec.cost
                .get(l.from, l.to)
                .finite()
                .cloned()
                .expect("retained links have finite cost")
        })
        .collect()
}
