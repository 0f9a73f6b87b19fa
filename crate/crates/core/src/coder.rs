//! Optimal-cost minimum-storage regenerating codes built by random linear
//! network coding along the LP-optimal repair subgraph.
//!
//! Node `i` stores `X_i = Q_i^T s`, where `Q_i` is a `file_units x
//! alpha_units` coefficient matrix over GF(q). A repair walks the plan's
//! helpers in topological order; each helper forwards fresh random
//! combinations of its stored columns and everything it received this stage,
//! and the new node keeps `alpha_units` random combinations of its input.
//! Fractional LP optima are handled by splitting every fragment into `scale`
//! sub-fragments so all link loads become integers.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::combinatorics::{binomial, subsets};
use crate::error::{Error, Result};
use crate::flowgraph::Link;
use crate::gf::{smallest_prime_geq, FieldMatrix, PrimeField};
use crate::lp::{optimize, LpStatus};
use crate::netmodel::{NetworkSpec, NodeId};
use crate::par::{derive_seed, Exec};
use crate::ratio::{fmt_rational, int, lcm_of_denominators, serde_rational, Rational};

/// Attempts allowed for every randomized step.
pub const RETRY_BUDGET: usize = 100;

/// An integral repair schedule derived from an LP optimum.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairPlan {
    pub failed: NodeId,
    /// Sub-fragments per fragment needed to make every load integral.
    pub scale: u64,
    pub links: Vec<Link>,
    /// Sub-fragments carried per link, at `scale`.
    pub counts: Vec<u64>,
    #[serde(skip)]
    pub costs: Vec<Rational>,
    /// Helpers with outgoing traffic, in processing order.
    pub order: Vec<NodeId>,
    pub n_nc: usize,
    #[serde(with = "serde_rational")]
    pub lp_value: Rational,
    /// `C(n,k) * M * scale * n_nc`.
    #[serde(serialize_with = "ser_biguint")]
    pub d0: BigUint,
    /// Smallest prime above `d0`.
    pub q: u64,
}

fn ser_biguint<S: serde::Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

impl RepairPlan {
    pub fn active_links(&self) -> impl Iterator<Item = (Link, u64)> + '_ {
        self.links.iter().zip(&self.counts).filter(|(_, &c)| c > 0).map(|(&l, &c)| (l, c))
    }

    /// Repair cost of the plan in whole-fragment units.
    pub fn cost(&self) -> Rational {
        let units = self
            .counts
            .iter()
            .zip(&self.costs)
            .fold(int(0), |acc, (&c, cost)| acc + cost * int(c as i64));
        units / int(self.scale as i64)
    }
}

/// Longest chain of coding nodes on any active path into the new node,
/// counting the new node itself.
pub fn coding_depth(active: &[Link], failed: NodeId) -> Result<usize> {
    if active.is_empty() {
        return Err(Error::InvalidSpec("repair plan has no active links".into()));
    }
    let mut memo: BTreeMap<NodeId, Option<usize>> = BTreeMap::new();
    fn depth(v: NodeId, failed: NodeId, active: &[Link], memo: &mut BTreeMap<NodeId, Option<usize>>) -> Option<usize> {
        if v == failed {
            return Some(1);
        }
        if let Some(&d) = memo.get(&v) {
            return d;
        }
        let d = active
            .iter()
            .filter(|l| l.from == v)
            .filter_map(|l| depth(l.to, failed, active, memo))
            .max()
            .map(|d| d + 1);
        memo.insert(v, d);
        d
    }
    active
        .iter()
        .filter_map(|l| depth(l.from, failed, active, &mut memo))
        .max()
        .ok_or_else(|| Error::InvalidSpec("no active path reaches the new node".into()))
}

pub fn compute_n_nc(plan: &RepairPlan) -> Result<usize> {
    let active: Vec<Link> = plan.active_links().map(|(l, _)| l).collect();
    coding_depth(&active, plan.failed)
}

/// Field-size threshold `C(n,k) * M * n_nc`.
pub fn field_size_bound(n: usize, k: usize, file_units: u64, n_nc: usize) -> Result<BigUint> {
    if k == 0 || k > n {
        return Err(Error::InvalidSpec(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    Ok(binomial(n as u64, k as u64) * BigUint::from(file_units) * BigUint::from(n_nc))
}

fn prime_above(d0: &BigUint) -> Result<u64> {
    let x = d0.to_u64().and_then(|v| v.checked_add(1)).ok_or(Error::LimitExceeded(u128::MAX))?;
    smallest_prime_geq(x)
}

fn to_u64(v: &BigInt) -> Result<u64> {
    v.to_u64().ok_or(Error::LimitExceeded(u128::MAX))
}

/// Solves the repair LP for `spec` and turns the optimum into an integral
/// plan with its field size.
pub fn plan_repair(spec: &NetworkSpec) -> Result<RepairPlan> {
    if !spec.is_msr() {
        return Err(Error::NotMsr);
    }
    let opt = optimize(spec)?;
    match opt.solution.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::LpStatus("infeasible")),
        LpStatus::Unbounded => return Err(Error::LpStatus("unbounded")),
    }
    let z = &opt.solution.z_star;
    let scale_big = lcm_of_denominators(z.values.iter().chain([&spec.alpha, &spec.file_size]));
    let scale = to_u64(&scale_big)?;
    let scale_r = Rational::from_integer(scale_big);
    let counts = z
        .values
        .iter()
        .map(|v| to_u64(&(v * &scale_r).to_integer()))
        .collect::<Result<Vec<_>>>()?;
    let links = z.links.clone();
    let active: Vec<Link> = links.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(&l, _)| l).collect();
    let n_nc = coding_depth(&active, spec.failed)?;
    let file_units = to_u64(&(&spec.file_size * &scale_r).to_integer())?;
    let d0 = field_size_bound(spec.n, spec.k, file_units, n_nc)?;
    let q = prime_above(&d0)?;
    Ok(RepairPlan {
        failed: spec.failed,
        scale,
        order: topological_order(&active),
        links,
        counts,
        costs: opt.costs,
        n_nc,
        lp_value: opt.solution.value,
        d0,
        q,
    })
}

fn topological_order(active: &[Link]) -> Vec<NodeId> {
    let mut senders: Vec<NodeId> = active.iter().map(|l| l.from).collect();
    senders.sort();
    senders.dedup();
    let mut order = Vec::with_capacity(senders.len());
    let mut placed = BTreeMap::new();
    while order.len() < senders.len() {
        let ready = senders.iter().copied().find(|v| {
            !placed.contains_key(v)
                && active
                    .iter()
                    .filter(|l| l.to == *v)
                    .all(|l| placed.contains_key(&l.from))
        });
        let v = ready.expect("active links are acyclic");
        placed.insert(v, ());
        order.push(v);
    }
    order
}

/// Coding coefficients of every storage node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeState {
    pub field: PrimeField,
    pub n: usize,
    pub k: usize,
    pub scale: u64,
    pub alpha_units: usize,
    pub file_units: usize,
    /// `nodes[i]` is `Q_{i+1}`, `file_units x alpha_units`.
    pub nodes: Vec<FieldMatrix>,
    pub stage: usize,
}

/// Outcome of an RCP check; `witness` names the first failing k-subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RcpCheck {
    pub ok: bool,
    pub witness: Option<Vec<NodeId>>,
}

impl CodeState {
    /// Wraps explicit coefficient matrices (one per node).
    pub fn from_nodes(k: usize, scale: u64, nodes: Vec<FieldMatrix>) -> Result<CodeState> {
        let first = nodes.first().ok_or_else(|| Error::InvalidSpec("no nodes".into()))?;
        let (field, file_units, alpha_units) = (first.field(), first.rows(), first.cols());
        for m in &nodes {
            if m.field() != field || m.rows() != file_units || m.cols() != alpha_units {
                return Err(Error::DimensionMismatch { expected: file_units, got: m.rows() });
            }
        }
        if k == 0 || k > nodes.len() {
            return Err(Error::InvalidSpec(format!("k={k} with {} nodes", nodes.len())));
        }
        Ok(CodeState { field, n: nodes.len(), k, scale, alpha_units, file_units, nodes, stage: 0 })
    }

    pub fn node(&self, v: NodeId) -> &FieldMatrix {
        &self.nodes[v.index()]
    }

    /// Replaces one node's coefficients, e.g. after an externally computed repair.
    pub fn with_node(&self, v: NodeId, q: FieldMatrix) -> Result<CodeState> {
        if q.rows() != self.file_units || q.cols() != self.alpha_units || q.field() != self.field {
            return Err(Error::DimensionMismatch { expected: self.alpha_units, got: q.cols() });
        }
        let mut next = self.clone();
        next.nodes[v.index()] = q;
        Ok(next)
    }

    /// Splits every fragment into `factor` sub-fragments (`Q_i ⊗ I`), which
    /// multiplies every subset rank by `factor` and so preserves the RCP.
    pub fn refine(&self, factor: u64) -> CodeState {
        if factor == 1 {
            return self.clone();
        }
        let f = factor as usize;
        let nodes = self
            .nodes
            .iter()
            .map(|q| {
                let mut out = FieldMatrix::zeros(self.field, q.rows() * f, q.cols() * f);
                for r in 0..q.rows() {
                    for c in 0..q.cols() {
                        for s in 0..f {
                            out.set(r * f + s, c * f + s, q.get(r, c));
                        }
                    }
                }
                out
            })
            .collect();
        CodeState {
            scale: self.scale * factor,
            alpha_units: self.alpha_units * f,
            file_units: self.file_units * f,
            nodes,
            ..self.clone()
        }
    }

    pub fn subset_rank(&self, subset: &[NodeId]) -> usize {
        let parts: Vec<&FieldMatrix> = subset.iter().map(|v| self.node(*v)).collect();
        FieldMatrix::hcat(&parts).expect("uniform node shapes").rank()
    }
}

pub fn verify_rcp(state: &CodeState) -> RcpCheck {
    verify_rcp_with(state, Exec::default())
}

/// Every k-subset of nodes must jointly have rank `file_units`.
pub fn verify_rcp_with(state: &CodeState, exec: Exec) -> RcpCheck {
    let all: Vec<NodeId> = (1..=state.n).map(NodeId).collect();
    let sets = subsets(&all, state.k);
    let bad = exec.find_first(sets.len(), |i| state.subset_rank(&sets[i]) != state.file_units);
    RcpCheck { ok: bad.is_none(), witness: bad.map(|i| sets[i].clone()) }
}

/// Field and granularity for a code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    pub q: u64,
    pub scale: u64,
}

impl CodeParams {
    pub fn for_plan(plan: &RepairPlan) -> Self {
        CodeParams { q: plan.q, scale: plan.scale }
    }
}

fn units(spec: &NetworkSpec, scale: u64) -> Result<(usize, usize)> {
    let s = int(scale as i64);
    let a = &spec.alpha * &s;
    let m = &spec.file_size * &s;
    if !a.is_integer() || !m.is_integer() {
        return Err(Error::InvalidSpec(format!(
            "scale {scale} leaves alpha={} or M={} fractional",
            fmt_rational(&spec.alpha),
            fmt_rational(&spec.file_size)
        )));
    }
    Ok((to_u64(&a.to_integer())? as usize, to_u64(&m.to_integer())? as usize))
}

/// Random initial code satisfying the RCP, plus the number of draws used.
pub fn init_code_counted(spec: &NetworkSpec, params: CodeParams, seed: u64) -> Result<(CodeState, usize)> {
    if !spec.is_msr() {
        return Err(Error::NotMsr);
    }
    let field = PrimeField::new(params.q)?;
    let (alpha_units, file_units) = units(spec, params.scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=RETRY_BUDGET {
        let nodes = (0..spec.n)
            .map(|_| FieldMatrix::random(field, file_units, alpha_units, &mut rng))
            .collect();
        let state = CodeState {
            field,
            n: spec.n,
            k: spec.k,
            scale: params.scale,
            alpha_units,
            file_units,
            nodes,
            stage: 0,
        };
        if verify_rcp(&state).ok {
            return Ok((state, attempt));
        }
    }
    Err(Error::RetriesExhausted { what: "initial code", budget: RETRY_BUDGET })
}

pub fn init_code(spec: &NetworkSpec, params: CodeParams, seed: u64) -> Result<CodeState> {
    init_code_counted(spec, params, seed).map(|(s, _)| s)
}

/// Result of one functional repair.
#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub state: CodeState,
    pub attempts: usize,
    /// Sub-fragments sent on each active link, at the state's scale.
    pub traffic: Vec<(Link, u64)>,
    /// Sum of link cost times traffic, in whole fragments.
    pub achieved_cost: Rational,
}

/// Regenerates `plan.failed` by surviving-node cooperation along the plan.
pub fn regenerate(state: &CodeState, spec: &NetworkSpec, plan: &RepairPlan, seed: u64) -> Result<RepairOutcome> {
    if plan.failed != spec.failed || state.n != spec.n || state.k != spec.k {
        return Err(Error::InvalidSpec("plan, spec and code state disagree".into()));
    }
    let state = if state.scale.is_multiple_of(plan.scale) {
        state.clone()
    } else {
        let target = state.scale.lcm(&plan.scale);
        state.refine(target / state.scale)
    };
    let per_plan_unit = state.scale / plan.scale;
    let d0 = field_size_bound(spec.n, spec.k, state.file_units as u64, plan.n_nc)?;
    let q = state.field.modulus();
    if BigUint::from(q) <= d0 {
        return Err(Error::FieldTooSmall { q, reason: format!("must exceed d0 = {d0}") });
    }
    let traffic: Vec<(Link, u64)> = plan.active_links().map(|(l, c)| (l, c * per_plan_unit)).collect();
    let delivered: u64 = traffic.iter().filter(|(l, _)| l.to == spec.failed).map(|(_, c)| c).sum();
    if (delivered as usize) < state.alpha_units {
        return Err(Error::InsufficientFragments { got: delivered as usize, need: state.alpha_units });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=RETRY_BUDGET {
        let new_q = run_repair(&state, spec.failed, &plan.order, &traffic, &mut rng);
        let mut next = state.with_node(spec.failed, new_q)?;
        next.stage += 1;
        if verify_rcp(&next).ok {
            let cost_units = traffic.iter().fold(int(0), |acc, (l, c)| {
                let unit = plan.links.iter().position(|x| x == l).map(|i| plan.costs[i].clone()).unwrap_or_else(|| int(0));
                acc + unit * int(*c as i64)
            });
            return Ok(RepairOutcome {
                state: next,
                attempts: attempt,
                achieved_cost: cost_units / int(state.scale as i64),
                traffic,
            });
        }
    }
    Err(Error::RetriesExhausted { what: "regeneration", budget: RETRY_BUDGET })
}

fn random_combination<R: Rng>(field: PrimeField, pool: &[Vec<u64>], height: usize, rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; height];
    for v in pool {
        let c = field.random(rng);
        if c == 0 {
            continue;
        }
        for (o, &x) in out.iter_mut().zip(v) {
            *o = field.add(*o, field.mul(c, x));
        }
    }
    out
}

fn run_repair<R: Rng>(state: &CodeState, failed: NodeId, order: &[NodeId], traffic: &[(Link, u64)], rng: &mut R) -> FieldMatrix {
    let f = state.field;
    let height = state.file_units;
    let mut inbox: BTreeMap<NodeId, Vec<Vec<u64>>> = BTreeMap::new();
    for &v in order {
        let mut pool = state.node(v).columns();
        pool.extend(inbox.remove(&v).unwrap_or_default());
        for (link, count) in traffic.iter().filter(|(l, _)| l.from == v) {
            for _ in 0..*count {
                let frag = random_combination(f, &pool, height, rng);
                inbox.entry(link.to).or_default().push(frag);
            }
        }
    }
    let received = inbox.remove(&failed).unwrap_or_default();
    let stored: Vec<Vec<u64>> = (0..state.alpha_units)
        .map(|_| random_combination(f, &received, height, rng))
        .collect();
    FieldMatrix::from_columns(f, height, &stored)
}

/// One stage of a multi-stage simulation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub failed: NodeId,
    #[serde(with = "serde_rational")]
    pub lp_value: Rational,
    #[serde(with = "serde_rational")]
    pub achieved_cost: Rational,
    pub q: u64,
    pub n_nc: usize,
    #[serde(serialize_with = "ser_biguint")]
    pub d0: BigUint,
    pub rcp_ok: bool,
    pub attempts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Simulation {
    pub seed: u64,
    pub q: u64,
    pub scale: u64,
    pub init_attempts: usize,
    pub stages: Vec<StageRecord>,
    /// Set when a stage left the RCP broken; the run stops there.
    pub aborted: Option<String>,
}

impl Simulation {
    pub fn all_ok(&self) -> bool {
        self.aborted.is_none() && self.stages.iter().all(|s| s.rcp_ok)
    }
}

/// Repair plans for every failure position that admits one.
pub fn plans_by_position(spec: &NetworkSpec) -> Result<Vec<(NetworkSpec, RepairPlan)>> {
    let plans: Vec<(NetworkSpec, RepairPlan)> = (1..=spec.n)
        .map(NodeId)
        .filter_map(|v| {
            let s = spec.with_failed(v).ok()?;
            let p = plan_repair(&s).ok()?;
            Some((s, p))
        })
        .collect();
    if plans.is_empty() {
        return Err(Error::NoRepairPath);
    }
    Ok(plans)
}

/// `stages` rounds of: random failure, LP plan, regeneration, RCP check.
/// The field is sized once for the worst position (largest `scale * n_nc`)
/// so a single code survives every stage.
pub fn simulate_stages(spec: &NetworkSpec, stages: usize, seed: u64) -> Result<Simulation> {
    let plans = plans_by_position(spec)?;
    simulate_with_plans(spec, &plans, stages, seed)
}

pub fn simulate_with_plans(spec: &NetworkSpec, plans: &[(NetworkSpec, RepairPlan)], stages: usize, seed: u64) -> Result<Simulation> {
    if stages == 0 {
        return Err(Error::InvalidSpec("stage count must be at least 1".into()));
    }
    let scale = plans.iter().fold(1u64, |acc, (_, p)| acc.lcm(&p.scale));
    let file_units = to_u64(&(&spec.file_size * int(scale as i64)).to_integer())?;
    let worst_nnc = plans.iter().map(|(_, p)| p.n_nc).max().unwrap_or(2);
    let q = prime_above(&field_size_bound(spec.n, spec.k, file_units, worst_nnc)?)?;

    let (mut state, init_attempts) = init_code_counted(spec, CodeParams { q, scale }, derive_seed(seed, 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(stages);
    for stage in 1..=stages {
        let (stage_spec, plan) = &plans[rng.gen_range(0..plans.len())];
        let stage_seed = derive_seed(seed, stage as u64);
        let outcome = regenerate(&state, stage_spec, plan, stage_seed)?;
        let check = verify_rcp(&outcome.state);
        records.push(StageRecord {
            stage,
            failed: plan.failed,
            lp_value: plan.lp_value.clone(),
            achieved_cost: outcome.achieved_cost,
            q,
            n_nc: plan.n_nc,
            d0: field_size_bound(spec.n, spec.k, outcome.state.file_units as u64, plan.n_nc)?,
            rcp_ok: check.ok,
            attempts: outcome.attempts,
            seed: stage_seed,
        });
        if !check.ok {
            let witness = check.witness.unwrap_or_default();
            return Ok(Simulation {
                seed,
                q,
                scale,
                init_attempts,
                stages: records,
                aborted: Some(format!("RCP violated at stage {stage} by subset {witness:?}")),
            });
        }
        state = outcome.state;
    }
    Ok(Simulation { seed, q, scale, init_attempts, stages: records, aborted: None })
}

/// Independent simulations, one per seed, in seed order.
pub fn simulate_many(spec: &NetworkSpec, stages: usize, seeds: &[u64], exec: Exec) -> Result<Vec<Simulation>> {
    let plans = plans_by_position(spec)?;
    exec.map(seeds, |&s| simulate_with_plans(spec, &plans, stages, s))
        .into_iter()
        .collect()
}
