//! End-to-end repair reports: plan, solve, code, regenerate, verify.

use serde::Serialize;

use crate::bounds::{compare_lp_to_bounds, GainReport};
use crate::coder::{init_code_counted, plan_repair, regenerate, simulate_stages, verify_rcp, CodeParams, RepairPlan, StageRecord};
use crate::error::Result;
use crate::flowgraph::Link;
use crate::lp::optimize;
use crate::netmodel::NetworkSpec;
use crate::par::derive_seed;
use crate::ratio::{serde_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowCounts {
    pub raw: usize,
    pub nontrivial: usize,
    pub reduced: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexEntry {
    pub link: Link,
    #[serde(with = "serde_rational")]
    pub z: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepairReport {
    pub seed: u64,
    pub spec: NetworkSpec,
    pub constraints: RowCounts,
    #[serde(with = "serde_rational")]
    pub lp_value: Rational,
    pub lp_vertex: Vec<VertexEntry>,
    pub gain: GainReport,
    pub plan: RepairPlan,
    #[serde(with = "serde_rational")]
    pub achieved_cost: Rational,
    pub init_attempts: usize,
    pub repair_attempts: usize,
    pub rcp_ok: bool,
    pub stages: Vec<StageRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

impl RepairReport {
    /// Achieved cost equals the LP optimum and every check passed.
    pub fn ok(&self) -> bool {
        self.rcp_ok && self.achieved_cost == self.lp_value && self.stages.iter().all(|s| s.rcp_ok)
    }
}

/// Runs one planned repair of `spec.failed` and, if `stages > 0`, a
/// multi-stage simulation from the same seed.
pub fn repair_report(spec: &NetworkSpec, seed: u64, stages: usize) -> Result<RepairReport> {
    let opt = optimize(spec)?;
    let gain = compare_lp_to_bounds(spec)?;
    let plan = plan_repair(spec)?;
    let (state, init_attempts) = init_code_counted(spec, CodeParams::for_plan(&plan), derive_seed(seed, 0))?;
    let outcome = regenerate(&state, spec, &plan, derive_seed(seed, 1))?;
    let rcp_ok = verify_rcp(&outcome.state).ok;
    let stages = if stages > 0 { simulate_stages(spec, stages, seed)?.stages } else { Vec::new() };
    let z = &opt.solution.z_star;
    Ok(RepairReport {
        seed,
        spec: spec.clone(),
        constraints: RowCounts {
            raw: opt.raw_rows,
            nontrivial: opt.nontrivial_rows,
            reduced: opt.constraints.len(),
        },
        lp_value: opt.solution.value.clone(),
        lp_vertex: z
            .links
            .iter()
            .zip(&z.values)
            .map(|(&link, v)| VertexEntry { link, z: v.clone() })
            .collect(),
        gain,
        achieved_cost: outcome.achieved_cost,
        init_attempts,
        repair_attempts: outcome.attempts,
        rcp_ok,
        plan,
        stages,
        wall_time_ms: None,
    })
}
