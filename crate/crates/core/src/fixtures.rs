//! Reference networks used throughout the tests, the benches and the CLI
//! `fixtures` command.

use crate::netmodel::{build_topology, NetworkSpec, NodeId, StorageParams, Topology, TopologyKind};
use crate::ratio::{int, Rational};

fn params(k: usize, file_size: Rational, alpha: Rational, failed: NodeId) -> StorageParams {
    StorageParams { k, d: None, alpha, file_size, failed, helpers: None }
}

pub fn tandem(n: usize, k: usize, file_size: Rational, alpha: Rational, failed: NodeId) -> NetworkSpec {
    build_topology(&Topology::Generated(TopologyKind::Tandem), n, &params(k, file_size, alpha, failed))
        .expect("valid tandem fixture")
}

/// Four-node line, node 4 fails; k=2, M=4, alpha=2, d=3.
pub fn tandem4() -> NetworkSpec {
    tandem(4, 2, int(4), int(2), NodeId(4))
}

/// 2×3 grid, node 6 fails; k=4, M=8, alpha=2, d=5.
pub fn grid23() -> NetworkSpec {
    build_topology(
        &Topology::Generated(TopologyKind::Grid { rows: 2, cols: 3 }),
        6,
        &params(4, int(8), int(2), NodeId(6)),
    )
    .expect("valid grid fixture")
}

/// Five fully connected nodes, node 5 fails; k=3, M=6, alpha=2, d=4.
/// `new_link_cost` overrides the cost of every link into the new node.
pub fn complete5(new_link_cost: Option<Rational>) -> NetworkSpec {
    build_topology(
        &Topology::Generated(TopologyKind::Complete { new_link_cost }),
        5,
        &params(3, int(6), int(2), NodeId(5)),
    )
    .expect("valid complete fixture")
}

pub fn star(n: usize, center: NodeId, failed: NodeId, k: usize, file_size: Rational, alpha: Rational) -> NetworkSpec {
    build_topology(
        &Topology::Generated(TopologyKind::Star { center }),
        n,
        &params(k, file_size, alpha, failed),
    )
    .expect("valid star fixture")
}

/// Six-node star centered on node 2 with non-central node 1 failing.
pub fn star6(k: usize, file_size: Rational, alpha: Rational) -> NetworkSpec {
    star(6, NodeId(2), NodeId(1), k, file_size, alpha)
}

/// One line of the reference suite.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct SuiteRow {
    pub name: String,
    pub quantity: &'static str,
    #[serde(with = "crate::ratio::serde_rational")]
    pub expected: Rational,
    #[serde(with = "crate::ratio::serde_rational_opt")]
    pub got: Option<Rational>,
    pub pass: bool,
}

fn row(name: &str, quantity: &'static str, expected: Rational, got: crate::error::Result<Rational>) -> SuiteRow {
    let got = got.ok();
    SuiteRow { name: name.into(), quantity, pass: got.as_ref() == Some(&expected), expected, got }
}

fn lp_value(spec: &NetworkSpec) -> crate::error::Result<Rational> {
    let opt = crate::lp::optimize(spec)?;
    Ok(opt.solution.value)
}

/// Known optima and baselines of the reference networks.
pub fn run_fixture_suite(exec: crate::par::Exec) -> Vec<SuiteRow> {
    use crate::netmodel::baseline_cost;
    use crate::ratio::frac;
    let cases: Vec<(&str, NetworkSpec, Rational, Option<Rational>)> = vec![
        ("tandem", tandem4(), int(4), Some(int(6))),
        ("grid", grid23(), int(7), Some(int(9))),
        ("complete", complete5(None), int(4), None),
        ("complete-3", complete5(Some(int(3))), int(10), Some(int(12))),
        ("star-n6", star6(3, int(9), int(3)), int(7), Some(int(9))),
        ("star-n6-frac", star6(3, int(6), int(2)), frac(14, 3), None),
    ];
    let rows = exec.map(&cases, |(name, spec, lp, base)| {
        let mut out = vec![row(name, "lp", lp.clone(), lp_value(spec))];
        if let Some(b) = base {
            out.push(row(name, "baseline", b.clone(), baseline_cost(spec)));
        }
        out
    });
    rows.into_iter().flatten().collect()
}
