use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use repairopt::bounds::compare_lp_to_bounds;
use repairopt::coder::simulate_many;
use repairopt::exact::{default_split, exact_repair, init_vandermonde, random_trials};
use repairopt::fixtures::{self, run_fixture_suite};
use repairopt::flowgraph::{build_flow_graph, check_feasible, enumerate_raw_cuts, link_costs, ConstraintSet, Link, Subgraph};
use repairopt::lp::{brute_force_optimum, optimize, verify_dual};
use repairopt::netmodel::{build_topology, baseline_cost, NetworkSpec, NodeId, StorageParams, Topology, TopologyKind};
use repairopt::par::{derive_seed, Exec};
use repairopt::ratio::{fmt_rational, parse_rational, Rational};
use repairopt::report::repair_report;
use repairopt::Error;

mod render;

use render::{Format, Rendered, Table};

#[derive(Parser)]
#[command(name = "repairopt", version, about = "Minimum-cost repair planning for multi-hop distributed storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Also write the output to DIR/<subcommand>.<ext>.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "REPAIROPT_SEED", default_value_t = 0)]
    seed: u64,
    /// Add wall time to code/simulate reports. Makes the output non-reproducible.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Topology generation.
    Topology {
        #[command(subcommand)]
        action: TopologyAction,
    },
    /// Cut-set constraints of the first repair stage.
    Constraints {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value_t = Level::Reduced)]
        level: Level,
    },
    /// Minimum-cost repair subgraph.
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        /// Cross-check against an exhaustive search on the 1/g grid.
        #[arg(long, value_name = "G")]
        granularity: Option<u32>,
    },
    /// Closed forms, baseline and gains. Without a spec, covers the reference networks.
    Bounds {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Plan, encode, regenerate and verify one repair.
    Code {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Multi-stage repair simulation.
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 10)]
        stages: usize,
        /// Independent runs with seeds seed, seed+1, ...
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
    /// Exact repair on a tandem Vandermonde code.
    ExactRepair(ExactArgs),
    /// Check a user-supplied subgraph against the cut constraints.
    Verify {
        #[command(flatten)]
        spec: SpecArgs,
        /// Either `i->j=v,...` (unlisted links are 0) or plain values in link order.
        #[arg(long)]
        z: String,
    },
    /// Reference network suite with expected values.
    Fixtures,
}

#[derive(Subcommand)]
enum TopologyAction {
    Gen {
        #[command(flatten)]
        spec: SpecArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Level {
    Raw,
    Nontrivial,
    Reduced,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TopologyArg {
    Tandem,
    Star,
    Grid,
    Complete,
}

#[derive(Args, Default)]
struct SpecArgs {
    /// JSON network spec.
    #[arg(long, value_name = "PATH", conflicts_with = "topology")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    topology: Option<TopologyArg>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Per-node storage; defaults to M/k.
    #[arg(long, value_name = "P/Q")]
    alpha: Option<String>,
    /// File size.
    #[arg(long = "M", value_name = "P/Q")]
    file_size: Option<String>,
    /// Failed node, 1-based; defaults to n.
    #[arg(long)]
    failed: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 1)]
    center: usize,
    /// Cost of every link into the failed node (complete topology).
    #[arg(long, value_name = "P/Q")]
    new_link_cost: Option<String>,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Field prime.
    #[arg(long)]
    q: u64,
    /// Failed node, 1-based.
    #[arg(long)]
    t: usize,
    #[arg(long, requires = "k2")]
    k1: Option<usize>,
    #[arg(long, requires = "k1")]
    k2: Option<usize>,
    /// Also run this many random trials.
    #[arg(long, default_value_t = 0)]
    trials: usize,
}

enum CliError {
    Config(String),
    Run(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_)
            | Error::Cyclic(_)
            | Error::Unreachable(_)
            | Error::NoRepairPath
            | Error::DimensionMismatch { .. }
            | Error::NegativeCost(_)
            | Error::NotMsr
            | Error::Parse(_)
            | Error::SearchSpaceTooLarge { .. }
            | Error::InsufficientHelpers(_) => CliError::Config(e.to_string()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn rational_arg(name: &str, s: &str) -> CliResult<Rational> {
    parse_rational(s).map_err(|e| CliError::Config(format!("--{name}: {e}")))
}

fn require<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

impl SpecArgs {
    fn is_empty(&self) -> bool {
        self.spec.is_none() && self.topology.is_none()
    }

    fn build(&self) -> CliResult<NetworkSpec> {
        if let Some(path) = &self.spec {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            return Ok(NetworkSpec::from_json(&text)?);
        }
        let topology = require(self.topology, "spec or --topology")?;
        let kind = match topology {
            TopologyArg::Tandem => TopologyKind::Tandem,
            TopologyArg::Star => TopologyKind::Star { center: NodeId(self.center) },
            TopologyArg::Grid => TopologyKind::Grid { rows: require(self.rows, "rows")?, cols: require(self.cols, "cols")? },
            TopologyArg::Complete => TopologyKind::Complete {
                new_link_cost: self.new_link_cost.as_deref().map(|c| rational_arg("new-link-cost", c)).transpose()?,
            },
        };
        let n = match (&kind, self.n) {
            (_, Some(n)) => n,
            (TopologyKind::Grid { rows, cols }, None) => rows * cols,
            _ => return Err(CliError::Config("--n is required".into())),
        };
        let k = require(self.k, "k")?;
        let file_size = rational_arg("M", &require(self.file_size.clone(), "M")?)?;
        let alpha = match &self.alpha {
            Some(a) => rational_arg("alpha", a)?,
            None if k > 0 => &file_size / Rational::from_integer(k.into()),
            None => return Err(CliError::Config("k must be at least 1".into())),
        };
        let params = StorageParams {
            k,
            d: self.d,
            alpha,
            file_size,
            failed: NodeId(self.failed.unwrap_or(n)),
            helpers: None,
        };
        Ok(build_topology(&Topology::Generated(kind), n, &params)?)
    }
}

fn cs_json(cs: &ConstraintSet) -> Value {
    json!({
        "edge_index": cs.edge_index.iter().map(|l| [l.from.0, l.to.0]).collect::<Vec<_>>(),
        "L": cs.rows,
        "b": cs.rhs.iter().map(fmt_rational).collect::<Vec<_>>(),
    })
}

fn constraints(spec: &NetworkSpec, level: Level) -> CliResult<Rendered> {
    let fg = build_flow_graph(spec)?;
    let raw = enumerate_raw_cuts(&fg, spec)?;
    let nontrivial = raw.drop_trivial();
    let reduced = nontrivial.drop_dominated();
    let chosen = match level {
        Level::Raw => &raw,
        Level::Nontrivial => &nontrivial,
        Level::Reduced => &reduced,
    };
    let mut header: Vec<String> = chosen.edge_index.iter().map(Link::to_string).collect();
    header.push("b".into());
    let rows = chosen
        .rows
        .iter()
        .zip(&chosen.rhs)
        .map(|(row, b)| row.iter().map(u32::to_string).chain([fmt_rational(b)]).collect())
        .collect();
    let mut out = cs_json(chosen);
    out["counts"] = json!({ "raw": raw.len(), "nontrivial": nontrivial.len(), "reduced": reduced.len() });
    Ok(Rendered { name: "constraints", json: out, table: Some(Table { header, rows }), ok: true })
}

fn solve(spec: &NetworkSpec, granularity: Option<u32>) -> CliResult<Rendered> {
    let opt = optimize(spec)?;
    let sol = &opt.solution;
    let z: serde_json::Map<String, Value> = sol
        .z_star
        .active()
        .map(|(l, v)| (l.to_string(), Value::String(fmt_rational(v))))
        .collect();
    let dual_ok = verify_dual(&opt.constraints, &opt.costs, sol);
    let mut out = json!({
        "status": sol.status,
        "value": fmt_rational(&sol.value),
        "z": z,
        "dual": sol.dual.iter().map(fmt_rational).collect::<Vec<_>>(),
        "dual_ok": dual_ok,
        "pivots": sol.pivots,
    });
    let mut ok = dual_ok;
    if let Some(g) = granularity {
        let cap = opt.constraints.rhs.iter().max().cloned().unwrap_or_default();
        let brute = brute_force_optimum(&opt.constraints, &opt.costs, g, &cap)?;
        // A grid point is feasible, so it can never undercut the LP optimum.
        ok &= brute.as_ref().is_none_or(|b| *b >= sol.value);
        out["brute_force"] = json!(brute.as_ref().map(fmt_rational));
        out["granularity"] = json!(g);
    }
    let mut header = vec!["status".to_string(), "value".to_string()];
    header.extend(opt.constraints.edge_index.iter().map(Link::to_string));
    let mut row = vec![out["status"].as_str().unwrap_or_default().to_string(), fmt_rational(&sol.value)];
    row.extend(opt.constraints.edge_index.iter().map(|l| sol.z_star.get(*l).map(fmt_rational).unwrap_or_default()));
    Ok(Rendered { name: "solve", json: out, table: Some(Table { header, rows: vec![row] }), ok })
}

fn topology_name(spec: &NetworkSpec) -> &'static str {
    match spec.topology {
        Some(TopologyKind::Tandem) => "tandem",
        Some(TopologyKind::Star { .. }) => "star",
        Some(TopologyKind::Grid { .. }) => "grid",
        Some(TopologyKind::Complete { .. }) => "complete",
        None => "custom",
    }
}

fn bounds_row(spec: &NetworkSpec) -> CliResult<Value> {
    let g = compare_lp_to_bounds(spec)?;
    let opt_str = |r: &Option<Rational>| r.as_ref().map(fmt_rational);
    Ok(json!({
        "topology": topology_name(spec),
        "n": spec.n,
        "k": spec.k,
        "M": fmt_rational(&spec.file_size),
        "alpha": fmt_rational(&spec.alpha),
        "lp": fmt_rational(&g.sigma_opt),
        "closed_form": opt_str(&g.closed_form_value),
        "baseline": fmt_rational(&g.sigma_non_opt),
        "gain_published": opt_str(&g.gain_published),
        "gain_computed": opt_str(&g.g_c),
        "consistent": g.consistent(),
    }))
}

fn bounds(args: &SpecArgs) -> CliResult<Rendered> {
    let specs = if args.is_empty() {
        vec![
            fixtures::tandem4(),
            fixtures::grid23(),
            fixtures::complete5(None),
            fixtures::complete5(Some(Rational::from_integer(3.into()))),
            fixtures::star6(3, Rational::from_integer(9.into()), Rational::from_integer(3.into())),
            fixtures::star6(3, Rational::from_integer(6.into()), Rational::from_integer(2.into())),
        ]
    } else {
        vec![args.build()?]
    };
    let rows = Exec::default().map(&specs, bounds_row).into_iter().collect::<CliResult<Vec<_>>>()?;
    let ok = rows.iter().all(|r| r["consistent"] == json!(true));
    let cols = ["topology", "n", "k", "M", "alpha", "lp", "closed_form", "baseline", "gain_published", "gain_computed"];
    let table = Table::from_objects(&rows, &cols);
    Ok(Rendered { name: "bounds", json: Value::Array(rows), table: Some(table), ok })
}

fn with_timing(mut v: Value, started: Option<Instant>) -> Value {
    if let (Some(t), Value::Object(map)) = (started, &mut v) {
        map.insert("wall_time_ms".into(), json!(t.elapsed().as_secs_f64() * 1e3));
    }
    v
}

const STAGE_COLUMNS: [&str; 9] = ["stage", "failed", "lp_value", "achieved_cost", "q", "n_nc", "d0", "rcp_ok", "seed"];

fn code(spec: &NetworkSpec, seed: u64, stages: usize, name: &'static str, started: Option<Instant>) -> CliResult<Rendered> {
    let report = repair_report(spec, seed, stages)?;
    let ok = report.ok();
    let json = with_timing(serde_json::to_value(&report).expect("report serializes"), started);
    let table = if stages > 0 {
        Table::from_objects(json["stages"].as_array().map_or(&[][..], Vec::as_slice), &STAGE_COLUMNS)
    } else {
        Table::from_objects(std::slice::from_ref(&json), &["seed", "lp_value", "achieved_cost", "rcp_ok", "init_attempts", "repair_attempts"])
    };
    Ok(Rendered { name, json, table: Some(table), ok })
}

fn simulate(spec: &NetworkSpec, seed: u64, stages: usize, runs: u64, started: Option<Instant>) -> CliResult<Rendered> {
    if runs <= 1 {
        return code(spec, seed, stages, "simulate", started);
    }
    let seeds: Vec<u64> = (0..runs).map(|i| seed.wrapping_add(i)).collect();
    let sims = simulate_many(spec, stages, &seeds, Exec::default())?;
    let passed = sims.iter().filter(|s| s.all_ok()).count();
    let rows: Vec<Value> = sims
        .iter()
        .map(|s| json!({ "seed": s.seed, "q": s.q, "stages": s.stages.len(), "all_ok": s.all_ok(), "aborted": s.aborted }))
        .collect();
    let table = Table::from_objects(&rows, &["seed", "q", "stages", "all_ok", "aborted"]);
    let json = with_timing(json!({ "seed": seed, "runs": runs, "passed": passed, "simulations": sims }), started);
    Ok(Rendered { name: "simulate", json, table: Some(table), ok: passed == sims.len() })
}

fn exact(args: &ExactArgs, seed: u64) -> CliResult<Rendered> {
    let code = init_vandermonde(args.n, args.k, args.q, None)?;
    let message: Vec<u64> = (0..args.k as u64).map(|i| derive_seed(seed, i) % args.q).collect();
    let symbols = code.encode(&message)?;
    let (k1, k2) = match (args.k1, args.k2) {
        (Some(a), Some(b)) => (a, b),
        _ => default_split(args.n, args.k, NodeId(args.t))?,
    };
    let repair = exact_repair(&code, &symbols, NodeId(args.t), k1, k2)?;
    let mut ok = repair.exact && repair.cost == args.k;
    let hops: Vec<Value> = repair
        .hops
        .iter()
        .map(|h| json!({ "from": h.from.0, "to": h.to.0, "symbol": h.symbol }))
        .collect();
    let table = Table::from_objects(&hops, &["from", "to", "symbol"]);
    let mut out = json!({ "seed": seed, "n": args.n, "k": args.k, "q": args.q, "message": message, "symbols": symbols, "repair": repair });
    if args.trials > 0 {
        let summary = random_trials(&code, args.trials, seed, Exec::default())?;
        ok &= summary.exact == summary.trials;
        out["trials"] = serde_json::to_value(summary).expect("summary serializes");
    }
    Ok(Rendered { name: "exact-repair", json: out, table: Some(table), ok })
}

fn parse_z(text: &str, links: &[Link]) -> CliResult<Vec<Rational>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
    if !text.contains("->") {
        if parts.len() != links.len() {
            return Err(CliError::Config(format!("--z has {} values for {} links", parts.len(), links.len())));
        }
        return parts.iter().map(|p| rational_arg("z", p)).collect();
    }
    let mut z = vec![Rational::default(); links.len()];
    for part in parts {
        let (link, value) = part.split_once('=').ok_or_else(|| CliError::Config(format!("--z: expected i->j=v, got {part}")))?;
        let (i, j) = link.split_once("->").ok_or_else(|| CliError::Config(format!("--z: bad link {link}")))?;
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| CliError::Config(format!("--z: bad node {s}")));
        let l = Link::new(parse(i)?, parse(j)?);
        let pos = links.iter().position(|x| *x == l).ok_or_else(|| CliError::Config(format!("--z: {l} is not a repair link")))?;
        z[pos] = rational_arg("z", value)?;
    }
    Ok(z)
}

fn verify(spec: &NetworkSpec, text: &str) -> CliResult<Rendered> {
    let opt = optimize(spec)?;
    let links = &opt.constraints.edge_index;
    let values = parse_z(text, links)?;
    if values.iter().any(|v| *v < Rational::default()) {
        return Err(CliError::Config("--z: values must be nonnegative".into()));
    }
    let z = Subgraph::new(links.clone(), values)?;
    let feasible = check_feasible(&opt.constraints, &z)?;
    let cost = z.cost(&link_costs(spec, links));
    let out = json!({
        "feasible": feasible,
        "cost": fmt_rational(&cost),
        "lp_value": fmt_rational(&opt.solution.value),
        "baseline": fmt_rational(&baseline_cost(spec)?),
        "z": links.iter().zip(&z.values).map(|(l, v)| (l.to_string(), Value::String(fmt_rational(v)))).collect::<serde_json::Map<_, _>>(),
    });
    Ok(Rendered { name: "verify", json: out, table: None, ok: feasible })
}

fn fixture_suite() -> Rendered {
    let rows = run_fixture_suite(Exec::default());
    let ok = rows.iter().all(|r| r.pass);
    let values: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut v = serde_json::to_value(r).expect("row serializes");
            v["status"] = json!(if r.pass { "PASS" } else { "FAIL" });
            v
        })
        .collect();
    let table = Table::from_objects(&values, &["name", "quantity", "expected", "got", "status"]);
    Rendered { name: "fixtures", json: Value::Array(values), table: Some(table), ok }
}

fn run(cli: &Cli) -> CliResult<Rendered> {
    let started = cli.timing.then(Instant::now);
    match &cli.command {
        Command::Topology { action: TopologyAction::Gen { spec } } => {
            let spec = spec.build()?;
            let json = serde_json::to_value(&spec).expect("spec serializes");
            Ok(Rendered { name: "topology", json, table: None, ok: true })
        }
        Command::Constraints { spec, level } => constraints(&spec.build()?, *level),
        Command::Solve { spec, granularity } => solve(&spec.build()?, *granularity),
        Command::Bounds { spec } => bounds(spec),
        Command::Code { spec } => code(&spec.build()?, cli.seed, 0, "code", started),
        Command::Simulate { spec, stages, runs } => simulate(&spec.build()?, cli.seed, *stages, *runs, started),
        Command::ExactRepair(args) => exact(args, cli.seed),
        Command::Verify { spec, z } => verify(&spec.build()?, z),
        Command::Fixtures => Ok(fixture_suite()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(rendered) => {
            let body = rendered.render(cli.format);
            print!("{body}");
            if let Some(dir) = &cli.out {
                if let Err(e) = rendered.write_to(dir, cli.format, &body) {
                    eprintln!("error: writing to {}: {e}", dir.display());
                    return ExitCode::from(1);
                }
            }
            if rendered.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
