use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use repairopt::coder::{init_code, plan_repair, simulate_many, verify_rcp_with, CodeParams};
use repairopt::exact::{init_vandermonde, random_trials};
use repairopt::fixtures;
use repairopt::flowgraph::{build_flow_graph, enumerate_raw_cuts_with};
use repairopt::lp::{brute_force_optimum_with, optimize, vertex_denominator};
use repairopt::netmodel::{build_topology, NodeId, StorageParams, Topology, TopologyKind};
use repairopt::par::Exec;
use repairopt::ratio::int;
use num_traits::ToPrimitive;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn cuts(c: &mut Criterion) {
    let params = StorageParams {
        k: 4,
        d: None,
        alpha: int(1),
        file_size: int(4),
        failed: NodeId(8),
        helpers: None,
    };
    let spec = build_topology(&Topology::Generated(TopologyKind::Complete { new_link_cost: None }), 8, &params).unwrap();
    let fg = build_flow_graph(&spec).unwrap();
    let mut group = c.benchmark_group("cut_enumeration_complete8");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| enumerate_raw_cuts_with(black_box(&fg), &spec, exec).unwrap())
        });
    }
    group.finish();
}

fn rank_checks(c: &mut Criterion) {
    let spec = fixtures::grid23();
    let plan = plan_repair(&spec).unwrap();
    let state = init_code(&spec, CodeParams::for_plan(&plan), 3).unwrap();
    let mut group = c.benchmark_group("verify_rcp_grid");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| verify_rcp_with(black_box(&state), exec)));
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let spec = fixtures::grid23();
    let opt = optimize(&spec).unwrap();
    let g = vertex_denominator(&opt.solution).to_u32().unwrap();
    let cap = opt.constraints.rhs.iter().max().cloned().unwrap();
    let mut group = c.benchmark_group("brute_force_grid");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| brute_force_optimum_with(&opt.constraints, &opt.costs, g, &cap, exec).unwrap())
        });
    }
    group.finish();
}

fn simulations(c: &mut Criterion) {
    let spec = fixtures::tandem4();
    let seeds: Vec<u64> = (0..16).collect();
    let mut group = c.benchmark_group("simulate_tandem_16x5");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| simulate_many(&spec, 5, black_box(&seeds), exec).unwrap())
        });
    }
    group.finish();

    let code = init_vandermonde(8, 4, 11, None).unwrap();
    let mut group = c.benchmark_group("exact_trials_8_4");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| random_trials(&code, 1000, black_box(5), exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, cuts, rank_checks, oracle, simulations);
criterion_main!(benches);
