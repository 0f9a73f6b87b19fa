use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repairopt::netmodel::{baseline_cost, build_topology, shortest_path_cost, CostMatrix, NetworkSpec, NodeId, StorageParams, Topology};
use repairopt::ratio::{int, Cost, Rational};

/// Random DAG whose links run from lower to higher ids, the last node failing.
fn random_spec(rng: &mut ChaCha8Rng, n: usize) -> NetworkSpec {
    let mut cost = CostMatrix::empty(n);
    for i in 1..=n {
        for j in i + 1..=n {
            if j == i + 1 || rng.gen_bool(0.4) {
                cost.set(NodeId(i), NodeId(j), Cost::Finite(int(rng.gen_range(1..6))));
            }
        }
    }
    let params = StorageParams { k: 2, d: None, alpha: int(2), file_size: int(4), failed: NodeId(n), helpers: None };
    build_topology(&Topology::Custom(cost), n, &params).unwrap()
}

fn cheapest_simple_path(spec: &NetworkSpec, at: NodeId, to: NodeId, seen: &mut Vec<NodeId>) -> Option<Rational> {
    if at == to {
        return Some(int(0));
    }
    seen.push(at);
    let mut best: Option<Rational> = None;
    for next in (1..=spec.n).map(NodeId) {
        if seen.contains(&next) {
            continue;
        }
        if let Cost::Finite(c) = spec.cost.get(at, next) {
            if next == at {
                continue;
            }
            if let Some(rest) = cheapest_simple_path(spec, next, to, seen) {
                let total = c + rest;
                if best.as_ref().is_none_or(|b| total < *b) {
                    best = Some(total);
                }
            }
        }
    }
    seen.pop();
    best
}

#[test]
fn dijkstra_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..60 {
        let spec = random_spec(&mut rng, 4 + trial % 4);
        let target = spec.failed;
        for from in spec.survivors() {
            let expected = cheapest_simple_path(&spec, from, target, &mut Vec::new());
            match shortest_path_cost(&spec, from, target) {
                Cost::Finite(c) => assert_eq!(Some(c), expected),
                Cost::Infinite => assert_eq!(expected, None),
            }
        }
    }
}

#[test]
fn baseline_sums_helper_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let spec = random_spec(&mut rng, 5);
        let beta = repairopt::bounds::msr_beta(&spec.file_size, spec.k, spec.d).unwrap();
        let sum = spec.helpers.iter().fold(int(0), |acc, h| {
            acc + cheapest_simple_path(&spec, *h, spec.failed, &mut Vec::new()).unwrap()
        });
        assert_eq!(baseline_cost(&spec).unwrap(), beta * sum);
    }
}
