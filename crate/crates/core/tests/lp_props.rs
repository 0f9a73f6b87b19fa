use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use repairopt::bounds::{closed_form, tandem_lower_bound};
use repairopt::fixtures;
use repairopt::lp::{brute_force_optimum, optimize, solve_min_cost, vertex_denominator, verify_dual};
use repairopt::netmodel::{baseline_cost, build_topology, CostMatrix, NetworkSpec, NodeId, StorageParams, Topology};
use repairopt::ratio::{frac, int, Cost, Rational};

fn random_spec(rng: &mut ChaCha8Rng) -> NetworkSpec {
    loop {
        let n = rng.gen_range(4..=5);
        let k = rng.gen_range(2..n);
        let mut cost = CostMatrix::empty(n);
        let mut links = 0;
        for i in 1..=n {
            for j in i + 1..=n {
                if links < 8 && (j == i + 1 || rng.gen_bool(0.3)) {
                    cost.set(NodeId(i), NodeId(j), Cost::Finite(int(rng.gen_range(1..5))));
                    links += 1;
                }
            }
        }
        let alpha = int(rng.gen_range(1..=3));
        let params = StorageParams {
            k,
            d: None,
            file_size: &alpha * int(k as i64),
            alpha,
            failed: NodeId(n),
            helpers: None,
        };
        if let Ok(spec) = build_topology(&Topology::Custom(cost), n, &params) {
            if repairopt::flowgraph::build_flow_graph(&spec).is_ok() {
                return spec;
            }
        }
    }
}

#[test]
fn simplex_agrees_with_grid_search_and_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for _ in 0..40 {
        let spec = random_spec(&mut rng);
        let opt = optimize(&spec).unwrap();
        let (cs, costs, sol) = (&opt.constraints, &opt.costs, &opt.solution);
        assert!(verify_dual(cs, costs, sol));
        assert!(sol.value <= baseline_cost(&spec).unwrap());
        let g = vertex_denominator(sol).to_u32().unwrap();
        let cap = cs.rhs.iter().max().cloned().unwrap_or_else(|| int(0));
        if let Ok(Some(best)) = brute_force_optimum(cs, costs, g, &cap) {
            assert_eq!(best, sol.value);
            checked += 1;
        }
    }
    assert!(checked >= 30, "only {checked} instances fit the search limit");
}

#[test]
fn scaling_costs_scales_value() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..20 {
        let spec = random_spec(&mut rng);
        let opt = optimize(&spec).unwrap();
        let lambda = frac(rng.gen_range(1..9), rng.gen_range(1..5));
        let scaled: Vec<Rational> = opt.costs.iter().map(|c| c * &lambda).collect();
        let again = solve_min_cost(&opt.constraints, &scaled).unwrap();
        assert_eq!(again.value, &opt.solution.value * &lambda);
        assert_eq!(opt.solution.z_star.cost(&scaled), again.value);
    }
}

#[test]
fn solves_are_deterministic() {
    for spec in [fixtures::grid23(), fixtures::complete5(Some(int(3))), fixtures::star6(3, int(6), int(2))] {
        let a = optimize(&spec).unwrap().solution;
        let b = optimize(&spec).unwrap().solution;
        assert_eq!(a, b);
    }
}

#[test]
fn tandem_closed_form_at_every_position() {
    for n in 4..=6 {
        for k in 2..=3 {
            for alpha in [int(1), int(2), frac(3, 2)] {
                let file_size = &alpha * int(k as i64);
                for failed in 1..=n {
                    let spec = fixtures::tandem(n, k, file_size.clone(), alpha.clone(), NodeId(failed));
                    let value = optimize(&spec).unwrap().solution.value;
                    assert_eq!(value, tandem_lower_bound(k, &file_size, &alpha), "n={n} k={k} failed={failed}");
                    assert_eq!(closed_form(&spec), Some(value));
                }
            }
        }
    }
}

#[test]
fn star_closed_form_for_leaf_failures() {
    for k in 2..=4 {
        for alpha in [int(1), int(2), int(3)] {
            let file_size = &alpha * int(k as i64);
            for failed in [1, 3, 6] {
                let spec = fixtures::star(6, NodeId(2), NodeId(failed), k, file_size.clone(), alpha.clone());
                let value = optimize(&spec).unwrap().solution.value;
                assert_eq!(Some(value), closed_form(&spec), "k={k} failed={failed}");
            }
        }
    }
}
