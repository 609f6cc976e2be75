use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbrp_core::instance::{Geometry, Location, RoadEdge, RoadNetwork};
use sbrp_core::metric::Metric;
use sbrp_core::pipeline::{brute_force_oracle, run, solve, Solution, SolveParams};
use sbrp_core::synthetic::{generate, SyntheticConfig};
use sbrp_core::tsp::TspMode;
use sbrp_core::Instance;

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn assert_well_formed(sol: &Solution, inst: &Instance) {
    assert!(sol.service_counts(inst).iter().all(|&c| c == 1), "{}", sol.instance);
    assert!(rel_close(sol.audit_cost(inst), sol.total_cost, 1e-6));
    assert_eq!(sol.bus_count, sol.bus_routes.len());
    assert_eq!(sol.students_alt, sol.alt_assignments.len());
    for r in &sol.bus_routes {
        assert!(r.travel_time <= inst.params.t_max + 1e-9);
        assert!(r.student_count() as u32 <= inst.params.capacity);
    }
}

#[test]
fn exact_pipeline_matches_partition_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for case in 0..40 {
        let n = rng.gen_range(1..=8);
        let cap = rng.gen_range(1..=4);
        let mut inst = generate(&SyntheticConfig::tiny(1000 + case, n, cap));
        if case % 4 == 0 {
            inst.params.fleet_limit = Some(rng.gen_range(0..3));
        }
        let oracle = brute_force_oracle(&inst, TspMode::Exact { limit: 12 }).unwrap();
        let got = solve(&inst, &SolveParams::exact()).unwrap();
        assert!(
            rel_close(got.total_cost, oracle.total_cost, 1e-9),
            "case {case}: {} vs {}",
            got.total_cost,
            oracle.total_cost
        );
        assert_well_formed(&got, &inst);
        assert_well_formed(&oracle, &inst);
    }
}

#[test]
fn disabled_alternates_put_everyone_on_a_bus() {
    for seed in 0..10 {
        let mut inst = generate(&SyntheticConfig::tiny(seed, 7, 3));
        inst.costs.disable_alternates();
        let sol = solve(&inst, &SolveParams::exact()).unwrap();
        assert_eq!(sol.students_alt, 0);
        assert_well_formed(&sol, &inst);
    }
}

#[test]
fn compressed_runs_still_serve_everyone_once() {
    for seed in 0..6 {
        let inst = generate(&SyntheticConfig {
            seed,
            students: 40,
            stops: 25,
            capacity: 8,
            t_max: 900.0,
            ..Default::default()
        });
        for (beta, gamma) in [(None, None), (Some(1.3), None), (Some(1.5), Some(0.3))] {
            let params = SolveParams {
                beta,
                gamma,
                ..Default::default()
            };
            let r = run(&inst, &params).unwrap();
            assert_well_formed(&r.solution, &inst);
            if let Some(p) = &r.pruned {
                assert!(p.is_subgraph_of(&r.network));
            }
        }
    }
}

#[test]
fn pruning_never_lowers_the_optimum() {
    for seed in 0..4 {
        let inst = generate(&SyntheticConfig::tiny(200 + seed, 9, 3));
        let full = solve(&inst, &SolveParams::exact()).unwrap();
        for beta in [1.1, 1.5, 2.5] {
            let pruned = solve(
                &inst,
                &SolveParams {
                    beta: Some(beta),
                    ..SolveParams::exact()
                },
            )
            .unwrap();
            assert!(pruned.total_cost >= full.total_cost - 1e-9);
        }
    }
}

#[test]
fn solution_json_round_trips() {
    let inst = generate(&SyntheticConfig::tiny(3, 6, 3));
    let sol = solve(&inst, &SolveParams::exact()).unwrap();
    let back = Solution::from_json(&sol.to_json()).unwrap();
    assert_eq!(back, sol);
    assert_eq!(back.to_json(), sol.to_json());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn instance_json_round_trips(
        seed in 0u64..10_000,
        students in 1usize..30,
        stops in 0usize..10,
        disable in any::<bool>(),
        unbounded in any::<bool>(),
    ) {
        let mut inst = generate(&SyntheticConfig { seed, students, stops, ..Default::default() });
        if disable {
            inst.costs.disable_alternates();
        }
        if unbounded {
            inst.params.t_max = f64::INFINITY;
        }
        let text = inst.to_json_string();
        let back = Instance::from_json_str(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(back.to_json_string(), text);
    }
}

/// Random strongly connected road graph: a bidirectional ring plus chords.
fn random_roads(rng: &mut ChaCha8Rng, n: usize) -> RoadNetwork {
    let nodes: Vec<Location> = (0..n)
        .map(|i| Location {
            id: 10 + i as u64,
            x: rng.gen_range(0.0..1000.0),
            y: rng.gen_range(0.0..1000.0),
        })
        .collect();
    let mut edges = Vec::new();
    let mut add = |a: usize, b: usize, rng: &mut ChaCha8Rng| {
        let len = rng.gen_range(10.0..500.0);
        let class = ["motorway", "primary", "residential"][rng.gen_range(0..3)];
        edges.push(RoadEdge {
            from: 10 + a as u64,
            to: 10 + b as u64,
            length: len,
            time: None,
            class: Some(class.into()),
        });
    };
    for i in 0..n {
        add(i, (i + 1) % n, rng);
        add((i + 1) % n, i, rng);
    }
    for _ in 0..n {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b {
            add(a, b, rng);
        }
    }
    RoadNetwork { nodes, edges }
}

fn floyd_warshall(net: &RoadNetwork, weight: impl Fn(&RoadEdge) -> f64) -> Vec<Vec<f64>> {
    let n = net.nodes.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in &net.edges {
        let (a, b) = ((e.from - 10) as usize, (e.to - 10) as usize);
        d[a][b] = d[a][b].min(weight(e));
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

#[test]
fn road_metric_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for _ in 0..20 {
        let n = rng.gen_range(3..25);
        let net = random_roads(&mut rng, n);
        let ids: Vec<u64> = net.nodes.iter().map(|l| l.id).collect();
        let m = Metric::shortest_paths(&net, &ids);
        let dist = floyd_warshall(&net, |e| e.length);
        let time = floyd_warshall(&net, |e| e.travel_time());
        for i in 0..n {
            for j in 0..n {
                assert!(rel_close(m.dist(i, j), dist[i][j], 1e-12));
                assert!(rel_close(m.time(i, j), time[i][j], 1e-12));
                for k in 0..n {
                    assert!(m.dist(i, k) <= m.dist(i, j) + m.dist(j, k) + 1e-9);
                }
            }
        }
    }
}

#[test]
fn road_instances_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let net = random_roads(&mut rng, 12);
    let mut inst = generate(&SyntheticConfig::tiny(4, 5, 3));
    inst.students
        .iter_mut()
        .enumerate()
        .for_each(|(i, s)| s.home = 11 + i as u64);
    inst.school = 10;
    inst.depot = 10;
    inst.geometry = Geometry::Network(net);
    inst.params.t_max = f64::INFINITY;
    inst.validate().unwrap();
    let oracle = brute_force_oracle(&inst, TspMode::Exact { limit: 12 }).unwrap();
    let got = solve(&inst, &SolveParams::exact()).unwrap();
    assert!(rel_close(got.total_cost, oracle.total_cost, 1e-9));
    assert_well_formed(&got, &inst);
}
