use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbrp_core::compression::{prune_edges, select_stops, ShareabilityNetwork};
use sbrp_core::instance::{Geometry, Instance, Location, Params, PointSet, StopDelay, Student};
use sbrp_core::metric::{compute_metric, Metric};
use sbrp_core::SbrpError;

/// School at node 0, homes from node 1, then candidate stops.
fn walking_instance(homes: &[(f64, f64)], stops: &[(f64, f64)], walk: &[f64]) -> Instance {
    let mut nodes = vec![Location { id: 0, x: 0.0, y: 0.0 }];
    for &(x, y) in homes.iter().chain(stops) {
        nodes.push(Location {
            id: nodes.len() as u64,
            x,
            y,
        });
    }
    Instance {
        name: "walk".into(),
        geometry: Geometry::Points(PointSet { speed: 1.0, nodes }),
        students: homes
            .iter()
            .enumerate()
            .map(|(i, _)| Student {
                id: i as u32,
                home: i as u64 + 1,
                max_walk: walk[i],
                door_to_door: false,
            })
            .collect(),
        stops: (0..stops.len()).map(|k| (homes.len() + 1 + k) as u64).collect(),
        school: 0,
        depot: 0,
        params: Params {
            stop_delay: StopDelay::NONE,
            ..Default::default()
        },
        costs: Default::default(),
    }
}

/// Smallest covering subset of stop ids; among those, the
/// lexicographically smallest sorted id list.
fn brute_force_cover(inst: &Instance, metric: &Metric) -> Option<Vec<u64>> {
    let m = inst.stops.len();
    let reach = |s: usize, stop: u64| {
        let st = &inst.students[s];
        metric.dist(metric.idx(st.home), metric.idx(stop)) <= st.max_walk
    };
    let mut best: Option<Vec<u64>> = None;
    for mask in 0u32..1 << m {
        let pick: Vec<u64> = (0..m).filter(|&k| mask >> k & 1 == 1).map(|k| inst.stops[k]).collect();
        if !(0..inst.students.len()).all(|s| pick.iter().any(|&p| reach(s, p))) {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => pick.len() < b.len() || (pick.len() == b.len() && pick < *b),
        };
        if better {
            best = Some(pick);
        }
    }
    best
}

fn random_instance(rng: &mut ChaCha8Rng, students: usize, stops: usize) -> Instance {
    let homes: Vec<(f64, f64)> = (0..students)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    let cands: Vec<(f64, f64)> = (0..stops)
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    let walk: Vec<f64> = (0..students).map(|_| rng.gen_range(20.0..60.0)).collect();
    walking_instance(&homes, &cands, &walk)
}

#[test]
fn stop_selection_is_minimum_and_lex_smallest() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut checked = 0;
    while checked < 120 {
        let m = rng.gen_range(1..=12);
        let n = rng.gen_range(1..=10);
        let inst = random_instance(&mut rng, n, m);
        let metric = compute_metric(&inst).unwrap();
        let oracle = brute_force_cover(&inst, &metric);
        match select_stops(&inst, &metric, 0.0) {
            Ok(plan) => {
                assert_eq!(Some(plan.selected_stops()), oracle);
                checked += 1;
            }
            Err(SbrpError::UncoveredStudents { .. }) => assert!(oracle.is_none()),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn each_student_boards_at_the_nearest_selected_stop() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, 8, 10);
        let metric = compute_metric(&inst).unwrap();
        let Ok(plan) = select_stops(&inst, &metric, 0.0) else {
            continue;
        };
        let chosen = plan.selected_stops();
        let assign = plan.assignment(inst.students.len());
        for (s, st) in inst.students.iter().enumerate() {
            let h = metric.idx(st.home);
            let at = plan.stops[assign[s]].location;
            let d = metric.dist(h, metric.idx(at));
            assert!(d <= st.max_walk);
            for &other in &chosen {
                let od = metric.dist(h, metric.idx(other));
                if od <= st.max_walk {
                    assert!(d < od || (d == od && at <= other), "student {s}");
                }
            }
        }
    }
}

#[test]
fn one_student_one_stop() {
    let inst = walking_instance(&[(10.0, 0.0)], &[(12.0, 0.0)], &[5.0]);
    let metric = compute_metric(&inst).unwrap();
    let plan = select_stops(&inst, &metric, 0.0).unwrap();
    assert_eq!(plan.selected_stops(), vec![2]);
    assert_eq!(plan.stops[0].students, vec![0]);
}

#[test]
fn three_students_four_stops_match_exhaustive_size() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 3, 4);
        let metric = compute_metric(&inst).unwrap();
        if let Some(best) = brute_force_cover(&inst, &metric) {
            let plan = select_stops(&inst, &metric, 0.0).unwrap();
            assert_eq!(plan.selected_stops().len(), best.len());
        }
    }
}

#[test]
fn unreachable_student_is_reported() {
    let inst = walking_instance(&[(10.0, 0.0), (90.0, 90.0)], &[(12.0, 0.0)], &[5.0, 5.0]);
    let metric = compute_metric(&inst).unwrap();
    match select_stops(&inst, &metric, 0.0) {
        Err(SbrpError::UncoveredStudents { students }) => assert_eq!(students, vec![1]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn door_to_door_detour_is_a_round_trip() {
    let mut inst = walking_instance(&[(10.0, 0.0)], &[(13.0, 4.0)], &[0.0]);
    inst.students[0].door_to_door = true;
    let metric = compute_metric(&inst).unwrap();
    let plan = select_stops(&inst, &metric, 6.0).unwrap();
    assert_eq!(plan.stops[0].penalty_distance(), 10.0);
    assert_eq!(plan.stops[0].penalty_time(), 10.0);
}

/// School at the origin, hub at (10, 0), four leaves around the hub.
/// Capacity 1 and beta 2.5 leave a budget of two unit-weight neighbours.
#[test]
fn star_pruning_by_hand() {
    let pts = [
        (0.0, 0.0),
        (10.0, 0.0),
        (11.0, 0.0),
        (10.0, 2.0),
        (7.0, 0.0),
        (10.0, -4.0),
    ];
    let locs: Vec<Location> = pts
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Location { id: i as u64, x, y })
        .collect();
    let metric = Metric::euclidean(&locs, 1.0);
    // pickups 0..5 sit at metric nodes 1..6; edges: hub 0 to every leaf
    let net = ShareabilityNetwork::from_edges(vec![1; 5], [(0, 1), (0, 2), (0, 3), (0, 4)]);
    // adjusted times from the hub: 1.2, 2.44, 3.0, 5.91, so it keeps
    // leaves 1 and 2; each leaf keeps the hub, and the union restores all
    let kept = prune_edges(&net, &metric, &[1, 2, 3, 4, 5], 0, 2.5, 1).unwrap();
    assert_eq!(kept.edge_count(), 4);

    // a heavy hub fits no leaf budget, so only the hub's own picks remain
    let heavy_hub = ShareabilityNetwork::from_edges(vec![3, 1, 1, 1, 1], [(0, 1), (0, 2), (0, 3), (0, 4)]);
    let kept = prune_edges(&heavy_hub, &metric, &[1, 2, 3, 4, 5], 0, 2.5, 1).unwrap();
    let mut edges: Vec<(u32, u32)> = kept.edges().collect();
    edges.sort_unstable();
    assert_eq!(edges, vec![(0, 1), (0, 2)]);
}
