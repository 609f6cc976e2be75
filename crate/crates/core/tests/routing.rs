//! Path-TSP evaluators against a permutation oracle that works straight from
//! coordinates.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sbrp_core::instance::Location;
use sbrp_core::metric::Metric;
use sbrp_core::tsp::{exact_path_tsp, insertion_path_tsp, PickupNode, RouteContext};

struct Plane {
    pts: Vec<(f64, f64)>,
    service: Vec<f64>,
    school: (f64, f64),
}

impl Plane {
    fn random(rng: &mut ChaCha8Rng, k: usize) -> Plane {
        Plane {
            pts: (0..k)
                .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
                .collect(),
            service: (0..k).map(|_| rng.gen_range(0.0..10.0)).collect(),
            school: (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)),
        }
    }

    fn d(a: (f64, f64), b: (f64, f64)) -> f64 {
        (a.0 - b.0).hypot(a.1 - b.1)
    }

    fn time(&self, order: &[usize]) -> f64 {
        let mut t: f64 = order.iter().map(|&i| self.service[i]).sum();
        for w in order.windows(2) {
            t += Self::d(self.pts[w[0]], self.pts[w[1]]);
        }
        t + Self::d(self.pts[*order.last().unwrap()], self.school)
    }

    fn brute_force(&self) -> f64 {
        fn go(p: &Plane, order: &mut Vec<usize>, used: &mut [bool], best: &mut f64) {
            if order.len() == p.pts.len() {
                *best = best.min(p.time(order));
                return;
            }
            for i in 0..p.pts.len() {
                if !used[i] {
                    used[i] = true;
                    order.push(i);
                    go(p, order, used, best);
                    order.pop();
                    used[i] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(self, &mut Vec::new(), &mut vec![false; self.pts.len()], &mut best);
        best
    }

    fn build(&self) -> (Metric, Vec<PickupNode>) {
        let mut locs: Vec<Location> = self
            .pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Location { id: i as u64, x, y })
            .collect();
        locs.push(Location {
            id: self.pts.len() as u64,
            x: self.school.0,
            y: self.school.1,
        });
        let nodes = (0..self.pts.len())
            .map(|i| PickupNode {
                location: i,
                students: vec![i as u32],
                service_time: self.service[i],
                extra_distance: 0.0,
            })
            .collect();
        (Metric::euclidean(&locs, 1.0), nodes)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn exact_matches_permutation_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let k = rng.gen_range(1..=7);
        let plane = Plane::random(&mut rng, k);
        let (m, nodes) = plane.build();
        let ctx = RouteContext::new(&m, &nodes, k);
        let set: Vec<u32> = (0..k as u32).collect();
        let (route, t) = exact_path_tsp(&ctx, &set, 12).unwrap();
        assert!(close(t, plane.brute_force()), "k={k}");
        let order: Vec<usize> = route.iter().map(|&n| n as usize).collect();
        assert!(close(t, plane.time(&order)));
    }
}

#[test]
fn insertion_never_beats_exact_on_eight_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let k = rng.gen_range(2..=8);
        let plane = Plane::random(&mut rng, k);
        let (m, nodes) = plane.build();
        let ctx = RouteContext::new(&m, &nodes, k);
        let mut route = Vec::new();
        let mut t = 0.0;
        for n in 0..k as u32 {
            (route, t) = insertion_path_tsp(&ctx, &route, t, n);
        }
        let set: Vec<u32> = (0..k as u32).collect();
        let (_, best) = exact_path_tsp(&ctx, &set, 12).unwrap();
        assert!(t >= best - 1e-9);
        let order: Vec<usize> = route.iter().map(|&n| n as usize).collect();
        assert!(close(t, plane.time(&order)), "reported time must match the route");
    }
}

proptest! {
    #[test]
    fn insertion_picks_best_position(seed in 0u64..10_000, k in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plane = Plane::random(&mut rng, k + 1);
        let (m, nodes) = plane.build();
        let ctx = RouteContext::new(&m, &nodes, k + 1);
        let base: Vec<u32> = (0..k as u32).collect();
        let base_time = ctx.route_time(&base);
        let (route, t) = insertion_path_tsp(&ctx, &base, base_time, k as u32);
        // every position, evaluated from scratch
        let best = (0..=k)
            .map(|pos| {
                let mut r: Vec<usize> = (0..k).collect();
                r.insert(pos, k);
                plane.time(&r)
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!(close(t, best));
        // relative order of the old nodes is kept
        let kept: Vec<u32> = route.iter().copied().filter(|&n| n != k as u32).collect();
        prop_assert_eq!(kept, base);
    }
}
