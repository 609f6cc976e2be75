//! Seeded random instances on the plane, for tests, benchmarks and the demo.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{
    CostModel, DistanceUnit, Geometry, Instance, Location, Params, PointSet, StopDelay, Student, METERS_PER_MILE,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub students: usize,
    /// Candidate stops drawn at random; more are added where a walking
    /// student would otherwise have none in range.
    pub stops: usize,
    /// Side of the square service area.
    pub side: f64,
    /// Homes are drawn around this many neighbourhood centres.
    pub clusters: usize,
    pub speed: f64,
    pub capacity: u32,
    pub t_max: f64,
    pub max_walk: f64,
    /// Fraction of students picked up at home.
    pub door_to_door: f64,
    pub stop_delay: StopDelay,
    pub costs: CostModel,
    pub unit: DistanceUnit,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 1,
            students: 100,
            stops: 60,
            side: 10_000.0,
            clusters: 6,
            speed: 25.0 * METERS_PER_MILE / 3600.0,
            capacity: 20,
            t_max: 2400.0,
            max_walk: 500.0,
            door_to_door: 0.1,
            stop_delay: StopDelay::default(),
            // dearer than the road-network default so that buses pay off
            // on a compact synthetic area
            costs: CostModel {
                bus_fixed: 120.0,
                bus_per_mile: 1.0,
                alt_per_mile: [("dedicated".to_string(), 6.0)].into(),
            },
            unit: DistanceUnit::Meter,
        }
    }
}

impl SyntheticConfig {
    /// Tiny door-to-door instance on a 100x100 plane with unit speed and
    /// abstract units: every student is its own pickup node.
    pub fn tiny(seed: u64, students: usize, capacity: u32) -> SyntheticConfig {
        SyntheticConfig {
            seed,
            students,
            stops: 0,
            side: 100.0,
            clusters: 2,
            speed: 1.0,
            capacity,
            t_max: 150.0,
            max_walk: 0.0,
            door_to_door: 1.0,
            stop_delay: StopDelay {
                base: 2.0,
                per_student: 1.0,
            },
            costs: CostModel {
                bus_fixed: 60.0,
                bus_per_mile: 1.0,
                alt_per_mile: [("dedicated".to_string(), 1.5)].into(),
            },
            unit: DistanceUnit::Abstract,
        }
    }
}

fn point_in_disc(rng: &mut ChaCha8Rng, cx: f64, cy: f64, r: f64) -> (f64, f64) {
    let a = rng.gen::<f64>() * std::f64::consts::TAU;
    let d = r * rng.gen::<f64>().sqrt();
    (cx + d * a.cos(), cy + d * a.sin())
}

pub fn generate(cfg: &SyntheticConfig) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.side / 2.0;
    let mut nodes = vec![Location {
        id: 0,
        x: half,
        y: half,
    }];
    let centres: Vec<(f64, f64)> = (0..cfg.clusters.max(1))
        .map(|_| (rng.gen_range(0.0..cfg.side), rng.gen_range(0.0..cfg.side)))
        .collect();
    let spread = cfg.side / 6.0;

    let mut students = Vec::with_capacity(cfg.students);
    for i in 0..cfg.students {
        let (cx, cy) = centres[rng.gen_range(0..centres.len())];
        let (x, y) = point_in_disc(&mut rng, cx, cy, spread);
        let id = nodes.len() as u64;
        nodes.push(Location {
            id,
            x: x.clamp(0.0, cfg.side),
            y: y.clamp(0.0, cfg.side),
        });
        let d2d = cfg.max_walk <= 0.0 || rng.gen::<f64>() < cfg.door_to_door;
        students.push(Student {
            id: i as u32,
            home: id,
            max_walk: if d2d { 0.0 } else { cfg.max_walk },
            door_to_door: d2d,
        });
    }

    let mut stops = Vec::new();
    if cfg.stops > 0 {
        for _ in 0..cfg.stops {
            let (cx, cy) = centres[rng.gen_range(0..centres.len())];
            let (x, y) = point_in_disc(&mut rng, cx, cy, spread);
            stops.push(nodes.len() as u64);
            nodes.push(Location {
                id: nodes.len() as u64,
                x: x.clamp(0.0, cfg.side),
                y: y.clamp(0.0, cfg.side),
            });
        }
        // every student needs a stop in range; door-to-door students use
        // the same radius here
        let reach = cfg.max_walk.max(f64::MIN_POSITIVE);
        for s in 0..students.len() {
            let home = nodes[students[s].home as usize].clone();
            let covered = stops.iter().any(|&m| {
                let p = &nodes[m as usize];
                (p.x - home.x).hypot(p.y - home.y) <= reach
            });
            if !covered {
                let (x, y) = point_in_disc(&mut rng, home.x, home.y, reach * 0.9);
                stops.push(nodes.len() as u64);
                nodes.push(Location {
                    id: nodes.len() as u64,
                    x,
                    y,
                });
            }
        }
    }

    Instance {
        name: format!("synthetic-{}-{}", cfg.students, cfg.seed),
        geometry: Geometry::Points(PointSet {
            speed: cfg.speed,
            nodes,
        }),
        students,
        stops,
        school: 0,
        depot: 0,
        params: Params {
            capacity: cfg.capacity,
            t_max: cfg.t_max,
            fleet_limit: None,
            stop_delay: cfg.stop_delay,
            unit: cfg.unit,
        },
        costs: cfg.costs.clone(),
    }
}
