//! Feasible trip generation over the shareability network.
//!
//! Trips grow one node at a time from feasible trips of the previous size.
//! A candidate must pass the clique test (or its gamma-relaxed version)
//! against the parent it extends, then the ride-time and capacity check.
//! After each level, every new trip's route with one stop removed is
//! offered back to the smaller trips, which keeps the list downward closed
//! and the stored times monotone under set inclusion.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compression::ShareabilityNetwork;
use crate::error::{Result, SbrpError};
use crate::instance::{CostModel, DistanceUnit, Instance};
use crate::metric::Metric;
use crate::tsp::{exact_path_tsp, insertion_path_tsp, RouteContext, TspMode};

pub const DEFAULT_TRIP_CAP: usize = 5_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum TripKind {
    Bus,
    /// One student carried directly from home to school.
    Alternate {
        mode: String,
        student: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripConfiguration {
    /// Pickup order; the school follows the last entry. Empty for alternates.
    pub route: Vec<u32>,
    /// Pickup nodes, ascending.
    pub node_set: Vec<u32>,
    /// Student indices, ascending.
    pub students: Vec<u32>,
    pub travel_time: f64,
    pub distance: f64,
    pub cost: f64,
    pub kind: TripKind,
}

impl TripConfiguration {
    pub fn is_bus(&self) -> bool {
        matches!(self.kind, TripKind::Bus)
    }

    pub fn load(&self) -> u32 {
        self.students.len() as u32
    }
}

/// Route evaluation plus the feasibility and cost rules of one instance.
#[derive(Clone, Copy)]
pub struct TripEvaluator<'a> {
    pub ctx: RouteContext<'a>,
    pub t_max: f64,
    pub capacity: u32,
    pub costs: &'a CostModel,
    pub unit: DistanceUnit,
    pub mode: TspMode,
}

impl<'a> TripEvaluator<'a> {
    pub fn new(instance: &'a Instance, ctx: RouteContext<'a>, mode: TspMode) -> Self {
        TripEvaluator {
            ctx,
            t_max: instance.params.t_max,
            capacity: instance.params.capacity,
            costs: &instance.costs,
            unit: instance.params.unit,
            mode,
        }
    }

    pub fn fits(&self, time: f64, load: u32) -> bool {
        time <= self.t_max && load <= self.capacity
    }

    /// Route for `set` from scratch: subset DP in exact mode within its
    /// limit, otherwise successive insertion in ascending node order.
    pub fn evaluate_set(&self, set: &[u32]) -> (Vec<u32>, f64) {
        if let TspMode::Exact { limit } = self.mode {
            if let Ok(r) = exact_path_tsp(&self.ctx, set, limit) {
                return r;
            }
        }
        let mut route = Vec::new();
        let mut time = 0.0;
        for &n in set {
            (route, time) = insertion_path_tsp(&self.ctx, &route, time, n);
        }
        (route, time)
    }

    pub fn pair_feasible(&self, a: u32, b: u32) -> bool {
        if self.ctx.load(&[a, b]) > self.capacity {
            return false;
        }
        let (_, t) = self.evaluate_set(&[a, b]);
        t <= self.t_max
    }

    pub fn bus_trip(&self, route: Vec<u32>, travel_time: f64) -> TripConfiguration {
        let distance = self.ctx.route_distance(&route);
        let mut node_set = route.clone();
        node_set.sort_unstable();
        let mut students: Vec<u32> = node_set
            .iter()
            .flat_map(|&n| self.ctx.nodes[n as usize].students.iter().copied())
            .collect();
        students.sort_unstable();
        TripConfiguration {
            cost: self.costs.bus_cost(distance, self.unit),
            route,
            node_set,
            students,
            travel_time,
            distance,
            kind: TripKind::Bus,
        }
    }
}

/// Membership test for trip growth: true iff `candidate` is adjacent to
/// every member of `trip`.
pub fn clique_check(trip: &[u32], candidate: u32, network: &ShareabilityNetwork) -> bool {
    trip.iter().all(|&m| network.has_edge(m, candidate))
}

/// Relaxed membership test: rejects only when more than `gamma * |trip|`
/// members are not adjacent to `candidate`.
pub fn quasi_clique_check(trip: &[u32], candidate: u32, network: &ShareabilityNetwork, gamma: f64) -> bool {
    let missing = trip.iter().filter(|&&m| !network.has_edge(m, candidate)).count();
    !(missing as f64 > gamma * trip.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationOptions {
    /// Quasi-clique tolerance; `None` requires cliques.
    pub gamma: Option<f64>,
    pub trip_cap: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            gamma: None,
            trip_cap: DEFAULT_TRIP_CAP,
        }
    }
}

/// Bus trips grouped by size, followed by alternate-mode trips.
#[derive(Clone, Debug, Default)]
pub struct TripList {
    trips: Vec<TripConfiguration>,
    by_set: HashMap<Vec<u32>, usize>,
    levels: Vec<Vec<usize>>,
    alt_start: Option<usize>,
}

impl TripList {
    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    pub fn get(&self, id: usize) -> &TripConfiguration {
        &self.trips[id]
    }

    pub fn trips(&self) -> &[TripConfiguration] {
        &self.trips
    }

    pub fn bus_trip_count(&self) -> usize {
        self.by_set.len()
    }

    pub fn find(&self, node_set: &[u32]) -> Option<usize> {
        self.by_set.get(node_set).copied()
    }

    /// Bus trip ids with `k` pickup nodes.
    pub fn with_size(&self, k: usize) -> &[usize] {
        self.levels.get(k.wrapping_sub(1)).map_or(&[], Vec::as_slice)
    }

    pub fn max_size(&self) -> usize {
        self.levels.len()
    }

    /// Adds a bus trip, or returns the id of the stored trip with the same
    /// node set.
    pub fn insert_bus(&mut self, trip: TripConfiguration) -> usize {
        if let Some(&id) = self.by_set.get(&trip.node_set) {
            return id;
        }
        let id = self.trips.len();
        let k = trip.node_set.len();
        if self.levels.len() < k {
            self.levels.resize(k, Vec::new());
        }
        self.levels[k - 1].push(id);
        self.by_set.insert(trip.node_set.clone(), id);
        self.trips.push(trip);
        id
    }

    fn replace_route(&mut self, id: usize, trip: TripConfiguration) {
        debug_assert_eq!(self.trips[id].node_set, trip.node_set);
        self.trips[id] = trip;
    }

    pub fn push_alternate(&mut self, trip: TripConfiguration) -> usize {
        debug_assert!(!trip.is_bus());
        self.alt_start.get_or_insert(self.trips.len());
        self.trips.push(trip);
        self.trips.len() - 1
    }

    /// One trip per student and enabled mode, direct from home to school.
    pub fn add_alternates(&mut self, instance: &Instance, metric: &Metric) {
        let school = metric.idx(instance.school);
        for (si, s) in instance.students.iter().enumerate() {
            let h = metric.idx(s.home);
            let distance = metric.dist(h, school);
            for (mode, rate) in instance.costs.enabled_modes() {
                self.push_alternate(TripConfiguration {
                    route: Vec::new(),
                    node_set: Vec::new(),
                    students: vec![si as u32],
                    travel_time: metric.time(h, school),
                    distance,
                    cost: instance.costs.alt_cost(rate, distance, instance.params.unit),
                    kind: TripKind::Alternate {
                        mode: mode.to_string(),
                        student: si as u32,
                    },
                });
            }
        }
    }

    /// Sorted `node_set<TAB>time<TAB>distance` lines for diffing.
    pub fn dump_text(&self) -> String {
        let mut rows: Vec<(Vec<u32>, String)> = self
            .trips
            .iter()
            .filter(|t| t.is_bus())
            .map(|t| {
                let set = t.node_set.iter().map(u32::to_string).collect::<Vec<_>>().join(",");
                (
                    t.node_set.clone(),
                    format!("{set}\t{:.6}\t{:.6}", t.travel_time, t.distance),
                )
            })
            .collect();
        rows.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        let mut out = String::new();
        for (_, line) in rows {
            let _ = writeln!(out, "{line}");
        }
        out
    }
}

fn without(set: &[u32], x: u32) -> Vec<u32> {
    set.iter().copied().filter(|&v| v != x).collect()
}

fn with(set: &[u32], x: u32) -> Vec<u32> {
    let mut v = Vec::with_capacity(set.len() + 1);
    let pos = set.partition_point(|&s| s < x);
    v.extend_from_slice(&set[..pos]);
    v.push(x);
    v.extend_from_slice(&set[pos..]);
    v
}

/// Level-wise generation of all feasible bus trips on `network`.
pub fn enumerate_trips(
    network: &ShareabilityNetwork,
    evaluator: &TripEvaluator<'_>,
    options: &EnumerationOptions,
) -> Result<TripList> {
    if let Some(g) = options.gamma {
        if !(0.0..=1.0).contains(&g) {
            return Err(SbrpError::Parameter(format!("gamma must lie in [0, 1], got {g}")));
        }
    }
    let ctx = &evaluator.ctx;
    let n = network.node_count() as u32;
    let mut list = TripList::default();

    for v in 0..n {
        let (route, time) = evaluator.evaluate_set(&[v]);
        if evaluator.fits(time, ctx.load(&[v])) {
            list.insert_bus(evaluator.bus_trip(route, time));
        }
    }

    let words = (n as usize).div_ceil(64);
    let mut k = 2;
    loop {
        let parents: Vec<usize> = list.with_size(k - 1).to_vec();
        let mut fresh: Vec<TripConfiguration> = Vec::new();
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut common = vec![0u64; words];

        for &pid in &parents {
            let parent = list.get(pid).node_set.clone();
            let candidates: Vec<u32> = match options.gamma {
                None => {
                    // neighbours shared by every member, above the current max
                    common.copy_from_slice(network.adjacency_bits(parent[0]));
                    for &m in &parent[1..] {
                        for (c, b) in common.iter_mut().zip(network.adjacency_bits(m)) {
                            *c &= b;
                        }
                    }
                    let top = *parent.last().unwrap();
                    (top + 1..n)
                        .filter(|&x| common[x as usize / 64] >> (x % 64) & 1 == 1)
                        .collect()
                }
                Some(g) => (0..n)
                    .filter(|x| parent.binary_search(x).is_err())
                    .filter(|&x| quasi_clique_check(&parent, x, network, g))
                    .collect(),
            };
            for x in candidates {
                let set = with(&parent, x);
                if list.find(&set).is_some() || !seen.insert(set.clone()) {
                    continue;
                }
                if ctx.load(&set) > evaluator.capacity {
                    continue;
                }
                if let Some((route, time)) = evaluate_candidate(&list, evaluator, network, options, &set) {
                    if time <= evaluator.t_max {
                        fresh.push(evaluator.bus_trip(route, time));
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        let mut new_ids = Vec::with_capacity(fresh.len());
        for trip in fresh {
            new_ids.push(list.insert_bus(trip));
        }
        close_downward(&mut list, evaluator, new_ids);
        if list.len() > options.trip_cap {
            return Err(SbrpError::TripCapExceeded { cap: options.trip_cap });
        }
        k += 1;
    }
    Ok(list)
}

/// Best route for `set` over every stored parent that admits the missing
/// node, or the exact optimum when the evaluator allows it.
fn evaluate_candidate(
    list: &TripList,
    evaluator: &TripEvaluator<'_>,
    network: &ShareabilityNetwork,
    options: &EnumerationOptions,
    set: &[u32],
) -> Option<(Vec<u32>, f64)> {
    if let TspMode::Exact { limit } = evaluator.mode {
        if set.len() <= limit {
            return exact_path_tsp(&evaluator.ctx, set, limit).ok();
        }
    }
    let mut best: Option<(Vec<u32>, f64)> = None;
    for &y in set {
        let rest = without(set, y);
        let Some(pid) = list.find(&rest) else {
            continue;
        };
        if let Some(g) = options.gamma {
            if !quasi_clique_check(&rest, y, network, g) {
                continue;
            }
        }
        let parent = list.get(pid);
        let (route, time) = insertion_path_tsp(&evaluator.ctx, &parent.route, parent.travel_time, y);
        if best.as_ref().is_none_or(|b| time < b.1) {
            best = Some((route, time));
        }
    }
    best
}

/// Offers each trip's one-stop-shorter sub-routes to the smaller trips:
/// missing subsets are added, slower stored routes are replaced, and
/// changes propagate down to singletons.
fn close_downward(list: &mut TripList, evaluator: &TripEvaluator<'_>, new_ids: Vec<usize>) {
    let ctx = &evaluator.ctx;
    let mut queue: VecDeque<usize> = new_ids.into();
    while let Some(id) = queue.pop_front() {
        let route = list.get(id).route.clone();
        if route.len() < 2 {
            continue;
        }
        for pos in 0..route.len() {
            let mut sub = route.clone();
            sub.remove(pos);
            let time = ctx.route_time(&sub);
            let mut key = sub.clone();
            key.sort_unstable();
            match list.find(&key) {
                Some(sid) => {
                    if time < list.get(sid).travel_time {
                        list.replace_route(sid, evaluator.bus_trip(sub, time));
                        queue.push_back(sid);
                    }
                }
                None => {
                    if evaluator.fits(time, ctx.load(&key)) {
                        let sid = list.insert_bus(evaluator.bus_trip(sub, time));
                        queue.push_back(sid);
                    }
                }
            }
        }
    }
}
