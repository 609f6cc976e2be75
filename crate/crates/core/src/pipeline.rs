//! End-to-end solve, the exhaustive reference solver, stop splitting and
//! parameter sweeps.

use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::compression::{build_network, prune_edges, select_stops, ShareabilityNetwork, StopPlan};
use crate::cover::{
    repair_to_partition, solve_cover, solve_external, CoverOptions, CoverProblem, CoverStatus, DEFAULT_TIME_LIMIT,
};
use crate::error::{Result, SbrpError};
use crate::instance::{Instance, NodeId, METERS_PER_MILE};
use crate::metric::{compute_metric, Metric};
use crate::trips::{enumerate_trips, EnumerationOptions, TripEvaluator, TripKind, TripList, DEFAULT_TRIP_CAP};
use crate::tsp::{PickupNode, RouteContext, TspMode};

pub const DEFAULT_VIRTUAL_WALK: f64 = 0.5 * METERS_PER_MILE;
pub const ORACLE_LIMIT: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Internal,
    /// Shell command given the LP and solution file paths as arguments.
    External(String),
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            _ if s == "internal" => Ok(SolverChoice::Internal),
            Some(("external", cmd)) if !cmd.trim().is_empty() => Ok(SolverChoice::External(cmd.to_string())),
            _ => Err(format!("expected `internal` or `external:<command>`, got {s:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    /// Edge-compression budget factor; `None` keeps every edge.
    pub beta: Option<f64>,
    /// Quasi-clique tolerance; `None` grows cliques only.
    pub gamma: Option<f64>,
    /// Radius within which door-to-door students may be attached to a stop.
    pub virtual_walk: f64,
    /// Pick up at selected stops rather than at every home. Ignored when the
    /// instance lists no candidate stops.
    pub node_compression: bool,
    pub tsp: TspMode,
    /// Largest stop load after splitting. Stops above capacity are always
    /// split at capacity.
    pub split_cap: Option<u32>,
    pub trip_cap: usize,
    pub time_limit: Option<Duration>,
    pub gap: f64,
    pub node_limit: Option<u64>,
    pub solver: SolverChoice,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            beta: None,
            gamma: None,
            virtual_walk: DEFAULT_VIRTUAL_WALK,
            node_compression: true,
            tsp: TspMode::Insertion,
            split_cap: None,
            trip_cap: DEFAULT_TRIP_CAP,
            time_limit: Some(DEFAULT_TIME_LIMIT),
            gap: 0.0,
            node_limit: None,
            solver: SolverChoice::Internal,
        }
    }
}

impl SolveParams {
    /// No compression of any kind and exact routing.
    pub fn exact() -> Self {
        SolveParams {
            node_compression: false,
            tsp: TspMode::Exact {
                limit: crate::tsp::DEFAULT_EXACT_LIMIT,
            },
            time_limit: None,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteStop {
    pub node: NodeId,
    /// Student ids boarding here.
    pub students: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusRoute {
    /// Pickup order; the school follows the last stop.
    pub stops: Vec<RouteStop>,
    pub travel_time: f64,
    pub distance: f64,
    pub cost: f64,
}

impl BusRoute {
    pub fn student_count(&self) -> usize {
        self.stops.iter().map(|s| s.students.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AltAssignment {
    pub student: u32,
    pub mode: String,
    pub distance: f64,
    pub cost: f64,
}

/// Wall-clock seconds per stage. Never serialized and ignored by equality,
/// so solutions compare and print identically across runs.
#[derive(Clone, Debug, Default)]
pub struct Timings(pub Vec<(String, f64)>);

impl PartialEq for Timings {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Timings {
    pub fn total(&self) -> f64 {
        self.0.iter().map(|t| t.1).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Bus trips enumerated.
    pub trip_count: usize,
    /// Pickup nodes after compression and splitting.
    pub stop_count: usize,
    pub network_edges: usize,
    pub pruned_edges: usize,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub status: CoverStatus,
    pub lower_bound: f64,
    pub gap: f64,
    pub bb_nodes: u64,
    #[serde(skip)]
    pub timings: Timings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub instance: String,
    pub total_cost: f64,
    pub bus_count: usize,
    pub students_alt: usize,
    pub bus_routes: Vec<BusRoute>,
    pub alt_assignments: Vec<AltAssignment>,
    pub diagnostics: Diagnostics,
}

impl Solution {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> Result<Solution> {
        Ok(serde_json::from_str(text)?)
    }

    /// Total cost recomputed from route distances and instance rates.
    pub fn audit_cost(&self, instance: &Instance) -> f64 {
        let unit = instance.params.unit;
        let buses: f64 = self
            .bus_routes
            .iter()
            .map(|r| instance.costs.bus_cost(r.distance, unit))
            .sum();
        let alts: f64 = self
            .alt_assignments
            .iter()
            .map(|a| {
                instance
                    .costs
                    .alt_cost(instance.costs.alt_per_mile[&a.mode], a.distance, unit)
            })
            .sum();
        buses + alts
    }

    /// Times each student id is served; every entry should be 1.
    pub fn service_counts(&self, instance: &Instance) -> Vec<usize> {
        let pos: std::collections::HashMap<u32, usize> =
            instance.students.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
        let mut cnt = vec![0; instance.students.len()];
        for r in &self.bus_routes {
            for st in &r.stops {
                for s in &st.students {
                    cnt[pos[s]] += 1;
                }
            }
        }
        for a in &self.alt_assignments {
            cnt[pos[&a.student]] += 1;
        }
        cnt
    }
}

/// Everything a solve produced, for inspection and export.
pub struct Run {
    pub solution: Solution,
    pub metric: Metric,
    pub plan: StopPlan,
    pub pickups: Vec<PickupNode>,
    pub network: ShareabilityNetwork,
    pub pruned: Option<ShareabilityNetwork>,
    pub trips: TripList,
}

impl Run {
    /// Coordinates of each pickup node, for drawing.
    pub fn pickup_coords(&self) -> Vec<(f64, f64)> {
        self.pickups.iter().map(|p| self.metric.coords(p.location)).collect()
    }
}

/// Splits every stop with more than `n_max` students into co-located stops
/// of at most `n_max`, filling them in student order.
pub fn split_stops(plan: &StopPlan, n_max: u32) -> StopPlan {
    let n_max = n_max.max(1) as usize;
    let mut stops = Vec::with_capacity(plan.stops.len());
    for stop in &plan.stops {
        if stop.students.len() <= n_max {
            stops.push(stop.clone());
            continue;
        }
        let mut students = stop.students.clone();
        students.sort_unstable();
        for chunk in students.chunks(n_max) {
            let mut part = stop.clone();
            part.students = chunk.to_vec();
            part.detours.retain(|d| chunk.contains(&d.student));
            stops.push(part);
        }
    }
    StopPlan { stops }
}

fn stage(timings: &mut Timings, name: &str, clock: &mut Clock) {
    timings.0.push((name.to_string(), clock.elapsed().as_secs_f64()));
    *clock = Clock::start();
}

pub fn solve(instance: &Instance, params: &SolveParams) -> Result<Solution> {
    Ok(run(instance, params)?.solution)
}

/// Metric, stop plan and shareability networks: everything before trip
/// enumeration.
pub struct Prepared {
    pub metric: Metric,
    pub plan: StopPlan,
    pub pickups: Vec<PickupNode>,
    pub network: ShareabilityNetwork,
    pub pruned: Option<ShareabilityNetwork>,
}

impl Prepared {
    /// Coordinates of each pickup node, for drawing.
    pub fn pickup_coords(&self) -> Vec<(f64, f64)> {
        self.pickups.iter().map(|p| self.metric.coords(p.location)).collect()
    }
}

pub fn prepare(instance: &Instance, params: &SolveParams) -> Result<Prepared> {
    prepare_timed(instance, params, &mut Timings::default(), &mut Clock::start())
}

fn prepare_timed(
    instance: &Instance,
    params: &SolveParams,
    timings: &mut Timings,
    clock: &mut Clock,
) -> Result<Prepared> {
    instance.validate()?;
    if let Some(b) = params.beta {
        if !(b > 1.0) {
            return Err(SbrpError::Parameter(format!("beta must exceed 1, got {b}")));
        }
    }
    let metric = compute_metric(instance)?;
    stage(timings, "metric", clock);

    let mut plan = if params.node_compression && !instance.stops.is_empty() {
        select_stops(instance, &metric, params.virtual_walk)?
    } else {
        StopPlan::door_to_door(instance)
    };
    if let Some(cap) = params.split_cap {
        plan = split_stops(&plan, cap);
    }
    plan = split_stops(&plan, instance.params.capacity);
    stage(timings, "stops", clock);

    let pickups = plan.pickup_nodes(instance, &metric);
    let school = metric.idx(instance.school);
    let ctx = RouteContext::new(&metric, &pickups, school);
    let eval = TripEvaluator::new(instance, ctx, params.tsp);
    let network = build_network(&eval);
    let pruned = match params.beta {
        Some(beta) => {
            let locs: Vec<usize> = pickups.iter().map(|p| p.location).collect();
            Some(prune_edges(
                &network,
                &metric,
                &locs,
                school,
                beta,
                instance.params.capacity,
            )?)
        }
        None => None,
    };
    stage(timings, "network", clock);
    Ok(Prepared {
        metric,
        plan,
        pickups,
        network,
        pruned,
    })
}

pub fn run(instance: &Instance, params: &SolveParams) -> Result<Run> {
    let mut timings = Timings::default();
    let mut clock = Clock::start();
    let Prepared {
        metric,
        plan,
        pickups,
        network,
        pruned,
    } = prepare_timed(instance, params, &mut timings, &mut clock)?;
    let ctx = RouteContext::new(&metric, &pickups, metric.idx(instance.school));
    let eval = TripEvaluator::new(instance, ctx, params.tsp);

    let opts = EnumerationOptions {
        gamma: params.gamma,
        trip_cap: params.trip_cap,
    };
    let mut trips = enumerate_trips(pruned.as_ref().unwrap_or(&network), &eval, &opts)?;
    let trip_count = trips.bus_trip_count();
    trips.add_alternates(instance, &metric);
    stage(&mut timings, "trips", &mut clock);

    let problem = CoverProblem::from_trips(&trips, instance.students.len(), instance.params.fleet_limit);
    let cover = match &params.solver {
        SolverChoice::Internal => solve_cover(
            &problem,
            &CoverOptions {
                time_limit: params.time_limit,
                gap_limit: params.gap,
                node_limit: params.node_limit,
                ..Default::default()
            },
        ),
        SolverChoice::External(cmd) => {
            let dir = std::env::temp_dir().join(format!("sbrp-{}", std::process::id()));
            std::fs::create_dir_all(&dir)?;
            let out = solve_external(&problem, cmd, &dir);
            let _ = std::fs::remove_dir_all(&dir);
            out?
        }
    };
    if cover.status == CoverStatus::Infeasible {
        return Err(match cover.infeasible_element {
            Some(e) => SbrpError::Infeasible {
                student: instance.students[e as usize].id,
            },
            None => SbrpError::Unsolved(match instance.params.fleet_limit {
                Some(k) => format!("no cover found within the limits using at most {k} buses"),
                None => "no cover found within the search limits".into(),
            }),
        });
    }
    let cover = repair_to_partition(&cover, &mut trips, &eval);
    stage(&mut timings, "cover", &mut clock);

    let mut solution = assemble(instance, &metric, &pickups, &trips, &cover.chosen);
    solution.diagnostics = Diagnostics {
        trip_count,
        stop_count: pickups.len(),
        network_edges: network.edge_count(),
        pruned_edges: pruned.as_ref().map_or(network.edge_count(), |p| p.edge_count()),
        beta: params.beta,
        gamma: params.gamma,
        status: cover.status,
        lower_bound: cover.lower_bound,
        gap: cover.gap,
        bb_nodes: cover.nodes,
        timings,
    };
    Ok(Run {
        solution,
        metric,
        plan,
        pickups,
        network,
        pruned,
        trips,
    })
}

fn assemble(
    instance: &Instance,
    metric: &Metric,
    pickups: &[PickupNode],
    trips: &TripList,
    chosen: &[usize],
) -> Solution {
    let mut bus_routes = Vec::new();
    let mut alt_assignments = Vec::new();
    let mut total_cost = 0.0;
    for &id in chosen {
        let t = trips.get(id);
        total_cost += t.cost;
        match &t.kind {
            TripKind::Bus => bus_routes.push(BusRoute {
                stops: t
                    .route
                    .iter()
                    .map(|&n| {
                        let p = &pickups[n as usize];
                        let mut students: Vec<u32> =
                            p.students.iter().map(|&s| instance.students[s as usize].id).collect();
                        students.sort_unstable();
                        RouteStop {
                            node: metric.node_id(p.location),
                            students,
                        }
                    })
                    .collect(),
                travel_time: t.travel_time,
                distance: t.distance,
                cost: t.cost,
            }),
            TripKind::Alternate { mode, student } => alt_assignments.push(AltAssignment {
                student: instance.students[*student as usize].id,
                mode: mode.clone(),
                distance: t.distance,
                cost: t.cost,
            }),
        }
    }
    bus_routes.sort_by_key(|r: &BusRoute| r.stops.iter().flat_map(|s| s.students.iter().copied()).min());
    alt_assignments.sort_by_key(|a| a.student);
    Solution {
        instance: instance.name.clone(),
        total_cost,
        bus_count: bus_routes.len(),
        students_alt: alt_assignments.len(),
        bus_routes,
        alt_assignments,
        diagnostics: Diagnostics {
            trip_count: 0,
            stop_count: 0,
            network_edges: 0,
            pruned_edges: 0,
            beta: None,
            gamma: None,
            status: CoverStatus::Optimal,
            lower_bound: total_cost,
            gap: 0.0,
            bb_nodes: 0,
            timings: Timings::default(),
        },
    }
}

/// Advances a restricted growth string; false after the last one.
fn next_rgs(rgs: &mut [usize]) -> bool {
    for i in (1..rgs.len()).rev() {
        let prefix_max = rgs[..i].iter().copied().max().unwrap_or(0);
        if rgs[i] <= prefix_max {
            rgs[i] += 1;
            rgs[i + 1..].iter_mut().for_each(|v| *v = 0);
            return true;
        }
    }
    false
}

/// Exhaustive reference: every partition of the students into groups, each
/// group either one bus trip (when feasible) or all its members on their
/// cheapest alternate mode, under the fleet limit. Door-to-door pickups,
/// no compression.
pub fn brute_force_oracle(instance: &Instance, tsp: TspMode) -> Result<Solution> {
    instance.validate()?;
    let n = instance.students.len();
    if n > ORACLE_LIMIT {
        return Err(SbrpError::OracleGuard {
            size: n,
            limit: ORACLE_LIMIT,
        });
    }
    let metric = compute_metric(instance)?;
    let plan = StopPlan::door_to_door(instance);
    let pickups = plan.pickup_nodes(instance, &metric);
    let school = metric.idx(instance.school);
    let ctx = RouteContext::new(&metric, &pickups, school);
    let eval = TripEvaluator::new(instance, ctx, tsp);

    let full = (1usize << n) - 1;
    let mut bus: Vec<Option<crate::trips::TripConfiguration>> = vec![None; full + 1];
    for (mask, slot) in bus.iter_mut().enumerate().skip(1) {
        let set: Vec<u32> = (0..n as u32).filter(|&i| mask >> i & 1 == 1).collect();
        if ctx.load(&set) > instance.params.capacity {
            continue;
        }
        let (route, time) = eval.evaluate_set(&set);
        if eval.fits(time, ctx.load(&set)) {
            *slot = Some(eval.bus_trip(route, time));
        }
    }
    // cheapest alternate per student
    let mut alt: Vec<Option<(String, f64, f64)>> = vec![None; n];
    for (i, s) in instance.students.iter().enumerate() {
        let d = metric.dist(metric.idx(s.home), school);
        for (mode, rate) in instance.costs.enabled_modes() {
            let c = instance.costs.alt_cost(rate, d, instance.params.unit);
            if alt[i].as_ref().is_none_or(|a| c < a.2) {
                alt[i] = Some((mode.to_string(), d, c));
            }
        }
    }
    let alt_cost = |mask: usize| -> f64 {
        (0..n)
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| alt[i].as_ref().map_or(f64::INFINITY, |a| a.2))
            .sum()
    };
    let fleet = instance.params.fleet_limit.map_or(usize::MAX, |k| k as usize);

    // restricted growth strings enumerate each set partition once
    let mut rgs = vec![0usize; n];
    let mut best: Option<(f64, Vec<(usize, bool)>)> = None;
    let mut parts = vec![0usize; n];
    loop {
        let blocks = rgs.iter().max().map_or(0, |&m| m + 1);
        parts[..blocks].iter_mut().for_each(|p| *p = 0);
        for (i, &b) in rgs.iter().enumerate() {
            parts[b] |= 1 << i;
        }
        let mut base = 0.0;
        let mut must_bus: Vec<usize> = Vec::new();
        let mut optional: Vec<(f64, usize)> = Vec::new();
        let mut ok = true;
        for &mask in &parts[..blocks] {
            let a = alt_cost(mask);
            match &bus[mask] {
                Some(t) if !a.is_finite() => {
                    base += t.cost;
                    must_bus.push(mask);
                }
                Some(t) => {
                    base += a;
                    if t.cost < a {
                        optional.push((a - t.cost, mask));
                    }
                }
                None if a.is_finite() => base += a,
                None => ok = false,
            }
        }
        if ok && must_bus.len() <= fleet {
            optional.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            let take = optional.len().min(fleet - must_bus.len());
            let cost = base - optional[..take].iter().map(|o| o.0).sum::<f64>();
            if best.as_ref().is_none_or(|b| cost < b.0) {
                let mut choice: Vec<(usize, bool)> = parts[..blocks].iter().map(|&m| (m, false)).collect();
                for c in choice.iter_mut() {
                    c.1 = must_bus.contains(&c.0) || optional[..take].iter().any(|o| o.1 == c.0);
                }
                best = Some((cost, choice));
            }
        }
        if !next_rgs(&mut rgs) {
            break;
        }
    }

    let Some((_, choice)) = best else {
        return Err(SbrpError::Unsolved("no assignment satisfies the limits".into()));
    };
    let mut list = TripList::default();
    let mut chosen = Vec::new();
    for (mask, is_bus) in choice {
        if is_bus {
            chosen.push(list.insert_bus(bus[mask].clone().expect("feasible part")));
        } else {
            for i in (0..n).filter(|&i| mask >> i & 1 == 1) {
                let (mode, distance, cost) = alt[i].clone().expect("enabled mode");
                chosen.push(list.push_alternate(crate::trips::TripConfiguration {
                    route: Vec::new(),
                    node_set: Vec::new(),
                    students: vec![i as u32],
                    travel_time: metric.time(metric.idx(instance.students[i].home), school),
                    distance,
                    cost,
                    kind: TripKind::Alternate {
                        mode,
                        student: i as u32,
                    },
                }));
            }
        }
    }
    let mut solution = assemble(instance, &metric, &pickups, &list, &chosen);
    solution.diagnostics.trip_count = list.bus_trip_count();
    solution.diagnostics.stop_count = pickups.len();
    Ok(solution)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Beta,
    Gamma,
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "beta" => Ok(SweepParam::Beta),
            "gamma" => Ok(SweepParam::Gamma),
            other => Err(format!("unknown sweep parameter {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub objective: Option<f64>,
    pub bus_count: Option<usize>,
    pub trip_count: Option<usize>,
    pub status: String,
    #[serde(skip)]
    pub seconds: f64,
}

/// One solve per grid value of `param`, the rest taken from `base`.
/// A failed point is reported in its row rather than aborting the sweep.
pub fn sweep(instance: &Instance, base: &SolveParams, param: SweepParam, grid: &[f64]) -> Result<Vec<SweepRow>> {
    for &v in grid {
        match param {
            SweepParam::Beta if !(v > 1.0) => {
                return Err(SbrpError::Parameter(format!("beta grid values must exceed 1, got {v}")))
            }
            SweepParam::Gamma if !(0.0..1.0).contains(&v) => {
                return Err(SbrpError::Parameter(format!(
                    "gamma grid values must lie in [0, 1), got {v}"
                )))
            }
            _ => {}
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &v in grid {
        let mut p = base.clone();
        match param {
            SweepParam::Beta => p.beta = Some(v),
            SweepParam::Gamma => p.gamma = Some(v),
        }
        let clock = Clock::start();
        let row = match solve(instance, &p) {
            Ok(s) => SweepRow {
                value: v,
                objective: Some(s.total_cost),
                bus_count: Some(s.bus_count),
                trip_count: Some(s.diagnostics.trip_count),
                status: format!("{:?}", s.diagnostics.status).to_lowercase(),
                seconds: clock.elapsed().as_secs_f64(),
            },
            Err(e) => SweepRow {
                value: v,
                objective: None,
                bus_count: None,
                trip_count: None,
                status: e.to_string(),
                seconds: clock.elapsed().as_secs_f64(),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compression::PlannedStop;
    use crate::synthetic::{generate, SyntheticConfig};

    #[test]
    fn restricted_growth_counts_bell_numbers() {
        for (n, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (6, 203)] {
            let mut rgs = vec![0; n];
            let mut count = 1;
            while next_rgs(&mut rgs) {
                count += 1;
            }
            assert_eq!(count, bell);
        }
    }

    fn stop(students: &[u32]) -> PlannedStop {
        PlannedStop {
            location: 7,
            students: students.to_vec(),
            detours: Vec::new(),
        }
    }

    #[test]
    fn split_twelve_by_five() {
        let plan = StopPlan {
            stops: vec![stop(&(0..12).collect::<Vec<_>>())],
        };
        assert_eq!(split_stops(&plan, 5).load(), vec![5, 5, 2]);
    }

    #[test]
    fn split_is_noop_under_cap() {
        let plan = StopPlan {
            stops: vec![stop(&[0, 1]), stop(&[2])],
        };
        assert_eq!(split_stops(&plan, 2), plan);
    }

    #[test]
    fn solver_choice_parsing() {
        assert_eq!("internal".parse::<SolverChoice>(), Ok(SolverChoice::Internal));
        assert_eq!(
            "external:cbc-wrap --quiet".parse::<SolverChoice>(),
            Ok(SolverChoice::External("cbc-wrap --quiet".into()))
        );
        assert!("external:".parse::<SolverChoice>().is_err());
    }

    #[test]
    fn single_student_bus_only() {
        let mut inst = generate(&SyntheticConfig::tiny(3, 1, 2));
        inst.costs.disable_alternates();
        let s = solve(&inst, &SolveParams::exact()).unwrap();
        assert_eq!(s.bus_count, 1);
        let m = compute_metric(&inst).unwrap();
        let d = m.dist(m.idx(inst.students[0].home), m.idx(inst.school));
        assert!((s.total_cost - (60.0 + d)).abs() < 1e-9);
    }

    #[test]
    fn oracle_prefers_cheap_alternate() {
        let mut inst = generate(&SyntheticConfig::tiny(4, 1, 2));
        inst.costs.alt_per_mile.insert("dedicated".into(), 0.01);
        let s = brute_force_oracle(&inst, TspMode::Exact { limit: 12 }).unwrap();
        assert_eq!(s.students_alt, 1);
        assert_eq!(s.bus_count, 0);
    }

    #[test]
    fn oracle_guard() {
        let inst = generate(&SyntheticConfig::tiny(5, 11, 2));
        assert!(matches!(
            brute_force_oracle(&inst, TspMode::Insertion),
            Err(SbrpError::OracleGuard { size: 11, .. })
        ));
    }

    #[test]
    fn oracle_matches_solve_small() {
        for seed in 0..10 {
            let inst = generate(&SyntheticConfig::tiny(seed, 6, 3));
            let a = solve(&inst, &SolveParams::exact()).unwrap();
            let b = brute_force_oracle(&inst, TspMode::Exact { limit: 12 }).unwrap();
            assert!(
                (a.total_cost - b.total_cost).abs() <= 1e-9 * b.total_cost,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn sweep_single_point() {
        let inst = generate(&SyntheticConfig::tiny(1, 5, 3));
        let rows = sweep(&inst, &SolveParams::exact(), SweepParam::Gamma, &[0.2]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].objective.is_some());
    }
}
