//! Node compression (minimum bus-stop selection and student assignment) and
//! edge compression (per-node budget pruning under adjusted travel time).

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cover::{solve_cover, CoverOptions, CoverProblem, CoverSet, CoverStatus};
use crate::error::{Result, SbrpError};
use crate::instance::{Instance, NodeId};
use crate::metric::Metric;
use crate::trips::TripEvaluator;
use crate::tsp::PickupNode;

/// One pickup point of a plan. Split stops share a location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedStop {
    pub location: NodeId,
    /// Student indices, ascending.
    pub students: Vec<u32>,
    /// Round trips to the homes of door-to-door students boarding here.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detours: Vec<Detour>,
}

/// Stop-to-home-and-back excursion for one door-to-door student.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detour {
    pub student: u32,
    pub time: f64,
    pub distance: f64,
}

impl PlannedStop {
    pub fn penalty_time(&self) -> f64 {
        self.detours.iter().map(|d| d.time).sum()
    }

    pub fn penalty_distance(&self) -> f64 {
        self.detours.iter().map(|d| d.distance).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StopPlan {
    pub stops: Vec<PlannedStop>,
}

impl StopPlan {
    /// Every student picked up at home; no compression.
    pub fn door_to_door(instance: &Instance) -> StopPlan {
        StopPlan {
            stops: instance
                .students
                .iter()
                .enumerate()
                .map(|(i, s)| PlannedStop {
                    location: s.home,
                    students: vec![i as u32],
                    detours: Vec::new(),
                })
                .collect(),
        }
    }

    /// Distinct stop locations in use.
    pub fn selected_stops(&self) -> Vec<NodeId> {
        let set: BTreeSet<NodeId> = self.stops.iter().map(|s| s.location).collect();
        set.into_iter().collect()
    }

    /// `assignment()[student] = plan stop index`.
    pub fn assignment(&self, students: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; students];
        for (k, stop) in self.stops.iter().enumerate() {
            for &s in &stop.students {
                out[s as usize] = k;
            }
        }
        out
    }

    pub fn load(&self) -> Vec<usize> {
        self.stops.iter().map(|s| s.students.len()).collect()
    }

    pub fn student_count(&self) -> usize {
        self.stops.iter().map(|s| s.students.len()).sum()
    }

    /// Pickup nodes with dwell times and door-to-door detours folded in.
    pub fn pickup_nodes(&self, instance: &Instance, metric: &Metric) -> Vec<PickupNode> {
        let delay = instance.params.stop_delay;
        self.stops
            .iter()
            .map(|s| PickupNode {
                location: metric.idx(s.location),
                students: s.students.clone(),
                service_time: delay.at(s.students.len()) + s.penalty_time(),
                extra_distance: s.penalty_distance(),
            })
            .collect()
    }
}

/// Minimum-cardinality stop selection.
///
/// Walking students reach stops within `max_walk`; door-to-door students
/// reach stops within `virtual_walk` and are charged the round trip from the
/// stop to their home. Among minimum covers the lexicographically smallest
/// set of stop ids wins. Each student boards at the nearest selected
/// reachable stop, ties to the lower stop id.
pub fn select_stops(instance: &Instance, metric: &Metric, virtual_walk: f64) -> Result<StopPlan> {
    let mut candidates: Vec<NodeId> = instance.stops.clone();
    candidates.sort_unstable();
    candidates.dedup();
    let radius: Vec<f64> = instance
        .students
        .iter()
        .map(|s| if s.door_to_door { virtual_walk } else { s.max_walk })
        .collect();
    let mut reach: Vec<Vec<u32>> = vec![Vec::new(); candidates.len()];
    let mut uncovered = Vec::new();
    for (si, s) in instance.students.iter().enumerate() {
        let h = metric.idx(s.home);
        let mut any = false;
        for (k, &m) in candidates.iter().enumerate() {
            if metric.dist(h, metric.idx(m)) <= radius[si] {
                reach[k].push(si as u32);
                any = true;
            }
        }
        if !any {
            uncovered.push(s.id);
        }
    }
    if !uncovered.is_empty() {
        return Err(SbrpError::UncoveredStudents { students: uncovered });
    }

    let selected = min_lex_cover(instance.students.len(), &reach);

    let mut stops: Vec<PlannedStop> = selected
        .iter()
        .map(|&k| PlannedStop {
            location: candidates[k],
            students: Vec::new(),
            detours: Vec::new(),
        })
        .collect();
    for (si, s) in instance.students.iter().enumerate() {
        let h = metric.idx(s.home);
        let mut best: Option<(f64, usize)> = None;
        for (pos, &k) in selected.iter().enumerate() {
            let d = metric.dist(h, metric.idx(candidates[k]));
            if d <= radius[si] && best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, pos));
            }
        }
        let (_, pos) = best.expect("cover reaches every student");
        let stop = &mut stops[pos];
        stop.students.push(si as u32);
        if s.door_to_door {
            let m = metric.idx(stop.location);
            stop.detours.push(Detour {
                student: si as u32,
                time: metric.time(m, h) + metric.time(h, m),
                distance: metric.dist(m, h) + metric.dist(h, m),
            });
        }
    }
    Ok(StopPlan { stops })
}

/// Lexicographically smallest minimum cover of `n` students by candidate
/// stops (`reach[k]` = students stop `k` serves). Returns candidate indices.
fn min_lex_cover(n: usize, reach: &[Vec<u32>]) -> Vec<usize> {
    // A stop whose reach is contained in that of a lower-indexed stop can
    // always be swapped for it, so it never appears in the answer.
    let mut keep: Vec<usize> = Vec::new();
    'outer: for k in 0..reach.len() {
        if reach[k].is_empty() {
            continue;
        }
        for &j in &keep {
            if is_subset(&reach[k], &reach[j]) {
                continue 'outer;
            }
        }
        keep.push(k);
    }
    keep.sort_unstable();

    let problem = CoverProblem {
        n_elements: n,
        sets: keep
            .iter()
            .map(|&k| CoverSet {
                elements: reach[k].clone(),
                weight: 1.0,
                bus: false,
            })
            .collect(),
        max_bus_sets: None,
    };
    let base = solve_cover(&problem, &CoverOptions::exact());
    debug_assert_eq!(base.status, CoverStatus::Optimal);
    let size = base.objective.round() as usize;

    // Fix stops in ascending id order whenever a minimum cover remains.
    let mut forced: Vec<usize> = Vec::new();
    let mut forbidden: Vec<usize> = Vec::new();
    let mut covered = vec![false; n];
    for pos in 0..keep.len() {
        if covered.iter().all(|&c| c) {
            break;
        }
        let mut trial = forced.clone();
        trial.push(pos);
        let ok = if trial.len() == size {
            let mut cov = covered.clone();
            for &e in &problem.sets[pos].elements {
                cov[e as usize] = true;
            }
            cov.iter().all(|&c| c)
        } else {
            let opts = CoverOptions {
                forced: trial.clone(),
                forbidden: forbidden.clone(),
                cutoff: Some(size as f64 + 0.5),
                first_solution: true,
                ..CoverOptions::exact()
            };
            let sol = solve_cover(&problem, &opts);
            sol.status != CoverStatus::Infeasible && sol.objective <= size as f64 + 0.5
        };
        if ok {
            for &e in &problem.sets[pos].elements {
                covered[e as usize] = true;
            }
            forced.push(pos);
        } else {
            forbidden.push(pos);
        }
    }
    forced.into_iter().map(|p| keep[p]).collect()
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

/// `delta_ij * t_ij` with detour factor `delta_ij = (t_ij + t_j,school) / t_i,school`.
///
/// Coincident nodes give 0. A node sitting at the school has no direct leg
/// to compare against and ranks every other node at `+inf`.
pub fn adjusted_travel_time(metric: &Metric, i: usize, j: usize, school: usize) -> f64 {
    let t_ij = metric.time(i, j);
    if i == j || t_ij == 0.0 {
        return 0.0;
    }
    let t_is = metric.time(i, school);
    if t_is <= 0.0 {
        return f64::INFINITY;
    }
    let delta = (t_ij + metric.time(j, school)) / t_is;
    delta * t_ij
}

/// Undirected graph over pickup nodes; an edge means the two can share a bus.
#[derive(Clone, Debug, PartialEq)]
pub struct ShareabilityNetwork {
    weights: Vec<u32>,
    adj: Vec<Vec<u32>>,
    bits: Vec<Vec<u64>>,
}

impl ShareabilityNetwork {
    pub fn new(weights: Vec<u32>) -> Self {
        let n = weights.len();
        let words = n.div_ceil(64);
        ShareabilityNetwork {
            weights,
            adj: vec![Vec::new(); n],
            bits: vec![vec![0; words]; n],
        }
    }

    pub fn from_edges(weights: Vec<u32>, edges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut net = ShareabilityNetwork::new(weights);
        for (a, b) in edges {
            net.add_edge(a, b);
        }
        net.finish();
        net
    }

    fn add_edge(&mut self, a: u32, b: u32) {
        if a == b || self.has_edge(a, b) {
            return;
        }
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
        self.bits[a as usize][b as usize / 64] |= 1 << (b % 64);
        self.bits[b as usize][a as usize / 64] |= 1 << (a % 64);
    }

    fn finish(&mut self) {
        for list in &mut self.adj {
            list.sort_unstable();
        }
    }

    pub fn node_count(&self) -> usize {
        self.weights.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, n: u32) -> u32 {
        self.weights[n as usize]
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    #[inline]
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.bits[a as usize][b as usize / 64] >> (b % 64) & 1 == 1
    }

    pub fn neighbors(&self, n: u32) -> &[u32] {
        &self.adj[n as usize]
    }

    pub fn adjacency_bits(&self, n: u32) -> &[u64] {
        &self.bits[n as usize]
    }

    /// Edges `(a, b)` with `a < b`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |&&b| b > a as u32).map(move |&b| (a as u32, b)))
    }

    pub fn is_subgraph_of(&self, other: &ShareabilityNetwork) -> bool {
        self.node_count() == other.node_count() && self.edges().all(|(a, b)| other.has_edge(a, b))
    }

    /// Plain text: `# nodes N edges E`, one `node <id> <weight>` line per
    /// node, then one `<a> <b>` line per edge.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {} edges {}\n", self.node_count(), self.edge_count());
        for (i, w) in self.weights.iter().enumerate() {
            let _ = writeln!(out, "node {i} {w}");
        }
        for (a, b) in self.edges() {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// GraphML with a `weight` attribute per node and optional coordinates.
    pub fn to_graphml(&self, coords: Option<&[(f64, f64)]>) -> String {
        let mut out = String::from(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
             <graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n  \
             <key id=\"weight\" for=\"node\" attr.name=\"weight\" attr.type=\"int\"/>\n  \
             <key id=\"x\" for=\"node\" attr.name=\"x\" attr.type=\"double\"/>\n  \
             <key id=\"y\" for=\"node\" attr.name=\"y\" attr.type=\"double\"/>\n  \
             <graph id=\"shareability\" edgedefault=\"undirected\">\n",
        );
        for (i, w) in self.weights.iter().enumerate() {
            let _ = write!(out, "    <node id=\"n{i}\"><data key=\"weight\">{w}</data>");
            if let Some(c) = coords {
                let _ = write!(
                    out,
                    "<data key=\"x\">{}</data><data key=\"y\">{}</data>",
                    c[i].0, c[i].1
                );
            }
            out.push_str("</node>\n");
        }
        for (k, (a, b)) in self.edges().enumerate() {
            let _ = writeln!(out, "    <edge id=\"e{k}\" source=\"n{a}\" target=\"n{b}\"/>");
        }
        out.push_str("  </graph>\n</graphml>\n");
        out
    }
}

/// One node per pickup; an edge wherever the two-node trip is feasible.
pub fn build_network(evaluator: &TripEvaluator<'_>) -> ShareabilityNetwork {
    let nodes = evaluator.ctx.nodes;
    let weights: Vec<u32> = nodes.iter().map(PickupNode::load).collect();
    let mut net = ShareabilityNetwork::new(weights);
    let n = nodes.len() as u32;
    for a in 0..n {
        for b in (a + 1)..n {
            if evaluator.pair_feasible(a, b) {
                net.add_edge(a, b);
            }
        }
    }
    net.finish();
    net
}

/// Keeps, for every node, the edges to its adjusted-nearest neighbours while
/// their cumulative student count stays within `beta * capacity`. An edge
/// survives when either endpoint keeps it.
pub fn prune_edges(
    network: &ShareabilityNetwork,
    metric: &Metric,
    locations: &[usize],
    school: usize,
    beta: f64,
    capacity: u32,
) -> Result<ShareabilityNetwork> {
    if !(beta > 1.0) {
        return Err(SbrpError::Parameter(format!("beta must exceed 1, got {beta}")));
    }
    let budget = beta * capacity as f64;
    let mut kept = Vec::new();
    for i in 0..network.node_count() as u32 {
        let li = locations[i as usize];
        let mut ranked: Vec<(f64, u32)> = network
            .neighbors(i)
            .iter()
            .map(|&j| (adjusted_travel_time(metric, li, locations[j as usize], school), j))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut used = 0.0;
        for (_, j) in ranked {
            used += network.weight(j) as f64;
            if used > budget {
                break;
            }
            kept.push((i.min(j), i.max(j)));
        }
    }
    Ok(ShareabilityNetwork::from_edges(network.weights.clone(), kept))
}
