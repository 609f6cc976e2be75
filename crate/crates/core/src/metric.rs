//! Pairwise distance and travel time over the nodes the pipeline touches:
//! student homes, candidate stops, the school and the depot.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbrpError};
use crate::instance::{Geometry, Instance, Location, NodeId, RoadNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    ShortestPath,
    Euclidean,
}

/// Dense distance/time matrices indexed by a compact node index.
#[derive(Clone, Debug)]
pub struct Metric {
    kind: MetricKind,
    ids: Vec<NodeId>,
    coords: Vec<(f64, f64)>,
    index: HashMap<NodeId, usize>,
    dist: Vec<f64>,
    time: Vec<f64>,
}

impl Metric {
    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Compact index of a node known to be in the metric.
    pub fn idx(&self, id: NodeId) -> usize {
        self.index[&id]
    }

    pub fn node_id(&self, idx: usize) -> NodeId {
        self.ids[idx]
    }

    pub fn coords(&self, idx: usize) -> (f64, f64) {
        self.coords[idx]
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.ids.len() + j]
    }

    #[inline]
    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.time[i * self.ids.len() + j]
    }

    /// Straight-line metric; time is distance divided by `speed`.
    pub fn euclidean(points: &[Location], speed: f64) -> Metric {
        let n = points.len();
        let mut dist = vec![0.0; n * n];
        let mut time = vec![0.0; n * n];
        for (i, a) in points.iter().enumerate() {
            for (j, b) in points.iter().enumerate().skip(i + 1) {
                let d = (a.x - b.x).hypot(a.y - b.y);
                let t = d / speed;
                dist[i * n + j] = d;
                dist[j * n + i] = d;
                time[i * n + j] = t;
                time[j * n + i] = t;
            }
        }
        Metric {
            kind: MetricKind::Euclidean,
            ids: points.iter().map(|p| p.id).collect(),
            coords: points.iter().map(|p| (p.x, p.y)).collect(),
            index: points.iter().enumerate().map(|(i, p)| (p.id, i)).collect(),
            dist,
            time,
        }
    }

    /// Directed shortest-path lengths and times between `targets`, one
    /// Dijkstra search per source and weight. Unreachable pairs are infinite.
    pub fn shortest_paths(network: &RoadNetwork, targets: &[NodeId]) -> Metric {
        let pos: HashMap<NodeId, usize> = network.nodes.iter().enumerate().map(|(i, l)| (l.id, i)).collect();
        let mut adj: Vec<Vec<(usize, f64, f64)>> = vec![Vec::new(); network.nodes.len()];
        for e in &network.edges {
            adj[pos[&e.from]].push((pos[&e.to], e.length, e.travel_time()));
        }
        let n = targets.len();
        let tpos: Vec<usize> = targets.iter().map(|id| pos[id]).collect();
        let mut dist = vec![f64::INFINITY; n * n];
        let mut time = vec![f64::INFINITY; n * n];
        for (i, &src) in tpos.iter().enumerate() {
            let by_len = dijkstra(&adj, src, |e| e.1);
            let by_time = dijkstra(&adj, src, |e| e.2);
            for (j, &dst) in tpos.iter().enumerate() {
                dist[i * n + j] = by_len[dst];
                time[i * n + j] = by_time[dst];
            }
        }
        let coords = tpos.iter().map(|&p| (network.nodes[p].x, network.nodes[p].y)).collect();
        Metric {
            kind: MetricKind::ShortestPath,
            ids: targets.to_vec(),
            coords,
            index: targets.iter().enumerate().map(|(i, &id)| (id, i)).collect(),
            dist,
            time,
        }
    }
}

struct Key(f64);

impl PartialEq for Key {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn dijkstra(adj: &[Vec<(usize, f64, f64)>], src: usize, weight: impl Fn(&(usize, f64, f64)) -> f64) -> Vec<f64> {
    let mut best = vec![f64::INFINITY; adj.len()];
    let mut heap = BinaryHeap::new();
    best[src] = 0.0;
    heap.push(Reverse((Key(0.0), src)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > best[u] {
            continue;
        }
        for e in &adj[u] {
            let nd = d + weight(e);
            if nd < best[e.0] {
                best[e.0] = nd;
                heap.push(Reverse((Key(nd), e.0)));
            }
        }
    }
    best
}

/// The node set the pipeline needs: homes, candidate stops, school, depot.
pub fn relevant_nodes(instance: &Instance) -> Vec<NodeId> {
    let mut ids: Vec<NodeId> = instance
        .students
        .iter()
        .map(|s| s.home)
        .chain(instance.stops.iter().copied())
        .chain([instance.school, instance.depot])
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

pub fn compute_metric(instance: &Instance) -> Result<Metric> {
    let ids = relevant_nodes(instance);
    let metric = match &instance.geometry {
        Geometry::Points(p) => {
            let by_id: HashMap<NodeId, &Location> = p.nodes.iter().map(|l| (l.id, l)).collect();
            let pts: Vec<Location> = ids.iter().map(|id| by_id[id].clone()).collect();
            Metric::euclidean(&pts, p.speed)
        }
        Geometry::Network(net) => Metric::shortest_paths(net, &ids),
    };
    let school = metric.idx(instance.school);
    let depot = metric.idx(instance.depot);
    for i in 0..metric.len() {
        if !metric.time(i, school).is_finite() {
            return Err(SbrpError::Unreachable {
                node: metric.node_id(i),
                target: "the school",
            });
        }
        if !metric.time(i, depot).is_finite() && !metric.time(depot, i).is_finite() {
            return Err(SbrpError::Unreachable {
                node: metric.node_id(i),
                target: "the depot",
            });
        }
    }
    Ok(metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::RoadEdge;

    fn loc(id: NodeId, x: f64, y: f64) -> Location {
        Location { id, x, y }
    }

    #[test]
    fn euclidean_three_four_five() {
        let m = Metric::euclidean(&[loc(10, 0.0, 0.0), loc(20, 3.0, 4.0)], 1.0);
        let (i, j) = (m.idx(10), m.idx(20));
        assert_eq!(m.dist(i, j), 5.0);
        assert_eq!(m.time(i, j), 5.0);
        assert_eq!(m.dist(i, i), 0.0);
        assert_eq!(m.time(j, j), 0.0);
    }

    fn line_graph() -> RoadNetwork {
        let edge = |from, to, time: f64| RoadEdge {
            from,
            to,
            length: time * 10.0,
            time: Some(time),
            class: None,
        };
        RoadNetwork {
            nodes: vec![loc(1, 0.0, 0.0), loc(2, 1.0, 0.0), loc(3, 2.0, 0.0)],
            edges: vec![edge(1, 2, 2.0), edge(2, 1, 2.0), edge(2, 3, 3.0), edge(3, 2, 3.0)],
        }
    }

    #[test]
    fn path_sum_on_line_graph() {
        let m = Metric::shortest_paths(&line_graph(), &[1, 2, 3]);
        assert_eq!(m.time(m.idx(1), m.idx(3)), 5.0);
        assert_eq!(m.dist(m.idx(3), m.idx(1)), 50.0);
        assert_eq!(m.time(m.idx(2), m.idx(2)), 0.0);
        assert_eq!(m.kind(), MetricKind::ShortestPath);
    }

    #[test]
    fn time_and_length_use_separate_searches() {
        let mut net = line_graph();
        // slow but short shortcut 1 -> 3
        net.edges.push(RoadEdge {
            from: 1,
            to: 3,
            length: 5.0,
            time: Some(100.0),
            class: None,
        });
        let m = Metric::shortest_paths(&net, &[1, 3]);
        assert_eq!(m.dist(0, 1), 5.0);
        assert_eq!(m.time(0, 1), 5.0);
    }

    #[test]
    fn unreachable_school_is_named() {
        use crate::instance::*;
        let mut net = line_graph();
        net.nodes.push(loc(4, 9.0, 9.0));
        net.edges.push(RoadEdge {
            from: 3,
            to: 4,
            length: 1.0,
            time: Some(1.0),
            class: None,
        });
        let inst = Instance {
            name: String::new(),
            geometry: Geometry::Network(net),
            students: vec![Student {
                id: 0,
                home: 4,
                max_walk: 0.0,
                door_to_door: true,
            }],
            stops: vec![],
            school: 1,
            depot: 1,
            params: Params::default(),
            costs: CostModel::default(),
        };
        match compute_metric(&inst) {
            Err(SbrpError::Unreachable { node: 4, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
