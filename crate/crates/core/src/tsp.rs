//! Open path-TSP over pickup nodes ending at the school.
//!
//! A route `[n1, .., nk]` takes `sum service(ni) + sum t(ni, ni+1) + t(nk, school)`
//! seconds, where `service` is the stop dwell plus any door-to-door round trips
//! attached to the node. There is no leg before the first pickup.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbrpError};
use crate::metric::Metric;

/// A pickup request: a bus stop or, without node compression, a home.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PickupNode {
    /// Metric index of the location.
    pub location: usize,
    /// Student indices boarding here.
    pub students: Vec<u32>,
    /// Dwell time plus door-to-door detours, seconds.
    pub service_time: f64,
    /// Door-to-door round-trip distance charged to the bus.
    pub extra_distance: f64,
}

impl PickupNode {
    pub fn load(&self) -> u32 {
        self.students.len() as u32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum TspMode {
    /// Linear-time insertion into a stored parent route.
    Insertion,
    /// Subset DP for sets up to `limit` nodes, insertion beyond.
    Exact { limit: usize },
}

pub const DEFAULT_EXACT_LIMIT: usize = 12;

#[derive(Clone, Copy)]
pub struct RouteContext<'a> {
    pub metric: &'a Metric,
    pub nodes: &'a [PickupNode],
    /// Metric index of the school.
    pub school: usize,
}

impl<'a> RouteContext<'a> {
    pub fn new(metric: &'a Metric, nodes: &'a [PickupNode], school: usize) -> Self {
        RouteContext { metric, nodes, school }
    }

    #[inline]
    fn loc(&self, n: u32) -> usize {
        self.nodes[n as usize].location
    }

    /// Travel time between two pickup nodes.
    #[inline]
    pub fn t(&self, a: u32, b: u32) -> f64 {
        self.metric.time(self.loc(a), self.loc(b))
    }

    #[inline]
    pub fn t_school(&self, a: u32) -> f64 {
        self.metric.time(self.loc(a), self.school)
    }

    #[inline]
    pub fn service(&self, a: u32) -> f64 {
        self.nodes[a as usize].service_time
    }

    pub fn route_time(&self, route: &[u32]) -> f64 {
        let Some(&last) = route.last() else {
            return 0.0;
        };
        let mut total = 0.0;
        for w in route.windows(2) {
            total += self.service(w[0]) + self.t(w[0], w[1]);
        }
        total + self.service(last) + self.t_school(last)
    }

    pub fn route_distance(&self, route: &[u32]) -> f64 {
        let Some(&last) = route.last() else {
            return 0.0;
        };
        let m = self.metric;
        let mut total = 0.0;
        for w in route.windows(2) {
            total += self.nodes[w[0] as usize].extra_distance + m.dist(self.loc(w[0]), self.loc(w[1]));
        }
        total + self.nodes[last as usize].extra_distance + m.dist(self.loc(last), self.school)
    }

    pub fn load(&self, set: &[u32]) -> u32 {
        set.iter().map(|&n| self.nodes[n as usize].load()).sum()
    }
}

/// Inserts `new` into `route` at the cheapest of the `len + 1` positions,
/// keeping the relative order of the existing nodes.
///
/// `route_time` must be the time of `route`. Ties go to the earliest
/// position. The returned time is recomputed along the returned order.
pub fn insertion_path_tsp(ctx: &RouteContext<'_>, route: &[u32], route_time: f64, new: u32) -> (Vec<u32>, f64) {
    if route.is_empty() {
        let r = vec![new];
        let t = ctx.route_time(&r);
        return (r, t);
    }
    let n = route.len();
    let mut best_pos = 0;
    let mut best = ctx.t(new, route[0]) + route_time;
    for i in 1..=n {
        let prev = route[i - 1];
        let delta = if i == n {
            ctx.t(prev, new) + ctx.t_school(new) - ctx.t_school(prev)
        } else {
            let next = route[i];
            ctx.t(prev, new) + ctx.t(new, next) - ctx.t(prev, next)
        };
        let cand = delta + route_time;
        if cand < best {
            best = cand;
            best_pos = i;
        }
    }
    let mut out = Vec::with_capacity(n + 1);
    out.extend_from_slice(&route[..best_pos]);
    out.push(new);
    out.extend_from_slice(&route[best_pos..]);
    let t = ctx.route_time(&out);
    (out, t)
}

/// Optimal open path over `set` ending at the school, by DP over subsets.
pub fn exact_path_tsp(ctx: &RouteContext<'_>, set: &[u32], limit: usize) -> Result<(Vec<u32>, f64)> {
    let k = set.len();
    if k > limit || k > 20 {
        return Err(SbrpError::ExactLimit {
            size: k,
            limit: limit.min(20),
        });
    }
    if k == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let full = (1usize << k) - 1;
    // best[mask * k + j]: cheapest path covering mask, starting anywhere, ending at j
    let mut best = vec![f64::INFINITY; (full + 1) * k];
    let mut parent = vec![u8::MAX; (full + 1) * k];
    for j in 0..k {
        best[(1 << j) * k + j] = ctx.service(set[j]);
    }
    for mask in 1..=full {
        for j in 0..k {
            let cur = best[mask * k + j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for nx in 0..k {
                if mask & (1 << nx) != 0 {
                    continue;
                }
                let m2 = mask | (1 << nx);
                let cand = cur + ctx.t(set[j], set[nx]) + ctx.service(set[nx]);
                if cand < best[m2 * k + nx] {
                    best[m2 * k + nx] = cand;
                    parent[m2 * k + nx] = j as u8;
                }
            }
        }
    }
    let mut end = 0;
    let mut total = f64::INFINITY;
    for j in 0..k {
        let cand = best[full * k + j] + ctx.t_school(set[j]);
        if cand < total {
            total = cand;
            end = j;
        }
    }
    let mut order = Vec::with_capacity(k);
    let mut mask = full;
    let mut j = end;
    loop {
        order.push(set[j]);
        let p = parent[mask * k + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.reverse();
    let t = ctx.route_time(&order);
    Ok((order, t))
}
