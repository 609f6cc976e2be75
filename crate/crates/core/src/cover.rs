//! Weighted set cover by branch-and-bound, repair of overlapping covers into
//! partitions, and LP-format exchange with external solvers.
//!
//! The tree branches on the uncovered element with the fewest usable sets:
//! child `i` takes the `i`-th candidate set and bans the earlier ones, so the
//! children partition the search space. Node bounds come from a Lagrangian
//! relaxation of the covering rows (and the fleet row, when present), warm
//! started from the parent multipliers. The root multipliers start from a
//! dual ascent solution and also drive reduced-cost column fixing.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::error::{Result, SbrpError};
use crate::trips::{TripConfiguration, TripEvaluator, TripList};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSet {
    /// Element ids, ascending.
    pub elements: Vec<u32>,
    pub weight: f64,
    /// Counts against `max_bus_sets`.
    pub bus: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverProblem {
    pub n_elements: usize,
    pub sets: Vec<CoverSet>,
    /// Upper limit on the number of chosen `bus` sets.
    pub max_bus_sets: Option<u32>,
}

impl CoverProblem {
    /// One set per trip, indexed like the list.
    pub fn from_trips(trips: &TripList, n_students: usize, fleet: Option<u32>) -> CoverProblem {
        CoverProblem {
            n_elements: n_students,
            sets: trips
                .trips()
                .iter()
                .map(|t| CoverSet {
                    elements: t.students.clone(),
                    weight: t.cost,
                    bus: t.is_bus(),
                })
                .collect(),
            max_bus_sets: fleet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (j, s) in self.sets.iter().enumerate() {
            if !(s.weight >= 0.0) || !s.weight.is_finite() {
                return Err(SbrpError::Validation(format!(
                    "set {j} has weight {}, expected a finite value >= 0",
                    s.weight
                )));
            }
            if s.elements.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SbrpError::Validation(format!(
                    "set {j} elements are not strictly ascending"
                )));
            }
            if s.elements.iter().any(|&e| e as usize >= self.n_elements) {
                return Err(SbrpError::Validation(format!("set {j} names an element out of range")));
            }
        }
        Ok(())
    }

    pub fn objective(&self, chosen: &[usize]) -> f64 {
        chosen.iter().map(|&j| self.sets[j].weight).sum()
    }

    /// How many chosen sets contain each element.
    pub fn coverage(&self, chosen: &[usize]) -> Vec<u32> {
        let mut cnt = vec![0; self.n_elements];
        for &j in chosen {
            for &e in &self.sets[j].elements {
                cnt[e as usize] += 1;
            }
        }
        cnt
    }

    pub fn is_cover(&self, chosen: &[usize]) -> bool {
        let buses = chosen.iter().filter(|&&j| self.sets[j].bus).count() as u32;
        self.max_bus_sets.is_none_or(|k| buses <= k) && self.coverage(chosen).iter().all(|&c| c >= 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverStatus {
    Optimal,
    FeasibleGap,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverSolution {
    /// Chosen set indices, ascending.
    pub chosen: Vec<usize>,
    pub objective: f64,
    pub status: CoverStatus,
    pub lower_bound: f64,
    /// `(objective - lower_bound) / objective`; zero when proven optimal.
    pub gap: f64,
    pub nodes: u64,
    /// Objective of every improving incumbent, in discovery order.
    pub incumbent_history: Vec<f64>,
    /// An element no usable set contains, when that is why it failed.
    pub infeasible_element: Option<u32>,
}

impl CoverSolution {
    fn infeasible(element: Option<u32>, nodes: u64) -> CoverSolution {
        CoverSolution {
            chosen: Vec::new(),
            objective: f64::INFINITY,
            status: CoverStatus::Infeasible,
            lower_bound: f64::INFINITY,
            gap: f64::INFINITY,
            nodes,
            incumbent_history: Vec::new(),
            infeasible_element: element,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverOptions {
    pub time_limit: Option<Duration>,
    /// Relative gap at which a node is pruned; 0 proves optimality.
    pub gap_limit: f64,
    pub node_limit: Option<u64>,
    /// Sets that must be chosen.
    pub forced: Vec<usize>,
    /// Sets that may not be chosen.
    pub forbidden: Vec<usize>,
    /// Only solutions strictly cheaper than this are sought.
    pub cutoff: Option<f64>,
    /// Stop at the first solution below the cutoff.
    pub first_solution: bool,
}

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(3600);

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            time_limit: Some(DEFAULT_TIME_LIMIT),
            gap_limit: 0.0,
            node_limit: None,
            forced: Vec::new(),
            forbidden: Vec::new(),
            cutoff: None,
            first_solution: false,
        }
    }
}

impl CoverOptions {
    /// No time limit, no gap.
    pub fn exact() -> Self {
        CoverOptions {
            time_limit: None,
            ..Default::default()
        }
    }
}

const FREE: u8 = 0;
const CHOSEN: u8 = 1;
const BANNED: u8 = 2;

const ROOT_ITERS: usize = 400;
const NODE_ITERS: usize = 12;

struct Search<'a> {
    p: &'a CoverProblem,
    opts: &'a CoverOptions,
    /// Sets still in play after root fixing, ascending.
    active: Vec<u32>,
    elem_sets: Vec<Vec<u32>>,
    state: Vec<u8>,
    cover_cnt: Vec<u32>,
    fixed_cost: f64,
    fixed_bus: u32,
    integral: bool,
    ub: f64,
    best: Option<Vec<usize>>,
    history: Vec<f64>,
    nodes: u64,
    clock: Clock,
    stopped: bool,
    // scratch
    x: Vec<u32>,
}

impl<'a> Search<'a> {
    fn fleet_room(&self) -> Option<u32> {
        self.p.max_bus_sets.map(|k| k.saturating_sub(self.fixed_bus))
    }

    fn usable(&self, s: u32) -> bool {
        self.state[s as usize] == FREE && !(self.p.sets[s as usize].bus && self.fleet_room() == Some(0))
    }

    fn choose(&mut self, s: u32) {
        let set = &self.p.sets[s as usize];
        self.state[s as usize] = CHOSEN;
        self.fixed_cost += set.weight;
        self.fixed_bus += set.bus as u32;
        for &e in &set.elements {
            self.cover_cnt[e as usize] += 1;
        }
    }

    fn unchoose(&mut self, s: u32) {
        let set = &self.p.sets[s as usize];
        self.state[s as usize] = FREE;
        self.fixed_cost -= set.weight;
        self.fixed_bus -= set.bus as u32;
        for &e in &set.elements {
            self.cover_cnt[e as usize] -= 1;
        }
    }

    fn reduced_cost(&self, s: u32, u: &[f64], mu: f64) -> f64 {
        let set = &self.p.sets[s as usize];
        let mut rc = set.weight + if set.bus { mu } else { 0.0 };
        for &e in &set.elements {
            if self.cover_cnt[e as usize] == 0 {
                rc -= u[e as usize];
            }
        }
        rc
    }

    /// Lagrangian value at `(u, mu)`; fills `self.x` with the sets of
    /// negative reduced cost.
    fn lagrangian(&mut self, u: &[f64], mu: f64) -> f64 {
        let mut l = self.fixed_cost;
        for (e, &c) in self.cover_cnt.iter().enumerate() {
            if c == 0 {
                l += u[e];
            }
        }
        if let Some(room) = self.fleet_room() {
            l -= mu * room as f64;
        }
        let mut x = std::mem::take(&mut self.x);
        x.clear();
        for &s in &self.active {
            if !self.usable(s) {
                continue;
            }
            let rc = self.reduced_cost(s, u, mu);
            if rc < 0.0 {
                l += rc;
                x.push(s);
            }
        }
        self.x = x;
        l
    }

    fn prunes(&self, lb: f64) -> bool {
        if !self.ub.is_finite() {
            return false;
        }
        let lb = if self.integral { (lb - 1e-6).ceil() } else { lb };
        let tol = 1e-9 * self.ub.abs().max(1.0);
        lb >= self.ub * (1.0 - self.opts.gap_limit) - tol
    }

    /// Subgradient ascent from `(u, mu)`; leaves the best multipliers in
    /// place and returns the best bound seen.
    fn ascend(&mut self, u: &mut Vec<f64>, mu: &mut f64, iters: usize, heuristic: bool) -> f64 {
        let n = self.p.n_elements;
        for (e, ue) in u.iter_mut().enumerate() {
            if self.cover_cnt[e] > 0 {
                *ue = 0.0;
            }
        }
        let mut best = self.lagrangian(u, *mu);
        let mut best_u = u.clone();
        let mut best_mu = *mu;
        let mut step = 2.0;
        let mut stall = 0;
        let patience = if iters > NODE_ITERS { 20 } else { 3 };
        let mut g = vec![0.0; n];
        for it in 0..iters {
            if self.prunes(best) {
                break;
            }
            let l = self.lagrangian(u, *mu);
            if l > best + 1e-12 * best.abs().max(1.0) {
                best = l;
                best_u.clone_from(u);
                best_mu = *mu;
                stall = 0;
            } else {
                stall += 1;
                if stall >= patience {
                    step *= 0.5;
                    stall = 0;
                }
            }
            if heuristic && it % 10 == 0 {
                let start: Vec<usize> = self.x.iter().map(|&s| s as usize).collect();
                self.try_greedy(start);
            }
            for (e, ge) in g.iter_mut().enumerate() {
                *ge = if self.cover_cnt[e] == 0 { 1.0 } else { 0.0 };
            }
            let mut g_mu = 0.0;
            for &s in &self.x {
                let set = &self.p.sets[s as usize];
                for &e in &set.elements {
                    g[e as usize] -= 1.0;
                }
                g_mu += set.bus as u32 as f64;
            }
            if let Some(room) = self.fleet_room() {
                g_mu -= room as f64;
            } else {
                g_mu = 0.0;
            }
            let mut norm = g_mu * g_mu;
            for (e, &ge) in g.iter().enumerate() {
                // a component that would push a zero multiplier negative is inert
                if self.cover_cnt[e] == 0 && !(ge < 0.0 && u[e] <= 0.0) {
                    norm += ge * ge;
                }
            }
            if norm == 0.0 {
                // the relaxed choice is feasible with complementary slackness
                break;
            }
            let target = if self.ub.is_finite() {
                self.ub
            } else {
                l.abs() * 1.05 + 1.0
            };
            let t = step * (target - l).max(1e-9 * target.abs().max(1.0)) / norm;
            for (e, ue) in u.iter_mut().enumerate() {
                if self.cover_cnt[e] == 0 {
                    *ue = (*ue + t * g[e]).max(0.0);
                }
            }
            if self.p.max_bus_sets.is_some() {
                *mu = (*mu + t * g_mu).max(0.0);
            }
            if step < 1e-4 {
                break;
            }
        }
        u.clone_from(&best_u);
        *mu = best_mu;
        best
    }

    /// Records `chosen` as the incumbent when it is a cheaper cover.
    fn offer(&mut self, mut chosen: Vec<usize>) {
        chosen.sort_unstable();
        chosen.dedup();
        let cost = self.p.objective(&chosen);
        if cost < self.ub && self.p.is_cover(&chosen) {
            self.ub = cost;
            self.history.push(cost);
            self.best = Some(chosen);
            if self.opts.first_solution {
                self.stopped = true;
            }
        }
    }

    /// Greedy completion of `start` by weight per newly covered element,
    /// then redundancy removal. Honors forced, banned and fleet limits.
    fn try_greedy(&mut self, start: Vec<usize>) {
        let mut chosen: Vec<usize> = self
            .state
            .iter()
            .enumerate()
            .filter(|&(_, &st)| st == CHOSEN)
            .map(|(j, _)| j)
            .collect();
        let locked = chosen.len();
        let mut taken = vec![false; self.p.sets.len()];
        for &j in &chosen {
            taken[j] = true;
        }
        let mut buses = chosen.iter().filter(|&&j| self.p.sets[j].bus).count() as u32;
        let limit = self.p.max_bus_sets.unwrap_or(u32::MAX);
        let mut covered: Vec<u32> = self.cover_cnt.clone();
        for j in start {
            if !taken[j] && self.state[j] == FREE && (!self.p.sets[j].bus || buses < limit) {
                taken[j] = true;
                buses += self.p.sets[j].bus as u32;
                chosen.push(j);
                for &e in &self.p.sets[j].elements {
                    covered[e as usize] += 1;
                }
            }
        }
        let new_count = |j: usize, covered: &[u32]| {
            self.p.sets[j]
                .elements
                .iter()
                .filter(|&&e| covered[e as usize] == 0)
                .count()
        };
        let ratio = |w: f64, k: usize| w / k as f64;
        let mut heap: BinaryHeap<Reverse<(Key, usize)>> = self
            .active
            .iter()
            .map(|&s| s as usize)
            .filter(|&j| !taken[j] && self.state[j] == FREE)
            .filter_map(|j| {
                let k = new_count(j, &covered);
                (k > 0).then(|| Reverse((Key(ratio(self.p.sets[j].weight, k)), j)))
            })
            .collect();
        let mut left = covered.iter().filter(|&&c| c == 0).count();
        while left > 0 {
            let Some(Reverse((Key(r), j))) = heap.pop() else {
                return;
            };
            if self.p.sets[j].bus && buses >= limit {
                continue;
            }
            let k = new_count(j, &covered);
            if k == 0 {
                continue;
            }
            let fresh = ratio(self.p.sets[j].weight, k);
            if fresh > r {
                heap.push(Reverse((Key(fresh), j)));
                continue;
            }
            chosen.push(j);
            buses += self.p.sets[j].bus as u32;
            for &e in &self.p.sets[j].elements {
                if covered[e as usize] == 0 {
                    left -= 1;
                }
                covered[e as usize] += 1;
            }
        }
        let mut optional: Vec<usize> = chosen[locked..].to_vec();
        optional.sort_by(|&a, &b| self.p.sets[b].weight.total_cmp(&self.p.sets[a].weight).then(b.cmp(&a)));
        for j in optional {
            if self.p.sets[j].elements.iter().all(|&e| covered[e as usize] >= 2) {
                for &e in &self.p.sets[j].elements {
                    covered[e as usize] -= 1;
                }
                chosen.retain(|&c| c != j);
            }
        }
        self.offer(chosen);
    }

    fn out_of_budget(&mut self) -> bool {
        if self.stopped {
            return true;
        }
        if self.opts.node_limit.is_some_and(|n| self.nodes >= n)
            || self.opts.time_limit.is_some_and(|t| self.clock.elapsed() >= t)
        {
            self.stopped = true;
        }
        self.stopped
    }

    fn node(&mut self, parent_u: &[f64], parent_mu: f64) {
        if self.out_of_budget() {
            return;
        }
        self.nodes += 1;
        if self.prunes(self.fixed_cost) {
            return;
        }
        // branching element: fewest usable sets, lowest id
        let mut pick: Option<(usize, u32)> = None;
        for e in 0..self.p.n_elements {
            if self.cover_cnt[e] > 0 {
                continue;
            }
            let cnt = self.elem_sets[e].iter().filter(|&&s| self.usable(s)).count();
            if cnt == 0 {
                return;
            }
            if pick.is_none_or(|(_, c)| cnt < c as usize) {
                pick = Some((e, cnt as u32));
            }
        }
        let Some((e, _)) = pick else {
            let chosen = (0..self.state.len()).filter(|&j| self.state[j] == CHOSEN).collect();
            self.offer(chosen);
            return;
        };

        let mut u = parent_u.to_vec();
        let mut mu = parent_mu;
        let lb = self.ascend(&mut u, &mut mu, NODE_ITERS, false);
        if self.prunes(lb) {
            return;
        }
        if self.x.iter().all(|&s| self.usable(s)) {
            // the relaxed choice may already cover everything
            let mut cand: Vec<usize> = (0..self.state.len()).filter(|&j| self.state[j] == CHOSEN).collect();
            cand.extend(self.x.iter().map(|&s| s as usize));
            if self.p.is_cover(&cand) {
                self.offer(cand);
                if self.prunes(lb) || self.stopped {
                    return;
                }
            }
        }

        let mut kids: Vec<(f64, u32)> = self.elem_sets[e]
            .iter()
            .filter(|&&s| self.usable(s))
            .map(|&s| (self.reduced_cost(s, &u, mu), s))
            .collect();
        kids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut banned = Vec::with_capacity(kids.len());
        for (rc, s) in kids {
            if self.stopped {
                break;
            }
            if self.prunes(lb + rc.max(0.0)) {
                // later siblings have reduced cost at least as large
                break;
            }
            self.choose(s);
            self.node(&u, mu);
            self.unchoose(s);
            self.state[s as usize] = BANNED;
            banned.push(s);
        }
        for s in banned {
            self.state[s as usize] = FREE;
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

/// Dual-feasible multipliers: raise each element's multiplier, in order of
/// fewest sets, to the smallest remaining slack among the sets holding it.
fn dual_ascent(s: &Search<'_>) -> Vec<f64> {
    let n = s.p.n_elements;
    let mut slack: Vec<f64> = s.p.sets.iter().map(|set| set.weight).collect();
    let mut u = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).filter(|&e| s.cover_cnt[e] == 0).collect();
    order.sort_by_key(|&e| (s.elem_sets[e].len(), e));
    for e in order {
        let m = s.elem_sets[e]
            .iter()
            .filter(|&&j| s.usable(j))
            .map(|&j| slack[j as usize])
            .fold(f64::INFINITY, f64::min);
        if !m.is_finite() {
            continue;
        }
        let m = m.max(0.0);
        u[e] = m;
        for &j in &s.elem_sets[e] {
            slack[j as usize] -= m;
        }
    }
    u
}

pub fn solve_cover(problem: &CoverProblem, opts: &CoverOptions) -> CoverSolution {
    let n = problem.n_elements;
    let m = problem.sets.len();
    let mut state = vec![FREE; m];
    for &j in &opts.forbidden {
        state[j] = BANNED;
    }
    let mut search = Search {
        p: problem,
        opts,
        active: Vec::new(),
        elem_sets: vec![Vec::new(); n],
        state,
        cover_cnt: vec![0; n],
        fixed_cost: 0.0,
        fixed_bus: 0,
        integral: problem.sets.iter().all(|s| s.weight.fract() == 0.0),
        ub: opts.cutoff.unwrap_or(f64::INFINITY),
        best: None,
        history: Vec::new(),
        nodes: 0,
        clock: Clock::start(),
        stopped: false,
        x: Vec::new(),
    };
    for &j in &opts.forced {
        if search.state[j] == FREE {
            search.choose(j as u32);
        }
    }
    if problem.max_bus_sets.is_some_and(|k| search.fixed_bus > k) {
        return CoverSolution::infeasible(None, 0);
    }
    for j in 0..m {
        if search.state[j] == FREE
            && problem.sets[j]
                .elements
                .iter()
                .any(|&e| search.cover_cnt[e as usize] == 0)
        {
            search.active.push(j as u32);
            for &e in &problem.sets[j].elements {
                search.elem_sets[e as usize].push(j as u32);
            }
        }
    }
    for e in 0..n {
        if search.cover_cnt[e] == 0 && search.elem_sets[e].is_empty() {
            return CoverSolution::infeasible(Some(e as u32), 0);
        }
    }

    search.try_greedy(Vec::new());
    let mut u = dual_ascent(&search);
    let mut mu = 0.0;
    let root_lb = if search.stopped {
        search.lagrangian(&u, mu)
    } else {
        search.ascend(&mut u, &mut mu, ROOT_ITERS, true)
    };

    // reduced-cost fixing: a set whose inclusion lifts the bound past the
    // incumbent can never improve on it
    if search.ub.is_finite() && !search.stopped {
        search.lagrangian(&u, mu);
        let mut keep = Vec::with_capacity(search.active.len());
        for &s in &search.active {
            let rc = search.reduced_cost(s, &u, mu);
            if rc > 0.0 && search.prunes(root_lb + rc) {
                search.state[s as usize] = BANNED;
            } else {
                keep.push(s);
            }
        }
        search.active = keep;
        for list in &mut search.elem_sets {
            list.retain(|&s| search.state[s as usize] != BANNED);
        }
    }

    if !search.prunes(root_lb) {
        search.node(&u, mu);
    }

    let finished = !search.stopped;
    let nodes = search.nodes;
    let Some(chosen) = search.best else {
        return CoverSolution::infeasible(None, nodes);
    };
    let objective = problem.objective(&chosen);
    let (status, lower_bound) = if finished && opts.gap_limit == 0.0 {
        (CoverStatus::Optimal, objective)
    } else if finished {
        (
            CoverStatus::FeasibleGap,
            root_lb.max(objective * (1.0 - opts.gap_limit)).min(objective),
        )
    } else {
        (CoverStatus::FeasibleGap, root_lb.min(objective))
    };
    let gap = if objective.abs() > 0.0 {
        ((objective - lower_bound) / objective.abs()).max(0.0)
    } else {
        0.0
    };
    CoverSolution {
        chosen,
        objective,
        status,
        lower_bound,
        gap,
        nodes,
        incumbent_history: search.history,
        infeasible_element: None,
    }
}

/// Turns a cover of trips into an exact partition.
///
/// While two chosen trips share students, an alternate-mode trip among them
/// is dropped; between two bus trips, the shared pickups leave the one whose
/// removal saves more per shared student (ties: the later trip). The reduced
/// trip is the cheapest feasible of the stored trip for the remaining set,
/// the original route with the shared pickups skipped, and a fresh
/// evaluation; failing all three it is split into singleton trips.
/// `solution.chosen` must index `trips`; new trips are appended to it.
pub fn repair_to_partition(solution: &CoverSolution, trips: &mut TripList, eval: &TripEvaluator<'_>) -> CoverSolution {
    let mut chosen = solution.chosen.clone();
    while let Some((a, b)) = first_overlap(trips, &chosen) {
        let (ta, tb) = (trips.get(chosen[a]), trips.get(chosen[b]));
        match (ta.is_bus(), tb.is_bus()) {
            (false, _) | (_, false) => {
                let drop = if !tb.is_bus() && (ta.is_bus() || tb.cost >= ta.cost) {
                    b
                } else {
                    a
                };
                chosen.remove(drop);
            }
            (true, true) => {
                let shared = shared_nodes(ta, tb);
                let ra = reduced_trip(trips, eval, chosen[a], &shared);
                let rb = reduced_trip(trips, eval, chosen[b], &shared);
                let saving = |id: usize, r: &Reduced| trips.get(id).cost - r.cost(trips);
                let (victim, red) = if saving(chosen[a], &ra) > saving(chosen[b], &rb) {
                    (a, ra)
                } else {
                    (b, rb)
                };
                let replacement = red.materialize(trips, eval);
                chosen.remove(victim);
                chosen.extend(replacement);
            }
        }
    }
    chosen.sort_unstable();
    let objective = chosen.iter().map(|&id| trips.get(id).cost).sum();
    CoverSolution {
        chosen,
        objective,
        lower_bound: solution.lower_bound,
        gap: if solution.status == CoverStatus::Optimal {
            0.0
        } else {
            solution.gap
        },
        status: solution.status,
        nodes: solution.nodes,
        incumbent_history: solution.incumbent_history.clone(),
        infeasible_element: None,
    }
}

fn first_overlap(trips: &TripList, chosen: &[usize]) -> Option<(usize, usize)> {
    for a in 0..chosen.len() {
        for b in a + 1..chosen.len() {
            let (x, y) = (&trips.get(chosen[a]).students, &trips.get(chosen[b]).students);
            if x.iter().any(|s| y.binary_search(s).is_ok()) {
                return Some((a, b));
            }
        }
    }
    None
}

fn shared_nodes(a: &TripConfiguration, b: &TripConfiguration) -> Vec<u32> {
    a.node_set
        .iter()
        .copied()
        .filter(|n| b.node_set.binary_search(n).is_ok())
        .collect()
}

enum Reduced {
    Empty,
    Stored(usize),
    Fresh(Box<TripConfiguration>),
    Split(Vec<u32>),
}

impl Reduced {
    fn cost(&self, trips: &TripList) -> f64 {
        match self {
            Reduced::Empty => 0.0,
            Reduced::Stored(id) => trips.get(*id).cost,
            Reduced::Fresh(t) => t.cost,
            Reduced::Split(_) => f64::INFINITY,
        }
    }

    fn materialize(self, trips: &mut TripList, eval: &TripEvaluator<'_>) -> Vec<usize> {
        match self {
            Reduced::Empty => Vec::new(),
            Reduced::Stored(id) => vec![id],
            Reduced::Fresh(t) => vec![trips.insert_bus(*t)],
            Reduced::Split(nodes) => nodes
                .into_iter()
                .map(|n| match trips.find(&[n]) {
                    Some(id) => id,
                    None => {
                        let (route, time) = eval.evaluate_set(&[n]);
                        trips.insert_bus(eval.bus_trip(route, time))
                    }
                })
                .collect(),
        }
    }
}

fn reduced_trip(trips: &TripList, eval: &TripEvaluator<'_>, id: usize, shared: &[u32]) -> Reduced {
    let trip = trips.get(id);
    let rest: Vec<u32> = trip
        .node_set
        .iter()
        .copied()
        .filter(|n| shared.binary_search(n).is_err())
        .collect();
    if rest.is_empty() {
        return Reduced::Empty;
    }
    let mut best: Option<Reduced> = trips.find(&rest).map(Reduced::Stored);
    let consider = |t: TripConfiguration, best: &mut Option<Reduced>| {
        if eval.fits(t.travel_time, t.load()) && best.as_ref().is_none_or(|b| t.cost < b.cost(trips)) {
            *best = Some(Reduced::Fresh(Box::new(t)));
        }
    };
    let sub: Vec<u32> = trip
        .route
        .iter()
        .copied()
        .filter(|n| rest.binary_search(n).is_ok())
        .collect();
    let time = eval.ctx.route_time(&sub);
    consider(eval.bus_trip(sub, time), &mut best);
    let (route, time) = eval.evaluate_set(&rest);
    consider(eval.bus_trip(route, time), &mut best);
    best.unwrap_or(Reduced::Split(rest))
}

fn var(j: usize) -> String {
    format!("y{j}")
}

/// CPLEX LP text: minimize total weight subject to one covering row per
/// element and an optional fleet row over bus sets; binaries `y<j>`.
pub fn write_lp(problem: &CoverProblem) -> String {
    fn terms(out: &mut String, items: impl Iterator<Item = String>) {
        for (k, item) in items.enumerate() {
            if k > 0 {
                out.push_str(if k % 8 == 0 { "\n   + " } else { " + " });
            }
            out.push_str(&item);
        }
    }
    let mut out = String::from("\\ weighted set cover\nMinimize\n cost: ");
    terms(
        &mut out,
        problem
            .sets
            .iter()
            .enumerate()
            .map(|(j, s)| format!("{} {}", s.weight, var(j))),
    );
    if problem.sets.is_empty() {
        out.push('0');
    }
    out.push_str("\nSubject To\n");
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); problem.n_elements];
    for (j, s) in problem.sets.iter().enumerate() {
        for &e in &s.elements {
            rows[e as usize].push(j);
        }
    }
    for (e, row) in rows.iter().enumerate() {
        let _ = write!(out, " e{e}: ");
        terms(&mut out, row.iter().map(|&j| var(j)));
        if row.is_empty() {
            out.push_str("0 y0");
        }
        out.push_str(" >= 1\n");
    }
    if let Some(k) = problem.max_bus_sets {
        out.push_str(" buses: ");
        let buses: Vec<usize> = (0..problem.sets.len()).filter(|&j| problem.sets[j].bus).collect();
        terms(&mut out, buses.iter().map(|&j| var(j)));
        if buses.is_empty() {
            out.push_str("0 y0");
        }
        let _ = writeln!(out, " <= {k}");
    }
    out.push_str("Binary\n");
    for chunk in (0..problem.sets.len()).collect::<Vec<_>>().chunks(10) {
        out.push(' ');
        out.push_str(&chunk.iter().map(|&j| var(j)).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

fn parse_var(tok: &str) -> Option<usize> {
    tok.strip_prefix('y')?.parse().ok()
}

/// Reads back the LP text produced by [`write_lp`].
pub fn read_lp(text: &str) -> Result<CoverProblem> {
    let bad = |line: usize, msg: &str| SbrpError::parse("<lp>", line, msg);
    #[derive(PartialEq)]
    enum Sec {
        None,
        Obj,
        Rows,
        Bin,
    }
    let mut sec = Sec::None;
    let mut weights: Vec<(usize, f64)> = Vec::new();
    let mut rows: Vec<(String, Vec<usize>, String, f64)> = Vec::new();
    let mut cur: Option<(String, Vec<usize>)> = None;
    let mut pending_coef: Option<f64> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "minimize" => {
                sec = Sec::Obj;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                sec = Sec::Rows;
                continue;
            }
            "binary" | "binaries" => {
                sec = Sec::Bin;
                continue;
            }
            "end" => break,
            _ => {}
        }
        let mut toks = line.split_whitespace().peekable();
        if let Some(t) = toks.peek() {
            if let Some(name) = t.strip_suffix(':') {
                let name = name.to_string();
                toks.next();
                if sec == Sec::Rows {
                    cur = Some((name, Vec::new()));
                }
            }
        }
        let mut toks: Vec<&str> = toks.collect();
        match sec {
            Sec::Obj => {
                for t in toks {
                    if t == "+" {
                        continue;
                    }
                    if let Some(j) = parse_var(t) {
                        weights.push((j, pending_coef.take().unwrap_or(1.0)));
                    } else {
                        pending_coef = Some(t.parse().map_err(|_| bad(ln + 1, &format!("bad token {t:?}")))?);
                    }
                }
            }
            Sec::Rows => {
                let Some((_, vars)) = cur.as_mut() else {
                    return Err(bad(ln + 1, "constraint without a name"));
                };
                let mut sense = None;
                if toks.len() >= 2 && matches!(toks[toks.len() - 2], ">=" | "<=" | "=") {
                    let rhs = toks.pop().unwrap();
                    let op = toks.pop().unwrap();
                    let v: f64 = rhs.parse().map_err(|_| bad(ln + 1, "bad right-hand side"))?;
                    sense = Some((op.to_string(), v));
                }
                let mut skip_next = false;
                for t in toks {
                    if skip_next {
                        skip_next = false;
                        continue;
                    }
                    if t == "+" {
                        continue;
                    }
                    if t == "0" {
                        skip_next = true;
                        continue;
                    }
                    vars.push(parse_var(t).ok_or_else(|| bad(ln + 1, &format!("bad token {t:?}")))?);
                }
                if let Some((op, v)) = sense {
                    let (name, vars) = cur.take().unwrap();
                    rows.push((name, vars, op, v));
                }
            }
            Sec::Bin | Sec::None => {}
        }
    }
    let n_sets = weights.iter().map(|w| w.0 + 1).max().unwrap_or(0);
    let mut sets: Vec<CoverSet> = (0..n_sets)
        .map(|_| CoverSet {
            elements: Vec::new(),
            weight: 0.0,
            bus: false,
        })
        .collect();
    for (j, w) in weights {
        sets[j].weight = w;
    }
    let mut n_elements = 0;
    let mut max_bus_sets = None;
    for (name, vars, op, v) in rows {
        if name == "buses" && op == "<=" {
            for j in vars {
                sets.get_mut(j)
                    .ok_or_else(|| bad(0, "fleet row names an unknown variable"))?
                    .bus = true;
            }
            max_bus_sets = Some(v as u32);
        } else if let Some(e) = name.strip_prefix('e').and_then(|s| s.parse::<u32>().ok()) {
            n_elements = n_elements.max(e as usize + 1);
            for j in vars {
                sets.get_mut(j)
                    .ok_or_else(|| bad(0, "row names an unknown variable"))?
                    .elements
                    .push(e);
            }
        } else {
            return Err(bad(0, &format!("unexpected row {name}")));
        }
    }
    for s in &mut sets {
        s.elements.sort_unstable();
    }
    Ok(CoverProblem {
        n_elements,
        sets,
        max_bus_sets,
    })
}

/// Variables at value >= 0.5 in a solver output file. Any line holding a
/// `y<j>` token followed by a number counts, which accepts both plain
/// `name value` files and indexed column listings.
pub fn read_solution(text: &str) -> Vec<usize> {
    let mut chosen = Vec::new();
    for line in text.lines() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        for (k, t) in toks.iter().enumerate() {
            if let Some(j) = parse_var(t) {
                if let Some(v) = toks.get(k + 1).and_then(|v| v.parse::<f64>().ok()) {
                    if v >= 0.5 {
                        chosen.push(j);
                    }
                }
                break;
            }
        }
    }
    chosen.sort_unstable();
    chosen.dedup();
    chosen
}

/// Runs `sh -c "<command> <lp-file> <solution-file>"` and reads the result.
pub fn solve_external(problem: &CoverProblem, command: &str, workdir: &Path) -> Result<CoverSolution> {
    let lp = workdir.join("cover.lp");
    let sol = workdir.join("cover.sol");
    std::fs::write(&lp, write_lp(problem))?;
    let _ = std::fs::remove_file(&sol);
    let status = Command::new("sh")
        .arg("-c")
        .arg(format!("{command} {} {}", lp.display(), sol.display()))
        .status()?;
    if !status.success() {
        return Err(SbrpError::ExternalSolver(format!("`{command}` exited with {status}")));
    }
    let text = std::fs::read_to_string(&sol)
        .map_err(|e| SbrpError::ExternalSolver(format!("no solution file {}: {e}", sol.display())))?;
    let chosen = read_solution(&text);
    if chosen.iter().any(|&j| j >= problem.sets.len()) {
        return Err(SbrpError::ExternalSolver("solution names an unknown variable".into()));
    }
    if !problem.is_cover(&chosen) {
        return Err(SbrpError::ExternalSolver(
            "returned assignment is not a feasible cover".into(),
        ));
    }
    let objective = problem.objective(&chosen);
    Ok(CoverSolution {
        chosen,
        objective,
        status: CoverStatus::Optimal,
        lower_bound: objective,
        gap: 0.0,
        nodes: 0,
        incumbent_history: vec![objective],
        infeasible_element: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(elements: &[u32], weight: f64) -> CoverSet {
        CoverSet {
            elements: elements.to_vec(),
            weight,
            bus: true,
        }
    }

    #[test]
    fn hand_checked_triple() {
        let p = CoverProblem {
            n_elements: 3,
            sets: vec![
                set(&[0, 1], 3.0),
                set(&[1, 2], 3.0),
                set(&[0, 2], 3.0),
                set(&[0, 1, 2], 5.0),
            ],
            max_bus_sets: None,
        };
        let s = solve_cover(&p, &CoverOptions::exact());
        assert_eq!(s.status, CoverStatus::Optimal);
        assert_eq!(s.objective, 5.0);
        assert_eq!(s.chosen, vec![3]);
    }

    #[test]
    fn forced_singletons() {
        let p = CoverProblem {
            n_elements: 3,
            sets: vec![set(&[0], 1.5), set(&[1], 2.5), set(&[2], 4.0)],
            max_bus_sets: None,
        };
        let s = solve_cover(&p, &CoverOptions::default());
        assert_eq!(s.chosen, vec![0, 1, 2]);
        assert_eq!(s.objective, 8.0);
    }

    #[test]
    fn uncovered_element_is_named() {
        let p = CoverProblem {
            n_elements: 3,
            sets: vec![set(&[0, 2], 1.0)],
            max_bus_sets: None,
        };
        let s = solve_cover(&p, &CoverOptions::default());
        assert_eq!(s.status, CoverStatus::Infeasible);
        assert_eq!(s.infeasible_element, Some(1));
    }

    #[test]
    fn fleet_limit_binds() {
        let mut p = CoverProblem {
            n_elements: 2,
            sets: vec![set(&[0], 1.0), set(&[1], 1.0), set(&[0, 1], 5.0)],
            max_bus_sets: Some(1),
        };
        assert_eq!(solve_cover(&p, &CoverOptions::exact()).objective, 5.0);
        p.max_bus_sets = Some(0);
        assert_eq!(solve_cover(&p, &CoverOptions::exact()).status, CoverStatus::Infeasible);
    }

    #[test]
    fn cutoff_without_better_solution_is_infeasible() {
        let p = CoverProblem {
            n_elements: 2,
            sets: vec![set(&[0], 1.0), set(&[1], 1.0)],
            max_bus_sets: None,
        };
        let opts = CoverOptions {
            cutoff: Some(1.5),
            ..CoverOptions::exact()
        };
        assert_eq!(solve_cover(&p, &opts).status, CoverStatus::Infeasible);
    }

    #[test]
    fn lp_round_trip() {
        let p = CoverProblem {
            n_elements: 3,
            sets: vec![
                set(&[0, 1], 3.25),
                CoverSet {
                    elements: vec![2],
                    weight: 0.1,
                    bus: false,
                },
                set(&[1, 2], 7.0),
            ],
            max_bus_sets: Some(4),
        };
        let text = write_lp(&p);
        assert!(text.contains(" e1: y0 + y2 >= 1"));
        assert!(text.contains(" buses: y0 + y2 <= 4"));
        assert_eq!(read_lp(&text).unwrap(), p);
    }

    #[test]
    fn solution_file_formats() {
        assert_eq!(read_solution("y2 1\ny0 0\ny7 0.9999\n"), vec![2, 7]);
        assert_eq!(
            read_solution("Optimal - objective value 5\n      0 y3   1   0\n"),
            vec![3]
        );
    }
}
