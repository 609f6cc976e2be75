//! Browser bindings: generate an instance, solve it, look at the
//! shareability network before and after pruning, and sweep beta.
//!
//! Everything crosses the boundary as JSON strings. Wall-clock limits do not
//! apply on wasm32, so searches are bounded by node count instead.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sbrp_core::emit;
use sbrp_core::pipeline::{prepare, run, sweep, SolveParams, SweepParam};
use sbrp_core::synthetic::{generate, SyntheticConfig};
use sbrp_core::Instance;

const NODE_LIMIT: u64 = 200_000;
const TRIP_CAP: usize = 200_000;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn params(beta: f64, gamma: f64) -> SolveParams {
    SolveParams {
        // NaN or anything out of range from the page means "off"
        beta: (beta > 1.0).then_some(beta),
        gamma: (0.0..=1.0).contains(&gamma).then_some(gamma),
        time_limit: None,
        node_limit: Some(NODE_LIMIT),
        trip_cap: TRIP_CAP,
        ..Default::default()
    }
}

fn parse(instance_json: &str) -> Result<Instance, JsError> {
    Instance::from_json_str(instance_json).map_err(js_err)
}

/// Seeded synthetic instance as native JSON.
#[wasm_bindgen]
pub fn generate_instance(seed: u32, students: u32, capacity: u32, t_max: f64) -> String {
    generate(&SyntheticConfig {
        seed: seed as u64,
        students: students as usize,
        stops: (students as usize * 3 / 5).max(1),
        capacity,
        t_max,
        ..Default::default()
    })
    .to_json_string()
}

#[derive(Serialize)]
struct SolveView {
    svg: String,
    table: String,
    solution: sbrp_core::pipeline::Solution,
}

/// Solves and returns `{svg, table, solution}`.
#[wasm_bindgen]
pub fn solve_instance(instance_json: &str, beta: f64, gamma: f64) -> Result<String, JsError> {
    let inst = parse(instance_json)?;
    let r = run(&inst, &params(beta, gamma)).map_err(js_err)?;
    let view = SolveView {
        svg: emit::svg(&r.solution, &inst),
        table: emit::table_header() + &emit::table_row(&r.solution, &inst),
        solution: r.solution,
    };
    serde_json::to_string(&view).map_err(js_err)
}

#[derive(Serialize)]
struct NetworkView {
    before: String,
    after: String,
    edges_before: usize,
    edges_after: usize,
}

/// The shareability network with every feasible edge, and after pruning
/// with `beta`.
#[wasm_bindgen]
pub fn network_views(instance_json: &str, beta: f64) -> Result<String, JsError> {
    let inst = parse(instance_json)?;
    let r = prepare(&inst, &params(beta, f64::NAN)).map_err(js_err)?;
    let coords = r.pickup_coords();
    let school = r.metric.coords(r.metric.idx(inst.school));
    let after = r.pruned.as_ref().unwrap_or(&r.network);
    let view = NetworkView {
        before: emit::network_svg(&r.network, &coords, school),
        after: emit::network_svg(after, &coords, school),
        edges_before: r.network.edge_count(),
        edges_after: after.edge_count(),
    };
    serde_json::to_string(&view).map_err(js_err)
}

/// One row per beta in `grid` (comma separated).
#[wasm_bindgen]
pub fn beta_sweep(instance_json: &str, grid: &str, gamma: f64) -> Result<String, JsError> {
    let inst = parse(instance_json)?;
    let values: Vec<f64> = grid
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| js_err(format!("bad grid value {v:?}")))
        })
        .collect::<Result<_, _>>()?;
    let rows = sweep(&inst, &params(f64::NAN, gamma), SweepParam::Beta, &values).map_err(js_err)?;
    serde_json::to_string(&rows).map_err(js_err)
}
