//! Report and drawing output for solutions and shareability networks.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::compression::ShareabilityNetwork;
use crate::error::Result;
use crate::instance::{Instance, NodeId};
use crate::pipeline::Solution;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmitFormat {
    TextTable,
    Json,
    GeoJson,
    Svg,
}

impl FromStr for EmitFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" | "table" | "text-table" => Ok(EmitFormat::TextTable),
            "json" => Ok(EmitFormat::Json),
            "geojson" => Ok(EmitFormat::GeoJson),
            "svg" => Ok(EmitFormat::Svg),
            other => Err(format!("unknown output format {other:?}")),
        }
    }
}

pub fn render(solution: &Solution, instance: &Instance, format: EmitFormat) -> String {
    match format {
        EmitFormat::TextTable => {
            let mut out = table_header();
            out.push_str(&table_row(solution, instance));
            out
        }
        EmitFormat::Json => solution.to_json() + "\n",
        EmitFormat::GeoJson => serde_json::to_string_pretty(&geojson(solution, instance)).expect("geojson") + "\n",
        EmitFormat::Svg => svg(solution, instance),
    }
}

pub fn emit(solution: &Solution, instance: &Instance, format: EmitFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render(solution, instance, format))?;
    Ok(())
}

const COLUMNS: [(&str, usize); 9] = [
    ("instance", 18),
    ("N_S", 6),
    ("N_D2D", 6),
    ("N_M*", 6),
    ("|T_b|", 10),
    ("objective", 12),
    ("N_B", 5),
    ("N_U", 5),
    ("T(s)", 9),
];

pub fn table_header() -> String {
    let mut out = String::new();
    for (name, w) in COLUMNS {
        let _ = write!(out, "{name:>w$} ");
    }
    out.pop();
    out.push('\n');
    out
}

/// One row: students, door-to-door students, pickup nodes, bus trips,
/// objective, buses, students on alternate modes, wall time.
pub fn table_row(solution: &Solution, instance: &Instance) -> String {
    let d = &solution.diagnostics;
    let cells = [
        solution.instance.clone(),
        instance.students.len().to_string(),
        instance.door_to_door_count().to_string(),
        d.stop_count.to_string(),
        d.trip_count.to_string(),
        format!("{:.2}", solution.total_cost),
        solution.bus_count.to_string(),
        solution.students_alt.to_string(),
        format!("{:.2}", d.timings.total()),
    ];
    let mut out = String::new();
    for ((_, w), cell) in COLUMNS.iter().zip(cells) {
        let _ = write!(out, "{cell:>w$} ", w = *w);
    }
    out.pop();
    out.push('\n');
    out
}

fn xy(instance: &Instance, id: NodeId) -> (f64, f64) {
    instance.location(id).map_or((0.0, 0.0), |l| (l.x, l.y))
}

/// Routes as line strings ending at the school, a point per route stop and
/// per alternate-mode home, and the school and depot markers. Coordinates
/// are the instance's own (planar) coordinates.
pub fn geojson(solution: &Solution, instance: &Instance) -> Value {
    let mut features = Vec::new();
    let school = xy(instance, instance.school);
    for (k, r) in solution.bus_routes.iter().enumerate() {
        let mut coords: Vec<[f64; 2]> = r
            .stops
            .iter()
            .map(|s| {
                let (x, y) = xy(instance, s.node);
                [x, y]
            })
            .collect();
        coords.push([school.0, school.1]);
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": coords},
            "properties": {
                "kind": "route", "route": k, "students": r.student_count(),
                "travel_time": r.travel_time, "distance": r.distance, "cost": r.cost,
            },
        }));
    }
    for (k, r) in solution.bus_routes.iter().enumerate() {
        for (order, s) in r.stops.iter().enumerate() {
            let (x, y) = xy(instance, s.node);
            features.push(json!({
                "type": "Feature",
                "geometry": {"type": "Point", "coordinates": [x, y]},
                "properties": {"kind": "stop", "node": s.node, "route": k, "order": order, "students": s.students},
            }));
        }
    }
    for a in &solution.alt_assignments {
        let home = instance
            .students
            .iter()
            .find(|s| s.id == a.student)
            .map_or(instance.school, |s| s.home);
        let (x, y) = xy(instance, home);
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [x, y]},
            "properties": {"kind": "alternate", "student": a.student, "mode": a.mode, "cost": a.cost},
        }));
    }
    for (kind, id) in [("school", instance.school), ("depot", instance.depot)] {
        let (x, y) = xy(instance, id);
        features.push(json!({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [x, y]},
            "properties": {"kind": kind, "node": id},
        }));
    }
    json!({"type": "FeatureCollection", "features": features})
}

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    pad: f64,
    size: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>, size: f64) -> Frame {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (x, y) in points {
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
        }
        let span = (x1 - x0).max(y1 - y0).max(1e-9);
        let pad = 16.0;
        Frame {
            min_x: x0,
            max_y: y1,
            scale: (size - 2.0 * pad) / span,
            pad,
            size,
        }
    }

    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            self.pad + (x - self.min_x) * self.scale,
            self.pad + (self.max_y - y) * self.scale,
        )
    }
}

fn colour(k: usize) -> String {
    // golden-angle hue steps keep neighbouring routes apart
    format!("hsl({:.0},70%,45%)", (k as f64 * 137.508) % 360.0)
}

pub fn svg(solution: &Solution, instance: &Instance) -> String {
    let locs = instance.geometry.locations();
    let frame = Frame::fit(locs.iter().map(|l| (l.x, l.y)), 640.0);
    let p = |id: NodeId| frame.map(xy(instance, id));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {s} {s}" width="{s}" height="{s}">"#,
        s = frame.size
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let school = p(instance.school);
    for s in &instance.students {
        let (x, y) = p(s.home);
        let _ = writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="1.5" fill="#bbb"/>"##);
    }
    for (k, r) in solution.bus_routes.iter().enumerate() {
        let c = colour(k);
        let mut pts: Vec<String> = r
            .stops
            .iter()
            .map(|s| {
                let (x, y) = p(s.node);
                format!("{x:.1},{y:.1}")
            })
            .collect();
        pts.push(format!("{:.1},{:.1}", school.0, school.1));
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"><title>route {k}: {} students, {:.2}</title></polyline>"#,
            pts.join(" "),
            r.student_count(),
            r.cost
        );
        for s in &r.stops {
            let (x, y) = p(s.node);
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="{c}"><title>node {}: {} students</title></circle>"#,
                s.node,
                s.students.len()
            );
        }
    }
    for a in &solution.alt_assignments {
        if let Some(s) = instance.students.iter().find(|s| s.id == a.student) {
            let (x, y) = p(s.home);
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="none" stroke="black" stroke-dasharray="2 1"><title>student {} by {}</title></circle>"#,
                a.student, a.mode
            );
        }
    }
    let (x, y) = school;
    let _ = writeln!(
        out,
        r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="black"><title>school</title></rect>"#,
        x - 5.0,
        y - 5.0
    );
    out.push_str("</svg>\n");
    out
}

/// Nodes sized by load, edges as thin lines; `coords[i]` places node `i`.
pub fn network_svg(network: &ShareabilityNetwork, coords: &[(f64, f64)], school: (f64, f64)) -> String {
    let frame = Frame::fit(coords.iter().copied().chain([school]), 640.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {s} {s}" width="{s}" height="{s}">"#,
        s = frame.size
    );
    out.push_str(
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g stroke=\"#4a7\" stroke-opacity=\"0.35\">\n",
    );
    for (a, b) in network.edges() {
        let (x1, y1) = frame.map(coords[a as usize]);
        let (x2, y2) = frame.map(coords[b as usize]);
        let _ = writeln!(out, r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}"/>"#);
    }
    out.push_str("</g>\n");
    for (i, &c) in coords.iter().enumerate() {
        let (x, y) = frame.map(c);
        let r = 2.0 + (network.weight(i as u32) as f64).sqrt();
        let _ = writeln!(
            out,
            r##"<circle cx="{x:.1}" cy="{y:.1}" r="{r:.1}" fill="#235"><title>node {i}: {} students, {} edges</title></circle>"##,
            network.weight(i as u32),
            network.neighbors(i as u32).len()
        );
    }
    let (x, y) = frame.map(school);
    let _ = writeln!(
        out,
        r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="crimson"><title>school</title></rect>"#,
        x - 5.0,
        y - 5.0
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{solve, SolveParams};
    use crate::synthetic::{generate, SyntheticConfig};

    fn solved() -> (Instance, Solution) {
        let mut inst = generate(&SyntheticConfig::tiny(2, 7, 3));
        inst.costs.alt_per_mile.insert("dedicated".into(), 0.9);
        let s = solve(&inst, &SolveParams::exact()).unwrap();
        (inst, s)
    }

    #[test]
    fn geojson_feature_count() {
        let (inst, s) = solved();
        let g = geojson(&s, &inst);
        let stops: usize = s.bus_routes.iter().map(|r| r.stops.len()).sum();
        let expected = s.bus_routes.len() + stops + s.alt_assignments.len() + 2;
        assert_eq!(g["features"].as_array().unwrap().len(), expected);
    }

    #[test]
    fn json_round_trip() {
        let (_, s) = solved();
        assert_eq!(Solution::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn table_has_header_and_row() {
        let (inst, s) = solved();
        let t = render(&s, &inst, EmitFormat::TextTable);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("objective"));
        assert!(lines[1].contains(&format!("{:.2}", s.total_cost)));
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let (inst, s) = solved();
        let out = svg(&s, &inst);
        assert!(out.starts_with("<svg") && out.trim_end().ends_with("</svg>"));
        assert_eq!(out.matches("<polyline").count(), s.bus_routes.len());
    }
}
