//! Instance file readers.
//!
//! * native JSON: the serde layout of [`Instance`]; the only format that is
//!   also written back out.
//! * Euclidean benchmark text: a header `stops students capacity walk`, then
//!   the school followed by `stops` stop lines, then `students` student lines.
//!   Coordinate lines are `x y` or `index x y`; `#` starts a comment.
//! * BPS-style CSV: columns `kind,id,lat,lon,door_to_door,max_walk_mi` with
//!   `kind` one of `school`, `depot`, `student`, `stop`.

use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::error::{Result, SbrpError};
use crate::instance::{
    CostModel, DistanceUnit, Geometry, Instance, Location, NodeId, Params, PointSet, StopDelay, Student,
    METERS_PER_MILE,
};

/// Planar speed used for BPS imports: 25 mph in m/s.
pub const BPS_SPEED: f64 = 25.0 * METERS_PER_MILE / 3600.0;

const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceFormat {
    BpsCsv,
    EuclideanSchittekat,
    NativeJson,
}

impl InstanceFormat {
    /// Guesses the format from the file extension.
    pub fn from_path(path: &Path) -> InstanceFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => InstanceFormat::NativeJson,
            Some("csv") => InstanceFormat::BpsCsv,
            _ => InstanceFormat::EuclideanSchittekat,
        }
    }
}

impl FromStr for InstanceFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bps-csv" => Ok(InstanceFormat::BpsCsv),
            "euclidean-schittekat" | "euclidean" => Ok(InstanceFormat::EuclideanSchittekat),
            "native-json" | "json" => Ok(InstanceFormat::NativeJson),
            other => Err(format!("unknown instance format {other:?}")),
        }
    }
}

pub fn load_instance(path: &Path, format: InstanceFormat) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("instance")
        .to_string();
    let mut instance = match format {
        InstanceFormat::NativeJson => {
            let mut inst: Instance =
                serde_json::from_str(&text).map_err(|e| SbrpError::parse(path, e.line(), e.to_string()))?;
            if inst.name.is_empty() {
                inst.name = name;
            }
            inst
        }
        InstanceFormat::EuclideanSchittekat => parse_euclidean(path, &text, name)?,
        InstanceFormat::BpsCsv => parse_bps_csv(path, &text, name)?,
    };
    instance.stops.sort_unstable();
    instance.stops.dedup();
    instance.validate()?;
    Ok(instance)
}

pub fn parse_euclidean(path: &Path, text: &str, name: String) -> Result<Instance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines
        .next()
        .ok_or_else(|| SbrpError::parse(path, 1, "missing header line"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(SbrpError::parse(
            path,
            hline,
            format!(
                "header needs `stops students capacity walk`, found {} fields",
                fields.len()
            ),
        ));
    }
    let num = |i: usize, what: &str| -> Result<f64> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| SbrpError::parse(path, hline, format!("field `{what}`: {:?} is not a number", fields[i])))
    };
    let n_stops = num(0, "stops")? as usize;
    let n_students = num(1, "students")? as usize;
    let capacity = num(2, "capacity")? as u32;
    let walk = num(3, "walk")?;

    let mut coords = Vec::with_capacity(n_stops + n_students + 1);
    for k in 0..(n_stops + n_students + 1) {
        let (lno, line) = lines.next().ok_or_else(|| {
            SbrpError::parse(
                path,
                hline,
                format!("expected {} coordinate lines, found {k}", n_stops + n_students + 1),
            )
        })?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let xy = match parts.len() {
            2 => &parts[..],
            3 => &parts[1..],
            n => {
                return Err(SbrpError::parse(
                    path,
                    lno,
                    format!("coordinate line needs 2 or 3 fields, found {n}"),
                ))
            }
        };
        let parse = |s: &str, f: &str| {
            s.parse::<f64>()
                .map_err(|_| SbrpError::parse(path, lno, format!("field `{f}`: {s:?} is not a number")))
        };
        coords.push((parse(xy[0], "x")?, parse(xy[1], "y")?));
    }
    if let Some((lno, _)) = lines.next() {
        return Err(SbrpError::parse(path, lno, "unexpected trailing data"));
    }

    let nodes = coords
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| Location { id: i as NodeId, x, y })
        .collect();
    let students = (0..n_students)
        .map(|k| Student {
            id: k as u32,
            home: (n_stops + 1 + k) as NodeId,
            max_walk: walk,
            door_to_door: walk == 0.0,
        })
        .collect();
    let mut costs = CostModel {
        bus_fixed: 0.0,
        bus_per_mile: 1.0,
        ..CostModel::default()
    };
    costs.disable_alternates();
    Ok(Instance {
        name,
        geometry: Geometry::Points(PointSet { speed: 1.0, nodes }),
        students,
        stops: (1..=n_stops as NodeId).collect(),
        school: 0,
        depot: 0,
        params: Params {
            capacity,
            t_max: f64::INFINITY,
            fleet_limit: None,
            stop_delay: StopDelay::NONE,
            unit: DistanceUnit::Abstract,
        },
        costs,
    })
}

#[derive(Debug, Deserialize)]
struct BpsRow {
    kind: String,
    id: String,
    lat: f64,
    lon: f64,
    #[serde(default)]
    door_to_door: Option<String>,
    #[serde(default)]
    max_walk_mi: Option<f64>,
}

fn truthy(s: &str) -> bool {
    matches!(
        s.trim().to_ascii_lowercase().as_str(),
        "1" | "true" | "yes" | "y" | "d2d"
    )
}

pub fn parse_bps_csv(path: &Path, text: &str, name: String) -> Result<Instance> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut school = None;
    let mut depot = None;
    let mut students = Vec::new();
    let mut stops = Vec::new();
    for record in reader.deserialize::<BpsRow>() {
        let row = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            SbrpError::parse(path, line, e.to_string())
        })?;
        match row.kind.to_ascii_lowercase().as_str() {
            "school" => school = Some((row.lat, row.lon)),
            "depot" => depot = Some((row.lat, row.lon)),
            "stop" => stops.push((row.lat, row.lon)),
            "student" => {
                let id: u32 = row.id.parse().map_err(|_| {
                    SbrpError::parse(
                        path,
                        students.len() + 2,
                        format!("field `id`: {:?} is not a student number", row.id),
                    )
                })?;
                let d2d = row.door_to_door.as_deref().map(truthy).unwrap_or(false);
                let walk = if d2d {
                    0.0
                } else {
                    row.max_walk_mi.unwrap_or(0.5) * METERS_PER_MILE
                };
                students.push((id, row.lat, row.lon, walk));
            }
            other => {
                return Err(SbrpError::parse(
                    path,
                    0,
                    format!("field `kind`: unknown row kind {other:?}"),
                ))
            }
        }
    }
    let (lat0, lon0) = school.ok_or_else(|| SbrpError::Validation("missing school row".into()))?;
    let project = |lat: f64, lon: f64| {
        let x = EARTH_RADIUS_M * (lon - lon0).to_radians() * lat0.to_radians().cos();
        let y = EARTH_RADIUS_M * (lat - lat0).to_radians();
        (x, y)
    };

    let mut nodes = vec![Location { id: 0, x: 0.0, y: 0.0 }];
    let depot_id = match depot {
        Some((lat, lon)) => {
            let (x, y) = project(lat, lon);
            nodes.push(Location { id: 1, x, y });
            1
        }
        None => 0,
    };
    let mut next = nodes.len() as NodeId;
    let mut out_students = Vec::with_capacity(students.len());
    for (id, lat, lon, walk) in students {
        let (x, y) = project(lat, lon);
        nodes.push(Location { id: next, x, y });
        out_students.push(Student {
            id,
            home: next,
            max_walk: walk,
            door_to_door: walk == 0.0,
        });
        next += 1;
    }
    let candidate_stops = if stops.is_empty() {
        out_students.iter().map(|s| s.home).collect()
    } else {
        let mut ids = Vec::with_capacity(stops.len());
        for (lat, lon) in stops {
            let (x, y) = project(lat, lon);
            nodes.push(Location { id: next, x, y });
            ids.push(next);
            next += 1;
        }
        ids
    };
    Ok(Instance {
        name,
        geometry: Geometry::Points(PointSet {
            speed: BPS_SPEED,
            nodes,
        }),
        students: out_students,
        stops: candidate_stops,
        school: 0,
        depot: depot_id,
        params: Params::default(),
        costs: CostModel::default(),
    })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use super::*;

    fn write(contents: &str, ext: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn euclidean_header_and_counts() {
        let mut text = String::from("# tiny benchmark\n3 4 25 5\n0 0\n");
        for i in 0..3 {
            text += &format!("{} {} {}\n", i + 1, i * 10, 5);
        }
        for i in 0..4 {
            text += &format!("{} {}\n", i * 10 + 1, 6);
        }
        let f = write(&text, ".txt");
        let inst = load_instance(f.path(), InstanceFormat::EuclideanSchittekat).unwrap();
        assert_eq!(inst.stops.len(), 3);
        assert_eq!(inst.students.len(), 4);
        assert_eq!(inst.params.capacity, 25);
        assert_eq!(inst.students[0].max_walk, 5.0);
        assert_eq!(inst.params.unit, DistanceUnit::Abstract);
        assert!(inst.costs.enabled_modes().next().is_none());
    }

    #[test]
    fn euclidean_bad_number_reports_line() {
        let f = write("1 1 10 5\n0 0\n1 x\n2 2\n", ".txt");
        let err = load_instance(f.path(), InstanceFormat::EuclideanSchittekat).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":3:") && msg.contains("`y`"), "{msg}");
    }

    #[test]
    fn euclidean_short_file() {
        let f = write("2 2 10 5\n0 0\n1 1\n", ".txt");
        assert!(load_instance(f.path(), InstanceFormat::EuclideanSchittekat).is_err());
    }

    #[test]
    fn bps_counts_door_to_door() {
        let mut text = String::from("kind,id,lat,lon,door_to_door,max_walk_mi\nschool,S,42.35,-71.06,,\n");
        for i in 0..51 {
            let d2d = if i < 7 { "1" } else { "0" };
            text += &format!(
                "student,{i},{},{},{d2d},0.25\n",
                42.35 + 0.001 * i as f64,
                -71.06 + 0.0005 * (i % 5) as f64
            );
        }
        let f = write(&text, ".csv");
        let inst = load_instance(f.path(), InstanceFormat::BpsCsv).unwrap();
        assert_eq!(inst.students.len(), 51);
        assert_eq!(inst.door_to_door_count(), 7);
        assert_eq!(inst.stops.len(), 51);
        let s = &inst.students[10];
        assert!((s.max_walk - 0.25 * METERS_PER_MILE).abs() < 1e-9);
    }

    #[test]
    fn bps_bad_row() {
        let f = write("kind,id,lat,lon,door_to_door,max_walk_mi\nschool,S,abc,1,,\n", ".csv");
        let err = load_instance(f.path(), InstanceFormat::BpsCsv).unwrap_err();
        assert!(matches!(err, SbrpError::Parse { .. }), "{err}");
    }

    #[test]
    fn native_json_with_zero_students() {
        let json = r#"{"points":{"nodes":[{"id":0,"x":0,"y":0}]},"students":[],"school":0,"depot":0}"#;
        let f = write(json, ".json");
        let err = load_instance(f.path(), InstanceFormat::NativeJson).unwrap_err();
        assert!(err.to_string().contains("empty student set"));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            InstanceFormat::from_path(Path::new("a.json")),
            InstanceFormat::NativeJson
        );
        assert_eq!(InstanceFormat::from_path(Path::new("a.csv")), InstanceFormat::BpsCsv);
        assert_eq!(
            InstanceFormat::from_path(Path::new("inst73.txt")),
            InstanceFormat::EuclideanSchittekat
        );
    }
}
