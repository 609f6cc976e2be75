//! Problem data: geometry, students, candidate stops, fleet parameters and
//! cost rates. The serde layout of [`Instance`] is the native JSON format.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbrpError};

pub type NodeId = u64;

pub const METERS_PER_MILE: f64 = 1609.344;

/// Unit of every distance stored in an instance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceUnit {
    /// Meters; per-mile rates are converted on evaluation.
    #[default]
    Meter,
    /// Unitless benchmark coordinates; rates apply per unit.
    Abstract,
}

impl DistanceUnit {
    /// Distance units that make up one cost-rate unit (a mile for meters).
    pub fn per_rate_unit(self) -> f64 {
        match self {
            DistanceUnit::Meter => METERS_PER_MILE,
            DistanceUnit::Abstract => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub from: NodeId,
    pub to: NodeId,
    /// Meters.
    pub length: f64,
    /// Seconds. Derived from the road class speed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
}

/// Free-flow speed in m/s for a road class.
///
/// Unknown and missing classes fall back to the residential speed.
pub fn road_class_speed(class: Option<&str>) -> f64 {
    const MPH: f64 = METERS_PER_MILE / 3600.0;
    match class.unwrap_or("residential") {
        "motorway" | "motorway_link" => 55.0 * MPH,
        "trunk" | "trunk_link" => 45.0 * MPH,
        "primary" | "primary_link" => 35.0 * MPH,
        "secondary" | "secondary_link" => 30.0 * MPH,
        "tertiary" | "tertiary_link" => 30.0 * MPH,
        _ => 25.0 * MPH,
    }
}

impl RoadEdge {
    pub fn travel_time(&self) -> f64 {
        self.time
            .unwrap_or_else(|| self.length / road_class_speed(self.class.as_deref()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub nodes: Vec<Location>,
    pub edges: Vec<RoadEdge>,
}

/// Planar points with straight-line travel at constant speed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    /// Distance units per second.
    #[serde(default = "unit_speed")]
    pub speed: f64,
    pub nodes: Vec<Location>,
}

fn unit_speed() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Network(RoadNetwork),
    Points(PointSet),
}

impl Geometry {
    pub fn locations(&self) -> &[Location] {
        match self {
            Geometry::Network(n) => &n.nodes,
            Geometry::Points(p) => &p.nodes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Student {
    pub id: u32,
    pub home: NodeId,
    /// Zero for door-to-door pickups.
    #[serde(default)]
    pub max_walk: f64,
    #[serde(default)]
    pub door_to_door: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopDelay {
    pub base: f64,
    pub per_student: f64,
}

impl Default for StopDelay {
    fn default() -> Self {
        StopDelay {
            base: 15.0,
            per_student: 5.0,
        }
    }
}

impl StopDelay {
    pub const NONE: StopDelay = StopDelay {
        base: 0.0,
        per_student: 0.0,
    };

    /// Dwell time at a stop boarding `students` students.
    pub fn at(&self, students: usize) -> f64 {
        self.base + self.per_student * students as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    #[serde(default = "default_capacity")]
    pub capacity: u32,
    /// Maximum ride time in seconds; may be `"inf"`.
    #[serde(default = "default_t_max", with = "inf_float")]
    pub t_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fleet_limit: Option<u32>,
    #[serde(default)]
    pub stop_delay: StopDelay,
    #[serde(default)]
    pub unit: DistanceUnit,
}

fn default_capacity() -> u32 {
    72
}

fn default_t_max() -> f64 {
    3600.0
}

impl Default for Params {
    fn default() -> Self {
        Params {
            capacity: default_capacity(),
            t_max: default_t_max(),
            fleet_limit: None,
            stop_delay: StopDelay::default(),
            unit: DistanceUnit::Meter,
        }
    }
}

/// Cost rates. An infinite alternate-mode rate disables that mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub bus_fixed: f64,
    pub bus_per_mile: f64,
    #[serde(default, with = "inf_float_map")]
    pub alt_per_mile: BTreeMap<String, f64>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            bus_fixed: 200.0,
            bus_per_mile: 1.0,
            alt_per_mile: BTreeMap::from([("dedicated".to_string(), 2.0)]),
        }
    }
}

impl CostModel {
    pub fn bus_cost(&self, distance: f64, unit: DistanceUnit) -> f64 {
        self.bus_fixed + self.bus_per_mile * distance / unit.per_rate_unit()
    }

    pub fn alt_cost(&self, rate: f64, distance: f64, unit: DistanceUnit) -> f64 {
        rate * distance / unit.per_rate_unit()
    }

    /// Modes with a finite rate, in mode-id order.
    pub fn enabled_modes(&self) -> impl Iterator<Item = (&str, f64)> {
        self.alt_per_mile
            .iter()
            .filter(|(_, r)| r.is_finite())
            .map(|(m, r)| (m.as_str(), *r))
    }

    pub fn disable_alternates(&mut self) {
        for rate in self.alt_per_mile.values_mut() {
            *rate = f64::INFINITY;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default)]
    pub name: String,
    #[serde(flatten)]
    pub geometry: Geometry,
    pub students: Vec<Student>,
    #[serde(default)]
    pub stops: Vec<NodeId>,
    pub school: NodeId,
    pub depot: NodeId,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub costs: CostModel,
}

impl Instance {
    pub fn from_json_str(text: &str) -> Result<Instance> {
        let instance: Instance = serde_json::from_str(text)?;
        instance.validate()?;
        Ok(instance)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string())?;
        Ok(())
    }

    pub fn door_to_door_count(&self) -> usize {
        self.students.iter().filter(|s| s.door_to_door).count()
    }

    pub fn location(&self, id: NodeId) -> Option<&Location> {
        self.geometry.locations().iter().find(|l| l.id == id)
    }

    /// Checks every structural invariant of the data model.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(SbrpError::Validation(m));
        if self.students.is_empty() {
            return fail("empty student set".into());
        }
        let mut nodes = HashSet::new();
        for loc in self.geometry.locations() {
            if !(loc.x.is_finite() && loc.y.is_finite()) {
                return fail(format!("node {} has non-finite coordinates", loc.id));
            }
            if !nodes.insert(loc.id) {
                return fail(format!("duplicate node id {}", loc.id));
            }
        }
        match &self.geometry {
            Geometry::Network(net) => {
                for e in &net.edges {
                    if !nodes.contains(&e.from) || !nodes.contains(&e.to) {
                        return fail(format!("edge {}->{} references an undeclared node", e.from, e.to));
                    }
                    let t = e.travel_time();
                    if !(e.length > 0.0 && t > 0.0) || !e.length.is_finite() || !t.is_finite() {
                        return fail(format!("edge {}->{} must have positive length and time", e.from, e.to));
                    }
                }
            }
            Geometry::Points(p) => {
                if !(p.speed > 0.0 && p.speed.is_finite()) {
                    return fail("planar speed must be positive".into());
                }
            }
        }
        for (what, id) in [("school", self.school), ("depot", self.depot)] {
            if !nodes.contains(&id) {
                return fail(format!("{what} node {id} is not declared"));
            }
        }
        let mut ids = BTreeSet::new();
        for s in &self.students {
            if !ids.insert(s.id) {
                return fail(format!("duplicate student id {}", s.id));
            }
            if !nodes.contains(&s.home) {
                return fail(format!("student {} home {} is not declared", s.id, s.home));
            }
            if !(s.max_walk >= 0.0) || !s.max_walk.is_finite() {
                return fail(format!("student {} has negative max_walk", s.id));
            }
            if s.door_to_door != (s.max_walk == 0.0) {
                return fail(format!(
                    "student {}: door_to_door must hold exactly when max_walk is 0",
                    s.id
                ));
            }
        }
        for m in &self.stops {
            if !nodes.contains(m) {
                return fail(format!("candidate stop {m} is not declared"));
            }
        }
        let p = &self.params;
        if p.capacity < 1 {
            return fail("capacity must be at least 1".into());
        }
        if !(p.t_max > 0.0) {
            return fail("t_max must be positive".into());
        }
        if !(p.stop_delay.base >= 0.0 && p.stop_delay.per_student >= 0.0) {
            return fail("stop delays must be non-negative".into());
        }
        let c = &self.costs;
        if !(c.bus_fixed >= 0.0 && c.bus_per_mile >= 0.0) || !c.bus_fixed.is_finite() || !c.bus_per_mile.is_finite() {
            return fail("bus cost rates must be finite and non-negative".into());
        }
        if let Some((mode, _)) = c.alt_per_mile.iter().find(|(_, r)| !(**r >= 0.0)) {
            return fail(format!("alternate mode {mode} has a negative rate"));
        }
        Ok(())
    }
}

/// Serializes non-finite floats as the string `"inf"`.
pub mod inf_float {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum Repr {
        Num(f64),
        Text(String),
    }

    impl Repr {
        pub(crate) fn value<E: Error>(self) -> Result<f64, E> {
            match self {
                Repr::Num(v) => Ok(v),
                Repr::Text(t) => match t.to_ascii_lowercase().as_str() {
                    "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                    other => other
                        .parse()
                        .map_err(|_| E::custom(format!("expected a number or \"inf\", got {t:?}"))),
                },
            }
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str("inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Repr::deserialize(d)?.value()
    }
}

mod inf_float_map {
    use std::collections::BTreeMap;

    use serde::ser::SerializeMap;
    use serde::{Deserialize, Deserializer, Serializer};

    use super::inf_float::Repr;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            if v.is_finite() {
                map.serialize_entry(k, v)?;
            } else {
                map.serialize_entry(k, "inf")?;
            }
        }
        map.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Repr>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| v.value().map(|v| (k, v)))
            .collect()
    }
}
