//! Versioned JSON file formats for instances, schedules and solver solution
//! dumps. Parsing is strict: unknown fields and version mismatches are
//! rejected with a message, structural problems come back as defect lists.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{
    validate_instance, Day, Defect, Instance, MaintenancePacket, Route, RouteId, Train, TrainId,
};
use crate::schedule::{MaintenanceStart, Schedule};

/// Version written and accepted by this build.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed document: {0}")]
    Json(String),
    #[error("unsupported format version {found}, this build reads version {expected}")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("instance has {} structural defect(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Defect>),
}

#[derive(Deserialize)]
struct VersionProbe {
    #[serde(default)]
    version: Option<u32>,
}

fn check_version(text: &str) -> Result<(), ParseError> {
    let probe: VersionProbe =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    match probe.version {
        Some(FORMAT_VERSION) => Ok(()),
        Some(found) => {
            Err(ParseError::UnsupportedVersion { found, expected: FORMAT_VERSION })
        }
        None => Err(ParseError::Json("missing required field `version`".into())),
    }
}

/// On-disk form of an [`Instance`]: the same fields under an explicit format
/// version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub version: u32,
    pub horizon_days: Day,
    pub depot_capacity: u32,
    #[serde(default)]
    pub mileage_range_enabled: bool,
    #[serde(default)]
    pub multi_day_routes: bool,
    pub trains: Vec<Train>,
    pub routes: Vec<Route>,
    pub packets: Vec<MaintenancePacket>,
    pub eligibility: Vec<Vec<bool>>,
}

impl From<&Instance> for InstanceFile {
    fn from(i: &Instance) -> Self {
        InstanceFile {
            version: FORMAT_VERSION,
            horizon_days: i.horizon_days,
            depot_capacity: i.depot_capacity,
            mileage_range_enabled: i.mileage_range_enabled,
            multi_day_routes: i.multi_day_routes,
            trains: i.trains.clone(),
            routes: i.routes.clone(),
            packets: i.packets.clone(),
            eligibility: i.eligibility.clone(),
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Instance {
        Instance {
            horizon_days: self.horizon_days,
            depot_capacity: self.depot_capacity,
            mileage_range_enabled: self.mileage_range_enabled,
            multi_day_routes: self.multi_day_routes,
            trains: self.trains,
            routes: self.routes,
            packets: self.packets,
            eligibility: self.eligibility,
        }
    }
}

/// Strictly parses an instance document and validates it. Returns the
/// combined defect list (file-level plus structural) as
/// [`ParseError::Invalid`] when the data is well-formed JSON but not a sound
/// instance.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    check_version(text)?;
    let file: InstanceFile =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    let instance = file.into_instance();
    let defects = validate_instance(&instance);
    if defects.is_empty() {
        Ok(instance)
    } else {
        Err(ParseError::Invalid(defects))
    }
}

/// Serializes an instance (pretty JSON, trailing newline, deterministic).
pub fn serialize_instance(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceFile::from(instance))
        .expect("instance serializes");
    text.push('\n');
    text
}

/// On-disk form of a [`Schedule`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub version: u32,
    pub assignments: BTreeMap<TrainId, BTreeMap<Day, Option<RouteId>>>,
    #[serde(default)]
    pub maintenance_starts: BTreeMap<TrainId, Vec<MaintenanceStart>>,
}

impl From<&Schedule> for ScheduleFile {
    fn from(s: &Schedule) -> Self {
        let (assignments, maintenance_starts) = s.clone().into_parts();
        ScheduleFile { version: FORMAT_VERSION, assignments, maintenance_starts }
    }
}

pub fn parse_schedule(text: &str) -> Result<Schedule, ParseError> {
    check_version(text)?;
    let file: ScheduleFile =
        serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))?;
    Ok(Schedule::from_parts(file.assignments, file.maintenance_starts))
}

pub fn serialize_schedule(schedule: &Schedule) -> String {
    let mut text = serde_json::to_string_pretty(&ScheduleFile::from(schedule))
        .expect("schedule serializes");
    text.push('\n');
    text
}

/// Parses a solver solution dump: a flat JSON object mapping variable names
/// to numeric values.
pub fn parse_solution(text: &str) -> Result<BTreeMap<String, f64>, ParseError> {
    serde_json::from_str(text).map_err(|e| ParseError::Json(e.to_string()))
}
