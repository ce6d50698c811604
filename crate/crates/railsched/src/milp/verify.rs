//! Decoding and verification of externally solved models: an LP solver's
//! variable assignment is decoded back into a schedule, run through the
//! feasibility checker and cross-checked against the linear objective.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{derive_mileage, linearize, MilpError, VarKind, VarRole};
use crate::instance::{Day, Defect, Instance, Km, TrainId};
use crate::schedule::{MaintenanceStart, Schedule};
use crate::semantics::{check_feasibility, objective_value, FeasibilityReport};

/// Solver output may carry rounding noise on binary variables; anything
/// farther than this from 0 or 1 is rejected.
pub const BINARY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("instance fails validation with {} defect(s)", .0.len())]
    InvalidInstance(Vec<Defect>),
    #[error("assignment is missing {} binary variable(s), first: {}", .0.len(), .0[0])]
    MissingVariables(Vec<String>),
    #[error("{} variable(s) are not within tolerance of 0 or 1, first: {} = {}", .0.len(), .0[0].0, .0[0].1)]
    NonBinaryValues(Vec<(String, f64)>),
    #[error("train {train} has two route assignments on day {day}")]
    ConflictingAssignments { train: TrainId, day: Day },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    /// The schedule decoded from the binary variables.
    pub schedule: Schedule,
    pub report: FeasibilityReport,
    /// The linear objective evaluated at the assignment (km).
    pub lp_objective: Km,
    /// The schedule objective computed by the mileage recurrence (km).
    pub schedule_objective: Km,
    pub objectives_match: bool,
}

/// Decodes a named variable assignment (as returned by an external solver)
/// into a [`Schedule`], checks its feasibility and compares the linear
/// objective with the recurrence-based one. Mileage variables present in the
/// assignment are used as given (rounded); missing ones are reconstructed
/// from the binaries. Unknown variable names are ignored.
pub fn verify_external_solution(
    instance: &Instance,
    assignment: &BTreeMap<String, f64>,
) -> Result<VerifyOutcome, VerifyError> {
    let model = linearize(instance).map_err(|MilpError::InvalidInstance(d)| {
        VerifyError::InvalidInstance(d)
    })?;

    let mut missing: Vec<String> = Vec::new();
    let mut non_binary: Vec<(String, f64)> = Vec::new();
    let mut values: Vec<Km> = vec![0; model.variables.len()];
    for (idx, var) in model.binary_variables() {
        let Some(&raw) = assignment.get(&var.name) else {
            missing.push(var.name.clone());
            continue;
        };
        if (raw - 0.0).abs() <= BINARY_TOLERANCE {
            values[idx] = 0;
        } else if (raw - 1.0).abs() <= BINARY_TOLERANCE {
            values[idx] = 1;
        } else {
            non_binary.push((var.name.clone(), raw));
        }
    }
    if !missing.is_empty() {
        return Err(VerifyError::MissingVariables(missing));
    }
    if !non_binary.is_empty() {
        return Err(VerifyError::NonBinaryValues(non_binary));
    }

    // Decode the binaries into a schedule.
    let mut schedule = Schedule::default();
    for train in &instance.trains {
        for day in train.window() {
            schedule.set_assignment(train.id, day, None);
        }
    }
    let mut starts: BTreeMap<TrainId, Vec<MaintenanceStart>> = BTreeMap::new();
    for (idx, var) in model.variables.iter().enumerate() {
        if values[idx] != 1 {
            continue;
        }
        match var.role {
            VarRole::Assign { train, route, day } => {
                if schedule.assignment(train, day) == Some(None) {
                    schedule.set_assignment(train, day, Some(route));
                } else {
                    return Err(VerifyError::ConflictingAssignments { train, day });
                }
            }
            VarRole::Start { train, packet, day } => {
                starts.entry(train).or_default().push(MaintenanceStart { day, packet });
            }
            _ => {}
        }
    }
    for (train, s) in starts {
        schedule.set_maintenance_starts(train, s);
    }

    // Mileage variables: reconstruct, then prefer solver-provided values.
    derive_mileage(&model, instance, &mut values);
    for (idx, var) in model.variables.iter().enumerate() {
        if matches!(var.kind, VarKind::Continuous { .. }) {
            if let Some(&raw) = assignment.get(&var.name) {
                values[idx] = raw.round() as Km;
            }
        }
    }

    let report = check_feasibility(&schedule, instance).expect("instance validated");
    let lp_objective = model.objective_at(&values);
    let schedule_objective = objective_value(&schedule, instance).expect("shape-complete");
    Ok(VerifyOutcome {
        schedule,
        report,
        lp_objective,
        schedule_objective,
        objectives_match: lp_objective == schedule_objective,
    })
}
