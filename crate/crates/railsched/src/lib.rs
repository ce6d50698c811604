//! Assigning trains to daily routes while scheduling their depot maintenance
//! visits, minimizing the mileage each train leaves unused when it enters the
//! depot.
//!
//! The crate is organized around a small set of pieces:
//!
//! * [`instance`] — the problem data model and its structural validation
//! * [`schedule`] — candidate solutions (daily assignments + depot visits)
//! * [`semantics`] — the mileage recurrence, state function, objective and
//!   the full feasibility checker
//! * [`oracle`] — exhaustive ground-truth solver for small instances
//! * [`heuristic`] — greedy construction + simulated annealing for the rest
//! * [`milp`] — big-M linearization, LP-file export and verification of
//!   externally solved models
//! * [`io`] — versioned JSON file formats
//! * [`generator`] — seeded random instance generation
//! * [`render`] — text and SVG timetable views of a schedule
//!
//! The long-form guide with worked examples lives in the `book/` directory of
//! the repository.

pub mod generator;
pub mod heuristic;
pub mod instance;
pub mod io;
pub mod milp;
pub mod oracle;
pub mod render;
pub mod schedule;
pub mod semantics;

pub use instance::{
    validate_instance, Day, Defect, DefectSubject, Instance, Km, MaintenancePacket, PacketId,
    Route, RouteId, Train, TrainId,
};
pub use schedule::{random_schedule, MaintenanceStart, Schedule};
pub use semantics::{
    check_feasibility, is_feasible, maintenance_state, mileage_trajectory, objective_value,
    ConstraintTag, FeasibilityReport, SemanticsError, TrainState, Violation,
};
