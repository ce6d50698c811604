//! Executable semantics of the optimization model: the cumulative-mileage
//! recurrence, the maintenance state function, the mileage-loss objective and
//! the full feasibility checker.

mod check;

pub use check::{check_feasibility, is_feasible, ConstraintTag, FeasibilityReport, Violation};

use thiserror::Error;

use crate::instance::{Day, Defect, Instance, Km, TrainId};
use crate::schedule::Schedule;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SemanticsError {
    #[error("instance fails validation with {} defect(s)", .0.len())]
    InvalidInstance(Vec<Defect>),
    #[error("train {0} is not part of the instance")]
    UnknownTrain(TrainId),
    #[error("day {day} is outside the planning window of train {train}")]
    DayOutsideWindow { train: TrainId, day: Day },
    #[error("schedule has no assignment for train {train} on day {day}")]
    MissingAssignment { train: TrainId, day: Day },
}

/// Whether a train is out running (or on standby) or sitting in the depot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainState {
    Operation,
    Maintenance,
}

/// Number of recorded maintenance visits whose occupancy window covers `day`.
/// A visit starting on day `s` with duration `d` occupies exactly the days
/// `s..=s+d-1`. Starts referring to unknown packets are skipped; well-formed
/// schedules never have more than one covering window per day.
pub(crate) fn maintenance_cover_count(
    schedule: &Schedule,
    instance: &Instance,
    train: TrainId,
    day: Day,
) -> u32 {
    schedule
        .starts_of(train)
        .iter()
        .filter_map(|s| instance.packet(s.packet).map(|p| (s.day, p.duration_days)))
        .filter(|(start, dur)| *start <= day && day < *start + *dur)
        .count() as u32
}

/// The state function: `Maintenance` exactly on the days of a recorded
/// maintenance visit, `Operation` everywhere else in the train's window.
pub fn maintenance_state(
    schedule: &Schedule,
    instance: &Instance,
    train: TrainId,
    day: Day,
) -> Result<TrainState, SemanticsError> {
    let t = instance.train(train).ok_or(SemanticsError::UnknownTrain(train))?;
    if !t.window_contains(day) {
        return Err(SemanticsError::DayOutsideWindow { train, day });
    }
    if maintenance_cover_count(schedule, instance, train, day) > 0 {
        Ok(TrainState::Maintenance)
    } else {
        Ok(TrainState::Operation)
    }
}

/// Cumulative mileage since the last depot visit, one value per window day.
///
/// Starting from the train's initial mileage, each day adds the mileage of
/// the assigned route (eligible real routes only; standby, depot days and
/// ineligible assignments add nothing) and the counter drops to zero on a
/// maintenance start day.
pub fn mileage_trajectory(
    schedule: &Schedule,
    instance: &Instance,
    train: TrainId,
) -> Result<Vec<Km>, SemanticsError> {
    let t = instance.train(train).ok_or(SemanticsError::UnknownTrain(train))?;
    let mut out = Vec::with_capacity(t.window_len() as usize);
    let mut mileage = t.initial_mileage_km;
    for day in t.window() {
        let cell = schedule
            .assignment(train, day)
            .ok_or(SemanticsError::MissingAssignment { train, day })?;
        if let Some(route_id) = cell {
            if !route_id.is_spare() && instance.is_eligible(train, route_id) {
                if let Some(route) = instance.route(route_id) {
                    mileage += route.mileage_km;
                }
            }
        }
        if schedule.starts_of(train).iter().any(|s| s.day == day) {
            mileage = 0;
        }
        out.push(mileage);
    }
    Ok(out)
}

/// Total mileage loss of the schedule in km: for every train sent to its
/// designated maintenance packet on day `t`, the unused part of its cycle
/// (`cycle - mileage on day t-1`). Trains without a start contribute nothing.
///
/// The value can be negative only for schedules that overrun the cycle, which
/// the feasibility checker rejects.
pub fn objective_value(schedule: &Schedule, instance: &Instance) -> Result<Km, SemanticsError> {
    let mut total: Km = 0;
    for train in &instance.trains {
        let starts = schedule.starts_of(train.id);
        if starts.is_empty() {
            continue;
        }
        let trajectory = mileage_trajectory(schedule, instance, train.id)?;
        for s in starts {
            if train.next_packet != Some(s.packet) || !train.window_contains(s.day) {
                continue;
            }
            let before = if s.day == train.begin_day {
                train.initial_mileage_km
            } else {
                trajectory[(s.day - 1 - train.begin_day) as usize]
            };
            total += train.maintenance_cycle_km - before;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{MaintenancePacket, PacketId, Route, RouteId, Train};

    fn instance(horizon: Day, trains: Vec<Train>, routes: Vec<Route>) -> Instance {
        let eligibility = vec![vec![true; routes.len()]; trains.len()];
        Instance {
            horizon_days: horizon,
            depot_capacity: 1,
            mileage_range_enabled: false,
            multi_day_routes: false,
            trains,
            routes,
            packets: vec![
                MaintenancePacket { id: PacketId(1), duration_days: 3 },
                MaintenancePacket { id: PacketId(2), duration_days: 1 },
            ],
            eligibility,
        }
    }

    fn train(id: u32, begin: Day, end: Day, cycle: Km, initial: Km) -> Train {
        Train {
            id: TrainId(id),
            begin_day: begin,
            end_day: end,
            maintenance_cycle_km: cycle,
            initial_mileage_km: initial,
            next_packet: Some(PacketId(1)),
            min_mileage_km: None,
            max_mileage_km: None,
        }
    }

    #[test]
    fn state_window_spans_duration_days() {
        let inst = instance(7, vec![train(1, 1, 7, 20_000, 0)], vec![]);
        let mut sched = Schedule::all_spare(&inst);
        sched.add_maintenance_start(TrainId(1), 2, PacketId(1));
        for d in 2..=4 {
            sched.set_assignment(TrainId(1), d, None);
        }
        let state = |d| maintenance_state(&sched, &inst, TrainId(1), d).unwrap();
        assert_eq!(state(1), TrainState::Operation);
        assert_eq!(state(2), TrainState::Maintenance);
        assert_eq!(state(3), TrainState::Maintenance);
        assert_eq!(state(4), TrainState::Maintenance);
        assert_eq!(state(5), TrainState::Operation);
    }

    #[test]
    fn no_start_means_operation_everywhere() {
        let inst = instance(7, vec![train(1, 1, 7, 20_000, 0)], vec![]);
        let sched = Schedule::all_spare(&inst);
        for d in 1..=7 {
            assert_eq!(
                maintenance_state(&sched, &inst, TrainId(1), d).unwrap(),
                TrainState::Operation
            );
        }
    }

    #[test]
    fn single_day_packet_occupies_exactly_one_day() {
        let mut t = train(1, 1, 7, 20_000, 0);
        t.next_packet = Some(PacketId(2));
        let inst = instance(7, vec![t], vec![]);
        let mut sched = Schedule::all_spare(&inst);
        sched.add_maintenance_start(TrainId(1), 5, PacketId(2));
        sched.set_assignment(TrainId(1), 5, None);
        let state = |d| maintenance_state(&sched, &inst, TrainId(1), d).unwrap();
        assert_eq!(state(4), TrainState::Operation);
        assert_eq!(state(5), TrainState::Maintenance);
        assert_eq!(state(6), TrainState::Operation);
    }

    #[test]
    fn state_outside_window_is_an_error() {
        let inst = instance(7, vec![train(1, 2, 6, 20_000, 0)], vec![]);
        let sched = Schedule::all_spare(&inst);
        assert_eq!(
            maintenance_state(&sched, &inst, TrainId(1), 1),
            Err(SemanticsError::DayOutsideWindow { train: TrainId(1), day: 1 })
        );
    }

    #[test]
    fn trajectory_accumulates_route_mileage() {
        let inst = instance(
            3,
            vec![train(1, 1, 3, 20_000, 1_000)],
            vec![Route { id: RouteId(1), mileage_km: 500, successor: None, day_offset: 0 }],
        );
        let mut sched = Schedule::all_spare(&inst);
        sched.set_assignment(TrainId(1), 1, Some(RouteId(1)));
        let l = mileage_trajectory(&sched, &inst, TrainId(1)).unwrap();
        assert_eq!(l, vec![1_500, 1_500, 1_500]);
    }

    #[test]
    fn trajectory_resets_on_start_day() {
        let inst = instance(
            3,
            vec![train(1, 1, 3, 20_000, 9_000)],
            vec![Route { id: RouteId(1), mileage_km: 500, successor: None, day_offset: 0 }],
        );
        let mut sched = Schedule::all_spare(&inst);
        sched.set_assignment(TrainId(1), 1, Some(RouteId(1)));
        sched.add_maintenance_start(TrainId(1), 2, PacketId(1));
        sched.set_assignment(TrainId(1), 2, None);
        sched.set_assignment(TrainId(1), 3, None);
        let l = mileage_trajectory(&sched, &inst, TrainId(1)).unwrap();
        assert_eq!(l, vec![9_500, 0, 0]);
    }

    #[test]
    fn spare_only_keeps_zero() {
        let inst = instance(4, vec![train(1, 1, 4, 20_000, 0)], vec![]);
        let sched = Schedule::all_spare(&inst);
        assert_eq!(mileage_trajectory(&sched, &inst, TrainId(1)).unwrap(), vec![0, 0, 0, 0]);
    }

    #[test]
    fn objective_counts_unused_cycle() {
        let mut t = train(1, 1, 3, 20_000, 18_500);
        t.next_packet = Some(PacketId(2));
        let inst = instance(3, vec![t], vec![]);
        let mut sched = Schedule::all_spare(&inst);
        sched.add_maintenance_start(TrainId(1), 2, PacketId(2));
        sched.set_assignment(TrainId(1), 2, None);
        assert_eq!(objective_value(&sched, &inst).unwrap(), 1_500);
    }

    #[test]
    fn objective_zero_without_maintenance() {
        let inst = instance(3, vec![train(1, 1, 3, 20_000, 0)], vec![]);
        let sched = Schedule::all_spare(&inst);
        assert_eq!(objective_value(&sched, &inst).unwrap(), 0);
    }

    // Two contributing trains, cross-checked against an independent
    // day-by-day simulation of the recurrence and loss sum.
    #[test]
    fn objective_sums_across_trains() {
        let mut t1 = train(1, 1, 4, 20_000, 18_000);
        t1.next_packet = Some(PacketId(2));
        let mut t2 = train(2, 1, 4, 10_000, 9_400);
        t2.next_packet = Some(PacketId(2));
        let routes = vec![
            Route { id: RouteId(1), mileage_km: 500, successor: None, day_offset: 0 },
            Route { id: RouteId(2), mileage_km: 300, successor: None, day_offset: 0 },
        ];
        let inst = instance(4, vec![t1, t2], routes);
        let mut sched = Schedule::all_spare(&inst);
        // Train 1 runs R1 on day 1 then maintains on day 2 (loss 20000-18500).
        sched.set_assignment(TrainId(1), 1, Some(RouteId(1)));
        sched.add_maintenance_start(TrainId(1), 2, PacketId(2));
        sched.set_assignment(TrainId(1), 2, None);
        // Train 2 runs R2 on day 1 then maintains on day 3 (loss 10000-9500).
        sched.set_assignment(TrainId(2), 1, Some(RouteId(2)));
        sched.add_maintenance_start(TrainId(2), 3, PacketId(2));
        sched.set_assignment(TrainId(2), 3, None);

        // Independent simulation: walk days, add mileage, record losses.
        let mut expected = 0;
        for (train, cycle, initial) in [(TrainId(1), 20_000, 18_000), (TrainId(2), 10_000, 9_400)]
        {
            let mut l = initial;
            for day in 1..=4 {
                if let Some(Some(r)) = sched.assignment(train, day) {
                    if !r.is_spare() {
                        l += inst.route(r).unwrap().mileage_km;
                    }
                }
                if sched.starts_of(train).iter().any(|s| s.day == day) {
                    expected += cycle - l;
                    l = 0;
                }
            }
        }
        assert_eq!(expected, 1_500 + 300);
        assert_eq!(objective_value(&sched, &inst).unwrap(), expected);
    }

    #[test]
    fn ineligible_assignment_adds_no_mileage() {
        let mut inst = instance(
            2,
            vec![train(1, 1, 2, 20_000, 100)],
            vec![Route { id: RouteId(1), mileage_km: 500, successor: None, day_offset: 0 }],
        );
        inst.eligibility = vec![vec![false]];
        let mut sched = Schedule::all_spare(&inst);
        sched.set_assignment(TrainId(1), 1, Some(RouteId(1)));
        assert_eq!(mileage_trajectory(&sched, &inst, TrainId(1)).unwrap(), vec![100, 100]);
    }
}
