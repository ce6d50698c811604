//! Schedules: the decision variables of the model as day-indexed assignments
//! per train plus maintenance starts.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{Day, Instance, PacketId, RouteId, TrainId};

/// A maintenance visit: the train enters the depot on `day` and stays for the
/// packet's whole duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaintenanceStart {
    pub day: Day,
    pub packet: PacketId,
}

/// A candidate solution.
///
/// For every train, `assignments` holds one entry per day of its planning
/// window: `Some(route)` when the train runs that (sub-)route (`RouteId::SPARE`
/// for standby), `None` on days it sits in the depot for maintenance.
///
/// Maintenance starts are kept as a list per train so that malformed
/// solutions (e.g. decoded from an external solver) can still be represented
/// and reported on; well-formed schedules have at most one start per train.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    assignments: BTreeMap<TrainId, BTreeMap<Day, Option<RouteId>>>,
    maintenance_starts: BTreeMap<TrainId, Vec<MaintenanceStart>>,
}

impl Schedule {
    /// A schedule that keeps every train on standby for its whole window.
    pub fn all_spare(instance: &Instance) -> Schedule {
        let mut sched = Schedule::default();
        for t in &instance.trains {
            let days = t.window().map(|d| (d, Some(RouteId::SPARE))).collect();
            sched.assignments.insert(t.id, days);
        }
        sched
    }

    pub fn from_parts(
        assignments: BTreeMap<TrainId, BTreeMap<Day, Option<RouteId>>>,
        maintenance_starts: BTreeMap<TrainId, Vec<MaintenanceStart>>,
    ) -> Schedule {
        let mut sched = Schedule { assignments, maintenance_starts };
        for starts in sched.maintenance_starts.values_mut() {
            starts.sort();
        }
        sched.maintenance_starts.retain(|_, v| !v.is_empty());
        sched
    }

    /// Trains that have any assignment recorded.
    pub fn trains(&self) -> impl Iterator<Item = TrainId> + '_ {
        self.assignments.keys().copied()
    }

    /// The assignment for one day: outer `None` when the day is not recorded
    /// at all, inner `None` when the train is in the depot.
    pub fn assignment(&self, train: TrainId, day: Day) -> Option<Option<RouteId>> {
        self.assignments.get(&train).and_then(|m| m.get(&day)).copied()
    }

    pub fn assignments_of(&self, train: TrainId) -> Option<&BTreeMap<Day, Option<RouteId>>> {
        self.assignments.get(&train)
    }

    pub fn set_assignment(&mut self, train: TrainId, day: Day, value: Option<RouteId>) {
        self.assignments.entry(train).or_default().insert(day, value);
    }

    /// All maintenance starts of a train, sorted by day.
    pub fn starts_of(&self, train: TrainId) -> &[MaintenanceStart] {
        self.maintenance_starts.get(&train).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The single maintenance start of a well-formed schedule, if any.
    pub fn maintenance_start(&self, train: TrainId) -> Option<MaintenanceStart> {
        self.starts_of(train).first().copied()
    }

    pub fn add_maintenance_start(&mut self, train: TrainId, day: Day, packet: PacketId) {
        let starts = self.maintenance_starts.entry(train).or_default();
        starts.push(MaintenanceStart { day, packet });
        starts.sort();
    }

    pub fn clear_maintenance(&mut self, train: TrainId) {
        self.maintenance_starts.remove(&train);
    }

    /// Replaces a train's starts wholesale (used when decoding external
    /// solutions).
    pub fn set_maintenance_starts(&mut self, train: TrainId, mut starts: Vec<MaintenanceStart>) {
        starts.sort();
        if starts.is_empty() {
            self.maintenance_starts.remove(&train);
        } else {
            self.maintenance_starts.insert(train, starts);
        }
    }

    pub fn into_parts(
        self,
    ) -> (
        BTreeMap<TrainId, BTreeMap<Day, Option<RouteId>>>,
        BTreeMap<TrainId, Vec<MaintenanceStart>>,
    ) {
        (self.assignments, self.maintenance_starts)
    }
}

/// Draws a structurally well-formed schedule uniformly-ish at random: every
/// train gets an optional maintenance start (for its designated packet, on a
/// day where the whole visit fits) and each remaining day independently picks
/// standby or an eligible chain that fits. The result respects the schedule
/// shape and chain linking by construction but is in no way feasibility- or
/// optimality-aware; it exists for sampling-based fallbacks and testing.
pub fn random_schedule<R: Rng>(instance: &Instance, rng: &mut R) -> Schedule {
    let mut sched = Schedule::default();
    for train in &instance.trains {
        let mut cells: BTreeMap<Day, Option<RouteId>> =
            train.window().map(|d| (d, Some(RouteId::SPARE))).collect();

        let mut blocked: Vec<Day> = Vec::new();
        if let Some(packet_id) = train.next_packet {
            if let Some(packet) = instance.packet(packet_id) {
                let latest = train.end_day.saturating_sub(packet.duration_days - 1);
                if latest >= train.begin_day && rng.gen_bool(0.5) {
                    let start = rng.gen_range(train.begin_day..=latest);
                    for d in start..start + packet.duration_days {
                        cells.insert(d, None);
                        blocked.push(d);
                    }
                    sched.add_maintenance_start(train.id, start, packet_id);
                }
            }
        }

        for day in train.window() {
            if blocked.contains(&day) || cells[&day] != Some(RouteId::SPARE) {
                continue;
            }
            // Chains that can start today: eligible for every entry, fully
            // inside the window, with no day already taken.
            let mut options: Vec<Vec<RouteId>> = Vec::new();
            for head in instance.chain_heads() {
                let chain = instance.chain_from(head.id);
                let last_day = day + chain.len() as Day - 1;
                if last_day > train.end_day {
                    continue;
                }
                if !chain.iter().all(|r| instance.is_eligible(train.id, *r)) {
                    continue;
                }
                if (day..=last_day).any(|d| blocked.contains(&d) || cells[&d] != Some(RouteId::SPARE))
                {
                    continue;
                }
                options.push(chain);
            }
            // Index 0 keeps the day spare.
            let pick = rng.gen_range(0..=options.len());
            if pick > 0 {
                for (k, r) in options[pick - 1].iter().enumerate() {
                    cells.insert(day + k as Day, Some(*r));
                }
            }
        }

        for (day, value) in cells {
            sched.set_assignment(train.id, day, value);
        }
    }
    sched
}
