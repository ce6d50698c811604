//! Problem-instance data model: trains, routes, maintenance packets and the
//! structural validation rules that every instance must satisfy before any
//! solver or checker will touch it.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Day index within the planning horizon. Days are 1-based: `1..=horizon_days`.
pub type Day = u32;

/// Distance in integer kilometres. All mileage arithmetic in this crate is
/// exact integer arithmetic; negative values are rejected by validation.
pub type Km = i64;

/// Identifier of a train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrainId(pub u32);

/// Identifier of a (sub-)route. Id 0 is reserved for the synthetic spare
/// task: it never appears in an instance's route list, has zero mileage and
/// every train is eligible for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouteId(pub u32);

impl RouteId {
    /// The synthetic spare (standby) task.
    pub const SPARE: RouteId = RouteId(0);

    pub fn is_spare(self) -> bool {
        self == Self::SPARE
    }
}

/// Identifier of a maintenance packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PacketId(pub u32);

impl fmt::Display for TrainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.0)
    }
}

impl fmt::Display for RouteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_spare() {
            write!(f, "SPARE")
        } else {
            write!(f, "R{}", self.0)
        }
    }
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

/// A train together with its planning window and maintenance data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Train {
    pub id: TrainId,
    /// First day of the train's planning window (1-based, inclusive).
    pub begin_day: Day,
    /// Last day of the train's planning window (inclusive).
    pub end_day: Day,
    /// Mileage cycle between two consecutive depot maintenances (km).
    pub maintenance_cycle_km: Km,
    /// Cumulative mileage already accrued when the window opens (km).
    pub initial_mileage_km: Km,
    /// The designated next maintenance packet, if any. A train without one
    /// cannot be sent to maintenance at all.
    #[serde(default)]
    pub next_packet: Option<PacketId>,
    /// Optional lower bound on the total mileage assigned over the window.
    #[serde(default)]
    pub min_mileage_km: Option<Km>,
    /// Optional upper bound on the total mileage assigned over the window.
    #[serde(default)]
    pub max_mileage_km: Option<Km>,
}

impl Train {
    pub fn window(&self) -> std::ops::RangeInclusive<Day> {
        self.begin_day..=self.end_day
    }

    pub fn window_contains(&self, day: Day) -> bool {
        self.begin_day <= day && day <= self.end_day
    }

    pub fn window_len(&self) -> u32 {
        if self.begin_day > self.end_day {
            0
        } else {
            self.end_day - self.begin_day + 1
        }
    }
}

/// One day's slice of a transportation task. A one-day route is a chain of
/// length one; an n-day route is a chain of n entries linked by `successor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Route {
    pub id: RouteId,
    /// Mileage of this (sub-)route in km.
    pub mileage_km: Km,
    /// The next sub-route of the same parent task, run the following day by
    /// the same train.
    #[serde(default)]
    pub successor: Option<RouteId>,
    /// Position within the parent chain: 0 for a chain head.
    #[serde(default)]
    pub day_offset: u32,
}

/// A maintenance packet with a fixed duration in whole days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaintenancePacket {
    pub id: PacketId,
    pub duration_days: u32,
}

/// A full problem instance. Immutable after construction; all solver and
/// checker entry points take `&Instance` and never mutate it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Instance {
    /// Number of days in the planning horizon (days are `1..=horizon_days`).
    pub horizon_days: Day,
    /// Maximum number of trains that may be in maintenance on any single day.
    pub depot_capacity: u32,
    /// When true, per-train total-mileage bounds are enforced by the checker.
    #[serde(default)]
    pub mileage_range_enabled: bool,
    /// When true, chains longer than two sub-routes are allowed.
    #[serde(default)]
    pub multi_day_routes: bool,
    pub trains: Vec<Train>,
    pub routes: Vec<Route>,
    pub packets: Vec<MaintenancePacket>,
    /// Eligibility matrix: `eligibility[i][j]` says whether `trains[i]` may
    /// run `routes[j]`. The spare task is implicitly eligible for every train.
    pub eligibility: Vec<Vec<bool>>,
}

impl Instance {
    pub fn train(&self, id: TrainId) -> Option<&Train> {
        self.trains.iter().find(|t| t.id == id)
    }

    pub fn route(&self, id: RouteId) -> Option<&Route> {
        self.routes.iter().find(|r| r.id == id)
    }

    pub fn packet(&self, id: PacketId) -> Option<&MaintenancePacket> {
        self.packets.iter().find(|p| p.id == id)
    }

    pub fn train_position(&self, id: TrainId) -> Option<usize> {
        self.trains.iter().position(|t| t.id == id)
    }

    pub fn route_position(&self, id: RouteId) -> Option<usize> {
        self.routes.iter().position(|r| r.id == id)
    }

    /// Whether `train` may run `route`. The spare task is always eligible;
    /// unknown ids are never eligible.
    pub fn is_eligible(&self, train: TrainId, route: RouteId) -> bool {
        if route.is_spare() {
            return true;
        }
        let (Some(ti), Some(ri)) = (self.train_position(train), self.route_position(route))
        else {
            return false;
        };
        self.eligibility
            .get(ti)
            .and_then(|row| row.get(ri))
            .copied()
            .unwrap_or(false)
    }

    /// The route that names `id` as its successor, if any.
    pub fn predecessor_of(&self, id: RouteId) -> Option<&Route> {
        self.routes.iter().find(|r| r.successor == Some(id))
    }

    /// A route is a chain head when no other route links to it.
    pub fn is_chain_head(&self, id: RouteId) -> bool {
        self.route(id).is_some() && self.predecessor_of(id).is_none()
    }

    /// All chain heads in route-list order.
    pub fn chain_heads(&self) -> impl Iterator<Item = &Route> {
        self.routes.iter().filter(|r| self.predecessor_of(r.id).is_none())
    }

    /// The chain starting at `head`, head included, following successor
    /// links. Walks at most `routes.len()` steps so malformed (cyclic) link
    /// structures cannot loop forever.
    pub fn chain_from(&self, head: RouteId) -> Vec<RouteId> {
        let mut chain = Vec::new();
        let mut cur = Some(head);
        while let Some(id) = cur {
            if chain.contains(&id) || chain.len() > self.routes.len() {
                break;
            }
            chain.push(id);
            cur = self.route(id).and_then(|r| r.successor);
        }
        chain
    }

    /// Days on which a chain of length `n` may start so that it completes
    /// within the horizon: `1..=horizon_days + 1 - n` (empty when it cannot
    /// fit at all).
    pub fn chain_start_days(&self, chain_len: u32) -> std::ops::RangeInclusive<Day> {
        if chain_len == 0 || chain_len > self.horizon_days {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        1..=(self.horizon_days + 1 - chain_len)
    }
}

/// What a structural defect refers to. Ordering is by subject kind, then id,
/// which fixes the report order of [`validate_instance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DefectSubject {
    Instance,
    Train(TrainId),
    Route(RouteId),
    Packet(PacketId),
}

impl fmt::Display for DefectSubject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefectSubject::Instance => write!(f, "instance"),
            DefectSubject::Train(id) => write!(f, "train {}", id.0),
            DefectSubject::Route(id) => write!(f, "route {}", id.0),
            DefectSubject::Packet(id) => write!(f, "packet {}", id.0),
        }
    }
}

/// One structural problem found in an instance. Defects are data, not
/// errors: an instance that parses always yields a (possibly empty) list.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Defect {
    pub subject: DefectSubject,
    pub message: String,
}

impl Defect {
    fn new(subject: DefectSubject, message: impl Into<String>) -> Self {
        Defect { subject, message: message.into() }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Checks every structural invariant of the data model and returns one
/// defect per violation, sorted by (subject kind, id). An empty list
/// certifies the instance is structurally sound. Pure and deterministic.
pub fn validate_instance(instance: &Instance) -> Vec<Defect> {
    use DefectSubject as S;
    let mut defects = Vec::new();

    if instance.horizon_days < 1 {
        defects.push(Defect::new(S::Instance, "planning horizon must span at least one day"));
    }

    if instance.eligibility.len() != instance.trains.len() {
        defects.push(Defect::new(
            S::Instance,
            format!(
                "eligibility matrix has {} rows, expected one per train ({})",
                instance.eligibility.len(),
                instance.trains.len()
            ),
        ));
    }
    for (i, row) in instance.eligibility.iter().enumerate() {
        if row.len() != instance.routes.len() {
            defects.push(Defect::new(
                S::Instance,
                format!(
                    "eligibility row {} has {} entries, expected one per route ({})",
                    i,
                    row.len(),
                    instance.routes.len()
                ),
            ));
        }
    }

    // Duplicate identifiers make every by-id lookup ambiguous.
    for (i, t) in instance.trains.iter().enumerate() {
        if instance.trains[..i].iter().any(|o| o.id == t.id) {
            defects.push(Defect::new(S::Train(t.id), "duplicate train id"));
        }
    }
    for (i, r) in instance.routes.iter().enumerate() {
        if instance.routes[..i].iter().any(|o| o.id == r.id) {
            defects.push(Defect::new(S::Route(r.id), "duplicate route id"));
        }
    }
    for (i, p) in instance.packets.iter().enumerate() {
        if instance.packets[..i].iter().any(|o| o.id == p.id) {
            defects.push(Defect::new(S::Packet(p.id), "duplicate packet id"));
        }
    }

    for t in &instance.trains {
        if t.begin_day > t.end_day {
            defects.push(Defect::new(S::Train(t.id), "train window reversed"));
        } else {
            if t.begin_day < 1 {
                defects.push(Defect::new(S::Train(t.id), "window begins before day 1"));
            }
            if t.end_day > instance.horizon_days {
                defects.push(Defect::new(S::Train(t.id), "window ends after the horizon"));
            }
        }
        if t.maintenance_cycle_km <= 0 {
            defects.push(Defect::new(S::Train(t.id), "maintenance cycle must be positive"));
        }
        if t.initial_mileage_km < 0 {
            defects.push(Defect::new(S::Train(t.id), "mileage must be non-negative"));
        } else if t.initial_mileage_km > t.maintenance_cycle_km {
            defects.push(Defect::new(
                S::Train(t.id),
                "initial mileage exceeds the maintenance cycle",
            ));
        }
        match (t.min_mileage_km, t.max_mileage_km) {
            (Some(lo), _) if lo < 0 => {
                defects.push(Defect::new(S::Train(t.id), "mileage must be non-negative"));
            }
            (_, Some(hi)) if hi < 0 => {
                defects.push(Defect::new(S::Train(t.id), "mileage must be non-negative"));
            }
            (Some(lo), Some(hi)) if lo > hi => {
                defects.push(Defect::new(
                    S::Train(t.id),
                    "mileage range lower bound exceeds upper bound",
                ));
            }
            _ => {}
        }
        if let Some(p) = t.next_packet {
            if instance.packet(p).is_none() {
                defects.push(Defect::new(
                    S::Train(t.id),
                    format!("next packet {} does not exist", p.0),
                ));
            }
        }
    }

    for r in &instance.routes {
        if r.id.is_spare() {
            defects.push(Defect::new(
                S::Route(r.id),
                "route id 0 is reserved for the spare task",
            ));
        }
        if r.mileage_km < 0 {
            defects.push(Defect::new(S::Route(r.id), "mileage must be non-negative"));
        }
        if let Some(s) = r.successor {
            if s == r.id {
                defects.push(Defect::new(S::Route(r.id), "route links to itself"));
            } else if instance.route(s).is_none() {
                defects.push(Defect::new(
                    S::Route(r.id),
                    format!("successor route {} does not exist", s.0),
                ));
            }
        }
    }

    // Link-structure checks only make sense once ids are unambiguous.
    let ids_unique = !defects
        .iter()
        .any(|d| d.message == "duplicate route id" || d.message == "route links to itself");
    if ids_unique {
        for r in &instance.routes {
            let preds = instance
                .routes
                .iter()
                .filter(|o| o.successor == Some(r.id))
                .count();
            if preds > 1 {
                defects.push(Defect::new(S::Route(r.id), "route has more than one predecessor"));
            }
            match (preds, instance.predecessor_of(r.id)) {
                (0, _) if r.day_offset != 0 => {
                    defects.push(Defect::new(
                        S::Route(r.id),
                        "chain head must have day offset 0",
                    ));
                }
                (1, Some(p)) if r.day_offset != p.day_offset + 1 => {
                    defects.push(Defect::new(
                        S::Route(r.id),
                        format!(
                            "day offset {} does not follow predecessor offset {}",
                            r.day_offset, p.day_offset
                        ),
                    ));
                }
                _ => {}
            }
        }

        for head in instance.chain_heads() {
            let chain = instance.chain_from(head.id);
            // A cycle re-enters a visited route; chain_from stops there, so
            // detect it by checking the last link.
            if let Some(last) = chain.last() {
                if let Some(next) = instance.route(*last).and_then(|r| r.successor) {
                    if chain.contains(&next) {
                        defects.push(Defect::new(S::Route(head.id), "route chain forms a cycle"));
                    }
                }
            }
            if chain.len() > 2 && !instance.multi_day_routes {
                defects.push(Defect::new(
                    S::Route(head.id),
                    "chain longer than two sub-routes requires multi-day routes to be enabled",
                ));
            }
        }
        // Routes unreachable from any head are on a pure cycle.
        let mut reachable: Vec<RouteId> = Vec::new();
        for head in instance.chain_heads() {
            reachable.extend(instance.chain_from(head.id));
        }
        for r in &instance.routes {
            if !reachable.contains(&r.id) {
                defects.push(Defect::new(S::Route(r.id), "route chain forms a cycle"));
            }
        }
    }

    for p in &instance.packets {
        if p.duration_days < 1 {
            defects.push(Defect::new(S::Packet(p.id), "duration must be at least one day"));
        }
    }

    defects.sort();
    defects.dedup();
    defects
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_train_instance() -> Instance {
        Instance {
            horizon_days: 7,
            depot_capacity: 1,
            mileage_range_enabled: false,
            multi_day_routes: false,
            trains: vec![Train {
                id: TrainId(1),
                begin_day: 1,
                end_day: 7,
                maintenance_cycle_km: 20_000,
                initial_mileage_km: 0,
                next_packet: None,
                min_mileage_km: None,
                max_mileage_km: None,
            }],
            routes: vec![],
            packets: vec![],
            eligibility: vec![vec![]],
        }
    }

    #[test]
    fn minimal_instance_is_valid() {
        assert_eq!(validate_instance(&one_train_instance()), vec![]);
    }

    #[test]
    fn reversed_window_is_reported() {
        let mut inst = one_train_instance();
        inst.trains[0].begin_day = 5;
        inst.trains[0].end_day = 3;
        let defects = validate_instance(&inst);
        assert_eq!(defects.len(), 1);
        assert_eq!(defects[0].message, "train window reversed");
    }

    #[test]
    fn long_chain_needs_multi_day_flag() {
        let mut inst = one_train_instance();
        inst.routes = vec![
            Route { id: RouteId(1), mileage_km: 100, successor: Some(RouteId(2)), day_offset: 0 },
            Route { id: RouteId(2), mileage_km: 100, successor: Some(RouteId(3)), day_offset: 1 },
            Route { id: RouteId(3), mileage_km: 100, successor: None, day_offset: 2 },
        ];
        inst.eligibility = vec![vec![true, true, true]];
        let defects = validate_instance(&inst);
        assert_eq!(defects.len(), 1, "{defects:?}");
        assert!(defects[0].message.contains("chain longer than two"));

        inst.multi_day_routes = true;
        assert_eq!(validate_instance(&inst), vec![]);
    }

    #[test]
    fn cyclic_chain_is_reported() {
        let mut inst = one_train_instance();
        inst.routes = vec![
            Route { id: RouteId(1), mileage_km: 100, successor: Some(RouteId(2)), day_offset: 0 },
            Route { id: RouteId(2), mileage_km: 100, successor: Some(RouteId(1)), day_offset: 1 },
        ];
        inst.eligibility = vec![vec![true, true]];
        let defects = validate_instance(&inst);
        assert!(defects.iter().any(|d| d.message == "route chain forms a cycle"), "{defects:?}");
    }

    #[test]
    fn spare_id_is_rejected_in_route_list() {
        let mut inst = one_train_instance();
        inst.routes = vec![Route { id: RouteId(0), mileage_km: 10, successor: None, day_offset: 0 }];
        inst.eligibility = vec![vec![true]];
        let defects = validate_instance(&inst);
        assert!(defects.iter().any(|d| d.message.contains("reserved for the spare task")));
    }

    #[test]
    fn negative_mileage_is_a_defect_not_a_panic() {
        let mut inst = one_train_instance();
        inst.routes = vec![Route { id: RouteId(1), mileage_km: -5, successor: None, day_offset: 0 }];
        inst.eligibility = vec![vec![true]];
        let defects = validate_instance(&inst);
        assert!(defects.iter().any(|d| d.message == "mileage must be non-negative"));
    }

    #[test]
    fn validation_is_pure() {
        let mut inst = one_train_instance();
        inst.trains[0].initial_mileage_km = 30_000;
        let a = validate_instance(&inst);
        let b = validate_instance(&inst);
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn window_out_of_horizon() {
        let mut inst = one_train_instance();
        inst.trains[0].end_day = 9;
        let defects = validate_instance(&inst);
        assert!(defects.iter().any(|d| d.message == "window ends after the horizon"));
    }

    #[test]
    fn bad_next_packet_reference() {
        let mut inst = one_train_instance();
        inst.trains[0].next_packet = Some(PacketId(4));
        let defects = validate_instance(&inst);
        assert!(defects.iter().any(|d| d.message.contains("next packet 4 does not exist")));
    }
}
