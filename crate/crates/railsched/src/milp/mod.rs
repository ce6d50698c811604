//! Linearization of the scheduling model into a mixed-integer linear program.
//!
//! The assignment and maintenance variables are already binary; the only
//! non-linearities are the reset product in the mileage recurrence and the
//! day-window state sums. The recurrence is split into an accrual variable
//! `w[m][t] = l[m][t-1] + (today's route mileage)` and a gated cumulative
//! `l[m][t] = w[m][t] * (1 - y[m][t])`, whose product is replaced by standard
//! big-M rows. The state function expands into fixed per-day sums over the
//! start variables, which keeps every remaining constraint linear.
//!
//! All coefficients are exact integers; a 0/1 assignment of the binaries
//! satisfies the model exactly when the corresponding schedule passes the
//! feasibility checker, with identical objective values.

mod verify;
mod writer;

pub use verify::{verify_external_solution, VerifyError, VerifyOutcome};
pub use writer::{write_lp, write_lp_file, LpWriteError};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::instance::{validate_instance, Day, Defect, Instance, Km, PacketId, RouteId, TrainId};
use crate::schedule::Schedule;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MilpError {
    #[error("instance fails validation with {} defect(s)", .0.len())]
    InvalidInstance(Vec<Defect>),
}

/// What a variable stands for in the schedule model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    /// Train runs a route (or stands by, for the spare route) on a day.
    Assign { train: TrainId, route: RouteId, day: Day },
    /// Train enters the depot for its designated packet on a day.
    Start { train: TrainId, packet: PacketId, day: Day },
    /// Cumulative mileage at the end of a day, after any reset.
    CumulativeMileage { train: TrainId, day: Day },
    /// Mileage accrued through a day before the reset gate.
    AccruedMileage { train: TrainId, day: Day },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous { lower: Km, upper: Km },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub role: VarRole,
}

/// Integer-coefficient linear expression over model variables (by index).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinearExpr {
    pub terms: Vec<(usize, Km)>,
}

impl LinearExpr {
    fn push(&mut self, var: usize, coefficient: Km) {
        if coefficient != 0 {
            self.terms.push((var, coefficient));
        }
    }

    /// Exact value of the expression at the given variable values.
    pub fn value(&self, values: &[Km]) -> i128 {
        self.terms.iter().map(|&(v, c)| values[v] as i128 * c as i128).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearRow {
    pub name: String,
    pub expr: LinearExpr,
    pub sense: RowSense,
    pub rhs: Km,
}

impl LinearRow {
    pub fn satisfied(&self, values: &[Km]) -> bool {
        let lhs = self.expr.value(values);
        let rhs = self.rhs as i128;
        match self.sense {
            RowSense::Le => lhs <= rhs,
            RowSense::Ge => lhs >= rhs,
            RowSense::Eq => lhs == rhs,
        }
    }
}

/// The linearized model: every schedule variable appears exactly once, rows
/// are named `<tag>_...` after the checker rule they encode, and the
/// objective is the mileage loss rewritten over the accrual variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearModel {
    pub variables: Vec<Variable>,
    pub rows: Vec<LinearRow>,
    pub objective: LinearExpr,
    index: BTreeMap<String, usize>,
}

impl LinearModel {
    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn binary_variables(&self) -> impl Iterator<Item = (usize, &Variable)> {
        self.variables.iter().enumerate().filter(|(_, v)| v.kind == VarKind::Binary)
    }

    /// Exact objective value at the given variable values.
    pub fn objective_at(&self, values: &[Km]) -> Km {
        let v = self.objective.value(values);
        Km::try_from(v).expect("objective fits in i64")
    }

    /// True when every row and every variable bound holds.
    pub fn satisfied(&self, values: &[Km]) -> bool {
        self.variables.iter().enumerate().all(|(i, var)| match var.kind {
            VarKind::Binary => values[i] == 0 || values[i] == 1,
            VarKind::Continuous { lower, upper } => lower <= values[i] && values[i] <= upper,
        }) && self.rows.iter().all(|r| r.satisfied(values))
    }
}

struct Builder<'a> {
    inst: &'a Instance,
    variables: Vec<Variable>,
    index: BTreeMap<String, usize>,
    rows: Vec<LinearRow>,
    // Variable lookups by role.
    x: BTreeMap<(TrainId, RouteId, Day), usize>,
    y: BTreeMap<(TrainId, Day), usize>,
    l: BTreeMap<(TrainId, Day), usize>,
    w: BTreeMap<(TrainId, Day), usize>,
}

impl<'a> Builder<'a> {
    fn add_var(&mut self, name: String, kind: VarKind, role: VarRole) -> usize {
        let idx = self.variables.len();
        self.index.insert(name.clone(), idx);
        self.variables.push(Variable { name, kind, role });
        idx
    }

    fn row(&mut self, name: String, expr: LinearExpr, sense: RowSense, rhs: Km) {
        self.rows.push(LinearRow { name, expr, sense, rhs });
    }

    /// The start-day variables of `train` whose depot stay covers `day`.
    fn covering_starts(&self, train: TrainId, day: Day) -> Vec<usize> {
        let t = self.inst.train(train).expect("validated");
        let Some(packet) = t.next_packet.and_then(|p| self.inst.packet(p)) else {
            return vec![];
        };
        let duration = packet.duration_days;
        (t.begin_day..=t.end_day)
            .filter(|&tau| tau <= day && day < tau + duration)
            .filter_map(|tau| self.y.get(&(train, tau)).copied())
            .collect()
    }
}

/// Builds the linear model of an instance. Variables exist only where the
/// schedule model has a real decision: assignment variables for eligible
/// (train, route) pairs plus standby, start variables for the designated
/// packet on days the whole visit fits. Names follow the grammar
/// `x_m<id>_r<id>_t<day>`, `y_m<id>_p<id>_t<day>`, `l_m<id>_t<day>`,
/// `w_m<id>_t<day>`, ordered by train, then route/packet, then day.
pub fn linearize(instance: &Instance) -> Result<LinearModel, MilpError> {
    let defects = validate_instance(instance);
    if !defects.is_empty() {
        return Err(MilpError::InvalidInstance(defects));
    }

    let mut b = Builder {
        inst: instance,
        variables: Vec::new(),
        index: BTreeMap::new(),
        rows: Vec::new(),
        x: BTreeMap::new(),
        y: BTreeMap::new(),
        l: BTreeMap::new(),
        w: BTreeMap::new(),
    };

    // Variables.
    for train in &instance.trains {
        let m = train.id;
        let mut route_ids = vec![RouteId::SPARE];
        route_ids.extend(
            instance.routes.iter().filter(|r| instance.is_eligible(m, r.id)).map(|r| r.id),
        );
        for route in route_ids {
            for day in train.window() {
                let name = format!("x_m{}_r{}_t{}", m.0, route.0, day);
                let idx = b.add_var(name, VarKind::Binary, VarRole::Assign { train: m, route, day });
                b.x.insert((m, route, day), idx);
            }
        }
        if let Some(packet_id) = train.next_packet {
            let duration = instance.packet(packet_id).expect("validated").duration_days;
            if train.window_len() >= duration {
                for day in train.begin_day..=(train.end_day - duration + 1) {
                    let name = format!("y_m{}_p{}_t{}", m.0, packet_id.0, day);
                    let idx = b.add_var(
                        name,
                        VarKind::Binary,
                        VarRole::Start { train: m, packet: packet_id, day },
                    );
                    b.y.insert((m, day), idx);
                }
            }
        }
        for day in train.window() {
            let kind = VarKind::Continuous { lower: 0, upper: train.maintenance_cycle_km };
            let name = format!("l_m{}_t{}", m.0, day);
            let idx = b.add_var(name, kind, VarRole::CumulativeMileage { train: m, day });
            b.l.insert((m, day), idx);
        }
        for day in train.window() {
            let kind = VarKind::Continuous { lower: 0, upper: train.maintenance_cycle_km };
            let name = format!("w_m{}_t{}", m.0, day);
            let idx = b.add_var(name, kind, VarRole::AccruedMileage { train: m, day });
            b.w.insert((m, day), idx);
        }
    }

    // C2: per train-day, one task or standby or an in-progress visit.
    for train in &instance.trains {
        for day in train.window() {
            let mut expr = LinearExpr::default();
            let mut route_ids = vec![RouteId::SPARE];
            route_ids.extend(instance.routes.iter().map(|r| r.id));
            for route in route_ids {
                if let Some(&idx) = b.x.get(&(train.id, route, day)) {
                    expr.push(idx, 1);
                }
            }
            for idx in b.covering_starts(train.id, day) {
                expr.push(idx, 1);
            }
            b.row(format!("C2_m{}_t{}", train.id.0, day), expr, RowSense::Eq, 1);
        }
    }

    // C3: exact coverage of each chain head on the days the chain fits.
    for head in instance.chain_heads() {
        let chain_len = instance.chain_from(head.id).len() as u32;
        for day in instance.chain_start_days(chain_len) {
            let mut expr = LinearExpr::default();
            for train in &instance.trains {
                if let Some(&idx) = b.x.get(&(train.id, head.id, day)) {
                    expr.push(idx, 1);
                }
            }
            b.row(format!("C3_r{}_t{}", head.id.0, day), expr, RowSense::Eq, 1);
        }
    }

    // C4: depot occupancy per day.
    for day in 1..=instance.horizon_days {
        let mut expr = LinearExpr::default();
        for train in &instance.trains {
            if train.window_contains(day) {
                for idx in b.covering_starts(train.id, day) {
                    expr.push(idx, 1);
                }
            }
        }
        if !expr.terms.is_empty() {
            b.row(format!("C4_t{day}"), expr, RowSense::Le, instance.depot_capacity as Km);
        }
    }

    // C5: cumulative mileage within the cycle.
    for train in &instance.trains {
        for day in train.window() {
            let mut expr = LinearExpr::default();
            expr.push(b.l[&(train.id, day)], 1);
            b.row(
                format!("C5_m{}_t{}", train.id.0, day),
                expr,
                RowSense::Le,
                train.maintenance_cycle_km,
            );
        }
    }

    // C6: at most one visit per train.
    for train in &instance.trains {
        let mut expr = LinearExpr::default();
        for day in train.window() {
            if let Some(&idx) = b.y.get(&(train.id, day)) {
                expr.push(idx, 1);
            }
        }
        if !expr.terms.is_empty() {
            b.row(format!("C6_m{}", train.id.0), expr, RowSense::Le, 1);
        }
    }

    // C7: chain linking, pairwise per successor edge, with boundary rows
    // that pin runs which cannot complete to zero.
    for train in &instance.trains {
        for route in &instance.routes {
            let Some(next) = route.successor else { continue };
            let head_var: Vec<Option<usize>> = train
                .window()
                .map(|d| b.x.get(&(train.id, route.id, d)).copied())
                .collect();
            let tail_var: Vec<Option<usize>> =
                train.window().map(|d| b.x.get(&(train.id, next, d)).copied()).collect();
            if head_var[0].is_none() && tail_var[0].is_none() {
                continue;
            }
            let at = |d: Day| (d - train.begin_day) as usize;
            for day in train.begin_day..train.end_day {
                let mut expr = LinearExpr::default();
                if let Some(idx) = head_var[at(day)] {
                    expr.push(idx, 1);
                }
                if let Some(idx) = tail_var[at(day + 1)] {
                    expr.push(idx, -1);
                }
                if !expr.terms.is_empty() {
                    b.row(
                        format!("C7_m{}_r{}_t{}", train.id.0, route.id.0, day),
                        expr,
                        RowSense::Eq,
                        0,
                    );
                }
            }
            if let Some(idx) = head_var[at(train.end_day)] {
                let mut expr = LinearExpr::default();
                expr.push(idx, 1);
                b.row(format!("C7end_m{}_r{}", train.id.0, route.id.0), expr, RowSense::Eq, 0);
            }
            if let Some(idx) = tail_var[at(train.begin_day)] {
                let mut expr = LinearExpr::default();
                expr.push(idx, 1);
                b.row(format!("C7beg_m{}_r{}", train.id.0, next.0), expr, RowSense::Eq, 0);
            }
        }
    }

    // C9: the mileage recurrence. w accrues, l is the big-M-gated copy that
    // drops to zero on start days.
    for train in &instance.trains {
        let big_m = train.maintenance_cycle_km
            + instance.routes.iter().map(|r| r.mileage_km).max().unwrap_or(0);
        for day in train.window() {
            let w = b.w[&(train.id, day)];
            let l = b.l[&(train.id, day)];
            let y = b.y.get(&(train.id, day)).copied();

            let mut def = LinearExpr::default();
            def.push(w, 1);
            let rhs = if day == train.begin_day {
                train.initial_mileage_km
            } else {
                def.push(b.l[&(train.id, day - 1)], -1);
                0
            };
            for route in &instance.routes {
                if let Some(&idx) = b.x.get(&(train.id, route.id, day)) {
                    def.push(idx, -route.mileage_km);
                }
            }
            b.row(format!("C9w_m{}_t{}", train.id.0, day), def, RowSense::Eq, rhs);

            let mut upper = LinearExpr::default();
            upper.push(l, 1);
            upper.push(w, -1);
            b.row(format!("C9a_m{}_t{}", train.id.0, day), upper, RowSense::Le, 0);

            let mut lower = LinearExpr::default();
            lower.push(l, 1);
            lower.push(w, -1);
            if let Some(y) = y {
                lower.push(y, big_m);
            }
            b.row(format!("C9b_m{}_t{}", train.id.0, day), lower, RowSense::Ge, 0);

            if let Some(y) = y {
                let mut cap = LinearExpr::default();
                cap.push(l, 1);
                cap.push(y, big_m);
                b.row(format!("C9c_m{}_t{}", train.id.0, day), cap, RowSense::Le, big_m);
            }
        }
    }

    // C13: total assigned mileage range, when enabled.
    if instance.mileage_range_enabled {
        for train in &instance.trains {
            let mut total = LinearExpr::default();
            for route in &instance.routes {
                for day in train.window() {
                    if let Some(&idx) = b.x.get(&(train.id, route.id, day)) {
                        total.push(idx, route.mileage_km);
                    }
                }
            }
            if let Some(lo) = train.min_mileage_km {
                b.row(format!("C13lo_m{}", train.id.0), total.clone(), RowSense::Ge, lo);
            }
            if let Some(hi) = train.max_mileage_km {
                b.row(format!("C13hi_m{}", train.id.0), total.clone(), RowSense::Le, hi);
            }
        }
    }

    // Objective: each visit costs the whole cycle minus what w - l gives
    // back on the start day (their difference is zero everywhere else).
    let mut objective = LinearExpr::default();
    for train in &instance.trains {
        let has_y = train.window().any(|d| b.y.contains_key(&(train.id, d)));
        if !has_y {
            continue;
        }
        for day in train.window() {
            if let Some(&y) = b.y.get(&(train.id, day)) {
                objective.push(y, train.maintenance_cycle_km);
            }
        }
        for day in train.window() {
            objective.push(b.l[&(train.id, day)], 1);
            objective.push(b.w[&(train.id, day)], -1);
        }
    }

    Ok(LinearModel { variables: b.variables, rows: b.rows, objective, index: b.index })
}

/// Encodes a structurally well-formed schedule as exact values for every
/// model variable: binaries from the assignments and starts, mileage
/// variables from the recurrence.
pub fn encode_schedule(model: &LinearModel, instance: &Instance, schedule: &Schedule) -> Vec<Km> {
    let mut values = vec![0; model.variables.len()];
    for (idx, var) in model.variables.iter().enumerate() {
        match var.role {
            VarRole::Assign { train, route, day } => {
                if schedule.assignment(train, day) == Some(Some(route)) {
                    values[idx] = 1;
                }
            }
            VarRole::Start { train, packet, day } => {
                if schedule.starts_of(train).iter().any(|s| s.day == day && s.packet == packet) {
                    values[idx] = 1;
                }
            }
            _ => {}
        }
    }
    derive_mileage(model, instance, &mut values);
    values
}

/// Fills the `l`/`w` variables from the binaries already present in
/// `values`, following the recurrence the rows encode.
pub(crate) fn derive_mileage(model: &LinearModel, instance: &Instance, values: &mut [Km]) {
    for train in &instance.trains {
        let mut mileage = train.initial_mileage_km;
        for day in train.window() {
            let mut accrued = mileage;
            let mut reset = false;
            for (idx, var) in model.variables.iter().enumerate() {
                match var.role {
                    VarRole::Assign { train: m, route, day: d }
                        if m == train.id && d == day && values[idx] == 1 =>
                    {
                        if let Some(r) = instance.route(route) {
                            accrued += r.mileage_km;
                        }
                    }
                    VarRole::Start { train: m, day: d, .. }
                        if m == train.id && d == day && values[idx] == 1 =>
                    {
                        reset = true;
                    }
                    _ => {}
                }
            }
            mileage = if reset { 0 } else { accrued };
            for (idx, var) in model.variables.iter().enumerate() {
                match var.role {
                    VarRole::AccruedMileage { train: m, day: d } if m == train.id && d == day => {
                        values[idx] = accrued;
                    }
                    VarRole::CumulativeMileage { train: m, day: d }
                        if m == train.id && d == day =>
                    {
                        values[idx] = mileage;
                    }
                    _ => {}
                }
            }
        }
    }
}
