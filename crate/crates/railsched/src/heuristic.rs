//! Practical solver: greedy day-by-day construction with bounded
//! backtracking, followed by simulated annealing over feasible schedules.
//! Everything is seed-deterministic; infeasible neighbours are simply
//! rejected, so any schedule this module emits passes the checker.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{validate_instance, Day, Defect, Instance, Km, PacketId, RouteId};
use crate::schedule::{random_schedule, Schedule};
use crate::semantics::{is_feasible, objective_value};

/// Relative weights of the neighbourhood moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveWeights {
    /// Swap two trains' assignments on one day.
    pub swap_day: u32,
    /// Move a maintenance visit a few days earlier or later.
    pub shift_visit: u32,
    /// Hand one chain occurrence to a different eligible train.
    pub reassign_chain: u32,
    /// Insert a maintenance visit on standby days, or drop one.
    pub toggle_visit: u32,
}

impl Default for MoveWeights {
    fn default() -> Self {
        MoveWeights { swap_day: 3, shift_visit: 2, reassign_chain: 3, toggle_visit: 2 }
    }
}

/// Annealing controls. `for_instance` derives sensible defaults from the
/// instance's mileage scale; all fields can be overridden.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub seed: u64,
    pub initial_temperature: f64,
    pub cooling_rate: f64,
    pub iterations_per_temperature: u32,
    pub min_temperature: f64,
    pub weights: MoveWeights,
}

impl SearchParams {
    pub fn for_instance(instance: &Instance) -> SearchParams {
        let cycles: Km = instance.trains.iter().map(|t| t.maintenance_cycle_km).sum();
        let scale = cycles as f64 / instance.trains.len().max(1) as f64;
        let initial_temperature = (0.1 * scale).max(1.0);
        SearchParams {
            seed: 0,
            initial_temperature,
            cooling_rate: 0.95,
            iterations_per_temperature: 200,
            min_temperature: 1e-3 * initial_temperature,
            weights: MoveWeights::default(),
        }
    }

    pub fn validate(&self) -> Result<(), HeuristicError> {
        if !(self.cooling_rate > 0.0 && self.cooling_rate < 1.0) {
            return Err(HeuristicError::InvalidParams("cooling rate must be in (0, 1)".into()));
        }
        if self.initial_temperature <= 0.0 || self.min_temperature <= 0.0 {
            return Err(HeuristicError::InvalidParams("temperatures must be positive".into()));
        }
        let w = &self.weights;
        if w.swap_day + w.shift_visit + w.reassign_chain + w.toggle_visit == 0 {
            return Err(HeuristicError::InvalidParams("move weights must not all be zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Feasible,
    NoSolutionFound,
}

/// One improvement of the best-so-far objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    pub objective: Km,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub schedule: Option<Schedule>,
    pub objective: Option<Km>,
    /// Strictly decreasing objectives, starting with the initial incumbent.
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeuristicError {
    #[error("instance fails validation with {} defect(s)", .0.len())]
    InvalidInstance(Vec<Defect>),
    #[error("invalid search parameters: {0}")]
    InvalidParams(String),
}

/// Node budget for the constructive search: how many day matchings to try
/// before giving up.
const MAX_BACKTRACK_NODES: usize = 4_000;
/// Random well-formed schedules sampled when greedy construction fails.
const SAMPLE_ATTEMPTS: usize = 400;

/// Greedy day-by-day construction. Each chain head that must run on a day is
/// given to the eligible train with the most remaining mileage headroom;
/// trains whose headroom no longer covers their cheapest possible task are
/// sent to maintenance while capacity allows. Dead ends backtrack through
/// alternative assignments up to a fixed node budget. Returns `None` when no
/// feasible schedule was found within the budget (which is not a proof of
/// infeasibility).
pub fn construct_initial(instance: &Instance, seed: u64) -> Option<Schedule> {
    if !validate_instance(instance).is_empty() {
        return None;
    }
    let mut builder = Builder::new(instance, seed);
    if builder.place_day(1) {
        let schedule = builder.to_schedule();
        debug_assert!(is_feasible(&schedule, instance));
        Some(schedule)
    } else {
        None
    }
}

struct Demand {
    head: RouteId,
    chain: Vec<RouteId>,
}

struct Builder<'a> {
    inst: &'a Instance,
    /// Per train position, per window-day index: `None` = undecided.
    cells: Vec<Vec<Option<Option<RouteId>>>>,
    mileage: Vec<Km>,
    start: Vec<Option<(Day, PacketId)>>,
    depot: Vec<u32>,
    /// Seed-derived priority used to break exact headroom ties.
    priority: Vec<u64>,
    nodes: usize,
}

impl<'a> Builder<'a> {
    fn new(inst: &'a Instance, seed: u64) -> Builder<'a> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Builder {
            inst,
            cells: inst.trains.iter().map(|t| vec![None; t.window_len() as usize]).collect(),
            mileage: inst.trains.iter().map(|t| t.initial_mileage_km).collect(),
            start: vec![None; inst.trains.len()],
            depot: vec![0; inst.horizon_days as usize],
            priority: (0..inst.trains.len()).map(|_| rng.gen()).collect(),
            nodes: MAX_BACKTRACK_NODES,
        }
    }

    fn cell(&self, m: usize, day: Day) -> Option<Option<RouteId>> {
        let t = &self.inst.trains[m];
        if !t.window_contains(day) {
            // Outside the window there is nothing to decide.
            return Some(Some(RouteId::SPARE));
        }
        self.cells[m][(day - t.begin_day) as usize]
    }

    fn set_cell(&mut self, m: usize, day: Day, value: Option<Option<RouteId>>) {
        let begin = self.inst.trains[m].begin_day;
        self.cells[m][(day - begin) as usize] = value;
    }

    fn demands_on(&self, day: Day) -> Vec<Demand> {
        let mut demands: Vec<Demand> = self
            .inst
            .chain_heads()
            .map(|h| Demand { head: h.id, chain: self.inst.chain_from(h.id) })
            .filter(|d| self.inst.chain_start_days(d.chain.len() as u32).contains(&day))
            .collect();
        let total = |d: &Demand| -> Km {
            d.chain.iter().filter_map(|r| self.inst.route(*r)).map(|r| r.mileage_km).sum()
        };
        demands.sort_by_key(|d| {
            (std::cmp::Reverse(d.chain.len()), std::cmp::Reverse(total(d)), d.head)
        });
        demands
    }

    /// Trains that can take the whole chain starting today, best headroom
    /// first.
    fn candidates(&self, demand: &Demand, day: Day) -> Vec<usize> {
        let span = demand.chain.len() as Day;
        let mut out: Vec<usize> = Vec::new();
        'train: for (m, t) in self.inst.trains.iter().enumerate() {
            if !t.window_contains(day) || !t.window_contains(day + span - 1) {
                continue;
            }
            let mut mileage = self.mileage[m];
            for (k, route_id) in demand.chain.iter().enumerate() {
                if !self.inst.is_eligible(t.id, *route_id) {
                    continue 'train;
                }
                if self.cell(m, day + k as Day).is_some() {
                    continue 'train;
                }
                mileage += self.inst.route(*route_id).expect("validated").mileage_km;
                if mileage > t.maintenance_cycle_km {
                    continue 'train;
                }
            }
            out.push(m);
        }
        out.sort_by_key(|&m| {
            let headroom = self.inst.trains[m].maintenance_cycle_km - self.mileage[m];
            (std::cmp::Reverse(headroom), self.priority[m])
        });
        out
    }

    fn place_day(&mut self, day: Day) -> bool {
        if day > self.inst.horizon_days {
            return is_feasible(&self.to_schedule(), self.inst);
        }
        let demands = self.demands_on(day);
        self.match_demands(day, &demands, 0)
    }

    fn match_demands(&mut self, day: Day, demands: &[Demand], di: usize) -> bool {
        if self.nodes == 0 {
            return false;
        }
        if di == demands.len() {
            self.nodes -= 1;
            return self.finish_day(day);
        }
        let demand = &demands[di];
        for m in self.candidates(demand, day) {
            for (k, route_id) in demand.chain.iter().enumerate() {
                self.set_cell(m, day + k as Day, Some(Some(*route_id)));
            }
            if self.match_demands(day, demands, di + 1) {
                return true;
            }
            for k in 0..demand.chain.len() {
                self.set_cell(m, day + k as Day, None);
            }
            if self.nodes == 0 {
                return false;
            }
        }
        false
    }

    /// Applies the maintenance rule and standby fill for `day`, advances the
    /// mileage counters and recurses into the next day. Restores all state on
    /// failure.
    fn finish_day(&mut self, day: Day) -> bool {
        let snapshot =
            (self.cells.clone(), self.mileage.clone(), self.start.clone(), self.depot.clone());

        for (m, train) in self.inst.trains.iter().enumerate() {
            if !train.window_contains(day) || self.cell(m, day).is_some() {
                continue;
            }
            // Idle today. Send it to the depot when its headroom no longer
            // covers the cheapest task it could be asked to run.
            let cheapest: Option<Km> = self
                .inst
                .routes
                .iter()
                .filter(|r| self.inst.is_eligible(train.id, r.id))
                .map(|r| r.mileage_km)
                .min();
            let headroom = train.maintenance_cycle_km - self.mileage[m];
            let must_maintain = cheapest.is_some_and(|c| headroom < c);
            if must_maintain && self.start[m].is_none() {
                if let Some(packet_id) = train.next_packet {
                    let duration = self.inst.packet(packet_id).expect("validated").duration_days;
                    let fits = day + duration - 1 <= train.end_day;
                    let free = fits
                        && (day..day + duration).all(|d| {
                            self.depot[d as usize - 1] < self.inst.depot_capacity
                                && self.cell(m, d).is_none()
                        });
                    if free {
                        for d in day..day + duration {
                            self.set_cell(m, d, Some(None));
                            self.depot[d as usize - 1] += 1;
                        }
                        self.start[m] = Some((day, packet_id));
                        continue;
                    }
                }
            }
            self.set_cell(m, day, Some(Some(RouteId::SPARE)));
        }

        for (m, train) in self.inst.trains.iter().enumerate() {
            if !train.window_contains(day) {
                continue;
            }
            if let Some(Some(route_id)) = self.cell(m, day) {
                if !route_id.is_spare() {
                    self.mileage[m] += self.inst.route(route_id).expect("validated").mileage_km;
                }
            }
            if self.start[m].map(|(d, _)| d) == Some(day) {
                self.mileage[m] = 0;
            }
        }

        if self.place_day(day + 1) {
            return true;
        }
        (self.cells, self.mileage, self.start, self.depot) = snapshot;
        false
    }

    fn to_schedule(&self) -> Schedule {
        let mut schedule = Schedule::default();
        for (m, train) in self.inst.trains.iter().enumerate() {
            for (i, cell) in self.cells[m].iter().enumerate() {
                let value = cell.unwrap_or(Some(RouteId::SPARE));
                schedule.set_assignment(train.id, train.begin_day + i as Day, value);
            }
            if let Some((day, packet)) = self.start[m] {
                schedule.add_maintenance_start(train.id, day, packet);
            }
        }
        schedule
    }
}

/// Simulated annealing over feasible schedules, starting from
/// [`construct_initial`] (or random sampling when construction fails).
/// Proposals that violate any constraint are discarded; accepted moves follow
/// the Metropolis rule. Fully reproducible for a given (instance, params).
pub fn solve(instance: &Instance, params: &SearchParams) -> Result<SolveOutcome, HeuristicError> {
    let defects = validate_instance(instance);
    if !defects.is_empty() {
        return Err(HeuristicError::InvalidInstance(defects));
    }
    params.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut incumbent = construct_initial(instance, params.seed);
    if incumbent.is_none() {
        log::debug!("greedy construction failed, falling back to sampling");
        for _ in 0..SAMPLE_ATTEMPTS {
            let candidate = random_schedule(instance, &mut rng);
            if is_feasible(&candidate, instance) {
                incumbent = Some(candidate);
                break;
            }
        }
    }
    let Some(mut current) = incumbent else {
        return Ok(SolveOutcome {
            status: SolveStatus::NoSolutionFound,
            schedule: None,
            objective: None,
            trace: vec![],
        });
    };

    let mut current_objective = objective_value(&current, instance).expect("feasible schedule");
    let mut best = current.clone();
    let mut best_objective = current_objective;
    let mut trace = vec![TracePoint { iteration: 0, objective: best_objective }];

    let mut temperature = params.initial_temperature;
    let mut iteration: u64 = 0;
    while temperature > params.min_temperature {
        for _ in 0..params.iterations_per_temperature {
            iteration += 1;
            let Some(proposal) = propose(&mut rng, &current, instance, &params.weights) else {
                continue;
            };
            if !is_feasible(&proposal, instance) {
                continue;
            }
            let objective = objective_value(&proposal, instance).expect("feasible schedule");
            let delta = objective - current_objective;
            let accept = delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / temperature).exp();
            if accept {
                current = proposal;
                current_objective = objective;
                if current_objective < best_objective {
                    best = current.clone();
                    best_objective = current_objective;
                    trace.push(TracePoint { iteration, objective: best_objective });
                }
            }
        }
        temperature *= params.cooling_rate;
    }

    log::info!("annealing finished after {iteration} iterations, objective {best_objective}");
    Ok(SolveOutcome {
        status: SolveStatus::Feasible,
        schedule: Some(best),
        objective: Some(best_objective),
        trace,
    })
}

fn propose<R: Rng>(
    rng: &mut R,
    current: &Schedule,
    instance: &Instance,
    weights: &MoveWeights,
) -> Option<Schedule> {
    let total =
        weights.swap_day + weights.shift_visit + weights.reassign_chain + weights.toggle_visit;
    let mut pick = rng.gen_range(0..total);
    type Mover<R> = fn(&mut R, &Schedule, &Instance) -> Option<Schedule>;
    let movers: [(u32, Mover<R>); 4] = [
        (weights.swap_day, move_swap_day),
        (weights.shift_visit, move_shift_visit),
        (weights.reassign_chain, move_reassign_chain),
        (weights.toggle_visit, move_toggle_visit),
    ];
    for (weight, mover) in movers {
        if pick < weight {
            return mover(rng, current, instance);
        }
        pick -= weight;
    }
    None
}

/// Move (a): swap the whole-day assignments of two trains.
fn move_swap_day<R: Rng>(
    rng: &mut R,
    current: &Schedule,
    instance: &Instance,
) -> Option<Schedule> {
    let day = rng.gen_range(1..=instance.horizon_days);
    let swappable: Vec<_> = instance
        .trains
        .iter()
        .filter(|t| t.window_contains(day))
        .filter(|t| matches!(current.assignment(t.id, day), Some(Some(_))))
        .map(|t| t.id)
        .collect();
    if swappable.len() < 2 {
        return None;
    }
    let a = swappable[rng.gen_range(0..swappable.len())];
    let b = swappable[rng.gen_range(0..swappable.len())];
    if a == b {
        return None;
    }
    let cell_a = current.assignment(a, day).unwrap();
    let cell_b = current.assignment(b, day).unwrap();
    if cell_a == cell_b {
        return None;
    }
    let mut next = current.clone();
    next.set_assignment(a, day, cell_b);
    next.set_assignment(b, day, cell_a);
    Some(next)
}

/// Move (b): slide a maintenance visit by up to three days, keeping it inside
/// the train's window. Days vacated become standby; the new visit days must
/// currently be standby (or already depot days) so no route is dropped.
fn move_shift_visit<R: Rng>(
    rng: &mut R,
    current: &Schedule,
    instance: &Instance,
) -> Option<Schedule> {
    let with_visit: Vec<_> = instance
        .trains
        .iter()
        .filter(|t| current.maintenance_start(t.id).is_some())
        .collect();
    if with_visit.is_empty() {
        return None;
    }
    let train = with_visit[rng.gen_range(0..with_visit.len())];
    let start = current.maintenance_start(train.id).unwrap();
    let duration = instance.packet(start.packet)?.duration_days;
    let delta: i64 = [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6)];
    let latest = train.end_day.checked_sub(duration - 1)?;
    if latest < train.begin_day {
        return None;
    }
    let new_day = (start.day as i64 + delta).clamp(train.begin_day as i64, latest as i64) as Day;
    if new_day == start.day {
        return None;
    }
    let old_days: Vec<Day> = (start.day..start.day + duration).collect();
    let new_days: Vec<Day> = (new_day..new_day + duration).collect();
    for &d in &new_days {
        if !old_days.contains(&d) && current.assignment(train.id, d) != Some(Some(RouteId::SPARE))
        {
            return None;
        }
    }
    let mut next = current.clone();
    for &d in &old_days {
        next.set_assignment(train.id, d, Some(RouteId::SPARE));
    }
    for &d in &new_days {
        next.set_assignment(train.id, d, None);
    }
    next.set_maintenance_starts(
        train.id,
        vec![crate::schedule::MaintenanceStart { day: new_day, packet: start.packet }],
    );
    Some(next)
}

/// Move (c): give one chain occurrence to a different eligible train whose
/// days are all standby.
fn move_reassign_chain<R: Rng>(
    rng: &mut R,
    current: &Schedule,
    instance: &Instance,
) -> Option<Schedule> {
    let mut occurrences: Vec<(usize, Day, Vec<RouteId>)> = Vec::new();
    for (m, train) in instance.trains.iter().enumerate() {
        for day in train.window() {
            if let Some(Some(r)) = current.assignment(train.id, day) {
                if !r.is_spare() && instance.is_chain_head(r) {
                    occurrences.push((m, day, instance.chain_from(r)));
                }
            }
        }
    }
    if occurrences.is_empty() {
        return None;
    }
    let (m1, day, chain) = occurrences.swap_remove(rng.gen_range(0..occurrences.len()));
    let span = chain.len() as Day;
    let donor = instance.trains[m1].id;
    let takers: Vec<_> = instance
        .trains
        .iter()
        .filter(|t| t.id != donor)
        .filter(|t| t.window_contains(day) && t.window_contains(day + span - 1))
        .filter(|t| chain.iter().all(|r| instance.is_eligible(t.id, *r)))
        .filter(|t| {
            (day..day + span).all(|d| current.assignment(t.id, d) == Some(Some(RouteId::SPARE)))
        })
        .map(|t| t.id)
        .collect();
    if takers.is_empty() {
        return None;
    }
    let taker = takers[rng.gen_range(0..takers.len())];
    let mut next = current.clone();
    for (k, route_id) in chain.iter().enumerate() {
        next.set_assignment(donor, day + k as Day, Some(RouteId::SPARE));
        next.set_assignment(taker, day + k as Day, Some(*route_id));
    }
    Some(next)
}

/// Move (d): insert a maintenance visit on a run of standby days, or remove
/// an existing one.
fn move_toggle_visit<R: Rng>(
    rng: &mut R,
    current: &Schedule,
    instance: &Instance,
) -> Option<Schedule> {
    if rng.gen_bool(0.5) {
        // Remove a visit.
        let with_visit: Vec<_> = instance
            .trains
            .iter()
            .filter(|t| current.maintenance_start(t.id).is_some())
            .collect();
        if with_visit.is_empty() {
            return None;
        }
        let train = with_visit[rng.gen_range(0..with_visit.len())];
        let start = current.maintenance_start(train.id).unwrap();
        let duration = instance.packet(start.packet)?.duration_days;
        let mut next = current.clone();
        for d in start.day..start.day + duration {
            next.set_assignment(train.id, d, Some(RouteId::SPARE));
        }
        next.clear_maintenance(train.id);
        Some(next)
    } else {
        // Insert a visit for a train that has none yet.
        let without: Vec<_> = instance
            .trains
            .iter()
            .filter(|t| t.next_packet.is_some() && current.maintenance_start(t.id).is_none())
            .collect();
        if without.is_empty() {
            return None;
        }
        let train = without[rng.gen_range(0..without.len())];
        let packet_id = train.next_packet.unwrap();
        let duration = instance.packet(packet_id)?.duration_days;
        let latest = train.end_day.checked_sub(duration - 1)?;
        if latest < train.begin_day {
            return None;
        }
        let days: Vec<Day> = (train.begin_day..=latest)
            .filter(|&start| {
                (start..start + duration)
                    .all(|d| current.assignment(train.id, d) == Some(Some(RouteId::SPARE)))
            })
            .collect();
        if days.is_empty() {
            return None;
        }
        let start = days[rng.gen_range(0..days.len())];
        let mut next = current.clone();
        for d in start..start + duration {
            next.set_assignment(train.id, d, None);
        }
        next.add_maintenance_start(train.id, start, packet_id);
        Some(next)
    }
}
