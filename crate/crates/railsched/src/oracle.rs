//! Exhaustive ground-truth solver. Enumerates the complete schedule space of
//! an instance, keeps the best feasible schedule and certifies optimality by
//! construction. Only meant for small instances; a budget guard refuses
//! anything bigger instead of silently truncating the search.

use thiserror::Error;

use crate::instance::{validate_instance, Day, Defect, Instance, Km, PacketId, RouteId, Train};
use crate::schedule::Schedule;
use crate::semantics::{check_feasibility, objective_value};

/// Enumeration budget and parallelism.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    /// Upper bound on the number of candidate schedules; the solver refuses
    /// up front when the instance's schedule space is larger.
    pub max_candidates: u64,
    /// Number of enumeration workers. The result is identical for any worker
    /// count; workers only split the outermost enumeration dimension.
    pub workers: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        EnumerationLimits { max_candidates: 10_000_000, workers: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub status: OracleStatus,
    pub best_schedule: Option<Schedule>,
    /// Mileage loss of `best_schedule` (km).
    pub best_objective: Option<Km>,
    /// Number of feasible schedules in the whole space.
    pub num_feasible: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance fails validation with {} defect(s)", .0.len())]
    InvalidInstance(Vec<Defect>),
    #[error("schedule space of {estimated} candidates exceeds the budget of {budget}")]
    BudgetExceeded { estimated: u128, budget: u64 },
}

/// One train's complete choice over its window: an optional maintenance
/// visit plus a route/standby decision for every remaining day, with chains
/// expanded as a unit. Enumerating plans per train and taking the cross
/// product covers exactly the structurally well-formed schedules.
#[derive(Debug, Clone)]
struct TrainPlan {
    /// Position in the train's full enumeration order, used as the
    /// deterministic tie-break key.
    index: usize,
    /// One entry per window day: `Some(route)` or `None` for depot days.
    cells: Vec<Option<RouteId>>,
    start: Option<(Day, PacketId)>,
    /// Mileage loss this plan contributes to the objective.
    objective: Km,
    /// Days (1-based) this plan occupies the depot.
    depot_days: Vec<Day>,
    /// Whether the plan respects the cycle bound and mileage range on its own.
    locally_feasible: bool,
}

fn maintenance_options(instance: &Instance, train: &Train) -> Vec<Option<(Day, PacketId)>> {
    let mut options = vec![None];
    if let Some(packet_id) = train.next_packet {
        if let Some(packet) = instance.packet(packet_id) {
            if train.window_len() >= packet.duration_days {
                for day in train.begin_day..=(train.end_day - packet.duration_days + 1) {
                    options.push(Some((day, packet_id)));
                }
            }
        }
    }
    options
}

/// Chains this train could run, eligibility-checked for every entry.
fn eligible_chains(instance: &Instance, train: &Train) -> Vec<Vec<RouteId>> {
    instance
        .chain_heads()
        .map(|head| instance.chain_from(head.id))
        .filter(|chain| chain.iter().all(|r| instance.is_eligible(train.id, *r)))
        .collect()
}

/// Walks the per-day decision tree of one train, calling `emit` for every
/// complete assignment of its window. `cells` uses `None` for undecided days.
fn walk_days<F: FnMut(&[Option<Option<RouteId>>])>(
    chains: &[Vec<RouteId>],
    cells: &mut Vec<Option<Option<RouteId>>>,
    day_idx: usize,
    emit: &mut F,
) {
    if day_idx == cells.len() {
        emit(cells);
        return;
    }
    if cells[day_idx].is_some() {
        walk_days(chains, cells, day_idx + 1, emit);
        return;
    }
    cells[day_idx] = Some(Some(RouteId::SPARE));
    walk_days(chains, cells, day_idx + 1, emit);
    cells[day_idx] = None;
    for chain in chains {
        let end_idx = day_idx + chain.len() - 1;
        if end_idx >= cells.len() || cells[day_idx..=end_idx].iter().any(Option::is_some) {
            continue;
        }
        for (k, route) in chain.iter().enumerate() {
            cells[day_idx + k] = Some(Some(*route));
        }
        walk_days(chains, cells, day_idx + 1, emit);
        for k in 0..chain.len() {
            cells[day_idx + k] = None;
        }
    }
}

fn count_plans(instance: &Instance, train: &Train) -> u128 {
    let chains = eligible_chains(instance, train);
    let mut total: u128 = 0;
    for option in maintenance_options(instance, train) {
        let mut cells: Vec<Option<Option<RouteId>>> = vec![None; train.window_len() as usize];
        if let Some((day, packet_id)) = option {
            let duration = instance.packet(packet_id).expect("validated").duration_days;
            for d in day..day + duration {
                cells[(d - train.begin_day) as usize] = Some(None);
            }
        }
        let mut n: u128 = 0;
        walk_days(&chains, &mut cells, 0, &mut |_| n = n.saturating_add(1));
        total = total.saturating_add(n);
    }
    total
}

fn build_plans(instance: &Instance, train: &Train) -> Vec<TrainPlan> {
    let chains = eligible_chains(instance, train);
    let mut plans = Vec::new();
    for option in maintenance_options(instance, train) {
        let mut cells: Vec<Option<Option<RouteId>>> = vec![None; train.window_len() as usize];
        let mut depot_days = Vec::new();
        if let Some((day, packet_id)) = option {
            let duration = instance.packet(packet_id).expect("validated").duration_days;
            for d in day..day + duration {
                cells[(d - train.begin_day) as usize] = Some(None);
                depot_days.push(d);
            }
        }
        walk_days(&chains, &mut cells, 0, &mut |done| {
            let cells: Vec<Option<RouteId>> =
                done.iter().map(|c| c.expect("walk completed")).collect();
            let index = plans.len();
            plans.push(finish_plan(instance, train, index, cells, option, depot_days.clone()));
        });
    }
    plans
}

fn finish_plan(
    instance: &Instance,
    train: &Train,
    index: usize,
    cells: Vec<Option<RouteId>>,
    start: Option<(Day, PacketId)>,
    depot_days: Vec<Day>,
) -> TrainPlan {
    let mut mileage = train.initial_mileage_km;
    let mut objective = 0;
    let mut total_assigned: Km = 0;
    let mut peak_ok = true;
    for (i, cell) in cells.iter().enumerate() {
        let day = train.begin_day + i as Day;
        let before = mileage;
        if let Some(route_id) = cell {
            if !route_id.is_spare() {
                let km = instance.route(*route_id).expect("eligible route exists").mileage_km;
                mileage += km;
                total_assigned += km;
            }
        }
        if start.map(|(d, _)| d) == Some(day) {
            objective = train.maintenance_cycle_km - before;
            mileage = 0;
        }
        if mileage > train.maintenance_cycle_km {
            peak_ok = false;
        }
    }
    let mut range_ok = true;
    if instance.mileage_range_enabled {
        if let Some(lo) = train.min_mileage_km {
            range_ok &= total_assigned >= lo;
        }
        if let Some(hi) = train.max_mileage_km {
            range_ok &= total_assigned <= hi;
        }
    }
    TrainPlan {
        index,
        cells,
        start,
        objective,
        depot_days,
        locally_feasible: peak_ok && range_ok,
    }
}

/// Coverage/capacity evaluation shared by the enumeration loop. C2, C5, C6,
/// C7, C13 and the schedule shape hold per plan by construction, so a
/// candidate is feasible exactly when every chain head is covered once per
/// fitting day and the depot never overflows.
struct Evaluator {
    horizon: Day,
    capacity: u32,
    /// (route id, first..=last fitting start day) per chain head.
    heads: Vec<(RouteId, Day, Day)>,
    coverage: Vec<u32>,
    depot: Vec<u32>,
}

impl Evaluator {
    fn new(instance: &Instance) -> Evaluator {
        let heads = instance
            .chain_heads()
            .map(|h| {
                let days = instance.chain_start_days(instance.chain_from(h.id).len() as u32);
                (h.id, *days.start(), *days.end())
            })
            .collect::<Vec<_>>();
        Evaluator {
            horizon: instance.horizon_days,
            capacity: instance.depot_capacity,
            coverage: vec![0; heads.len() * instance.horizon_days as usize],
            depot: vec![0; instance.horizon_days as usize],
            heads,
        }
    }

    fn is_feasible(&mut self, trains: &[Train], combo: &[&TrainPlan]) -> bool {
        self.coverage.fill(0);
        self.depot.fill(0);
        let t = self.horizon as usize;
        for (train, plan) in trains.iter().zip(combo) {
            for (i, cell) in plan.cells.iter().enumerate() {
                let Some(route_id) = cell else { continue };
                if route_id.is_spare() {
                    continue;
                }
                if let Some(h) = self.heads.iter().position(|(id, _, _)| id == route_id) {
                    let day = train.begin_day as usize + i;
                    self.coverage[h * t + day - 1] += 1;
                }
            }
            for &day in &plan.depot_days {
                let slot = &mut self.depot[day as usize - 1];
                *slot += 1;
                if *slot > self.capacity {
                    return false;
                }
            }
        }
        for (h, &(_, first, last)) in self.heads.iter().enumerate() {
            for day in first..=last {
                if self.coverage[h * t + day as usize - 1] != 1 {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, PartialEq, Eq)]
struct Best {
    objective: Km,
    /// Per-train plan indices; the lexicographically smallest key wins ties,
    /// which makes the result independent of enumeration partitioning.
    key: Vec<usize>,
}

fn better(candidate: &Best, incumbent: &Option<Best>) -> bool {
    match incumbent {
        None => true,
        Some(b) => (candidate.objective, &candidate.key) < (b.objective, &b.key),
    }
}

/// Enumerates every schedule of the instance, filters by feasibility and
/// returns a minimum-loss schedule (ties broken by the smallest enumeration
/// encoding) or `Infeasible` when nothing passes. Refuses with
/// [`OracleError::BudgetExceeded`] when the schedule space is larger than the
/// budget.
pub fn exhaustive_solve(
    instance: &Instance,
    limits: &EnumerationLimits,
) -> Result<OracleResult, OracleError> {
    let defects = validate_instance(instance);
    if !defects.is_empty() {
        return Err(OracleError::InvalidInstance(defects));
    }

    let estimated: u128 = instance
        .trains
        .iter()
        .map(|t| count_plans(instance, t))
        .fold(1u128, |acc, n| acc.saturating_mul(n));
    if estimated > limits.max_candidates as u128 {
        return Err(OracleError::BudgetExceeded {
            estimated,
            budget: limits.max_candidates,
        });
    }

    let all_plans: Vec<Vec<TrainPlan>> =
        instance.trains.iter().map(|t| build_plans(instance, t)).collect();
    // Locally infeasible plans can never appear in a feasible schedule, so
    // they are skipped; original indices keep the tie-break key stable.
    let plans: Vec<Vec<&TrainPlan>> = all_plans
        .iter()
        .map(|ps| ps.iter().filter(|p| p.locally_feasible).collect())
        .collect();

    log::debug!(
        "oracle: {} candidate schedules over {} trains",
        estimated,
        instance.trains.len()
    );

    let workers = limits.workers.max(1);
    let (best, num_feasible) = if workers == 1 || plans.is_empty() || plans[0].len() <= 1 {
        enumerate_range(instance, &plans, 0, 1)
    } else {
        let results: Vec<(Option<Best>, u64)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let plans = &plans;
                    scope.spawn(move || enumerate_range(instance, plans, w, workers))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("oracle worker")).collect()
        });
        results.into_iter().fold((None, 0), |(best, n), (b, m)| {
            let best = match b {
                Some(b) if better(&b, &best) => Some(b),
                _ => best,
            };
            (best, n + m)
        })
    };

    let Some(best) = best else {
        return Ok(OracleResult {
            status: OracleStatus::Infeasible,
            best_schedule: None,
            best_objective: None,
            num_feasible,
        });
    };

    let combo: Vec<&TrainPlan> = all_plans
        .iter()
        .zip(&best.key)
        .map(|(ps, &i)| &ps[i])
        .collect();
    let schedule = assemble(instance, &combo);
    debug_assert!(check_feasibility(&schedule, instance).unwrap().is_feasible());
    debug_assert_eq!(objective_value(&schedule, instance).unwrap(), best.objective);
    Ok(OracleResult {
        status: OracleStatus::Optimal,
        best_schedule: Some(schedule),
        best_objective: Some(best.objective),
        num_feasible,
    })
}

/// Enumerates the cross product, restricted to the outermost plans with
/// position ≡ `worker` (mod `stride`).
fn enumerate_range(
    instance: &Instance,
    plans: &[Vec<&TrainPlan>],
    worker: usize,
    stride: usize,
) -> (Option<Best>, u64) {
    let mut evaluator = Evaluator::new(instance);
    let mut best: Option<Best> = None;
    let mut num_feasible: u64 = 0;

    if plans.is_empty() {
        // No trains: the single empty schedule.
        if worker == 0 && evaluator.is_feasible(&instance.trains, &[]) {
            num_feasible = 1;
            best = Some(Best { objective: 0, key: vec![] });
        }
        return (best, num_feasible);
    }
    if plans.iter().any(|p| p.is_empty()) {
        return (None, 0);
    }

    let n = plans.len();
    let mut combo: Vec<&TrainPlan> = plans.iter().map(|p| p[0]).collect();
    let mut cursor = vec![0usize; n];

    let mut outer = worker;
    while outer < plans[0].len() {
        cursor[0] = outer;
        combo[0] = plans[0][outer];
        for c in cursor[1..].iter_mut() {
            *c = 0;
        }
        for i in 1..n {
            combo[i] = plans[i][0];
        }
        loop {
            if evaluator.is_feasible(&instance.trains, &combo) {
                num_feasible += 1;
                let objective = combo.iter().map(|p| p.objective).sum();
                let candidate =
                    Best { objective, key: combo.iter().map(|p| p.index).collect() };
                if better(&candidate, &best) {
                    best = Some(candidate);
                }
            }
            // Advance the odometer over trains 1..n; done when it wraps.
            let mut i = n - 1;
            let mut wrapped = true;
            while i >= 1 {
                cursor[i] += 1;
                if cursor[i] < plans[i].len() {
                    combo[i] = plans[i][cursor[i]];
                    wrapped = false;
                    break;
                }
                cursor[i] = 0;
                combo[i] = plans[i][0];
                i -= 1;
            }
            if wrapped {
                break;
            }
        }
        outer += stride;
    }
    (best, num_feasible)
}

fn assemble(instance: &Instance, combo: &[&TrainPlan]) -> Schedule {
    let mut schedule = Schedule::default();
    for (train, plan) in instance.trains.iter().zip(combo) {
        for (i, cell) in plan.cells.iter().enumerate() {
            schedule.set_assignment(train.id, train.begin_day + i as Day, *cell);
        }
        if let Some((day, packet)) = plan.start {
            schedule.add_maintenance_start(train.id, day, packet);
        }
    }
    schedule
}
