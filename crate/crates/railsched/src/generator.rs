//! Seeded random instance generation for benchmarks and tests. Every
//! generated instance passes structural validation by construction; a
//! coverage guarantee keeps at least one eligible train per task.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{
    validate_instance, Day, Instance, Km, MaintenancePacket, PacketId, Route, RouteId, Train,
    TrainId,
};

fn default_duration_min() -> u32 {
    1
}
fn default_duration_max() -> u32 {
    2
}

/// Shape of the instances to generate. Two-day tasks are emitted as linked
/// head/successor pairs; eligibility is drawn per task and shared by its
/// sub-routes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    /// Number of trains |E|.
    pub num_trains: u32,
    /// Number of transportation tasks |R| (a two-day task yields two linked
    /// route entries).
    pub num_routes: u32,
    /// Number of maintenance packets |P|.
    pub num_packets: u32,
    /// Planning horizon T in days.
    pub horizon_days: Day,
    /// Per-sub-route mileage, drawn uniformly from this inclusive range (km).
    pub route_mileage_min: Km,
    pub route_mileage_max: Km,
    /// Probability that a task spans two days.
    pub two_day_fraction: f64,
    /// Maintenance cycle per train, drawn uniformly (km).
    pub cycle_min: Km,
    pub cycle_max: Km,
    /// Initial mileage as a fraction of the train's cycle, drawn uniformly.
    pub initial_fraction_min: f64,
    pub initial_fraction_max: f64,
    /// Depot capacity (trains per day).
    pub depot_capacity: u32,
    /// Packet duration in days, drawn uniformly.
    #[serde(default = "default_duration_min")]
    pub packet_duration_min: u32,
    #[serde(default = "default_duration_max")]
    pub packet_duration_max: u32,
    pub seed: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("inconsistent generator spec: {0}")]
    Inconsistent(String),
    #[error("{needed} trains are needed to cover the daily task demand, only {available} available")]
    CoverageImpossible { needed: u32, available: u32 },
}

fn check(spec: &GeneratorSpec) -> Result<(), GenError> {
    let fail = |m: &str| Err(GenError::Inconsistent(m.into()));
    if spec.horizon_days < 1 {
        return fail("horizon must span at least one day");
    }
    if spec.route_mileage_min < 0 || spec.route_mileage_min > spec.route_mileage_max {
        return fail("route mileage range is empty or negative");
    }
    if spec.cycle_min < 1 || spec.cycle_min > spec.cycle_max {
        return fail("cycle range is empty or non-positive");
    }
    if !(0.0..=1.0).contains(&spec.two_day_fraction) {
        return fail("two-day fraction must be within [0, 1]");
    }
    let fr = (spec.initial_fraction_min, spec.initial_fraction_max);
    if !(0.0..=1.0).contains(&fr.0) || !(0.0..=1.0).contains(&fr.1) || fr.0 > fr.1 {
        return fail("initial mileage fraction range must be within [0, 1]");
    }
    if spec.packet_duration_min < 1 || spec.packet_duration_min > spec.packet_duration_max {
        return fail("packet duration range is empty or zero");
    }
    Ok(())
}

/// Generates one instance; deterministic for a given spec (seed included).
pub fn generate_instance(spec: &GeneratorSpec) -> Result<Instance, GenError> {
    check(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let packets: Vec<MaintenancePacket> = (1..=spec.num_packets)
        .map(|id| MaintenancePacket {
            id: PacketId(id),
            duration_days: rng.gen_range(spec.packet_duration_min..=spec.packet_duration_max),
        })
        .collect();

    // Tasks: route entries with successor links for two-day tasks. `tasks`
    // remembers which entries belong to which task for the eligibility draw.
    let mut routes: Vec<Route> = Vec::new();
    let mut tasks: Vec<Vec<usize>> = Vec::new();
    let mut next_id: u32 = 1;
    for _ in 0..spec.num_routes {
        let two_day = spec.horizon_days >= 2 && rng.gen_bool(spec.two_day_fraction);
        let mileage = rng.gen_range(spec.route_mileage_min..=spec.route_mileage_max);
        if two_day {
            let tail_mileage = rng.gen_range(spec.route_mileage_min..=spec.route_mileage_max);
            routes.push(Route {
                id: RouteId(next_id),
                mileage_km: mileage,
                successor: Some(RouteId(next_id + 1)),
                day_offset: 0,
            });
            routes.push(Route {
                id: RouteId(next_id + 1),
                mileage_km: tail_mileage,
                successor: None,
                day_offset: 1,
            });
            tasks.push(vec![routes.len() - 2, routes.len() - 1]);
            next_id += 2;
        } else {
            routes.push(Route {
                id: RouteId(next_id),
                mileage_km: mileage,
                successor: None,
                day_offset: 0,
            });
            tasks.push(vec![routes.len() - 1]);
            next_id += 1;
        }
    }

    // Steady-state demand: every task occupies one train per sub-route day.
    let demand = routes.len() as u32;
    if spec.num_trains < demand {
        return Err(GenError::CoverageImpossible { needed: demand, available: spec.num_trains });
    }

    let trains: Vec<Train> = (1..=spec.num_trains)
        .map(|id| {
            let cycle = rng.gen_range(spec.cycle_min..=spec.cycle_max);
            let fraction =
                rng.gen_range(spec.initial_fraction_min..=spec.initial_fraction_max);
            let initial = ((cycle as f64) * fraction).floor() as Km;
            Train {
                id: TrainId(id),
                begin_day: 1,
                end_day: spec.horizon_days,
                maintenance_cycle_km: cycle,
                initial_mileage_km: initial.min(cycle),
                next_packet: packets
                    .get((id as usize - 1) % packets.len().max(1))
                    .map(|p| p.id),
                min_mileage_km: None,
                max_mileage_km: None,
            }
        })
        .collect();

    // Eligibility per (train, task), replicated over the task's sub-routes.
    // Task k is pinned to train k % |E| so every task has at least one
    // eligible train.
    let mut eligibility = vec![vec![false; routes.len()]; trains.len()];
    for (k, entries) in tasks.iter().enumerate() {
        for (m, row) in eligibility.iter_mut().enumerate() {
            let eligible = m == k % trains.len() || rng.gen_bool(0.75);
            for &e in entries {
                row[e] = eligible;
            }
        }
    }

    let instance = Instance {
        horizon_days: spec.horizon_days,
        depot_capacity: spec.depot_capacity,
        mileage_range_enabled: false,
        multi_day_routes: false,
        trains,
        routes,
        packets,
        eligibility,
    };
    debug_assert!(validate_instance(&instance).is_empty());
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exhaustive_solve, EnumerationLimits};

    pub(crate) fn small_spec(seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            num_trains: 4,
            num_routes: 2,
            num_packets: 2,
            horizon_days: 4,
            route_mileage_min: 200,
            route_mileage_max: 600,
            two_day_fraction: 0.3,
            cycle_min: 1_500,
            cycle_max: 3_000,
            initial_fraction_min: 0.0,
            initial_fraction_max: 0.8,
            depot_capacity: 1,
            packet_duration_min: 1,
            packet_duration_max: 2,
            seed,
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let a = generate_instance(&small_spec(1)).unwrap();
        let b = generate_instance(&small_spec(1)).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&small_spec(2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_two_day_fraction_means_no_links() {
        let mut spec = small_spec(5);
        spec.two_day_fraction = 0.0;
        let inst = generate_instance(&spec).unwrap();
        assert!(inst.routes.iter().all(|r| r.successor.is_none()));
        assert_eq!(inst.routes.len(), 2);
    }

    #[test]
    fn thousand_seeds_all_validate() {
        for seed in 0..1_000 {
            let inst = generate_instance(&small_spec(seed)).unwrap();
            assert_eq!(validate_instance(&inst), vec![], "seed {seed}");
        }
    }

    #[test]
    fn undersized_fleet_is_refused() {
        let mut spec = small_spec(0);
        spec.num_trains = 1;
        spec.two_day_fraction = 1.0;
        assert!(matches!(
            generate_instance(&spec),
            Err(GenError::CoverageImpossible { .. })
        ));
    }

    #[test]
    fn bad_ranges_are_refused() {
        let mut spec = small_spec(0);
        spec.cycle_min = 0;
        assert!(matches!(generate_instance(&spec), Err(GenError::Inconsistent(_))));
        let mut spec = small_spec(0);
        spec.initial_fraction_max = 1.4;
        assert!(matches!(generate_instance(&spec), Err(GenError::Inconsistent(_))));
    }

    /// Oracle-scale spec: the exhaustive solver either solves or proves
    /// infeasibility within the default budget, never refusing.
    #[test]
    fn oracle_scale_instances_stay_within_budget() {
        for seed in 0..10 {
            let mut spec = small_spec(seed);
            spec.num_trains = 3;
            spec.num_routes = 2;
            spec.two_day_fraction = 0.0;
            spec.horizon_days = 3;
            let inst = generate_instance(&spec).unwrap();
            let result = exhaustive_solve(&inst, &EnumerationLimits::default());
            assert!(result.is_ok(), "seed {seed}: {result:?}");
        }
    }
}
