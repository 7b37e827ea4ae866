#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "evfleet/network.hpp"

namespace evfleet {

using VehicleId = int;

// Availability of a vehicle relative to a single canonical charge occupying
// [0, charge_duration]: 0 while charging, linear ramps on either side.
struct AvailabilityFunction {
    double ramp_slope = 1.0 / 900.0;  // per second
    double charge_duration = 300.0;   // seconds

    double value(double t_seconds) const;
};

struct ChargeSlot {
    int start = 0;               // period index
    int duration = 1;            // periods
    std::optional<StationId> station;

    int end() const { return start + duration; }
    bool covers(int period) const { return period >= start && period < end(); }
};

struct ChargeSchedule {
    // per-vehicle slots, kept sorted by start
    std::map<VehicleId, std::vector<ChargeSlot>> slots;

    void add(VehicleId v, ChargeSlot slot);
    bool empty() const;
};

struct LongVehicle {
    VehicleId id = 0;
    int release_period = 0;              // e_v
    double initial_charge = 1.0;         // Q_{v,0} at the release period
    std::vector<double> prior_availability;  // P_{v,t}; empty means all 1
};

// Frozen input to the long-horizon planners.  Rates are per period.
struct LongInstance {
    double period_length_s = 300.0;
    int horizon = 0;  // periods
    std::vector<LongVehicle> vehicles;
    std::vector<int> requirement;  // R(t), size horizon
    int total_capacity = 0;        // K
    double charge_rate = 0.0;      // eta per period
    double discharge_rate = 0.0;   // q_est per period
    double penalty = 86400.0;      // M
    int frozen_before = 0;         // slots starting earlier are immutable
    double ramp_slope = 1.0 / 900.0;  // per second, for A(t)
    // station slots already consumed per period by vehicles outside this
    // instance (e.g. currently charging); empty means none
    std::vector<int> base_capacity_used;

    AvailabilityFunction availability() const {
        return {ramp_slope, period_length_s};
    }
    void validate() const;
};

// Earliest charging time for a vehicle finishing its route at (t_c, n):
// t_c + t(n, s) when the station is known, otherwise t_c + max(t(n, s_opt), D).
double release_date(const RoadNetwork& net, double t_c_seconds, NodeId n,
                    std::optional<NodeId> station_node, double buffer_D_seconds);

// Shortfall-plus-negative-charge objective of a schedule under an instance.
// Throws CapacityViolation if any period exceeds total capacity.
double long_objective(const LongInstance& instance, const ChargeSchedule& schedule);

// Globally optimal (possibly preemptive) charging matrix by branch and bound;
// oracle scale only (|V| <= 4, horizon <= 12).
ChargeSchedule solve_long_exact(const LongInstance& instance);

struct LongHeuristicReport {
    std::vector<VehicleId> late_vehicles;  // scheduled past their deadline
    std::vector<VehicleId> soft_availability;  // R(t) relaxed to place them
    std::int64_t pushback_operations = 0;      // elementary period probes
};

// Deadline-priority heuristic: latest-deadline vehicles are scheduled as late
// as possible, with recursive push-back displacement on conflicts.  Slots
// starting before frozen_before are copied from `previous` untouched.
ChargeSchedule solve_long_heuristic(const LongInstance& instance,
                                    const ChargeSchedule& previous,
                                    LongHeuristicReport* report = nullptr);

// Theorem guard on the long/short overlap: delta must not exceed 2 * T_long.
bool check_delta_bound(double t_long_seconds, double delta_seconds);

// Audit/replay format: vehicle_id,start_s,duration_s,station_id with an empty
// station field for slots not yet assigned to a station.
void save_schedule(const std::string& path, const ChargeSchedule& schedule,
                   double period_length_s);
ChargeSchedule load_schedule(const std::string& path, double period_length_s);

}  // namespace evfleet
