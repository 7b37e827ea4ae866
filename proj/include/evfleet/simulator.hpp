#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evfleet/battery.hpp"
#include "evfleet/benchmark.hpp"
#include "evfleet/demand.hpp"
#include "evfleet/network.hpp"
#include "evfleet/pooling.hpp"

namespace evfleet {

enum class Method { ICE, MILP, HEURISTIC, BENCHMARK };
enum class InitialCharge { FULL, UNIFORM_RANDOM };

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);

struct ScenarioConfig {
    Method method = Method::HEURISTIC;
    double t_batch = 60.0;
    double t_short = 60.0;
    double t_long = 300.0;
    double t_sl = 2700.0;
    double delta = 600.0;  // long/short overlap, defaults to 2 * t_long
    double buffer_D = 600.0;
    QosPolicy qos;
    BatteryModel battery;
    int fleet_size = 20;
    int vehicle_capacity = 10;
    std::uint64_t seed = 0;
    double day_start = 5.0 * 3600.0;
    double day_end = 24.0 * 3600.0;
    InitialCharge initial_charge = InitialCharge::FULL;
    double lambda = 0.5;               // R(t) mix; negative means calibrate
    bool allow_delta_override = false;  // permit delta > 2 * t_long
    double benchmark_threshold = 0.05;
    double benchmark_radius = 900.0;

    void validate() const;  // throws ConfigError
};

enum class EventKind {
    Pickup,
    Dropoff,
    Reject,
    ChargeStart,
    ChargeEnd,
    WaitStart,
    Rebalance,
    Shortfall
};

std::string event_kind_name(EventKind k);

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::Pickup;
    VehicleId vehicle = -1;
    RequestId request = -1;
    double value = 0.0;  // charge at charge events, deficit at shortfall
};

struct EventLog {
    std::vector<Event> events;
};

struct Metrics {
    double service_rate = 1.0;
    double mean_wait_s = 0.0;
    double mean_ride_s = 0.0;
    double mean_delay_s = 0.0;
    double abs_utilization = 0.0;
    double rider_share_rate = 0.0;
    double shared_rate = 0.0;
    double total_distance_km = 0.0;
    double mean_pre_charge_wait_s = 0.0;
    // one entry per 1800 s bucket from day_start
    std::vector<int> charging_count;
    std::vector<double> distance_km;
    std::vector<double> rolling_service_rate;
};

// Per-vehicle snapshot taken at every batch boundary, for charge auditing.
struct ChargeSample {
    double time = 0.0;
    VehicleId vehicle = -1;
    double charge = 0.0;
    double cumulative_distance_m = 0.0;
};

struct SimResult {
    Metrics metrics;
    EventLog log;
    std::vector<double> distance_km_per_bucket;
    std::vector<ChargeSample> charge_audit;
};

// Mutable per-vehicle simulation state on top of the planning-facing fields.
struct SimVehicle {
    VehicleState st;
    std::vector<NodeId> leg;   // nodes still to traverse toward the current target
    std::map<RequestId, OnboardRider> pending;  // accepted, not yet picked up
    NodeId rebalance_target = -1;
    bool to_station = false;   // current leg ends at st.charge_slot's station
    bool waiting = false;      // parked at the station before the slot opens
    bool charging = false;
    bool emergency = false;    // out of charge, queueing outside the schedule
    StationId charging_at = -1;
    double charge_end_time = 0.0;
    double station_arrival = 0.0;
    double cumulative_distance_m = 0.0;
};

// Moves one vehicle for dt seconds: edge-by-edge motion with fractional arc
// progress, pickups and drop-offs at stops, per-meter discharge, linear-rate
// charging.  `ice` disables both discharge and charging.  Events are appended
// to `out`; station occupancy is adjusted through `station_load`.
void advance_vehicle(SimVehicle& v, double dt, double now, const RoadNetwork& net,
                     const BatteryModel& battery, bool ice, EventLog& out,
                     std::map<StationId, int>& station_load,
                     const std::map<StationId, int>& station_capacity);

// Derives every Metrics field from the event log plus the request list; the
// per-bucket distances come from the simulator's own odometer.
Metrics compute_metrics(const EventLog& log, const std::vector<Request>& requests,
                        const RoadNetwork& net, const ScenarioConfig& cfg,
                        const std::vector<double>& distance_km_per_bucket);

// Whole-day batch loop per the configured method; deterministic per seed.
SimResult run(const ScenarioConfig& cfg, const RoadNetwork& net,
              const std::vector<Request>& requests);

void save_metrics(const std::string& path, const Metrics& m, const std::string& method);
void save_timeseries(const std::string& path, const Metrics& m, double day_start);
void save_events(const std::string& path, const EventLog& log);

}  // namespace evfleet
