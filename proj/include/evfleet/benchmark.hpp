#pragma once

#include <map>
#include <utility>
#include <vector>

#include "evfleet/battery.hpp"
#include "evfleet/network.hpp"
#include "evfleet/pooling.hpp"

namespace evfleet {

struct BenchmarkConfig {
    double threshold = 0.05;  // trigger charge level on the relabeled scale
    double radius = 900.0;    // seconds of travel time to candidate stations
};

// Per-station FIFO reservation book: one free-at time per charger.
struct StationReservations {
    std::map<StationId, std::vector<double>> free_at;

    void init(const std::vector<Station>& stations, double now);
    double earliest(StationId s) const;
    void reserve(StationId s, double start_s, double duration_s);
};

struct StationRequest {
    VehicleId vehicle = 0;
    StationId station = 0;
    double start_s = 0.0;
    double duration_s = 0.0;
};

// argmin over in-radius stations of max(arrival, earliest free slot); ties by
// station id.  Throws NoStationInRange when the radius holds no station.
std::pair<StationId, double> greedy_station_assignment(const RoadNetwork& net,
                                                       const VehicleState& vehicle,
                                                       const StationReservations& reservations,
                                                       double now, double radius);

// One pass per batch: below-threshold vehicles stop accepting, empty ones
// without an assignment get a reserved slot (falling back to the globally
// nearest station when the radius is exhausted), above-threshold vehicles have
// any stale assignment cleared.  Returns the new reservations made.
std::vector<StationRequest> benchmark_step(std::vector<VehicleState>& fleet,
                                           const RoadNetwork& net, const BatteryModel& battery,
                                           const BenchmarkConfig& cfg,
                                           StationReservations& reservations, double now);

}  // namespace evfleet
