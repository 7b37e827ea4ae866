#pragma once

#include <map>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "evfleet/network.hpp"
#include "evfleet/scheduler_long.hpp"

namespace evfleet {

using RequestId = int;

struct Request {
    RequestId id = 0;
    double entry_time = 0.0;  // seconds
    NodeId origin = 0;
    NodeId destination = 0;
};

struct QosPolicy {
    double max_wait = 300.0;   // t_w^max, seconds
    double max_delay = 900.0;  // t_s^max, seconds (entry to drop-off minus direct)
};

// Near-term charging commitment in wall-clock seconds.
struct ChargePlan {
    double start_s = 0.0;
    double duration_s = 0.0;
    std::optional<StationId> station;
};

struct OnboardRider {
    RequestId request = 0;
    NodeId destination = 0;
    double entry_time = 0.0;
    double pickup_time = 0.0;
    double direct_time = 0.0;  // shortest origin->destination time
};

struct Stop {
    bool is_pickup = false;
    RequestId request = 0;
    NodeId node = 0;
};

struct VehicleState {
    VehicleId id = 0;
    NodeId position = 0;        // current node, or tail of the arc being traversed
    NodeId heading_to = -1;     // head of the current arc; -1 when exactly at a node
    double arc_elapsed_s = 0.0; // seconds already spent on the current arc
    double charge = 1.0;
    int capacity = 10;
    std::vector<OnboardRider> onboard;
    std::vector<Stop> route;
    std::optional<ChargePlan> charge_slot;
    bool accepting = true;

    bool mid_arc() const { return heading_to >= 0; }
};

struct Trip {
    VehicleId vehicle = 0;
    std::set<RequestId> riders;
    std::vector<Stop> route;
    double cost = 0.0;  // incremental travel time, seconds
};

struct ShareabilityGraph {
    std::set<std::pair<VehicleId, RequestId>> rv_edges;
    std::set<std::pair<RequestId, RequestId>> rr_edges;  // stored with first < second

    bool rr(RequestId a, RequestId b) const {
        return rr_edges.count({std::min(a, b), std::max(a, b)}) > 0;
    }
};

struct PoolingConfig {
    QosPolicy qos;
    double buffer_D = 600.0;          // release-date buffer when no station is set
    int nearest_vehicle_cap = 30;
    int max_riders = 10;
    int per_vehicle_trip_cap = 2000;
    double rejection_penalty = 86400.0;  // M
};

struct CtspResult {
    std::vector<Stop> route;
    double cost = 0.0;  // total route travel time from the vehicle's position
};

// Node and time at which the vehicle can take its next instruction (end of
// the arc it is on, if mid-arc).
std::pair<NodeId, double> effective_position(const RoadNetwork& net, const VehicleState& v,
                                             double now);

// Minimum-travel-time stop ordering serving the vehicle's onboard riders plus
// new_riders under QoS, capacity and charging release-date constraints.
std::optional<CtspResult> solve_ctsp(const RoadNetwork& net, const VehicleState& vehicle,
                                     const std::vector<Request>& new_riders,
                                     const PoolingConfig& cfg, double now);

ShareabilityGraph build_shareability_graph(const RoadNetwork& net,
                                           const std::vector<VehicleState>& vehicles,
                                           const std::vector<Request>& requests,
                                           const PoolingConfig& cfg, double now);

std::vector<Trip> enumerate_trips(const RoadNetwork& net, const ShareabilityGraph& graph,
                                  const std::vector<VehicleState>& vehicles,
                                  const std::vector<Request>& requests,
                                  const PoolingConfig& cfg, double now);

struct AssignmentResult {
    std::vector<Trip> chosen;
    std::vector<RequestId> rejected;
};

// Exact best-first trip selection: at most one trip per vehicle, each request
// covered once or rejected at its penalty (per_request_penalty overrides M).
AssignmentResult assign_trips(const std::vector<Trip>& trips,
                              const std::vector<Request>& requests, double penalty,
                              const std::map<RequestId, double>& per_request_penalty = {});

// Minimum-total-travel-time one-to-one matching of idle vehicles to rejected
// request origins; exact up to 200x200, greedy above.
std::vector<std::pair<VehicleId, NodeId>> rebalance(const RoadNetwork& net,
                                                    const std::vector<VehicleState>& idle,
                                                    const std::vector<Request>& rejected,
                                                    double now);

}  // namespace evfleet
