#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "evfleet/battery.hpp"
#include "evfleet/network.hpp"
#include "evfleet/pooling.hpp"

namespace evfleet {

struct AvailabilityRequirement {
    double period_length = 1800.0;  // seconds per profile block
    std::vector<int> values;        // R(t)
    double lambda = 0.0;
    std::vector<double> profile;    // d(t), max-normalized
};

// requests.csv: request_id,entry_time_s,origin_node,destination_node
std::vector<Request> load_requests(const std::string& path, const RoadNetwork& net);
void save_requests(const std::string& path, const std::vector<Request>& requests);

// Poisson arrivals, one rate entry per minute; origins and destinations drawn
// uniformly with origin != destination.  Identical output for identical seeds.
std::vector<Request> synth_requests(const RoadNetwork& net, const std::vector<double>& rates,
                                    std::uint64_t seed);

// Per-block counts of requests whose ride interval [entry, entry + direct
// travel time] overlaps the block, normalized so the largest block is 1.
std::vector<double> demand_profile(const std::vector<Request>& requests,
                                   const std::function<double(NodeId, NodeId)>& travel_time,
                                   double block = 1800.0);

// Smallest lambda in {0, step, 2 step, ..., 1} whose R(t) admits a zero
// shortfall, zero violation schedule from the long-horizon heuristic on a
// full-day instance (fleet fully charged at day start).
double calibrate_lambda(int fleet_size, const std::vector<double>& profile,
                        const BatteryModel& battery, int total_capacity,
                        double step = 0.01);

// R(t) = floor(|V| (lambda d(t) + 1 - lambda))
AvailabilityRequirement availability_requirement(int fleet_size,
                                                 const std::vector<double>& profile,
                                                 double lambda,
                                                 double period_length = 1800.0);

}  // namespace evfleet
