#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "evfleet/battery.hpp"
#include "evfleet/pooling.hpp"
#include "evfleet/scheduler_long.hpp"

namespace evfleet {

struct ShortJob {
    VehicleId vehicle = 0;
    int start_period = 0;
    int duration_periods = 1;
    std::set<StationId> reachable;               // S_v
    std::map<StationId, double> cost;            // d_{vs}, finite exactly on reachable
    std::optional<StationId> pinned;             // previous assignment, kept in S_v

    int end_period() const { return start_period + duration_periods; }
};

struct ShortInstance {
    std::vector<ShortJob> jobs;
    std::vector<Station> stations;
};

// Collect one job per vehicle whose next scheduled slot starts within
// [now, now + t_sl + delta].  S_v holds the stations reachable by the slot
// start given the vehicle's predicted drop-off node, completion time and
// charge; a previous assignment is pinned into S_v even when nominally
// unreachable.  d_vs is the travel time from the drop-off node to s.
ShortInstance build_short_instance(const ChargeSchedule& schedule,
                                   const std::vector<VehicleState>& fleet,
                                   const RoadNetwork& net, const BatteryModel& battery,
                                   double now, double t_sl, double delta,
                                   double period_length_s,
                                   const std::map<VehicleId, StationId>& previous = {});

// One representative period per maximal clique of the job-interval graph;
// capacity constraints need only be checked there.
std::vector<int> clique_checkpoints(const std::vector<ShortJob>& jobs);

// Minimum-cost station assignment under per-station, per-period capacity.
// Exact depth-first branch and bound; throws Infeasible.
std::map<VehicleId, StationId> solve_short_exact(const ShortInstance& instance);

struct ShortFallbackResult {
    std::map<VehicleId, StationId> assignments;
    std::set<VehicleId> deferred;  // slots to delete; rescheduled by the next long run
};

// Recovery path when solve_short_exact is infeasible: exact solve without the
// newest vehicles, greedy fill for the newest, leftovers deferred.
ShortFallbackResult solve_short_fallback(const ShortInstance& instance,
                                         const std::set<VehicleId>& newest);

}  // namespace evfleet
