#include "evfleet/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "evfleet/errors.hpp"

namespace evfleet {

void StationReservations::init(const std::vector<Station>& stations, double now) {
    free_at.clear();
    for (const auto& s : stations) free_at[s.id].assign(s.capacity, now);
}

double StationReservations::earliest(StationId s) const {
    const auto& slots = free_at.at(s);
    return *std::min_element(slots.begin(), slots.end());
}

void StationReservations::reserve(StationId s, double start_s, double duration_s) {
    auto& slots = free_at.at(s);
    auto it = std::min_element(slots.begin(), slots.end());
    if (*it > start_s + 1e-9) throw CapacityViolation("reservation before charger is free");
    *it = start_s + duration_s;
}

std::pair<StationId, double> greedy_station_assignment(const RoadNetwork& net,
                                                       const VehicleState& vehicle,
                                                       const StationReservations& reservations,
                                                       double now, double radius) {
    auto [node, t_eff] = effective_position(net, vehicle, now);
    StationId pick = -1;
    double pick_start = std::numeric_limits<double>::infinity();
    for (const auto& s : net.stations()) {
        double tt = net.travel_time(node, s.node);
        if (tt > radius + 1e-9) continue;
        double start = std::max(t_eff + tt, reservations.earliest(s.id));
        if (start < pick_start || (start == pick_start && s.id < pick)) {
            pick = s.id;
            pick_start = start;
        }
    }
    if (pick < 0) throw NoStationInRange("no charge station within radius");
    return {pick, pick_start};
}

std::vector<StationRequest> benchmark_step(std::vector<VehicleState>& fleet,
                                           const RoadNetwork& net, const BatteryModel& battery,
                                           const BenchmarkConfig& cfg,
                                           StationReservations& reservations, double now) {
    std::vector<StationRequest> out;
    for (auto& v : fleet) {
        if (v.charge > cfg.threshold) {
            v.accepting = true;
            if (v.charge_slot && v.charge_slot->start_s > now) v.charge_slot.reset();
            continue;
        }
        v.accepting = false;
        if (!v.onboard.empty() || v.charge_slot) continue;

        std::pair<StationId, double> pick;
        try {
            pick = greedy_station_assignment(net, v, reservations, now, cfg.radius);
        } catch (const NoStationInRange&) {
            pick = greedy_station_assignment(net, v, reservations, now,
                                             std::numeric_limits<double>::infinity());
        }
        auto [node, t_eff] = effective_position(net, v, now);
        StationId station = pick.first;
        NodeId station_node = 0;
        for (const auto& s : net.stations())
            if (s.id == station) station_node = s.node;
        double q_arrival = discharge(battery, v.charge, net.travel_distance(node, station_node));
        double duration_s = (charge_time_from_empty(battery, 1.0) -
                             charge_time_from_empty(battery, std::clamp(q_arrival, 0.0, 1.0))) *
                            60.0;
        reservations.reserve(station, pick.second, duration_s);
        v.charge_slot = ChargePlan{pick.second, duration_s, station};
        out.push_back({v.id, station, pick.second, duration_s});
    }
    return out;
}

}  // namespace evfleet
