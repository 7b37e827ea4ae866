#include "evfleet/pooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace evfleet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::pair<NodeId, double> effective_position(const RoadNetwork& net, const VehicleState& v,
                                             double now) {
    if (!v.mid_arc()) return {v.position, now};
    const Arc& arc = net.arc_between(v.position, v.heading_to);
    return {v.heading_to, now + std::max(0.0, arc.travel_time_s - v.arc_elapsed_s)};
}

namespace {

struct RiderTask {
    RequestId id;
    NodeId origin;       // meaningless when already onboard
    NodeId destination;
    double entry_time;
    double direct_time;
    bool onboard;
};

struct CtspSearch {
    const RoadNetwork& net;
    const PoolingConfig& cfg;
    std::vector<RiderTask> riders;
    NodeId start_node;
    double start_time;
    int capacity;
    std::optional<ChargePlan> slot;
    std::optional<NodeId> slot_station_node;

    double best_cost = kInf;
    std::vector<Stop> best_route;
    std::vector<Stop> route;

    bool slot_reachable(NodeId n, double t) const {
        if (!slot) return true;
        double e;
        if (slot_station_node)
            e = t + net.travel_time(n, *slot_station_node);
        else {
            double nearest = net.travel_time(n, net.nearest_station(n).node);
            e = t + std::max(nearest, cfg.buffer_D);
        }
        return e <= slot->start_s + 1e-9;
    }

    void dfs(NodeId node, double time, std::vector<int>& state, int onboard_count, int remaining) {
        if (time - start_time >= best_cost) return;
        if (remaining == 0) {
            if (!slot_reachable(node, time)) return;
            best_cost = time - start_time;
            best_route = route;
            return;
        }
        for (std::size_t i = 0; i < riders.size(); ++i) {
            const auto& r = riders[i];
            if (state[i] == 0 && !r.onboard) {  // pickup
                if (onboard_count + 1 > capacity) continue;
                double arrive = time + net.travel_time(node, r.origin);
                double pickup = std::max(arrive, r.entry_time);
                if (pickup > r.entry_time + cfg.qos.max_wait + 1e-9) continue;
                state[i] = 1;
                route.push_back({true, r.id, r.origin});
                dfs(r.origin, pickup, state, onboard_count + 1, remaining);
                route.pop_back();
                state[i] = 0;
            } else if (state[i] == 1) {  // drop-off
                double arrive = time + net.travel_time(node, r.destination);
                if (arrive - r.entry_time > r.direct_time + cfg.qos.max_delay + 1e-9) continue;
                state[i] = 2;
                route.push_back({false, r.id, r.destination});
                dfs(r.destination, arrive, state, onboard_count - 1, remaining - 1);
                route.pop_back();
                state[i] = 1;
            }
        }
    }
};

std::optional<NodeId> station_node_of(const RoadNetwork& net, std::optional<StationId> id) {
    if (!id) return std::nullopt;
    for (const auto& s : net.stations())
        if (s.id == *id) return s.node;
    throw InvalidArgument("unknown station id " + std::to_string(*id));
}

}  // namespace

std::optional<CtspResult> solve_ctsp(const RoadNetwork& net, const VehicleState& vehicle,
                                     const std::vector<Request>& new_riders,
                                     const PoolingConfig& cfg, double now) {
    CtspSearch search{net, cfg, {}, 0, 0.0, vehicle.capacity, vehicle.charge_slot, std::nullopt};
    if (vehicle.charge_slot) search.slot_station_node = station_node_of(net, vehicle.charge_slot->station);
    auto [node, time] = effective_position(net, vehicle, now);
    search.start_node = node;
    search.start_time = time;
    for (const auto& ob : vehicle.onboard)
        search.riders.push_back({ob.request, -1, ob.destination, ob.entry_time, ob.direct_time, true});
    for (const auto& r : new_riders)
        search.riders.push_back(
            {r.id, r.origin, r.destination, r.entry_time, net.travel_time(r.origin, r.destination), false});

    std::vector<int> state(search.riders.size(), 0);
    int onboard_count = 0;
    for (std::size_t i = 0; i < search.riders.size(); ++i)
        if (search.riders[i].onboard) {
            state[i] = 1;
            ++onboard_count;
        }
    search.dfs(node, time, state, onboard_count, static_cast<int>(search.riders.size()));
    if (search.best_cost == kInf) return std::nullopt;
    return CtspResult{search.best_route, search.best_cost};
}

ShareabilityGraph build_shareability_graph(const RoadNetwork& net,
                                           const std::vector<VehicleState>& vehicles,
                                           const std::vector<Request>& requests,
                                           const PoolingConfig& cfg, double now) {
    ShareabilityGraph g;
    // r-v edges: nearest vehicles first, CTSP feasibility confirms
    for (const auto& r : requests) {
        std::vector<std::pair<double, const VehicleState*>> near;
        for (const auto& v : vehicles) {
            if (!v.accepting) continue;
            auto [node, t_eff] = effective_position(net, v, now);
            near.push_back({t_eff - now + net.travel_time(node, r.origin), &v});
        }
        std::sort(near.begin(), near.end(), [](const auto& l, const auto& r2) {
            if (l.first != r2.first) return l.first < r2.first;
            return l.second->id < r2.second->id;
        });
        if (static_cast<int>(near.size()) > cfg.nearest_vehicle_cap)
            near.resize(cfg.nearest_vehicle_cap);
        for (const auto& [dist, v] : near)
            if (solve_ctsp(net, *v, {r}, cfg, now)) g.rv_edges.insert({v->id, r.id});
    }
    // r-r edges: an ideal vehicle placed at either origin can serve both
    int cap = 2;
    for (const auto& v : vehicles) cap = std::max(cap, v.capacity);
    for (std::size_t i = 0; i < requests.size(); ++i)
        for (std::size_t j = i + 1; j < requests.size(); ++j) {
            bool ok = false;
            for (const Request* anchor : {&requests[i], &requests[j]}) {
                VehicleState ideal;
                ideal.id = -1;
                ideal.position = anchor->origin;
                ideal.capacity = cap;
                if (solve_ctsp(net, ideal, {requests[i], requests[j]}, cfg, now)) {
                    ok = true;
                    break;
                }
            }
            if (ok)
                g.rr_edges.insert({std::min(requests[i].id, requests[j].id),
                                   std::max(requests[i].id, requests[j].id)});
        }
    return g;
}

std::vector<Trip> enumerate_trips(const RoadNetwork& net, const ShareabilityGraph& graph,
                                  const std::vector<VehicleState>& vehicles,
                                  const std::vector<Request>& requests,
                                  const PoolingConfig& cfg, double now) {
    std::map<RequestId, const Request*> by_id;
    for (const auto& r : requests) by_id[r.id] = &r;

    std::vector<Trip> all;
    for (const auto& v : vehicles) {
        if (!v.accepting) continue;
        auto baseline = solve_ctsp(net, v, {}, cfg, now);
        if (!baseline) continue;  // cannot even serve its own onboard riders

        std::vector<Trip> level;
        for (const auto& r : requests) {
            if (!graph.rv_edges.count({v.id, r.id})) continue;
            if (auto res = solve_ctsp(net, v, {r}, cfg, now))
                level.push_back({v.id, {r.id}, res->route, res->cost - baseline->cost});
        }
        std::vector<Trip> vehicle_trips = level;
        int size = 1;
        while (!level.empty() && size < cfg.max_riders &&
               static_cast<int>(vehicle_trips.size()) < cfg.per_vehicle_trip_cap) {
            std::vector<Trip> next;
            std::set<std::set<RequestId>> seen;
            for (const auto& trip : level) {
                RequestId max_id = *trip.riders.rbegin();
                for (const auto& r : requests) {
                    if (r.id <= max_id) continue;  // canonical growth order
                    if (!graph.rv_edges.count({v.id, r.id})) continue;
                    bool clique = true;
                    for (RequestId m : trip.riders)
                        if (!graph.rr(m, r.id)) {
                            clique = false;
                            break;
                        }
                    if (!clique) continue;
                    std::set<RequestId> riders = trip.riders;
                    riders.insert(r.id);
                    if (!seen.insert(riders).second) continue;
                    std::vector<Request> batch;
                    for (RequestId id : riders) batch.push_back(*by_id.at(id));
                    if (auto res = solve_ctsp(net, v, batch, cfg, now))
                        next.push_back({v.id, riders, res->route, res->cost - baseline->cost});
                    if (static_cast<int>(vehicle_trips.size() + next.size()) >=
                        cfg.per_vehicle_trip_cap)
                        break;
                }
            }
            vehicle_trips.insert(vehicle_trips.end(), next.begin(), next.end());
            level = std::move(next);
            ++size;
        }
        all.insert(all.end(), vehicle_trips.begin(), vehicle_trips.end());
    }
    return all;
}

namespace {

struct AssignSearch {
    const std::vector<Trip>& trips;
    std::vector<RequestId> request_order;
    std::map<RequestId, double> penalty_of;
    std::map<RequestId, std::vector<int>> trips_of;  // request -> trip indices
    std::map<RequestId, double> min_share;

    std::set<RequestId> covered;
    std::set<VehicleId> used;
    std::vector<int> selection;
    double best = kInf;
    std::vector<int> best_selection;

    double lower_bound(std::size_t k, double cost) const {
        double lb = cost;
        for (std::size_t i = k; i < request_order.size(); ++i) {
            RequestId r = request_order[i];
            if (covered.count(r)) continue;
            auto it = min_share.find(r);
            double share = it == min_share.end() ? kInf : it->second;
            lb += std::min(penalty_of.at(r), share);
        }
        return lb;
    }

    void dfs(std::size_t k, double cost) {
        if (lower_bound(k, cost) >= best) return;
        while (k < request_order.size() && covered.count(request_order[k])) ++k;
        if (k == request_order.size()) {
            best = cost;
            best_selection = selection;
            return;
        }
        RequestId r = request_order[k];
        auto it = trips_of.find(r);
        if (it != trips_of.end()) {
            for (int ti : it->second) {
                const Trip& t = trips[ti];
                if (used.count(t.vehicle)) continue;
                bool free = true;
                for (RequestId m : t.riders)
                    if (covered.count(m)) {
                        free = false;
                        break;
                    }
                if (!free) continue;
                used.insert(t.vehicle);
                for (RequestId m : t.riders) covered.insert(m);
                selection.push_back(ti);
                dfs(k + 1, cost + t.cost);
                selection.pop_back();
                for (RequestId m : t.riders) covered.erase(m);
                used.erase(t.vehicle);
            }
        }
        // reject r
        dfs(k + 1, cost + penalty_of.at(r));
    }
};

}  // namespace

AssignmentResult assign_trips(const std::vector<Trip>& trips, const std::vector<Request>& requests,
                              double penalty,
                              const std::map<RequestId, double>& per_request_penalty) {
    AssignSearch search{trips};
    for (const auto& r : requests) {
        search.request_order.push_back(r.id);
        auto it = per_request_penalty.find(r.id);
        search.penalty_of[r.id] = it == per_request_penalty.end() ? penalty : it->second;
    }
    std::sort(search.request_order.begin(), search.request_order.end());

    // cheapest-first trip order so the incumbent tightens early; ties broken
    // canonically by (vehicle id, rider-set lexicographic) for determinism
    std::vector<int> trip_order(trips.size());
    for (std::size_t i = 0; i < trips.size(); ++i) trip_order[i] = static_cast<int>(i);
    std::sort(trip_order.begin(), trip_order.end(), [&](int l, int r) {
        double ls = trips[l].cost / static_cast<double>(trips[l].riders.size());
        double rs = trips[r].cost / static_cast<double>(trips[r].riders.size());
        if (ls != rs) return ls < rs;
        if (trips[l].vehicle != trips[r].vehicle) return trips[l].vehicle < trips[r].vehicle;
        return std::lexicographical_compare(trips[l].riders.begin(), trips[l].riders.end(),
                                            trips[r].riders.begin(), trips[r].riders.end());
    });
    for (int ti : trip_order) {
        for (RequestId r : trips[ti].riders) search.trips_of[r].push_back(ti);
        double share = trips[ti].cost / static_cast<double>(trips[ti].riders.size());
        for (RequestId r : trips[ti].riders) {
            auto it = search.min_share.find(r);
            if (it == search.min_share.end() || share < it->second) search.min_share[r] = share;
        }
    }
    search.dfs(0, 0.0);

    AssignmentResult out;
    std::set<RequestId> covered;
    for (int ti : search.best_selection) {
        out.chosen.push_back(trips[ti]);
        for (RequestId r : trips[ti].riders) covered.insert(r);
    }
    for (RequestId r : search.request_order)
        if (!covered.count(r)) out.rejected.push_back(r);
    return out;
}

namespace {

// exact min-cost assignment of all rows (rows <= cols), Hungarian with potentials
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    int n = static_cast<int>(cost.size());
    int m = static_cast<int>(cost[0].size());
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, kInf);
        std::vector<char> used_col(m + 1, 0);
        do {
            used_col[j0] = 1;
            int i0 = p[j0], j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= m; ++j) {
                if (used_col[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used_col[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace

std::vector<std::pair<VehicleId, NodeId>> rebalance(const RoadNetwork& net,
                                                    const std::vector<VehicleState>& idle,
                                                    const std::vector<Request>& rejected,
                                                    double now) {
    if (idle.empty() || rejected.empty()) return {};
    std::size_t n = idle.size(), m = rejected.size();
    auto pair_cost = [&](std::size_t vi, std::size_t ri) {
        auto [node, t_eff] = effective_position(net, idle[vi], now);
        return t_eff - now + net.travel_time(node, rejected[ri].origin);
    };

    std::vector<std::pair<VehicleId, NodeId>> out;
    if (n <= 200 && m <= 200) {
        bool transpose = n > m;  // rows must be the smaller side
        std::size_t rows = transpose ? m : n, cols = transpose ? n : m;
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                cost[i][j] = transpose ? pair_cost(j, i) : pair_cost(i, j);
        auto match = hungarian(cost);
        for (std::size_t i = 0; i < rows; ++i) {
            if (match[i] < 0) continue;
            std::size_t vi = transpose ? static_cast<std::size_t>(match[i]) : i;
            std::size_t ri = transpose ? i : static_cast<std::size_t>(match[i]);
            out.push_back({idle[vi].id, rejected[ri].origin});
        }
    } else {
        std::vector<char> taken(m, 0);
        for (std::size_t vi = 0; vi < n; ++vi) {
            int pick = -1;
            double pick_cost = kInf;
            for (std::size_t ri = 0; ri < m; ++ri) {
                if (taken[ri]) continue;
                double c = pair_cost(vi, ri);
                if (c < pick_cost) {
                    pick_cost = c;
                    pick = static_cast<int>(ri);
                }
            }
            if (pick < 0) break;
            taken[pick] = 1;
            out.push_back({idle[vi].id, rejected[pick].origin});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace evfleet
