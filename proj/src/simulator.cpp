#include "evfleet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "evfleet/errors.hpp"
#include "evfleet/scheduler_long.hpp"
#include "evfleet/scheduler_short.hpp"

namespace evfleet {

namespace {
constexpr double kEps = 1e-9;
constexpr double kLongPeriod = 300.0;  // seconds
constexpr double kBucket = 1800.0;     // time-series resolution

double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

NodeId station_node(const RoadNetwork& net, StationId id) {
    for (const auto& s : net.stations())
        if (s.id == id) return s.node;
    throw InvalidArgument("unknown station id " + std::to_string(id));
}
}  // namespace

Method method_from_string(const std::string& s) {
    if (s == "ice" || s == "ICE") return Method::ICE;
    if (s == "milp" || s == "MILP") return Method::MILP;
    if (s == "heuristic" || s == "HEURISTIC") return Method::HEURISTIC;
    if (s == "benchmark" || s == "BENCHMARK") return Method::BENCHMARK;
    throw ConfigError("unknown method '" + s + "'");
}

std::string method_to_string(Method m) {
    switch (m) {
        case Method::ICE: return "ice";
        case Method::MILP: return "milp";
        case Method::HEURISTIC: return "heuristic";
        case Method::BENCHMARK: return "benchmark";
    }
    return "?";
}

std::string event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::Pickup: return "pickup";
        case EventKind::Dropoff: return "dropoff";
        case EventKind::Reject: return "reject";
        case EventKind::ChargeStart: return "charge_start";
        case EventKind::ChargeEnd: return "charge_end";
        case EventKind::WaitStart: return "wait_start";
        case EventKind::Rebalance: return "rebalance";
        case EventKind::Shortfall: return "shortfall";
    }
    return "?";
}

void ScenarioConfig::validate() const {
    if (t_batch <= 0 || t_short <= 0 || t_long <= 0 || t_sl <= 0)
        throw ConfigError("cadence values must be positive");
    auto divides = [](double a, double b) {
        double q = b / a;
        return std::abs(q - std::round(q)) < 1e-9;
    };
    if (!divides(t_batch, t_short)) throw ConfigError("t_short must be a multiple of t_batch");
    if (!divides(t_short, t_long)) throw ConfigError("t_long must be a multiple of t_short");
    if (delta > 2.0 * t_long + kEps && !allow_delta_override)
        throw ConfigError("delta exceeds 2 * t_long (rolling-horizon guarantee)");
    if (day_end <= day_start) throw ConfigError("day_end must exceed day_start");
    if (fleet_size <= 0) throw ConfigError("fleet_size must be positive");
    if (vehicle_capacity <= 0) throw ConfigError("vehicle_capacity must be positive");
    if (qos.max_wait <= 0 || qos.max_delay <= 0) throw ConfigError("QoS limits must be positive");
    if (method == Method::MILP) {
        if (fleet_size > 4 || std::ceil(day_end / kLongPeriod) > 12)
            throw ConfigError("milp method is restricted to oracle scale");
    }
    if (lambda > 1.0) throw ConfigError("lambda must not exceed 1");
    if (benchmark_threshold <= 0 || benchmark_threshold >= 1)
        throw ConfigError("benchmark threshold must lie in (0,1)");
    if (benchmark_radius <= 0) throw ConfigError("benchmark radius must be positive");
}

namespace {

void begin_charge(SimVehicle& v, double now, const BatteryModel& battery, EventLog& out,
                  std::map<StationId, int>& station_load) {
    double full_needed_s = std::max(0.0, (1.0 - v.st.charge) / battery.eta * 60.0);
    double dur = v.st.charge_slot ? std::min(v.st.charge_slot->duration_s, full_needed_s)
                                  : full_needed_s;
    v.charging = true;
    v.waiting = false;
    v.charge_end_time = now + dur;
    ++station_load[v.charging_at];
    out.events.push_back({now, EventKind::ChargeStart, v.st.id, -1, v.st.charge});
}

void finish_charge(SimVehicle& v, double now, EventLog& out,
                   std::map<StationId, int>& station_load) {
    out.events.push_back({now, EventKind::ChargeEnd, v.st.id, -1, v.st.charge});
    --station_load[v.charging_at];
    v.charging = false;
    v.to_station = false;
    v.emergency = false;
    v.charging_at = -1;
    v.st.charge_slot.reset();
    v.st.accepting = true;
}

void arrive_station(SimVehicle& v, double now, const BatteryModel& battery, EventLog& out,
                    std::map<StationId, int>& station_load,
                    const std::map<StationId, int>& station_capacity) {
    v.station_arrival = now;
    if (v.st.charge_slot) {
        if (now >= v.st.charge_slot->start_s - kEps) {
            begin_charge(v, now, battery, out, station_load);
        } else {
            v.waiting = true;
            out.events.push_back({now, EventKind::WaitStart, v.st.id, -1, v.st.charge});
        }
    } else {  // emergency queue, outside any schedule
        if (station_load[v.charging_at] < station_capacity.at(v.charging_at)) {
            begin_charge(v, now, battery, out, station_load);
        } else {
            v.waiting = true;
            out.events.push_back({now, EventKind::WaitStart, v.st.id, -1, v.st.charge});
        }
    }
}

void set_leg(SimVehicle& v, const RoadNetwork& net, NodeId target) {
    NodeId from = v.st.mid_arc() ? v.st.heading_to : v.st.position;
    v.leg.clear();
    auto path = net.shortest_path(from, target);
    v.leg.assign(path.begin() + 1, path.end());
}

// Builds the vehicle's next movement target; processes any stop at the
// current node.  Returns a wake-up time when the vehicle is idle on purpose.
std::optional<double> ensure_leg(SimVehicle& v, double now, const RoadNetwork& net,
                                 const BatteryModel& battery, bool ice, EventLog& out,
                                 std::map<StationId, int>& station_load,
                                 const std::map<StationId, int>& station_capacity) {
    if (v.charging || v.waiting || !v.leg.empty() || v.st.mid_arc()) return std::nullopt;

    while (!v.st.route.empty() && v.st.route.front().node == v.st.position) {
        const Stop stop = v.st.route.front();
        v.st.route.erase(v.st.route.begin());
        if (stop.is_pickup) {
            auto it = v.pending.find(stop.request);
            if (it != v.pending.end()) {
                OnboardRider rider = it->second;
                rider.pickup_time = now;
                v.st.onboard.push_back(rider);
                v.pending.erase(it);
                out.events.push_back({now, EventKind::Pickup, v.st.id, stop.request, 0.0});
            }
        } else {
            auto it = std::find_if(v.st.onboard.begin(), v.st.onboard.end(),
                                   [&](const OnboardRider& r) { return r.request == stop.request; });
            if (it != v.st.onboard.end()) {
                out.events.push_back({now, EventKind::Dropoff, v.st.id, stop.request, 0.0});
                v.st.onboard.erase(it);
            }
        }
    }
    if (!v.st.route.empty()) {
        v.to_station = false;
        set_leg(v, net, v.st.route.front().node);
        return std::nullopt;
    }
    if (v.st.charge_slot && v.st.charge_slot->station) {
        NodeId sn = station_node(net, *v.st.charge_slot->station);
        double depart = v.st.charge_slot->start_s - net.travel_time(v.st.position, sn);
        if (now >= depart - kEps) {
            v.to_station = true;
            v.charging_at = *v.st.charge_slot->station;
            if (sn == v.st.position) {
                arrive_station(v, now, battery, out, station_load, station_capacity);
            } else {
                set_leg(v, net, sn);
            }
            return std::nullopt;
        }
        return depart;
    }
    if (!ice && !v.emergency && v.st.charge <= 0.0 && v.st.onboard.empty() &&
        !net.stations().empty()) {
        const Station& s = net.nearest_station(v.st.position);
        v.emergency = true;
        v.to_station = true;
        v.charging_at = s.id;
        v.st.charge_slot.reset();
        if (s.node == v.st.position) {
            arrive_station(v, now, battery, out, station_load, station_capacity);
        } else {
            set_leg(v, net, s.node);
        }
        return std::nullopt;
    }
    if (v.rebalance_target >= 0) {
        if (v.rebalance_target == v.st.position) {
            v.rebalance_target = -1;
        } else {
            set_leg(v, net, v.rebalance_target);
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace

void advance_vehicle(SimVehicle& v, double dt, double now, const RoadNetwork& net,
                     const BatteryModel& battery, bool ice, EventLog& out,
                     std::map<StationId, int>& station_load,
                     const std::map<StationId, int>& station_capacity) {
    double end = now + dt;
    while (now < end - kEps) {
        if (v.charging) {
            double step = std::min(end - now, std::max(0.0, v.charge_end_time - now));
            if (!ice) v.st.charge = std::min(1.0, v.st.charge + battery.eta * step / 60.0);
            now += step;
            if (now >= v.charge_end_time - kEps) finish_charge(v, now, out, station_load);
            continue;
        }
        if (v.waiting) {
            if (v.st.charge_slot) {
                if (now >= v.st.charge_slot->start_s - kEps) {
                    begin_charge(v, now, battery, out, station_load);
                    continue;
                }
                now = std::min(end, v.st.charge_slot->start_s);
                continue;
            }
            if (station_load[v.charging_at] < station_capacity.at(v.charging_at)) {
                begin_charge(v, now, battery, out, station_load);
                continue;
            }
            break;  // queued until a charger frees up
        }
        if (v.st.mid_arc()) {
            const Arc& arc = net.arc_between(v.st.position, v.st.heading_to);
            double left = arc.travel_time_s - v.st.arc_elapsed_s;
            double step = std::min(end - now, left);
            double meters = arc.distance_m * step / arc.travel_time_s;
            if (!ice) v.st.charge = std::max(-0.2, discharge(battery, v.st.charge, meters));
            v.cumulative_distance_m += meters;
            v.st.arc_elapsed_s += step;
            now += step;
            if (v.st.arc_elapsed_s >= arc.travel_time_s - kEps) {
                v.st.position = v.st.heading_to;
                v.st.heading_to = -1;
                v.st.arc_elapsed_s = 0.0;
                if (v.leg.empty()) {
                    if (v.to_station) {
                        arrive_station(v, now, battery, out, station_load, station_capacity);
                    } else if (v.rebalance_target == v.st.position) {
                        v.rebalance_target = -1;
                    }
                }
            }
            continue;
        }
        if (!v.leg.empty()) {
            v.st.heading_to = v.leg.front();
            v.leg.erase(v.leg.begin());
            continue;
        }
        auto wake = ensure_leg(v, now, net, battery, ice, out, station_load, station_capacity);
        if (!v.leg.empty() || v.charging || v.waiting || v.st.mid_arc()) continue;
        if (wake && *wake > now + kEps) {
            now = std::min(end, *wake);
            continue;
        }
        break;
    }
    if (!v.charging && !v.waiting && !v.st.mid_arc() && v.leg.empty())
        ensure_leg(v, end, net, battery, ice, out, station_load, station_capacity);
}

namespace {

struct RequestRecord {
    enum class State { Waiting, Assigned, Onboard, Served, Rejected };
    Request req;
    State state = State::Waiting;
    VehicleId vehicle = -1;
};

std::vector<int> build_requirement(const ScenarioConfig& cfg, const std::vector<double>& profile,
                                   double lambda, int horizon) {
    std::vector<int> req(horizon, 0);
    int first = static_cast<int>(cfg.day_start / kLongPeriod);
    for (int p = first; p < horizon; ++p) {
        auto block = static_cast<std::size_t>(p * kLongPeriod / kBucket);
        double d = block < profile.size() ? profile[block] : 0.0;
        req[p] = static_cast<int>(
            std::floor(cfg.fleet_size * (lambda * d + (1.0 - lambda)) + kEps));
    }
    return req;
}

}  // namespace

SimResult run(const ScenarioConfig& config, const RoadNetwork& net,
              const std::vector<Request>& requests) {
    ScenarioConfig cfg = config;
    cfg.validate();
    if (cfg.battery.beta == 0.0)
        cfg.battery.beta = solve_beta(cfg.battery.Q, cfg.battery.R, cfg.battery.T);
    const bool ice = cfg.method == Method::ICE;
    const bool planner = cfg.method == Method::MILP || cfg.method == Method::HEURISTIC;

    PoolingConfig pcfg;
    pcfg.qos = cfg.qos;
    pcfg.buffer_D = cfg.buffer_D;

    // demand forecast for the long horizon
    std::vector<double> profile;
    double lambda = std::max(0.0, cfg.lambda);
    int horizon = static_cast<int>(std::ceil(cfg.day_end / kLongPeriod)) + 12;
    std::vector<int> requirement;
    if (planner) {
        if (!requests.empty())
            profile = demand_profile(
                requests, [&](NodeId a, NodeId b) { return net.travel_time(a, b); }, kBucket);
        if (cfg.lambda < 0.0)
            lambda = calibrate_lambda(cfg.fleet_size, profile.empty() ? std::vector<double>{0.0}
                                                                      : profile,
                                      cfg.battery, net.total_station_capacity());
        requirement = build_requirement(cfg, profile, lambda, horizon);
    }

    // fleet
    std::mt19937_64 rng(cfg.seed);
    std::vector<SimVehicle> fleet(cfg.fleet_size);
    std::size_t n = net.nodes().size();
    for (int i = 0; i < cfg.fleet_size; ++i) {
        fleet[i].st.id = i;
        fleet[i].st.position = net.nodes()[rng() % n].id;
        fleet[i].st.capacity = cfg.vehicle_capacity;
        fleet[i].st.charge =
            cfg.initial_charge == InitialCharge::FULL ? 1.0 : unit(rng);
    }

    std::map<StationId, int> station_capacity, station_load;
    for (const auto& s : net.stations()) {
        station_capacity[s.id] = s.capacity;
        station_load[s.id] = 0;
    }
    StationReservations reservations;
    reservations.init(net.stations(), cfg.day_start);
    BenchmarkConfig bcfg{cfg.benchmark_threshold, cfg.benchmark_radius};

    ChargeSchedule schedule;
    std::map<VehicleId, StationId> station_assignment;

    std::map<RequestId, RequestRecord> records;
    std::vector<Request> sorted = requests;
    std::stable_sort(sorted.begin(), sorted.end(), [](const Request& l, const Request& r) {
        if (l.entry_time != r.entry_time) return l.entry_time < r.entry_time;
        return l.id < r.id;
    });
    std::size_t next_request = 0;
    std::vector<RequestId> open;  // released, neither onboard nor resolved

    SimResult result;
    auto buckets = static_cast<std::size_t>(
        std::ceil((cfg.day_end - cfg.day_start) / kBucket));
    result.distance_km_per_bucket.assign(std::max<std::size_t>(buckets, 1), 0.0);

    for (auto& v : fleet)
        result.charge_audit.push_back(
            {cfg.day_start, v.st.id, v.st.charge, v.cumulative_distance_m});

    for (double t = cfg.day_start; t < cfg.day_end - kEps; t += cfg.t_batch) {
        EventLog batch_log;

        while (next_request < sorted.size() && sorted[next_request].entry_time <= t + kEps) {
            const Request& r = sorted[next_request++];
            records[r.id] = {r, RequestRecord::State::Waiting, -1};
            open.push_back(r.id);
        }

        double since_start = t - cfg.day_start;
        if (planner && std::fmod(since_start, cfg.t_long) < kEps) {
            // prune finished slots, keep active and future ones
            int current_period = static_cast<int>(t / kLongPeriod);
            for (auto& [vid, slots] : schedule.slots)
                slots.erase(std::remove_if(slots.begin(), slots.end(),
                                           [&](const ChargeSlot& s) {
                                               return s.end() <= current_period;
                                           }),
                            slots.end());

            LongInstance inst;
            inst.period_length_s = kLongPeriod;
            inst.horizon = horizon;
            inst.requirement = requirement;
            inst.total_capacity = net.total_station_capacity();
            inst.charge_rate = cfg.battery.eta * kLongPeriod / 60.0;
            inst.discharge_rate = cfg.battery.q_est * kLongPeriod / 60.0;
            inst.frozen_before = static_cast<int>(std::ceil((t + cfg.delta) / kLongPeriod));
            for (auto& v : fleet) {
                auto [node, t_c] = effective_position(net, v.st, t);
                for (const auto& stop : v.st.route) {
                    t_c += net.travel_time(node, stop.node);
                    node = stop.node;
                }
                std::optional<NodeId> sn;
                auto sa = station_assignment.find(v.st.id);
                if (sa != station_assignment.end()) sn = station_node(net, sa->second);
                double rel = release_date(net, t_c, node, sn, cfg.buffer_D);
                LongVehicle lv;
                lv.id = v.st.id;
                lv.release_period = static_cast<int>(std::ceil(rel / kLongPeriod - kEps));
                lv.initial_charge = std::clamp(
                    v.st.charge - cfg.battery.q_est * (rel - t) / 60.0, -0.2, 1.0);
                inst.vehicles.push_back(lv);
            }
            schedule = cfg.method == Method::MILP ? solve_long_exact(inst)
                                                  : solve_long_heuristic(inst, schedule);
            for (auto& v : fleet) {
                if (v.charging || v.waiting || v.to_station) continue;
                v.st.charge_slot.reset();
                auto it = schedule.slots.find(v.st.id);
                if (it == schedule.slots.end()) continue;
                for (const auto& slot : it->second) {
                    if (slot.end() * kLongPeriod <= t) continue;
                    std::optional<StationId> st_id;
                    auto sa = station_assignment.find(v.st.id);
                    if (sa != station_assignment.end()) st_id = sa->second;
                    v.st.charge_slot = ChargePlan{slot.start * kLongPeriod,
                                                  slot.duration * kLongPeriod, st_id};
                    break;
                }
            }
        }

        if (planner && std::fmod(since_start, cfg.t_short) < kEps) {
            std::vector<VehicleState> states;
            for (const auto& v : fleet) states.push_back(v.st);
            auto inst = build_short_instance(schedule, states, net, cfg.battery, t, cfg.t_sl,
                                             cfg.delta, kLongPeriod, station_assignment);
            std::map<VehicleId, StationId> assigned;
            std::set<VehicleId> deferred;
            try {
                assigned = solve_short_exact(inst);
            } catch (const Infeasible&) {
                std::set<VehicleId> newest;
                for (const auto& job : inst.jobs)
                    if (!station_assignment.count(job.vehicle)) newest.insert(job.vehicle);
                try {
                    auto fb = solve_short_fallback(inst, newest);
                    assigned = fb.assignments;
                    deferred = fb.deferred;
                } catch (const Infeasible&) {
                    // even the kept assignments clash after the long replan;
                    // drop all pins and re-place everyone greedily
                    for (const auto& job : inst.jobs) newest.insert(job.vehicle);
                    auto fb = solve_short_fallback(inst, newest);
                    assigned = fb.assignments;
                    deferred = fb.deferred;
                }
            }
            station_assignment = assigned;
            for (auto& v : fleet) {
                if (deferred.count(v.st.id)) {
                    schedule.slots.erase(v.st.id);
                    if (!v.charging && !v.waiting && !v.to_station) v.st.charge_slot.reset();
                    continue;
                }
                auto it = assigned.find(v.st.id);
                if (it != assigned.end() && v.st.charge_slot && !v.charging && !v.waiting)
                    v.st.charge_slot->station = it->second;
            }
        }

        if (cfg.method == Method::BENCHMARK) {
            std::vector<VehicleState> states;
            for (const auto& v : fleet) states.push_back(v.st);
            benchmark_step(states, net, cfg.battery, bcfg, reservations, t);
            for (std::size_t i = 0; i < fleet.size(); ++i) {
                fleet[i].st.accepting = states[i].accepting;
                if (!fleet[i].charging && !fleet[i].waiting)
                    fleet[i].st.charge_slot = states[i].charge_slot;
            }
        }

        // batch assignment over open requests; previously accepted riders are
        // protected by a penalty far above the rejection cost
        std::vector<Request> cand;
        std::map<RequestId, double> protect;
        std::vector<RequestId> still_open;
        for (RequestId rid : open) {
            auto& rec = records.at(rid);
            if (rec.state != RequestRecord::State::Waiting &&
                rec.state != RequestRecord::State::Assigned) continue;
            if (t > rec.req.entry_time + cfg.qos.max_wait + kEps) {
                rec.state = RequestRecord::State::Rejected;
                batch_log.events.push_back({t, EventKind::Reject, -1, rid, 0.0});
                continue;
            }
            cand.push_back(rec.req);
            if (rec.state == RequestRecord::State::Assigned)
                protect[rid] = 100.0 * pcfg.rejection_penalty;
            still_open.push_back(rid);
        }
        open = still_open;

        std::vector<Request> rejected_now;
        if (!cand.empty()) {
            for (auto& v : fleet)
                if (planner || ice) v.st.accepting = !(v.charging || v.waiting);
            std::vector<VehicleState> states;
            for (const auto& v : fleet) states.push_back(v.st);
            auto graph = build_shareability_graph(net, states, cand, pcfg, t);
            auto trips = enumerate_trips(net, graph, states, cand, pcfg, t);
            auto picked = assign_trips(trips, cand, pcfg.rejection_penalty, protect);

            std::map<VehicleId, const Trip*> by_vehicle;
            for (const auto& trip : picked.chosen) by_vehicle[trip.vehicle] = &trip;
            for (auto& v : fleet) {
                if (v.charging || v.waiting) continue;
                auto it = by_vehicle.find(v.st.id);
                v.pending.clear();
                if (it != by_vehicle.end()) {
                    const Trip& trip = *it->second;
                    v.st.route = trip.route;
                    for (RequestId rid : trip.riders) {
                        auto& rec = records.at(rid);
                        rec.state = RequestRecord::State::Assigned;
                        rec.vehicle = v.st.id;
                        v.pending[rid] = {rid, rec.req.destination, rec.req.entry_time, 0.0,
                                          net.travel_time(rec.req.origin, rec.req.destination)};
                    }
                    v.rebalance_target = -1;
                } else if (!v.st.onboard.empty()) {
                    auto res = solve_ctsp(net, v.st, {}, pcfg, t);
                    if (res) v.st.route = res->route;
                } else {
                    v.st.route.clear();
                }
                v.leg.clear();
                v.to_station = false;
            }
            std::set<RequestId> covered;
            for (const auto& trip : picked.chosen)
                for (RequestId rid : trip.riders) covered.insert(rid);
            std::vector<RequestId> keep;
            for (RequestId rid : open) {
                auto& rec = records.at(rid);
                if (covered.count(rid) || rec.state == RequestRecord::State::Onboard) {
                    keep.push_back(rid);
                    continue;
                }
                if (protect.count(rid)) {  // still waiting, retried next batch
                    rec.state = RequestRecord::State::Waiting;
                    rec.vehicle = -1;
                    keep.push_back(rid);
                    continue;
                }
                rec.state = RequestRecord::State::Rejected;
                rejected_now.push_back(rec.req);
                batch_log.events.push_back({t, EventKind::Reject, -1, rid, 0.0});
            }
            open = keep;
        }

        // rebalance idle vehicles toward the origins of freshly rejected requests
        if (!rejected_now.empty()) {
            std::vector<VehicleState> idle;
            for (const auto& v : fleet)
                if (v.st.accepting && !v.charging && !v.waiting && !v.to_station &&
                    v.st.route.empty() && v.st.onboard.empty() && v.pending.empty())
                    idle.push_back(v.st);
            for (const auto& [vid, node] : rebalance(net, idle, rejected_now, t)) {
                fleet[vid].rebalance_target = node;
                batch_log.events.push_back(
                    {t, EventKind::Rebalance, vid, -1, static_cast<double>(node)});
            }
        }

        if (planner) {
            auto p = static_cast<std::size_t>(t / kLongPeriod);
            int required = p < requirement.size() ? requirement[p] : 0;
            int avail = 0;
            for (const auto& v : fleet)
                if (!v.charging && !v.waiting) ++avail;
            if (avail < required)
                batch_log.events.push_back({t, EventKind::Shortfall, -1, -1,
                                            static_cast<double>(required - avail)});
        }

        for (auto& v : fleet) {
            double odo = v.cumulative_distance_m;
            advance_vehicle(v, cfg.t_batch, t, net, cfg.battery, ice, batch_log, station_load,
                            station_capacity);
            auto b = std::min(result.distance_km_per_bucket.size() - 1,
                              static_cast<std::size_t>((t - cfg.day_start) / kBucket));
            result.distance_km_per_bucket[b] += (v.cumulative_distance_m - odo) / 1000.0;
        }

        // request state upkeep from this batch's events
        for (const auto& ev : batch_log.events) {
            if (ev.kind == EventKind::Pickup)
                records.at(ev.request).state = RequestRecord::State::Onboard;
            else if (ev.kind == EventKind::Dropoff)
                records.at(ev.request).state = RequestRecord::State::Served;
        }
        {
            std::vector<RequestId> keep;
            for (RequestId rid : open) {
                auto st = records.at(rid).state;
                if (st == RequestRecord::State::Waiting ||
                    st == RequestRecord::State::Assigned ||
                    st == RequestRecord::State::Onboard)
                    keep.push_back(rid);
            }
            open = keep;
        }

        std::stable_sort(batch_log.events.begin(), batch_log.events.end(),
                         [](const Event& l, const Event& r) {
                             if (l.time != r.time) return l.time < r.time;
                             if (l.kind != r.kind) return l.kind < r.kind;
                             if (l.vehicle != r.vehicle) return l.vehicle < r.vehicle;
                             return l.request < r.request;
                         });
        result.log.events.insert(result.log.events.end(), batch_log.events.begin(),
                                 batch_log.events.end());

        for (auto& v : fleet)
            result.charge_audit.push_back(
                {t + cfg.t_batch, v.st.id, v.st.charge, v.cumulative_distance_m});
    }

    result.metrics = compute_metrics(result.log, requests, net, cfg,
                                     result.distance_km_per_bucket);
    return result;
}

Metrics compute_metrics(const EventLog& log, const std::vector<Request>& requests,
                        const RoadNetwork& net, const ScenarioConfig& cfg,
                        const std::vector<double>& distance_km_per_bucket) {
    Metrics m;
    std::map<RequestId, const Request*> by_id;
    for (const auto& r : requests) by_id[r.id] = &r;

    struct Ride {
        double pickup = -1, dropoff = -1;
        VehicleId vehicle = -1;
    };
    std::map<RequestId, Ride> rides;
    for (const auto& ev : log.events) {
        if (ev.kind == EventKind::Pickup) {
            rides[ev.request].pickup = ev.time;
            rides[ev.request].vehicle = ev.vehicle;
        } else if (ev.kind == EventKind::Dropoff) {
            rides[ev.request].dropoff = ev.time;
        }
    }

    double wait_sum = 0, ride_sum = 0, delay_sum = 0;
    int served = 0;
    std::vector<std::pair<RequestId, Ride>> done;
    for (const auto& [rid, ride] : rides) {
        if (ride.pickup < 0 || ride.dropoff < 0) continue;
        const Request& r = *by_id.at(rid);
        double direct = net.travel_time(r.origin, r.destination);
        wait_sum += ride.pickup - r.entry_time;
        ride_sum += ride.dropoff - ride.pickup;
        delay_sum += (ride.dropoff - r.entry_time) - direct;
        ++served;
        done.push_back({rid, ride});
    }
    m.service_rate = requests.empty() ? 1.0
                                      : static_cast<double>(served) /
                                            static_cast<double>(requests.size());
    if (served > 0) {
        m.mean_wait_s = wait_sum / served;
        m.mean_ride_s = ride_sum / served;
        m.mean_delay_s = delay_sum / served;
    }
    m.abs_utilization =
        ride_sum / (static_cast<double>(cfg.fleet_size) * (cfg.day_end - cfg.day_start));

    int shared = 0;
    double companions = 0;
    for (const auto& [rid, ride] : done) {
        int overlap = 0;
        for (const auto& [rid2, ride2] : done) {
            if (rid2 == rid || ride2.vehicle != ride.vehicle) continue;
            if (ride2.pickup < ride.dropoff && ride2.dropoff > ride.pickup) ++overlap;
        }
        if (overlap > 0) ++shared;
        companions += 1.0 + overlap;
    }
    if (served > 0) {
        m.shared_rate = static_cast<double>(shared) / served;
        m.rider_share_rate = companions / served;
    }

    for (double km : distance_km_per_bucket) m.total_distance_km += km;
    m.distance_km = distance_km_per_bucket;

    // pre-charge waiting: each charge_start pairs with the vehicle's preceding
    // wait_start, zero wait when the vehicle charged immediately
    std::map<VehicleId, double> pending_wait;
    double wait_total = 0;
    int charges = 0;
    for (const auto& ev : log.events) {
        if (ev.kind == EventKind::WaitStart) {
            pending_wait[ev.vehicle] = ev.time;
        } else if (ev.kind == EventKind::ChargeStart) {
            auto it = pending_wait.find(ev.vehicle);
            if (it != pending_wait.end()) {
                wait_total += ev.time - it->second;
                pending_wait.erase(it);
            }
            ++charges;
        }
    }
    if (charges > 0) m.mean_pre_charge_wait_s = wait_total / charges;

    auto buckets = distance_km_per_bucket.size();
    m.charging_count.assign(buckets, 0);
    m.rolling_service_rate.assign(buckets, 1.0);
    std::map<VehicleId, std::vector<std::pair<double, double>>> charge_intervals;
    std::map<VehicleId, double> open_charge;
    for (const auto& ev : log.events) {
        if (ev.kind == EventKind::ChargeStart) open_charge[ev.vehicle] = ev.time;
        if (ev.kind == EventKind::ChargeEnd) {
            auto it = open_charge.find(ev.vehicle);
            if (it != open_charge.end()) {
                charge_intervals[ev.vehicle].push_back({it->second, ev.time});
                open_charge.erase(it);
            }
        }
    }
    for (const auto& [vid, t0] : open_charge)
        charge_intervals[vid].push_back({t0, cfg.day_end});
    for (std::size_t b = 0; b < buckets; ++b) {
        double t0 = cfg.day_start + static_cast<double>(b) * kBucket;
        for (const auto& [vid, ivs] : charge_intervals)
            for (const auto& [s, e] : ivs)
                if (s <= t0 && t0 < e) {
                    ++m.charging_count[b];
                    break;
                }
        int entered = 0, ok = 0;
        for (const auto& r : requests)
            if (r.entry_time >= t0 && r.entry_time < t0 + kBucket) {
                ++entered;
                auto it = rides.find(r.id);
                if (it != rides.end() && it->second.dropoff >= 0) ++ok;
            }
        if (entered > 0)
            m.rolling_service_rate[b] = static_cast<double>(ok) / entered;
    }
    return m;
}

void save_metrics(const std::string& path, const Metrics& m, const std::string& method) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "method,service_rate,mean_wait_s,mean_ride_s,mean_delay_s,abs_utilization,"
         "rider_share_rate,shared_rate,total_distance_km,mean_pre_charge_wait_s\n";
    f << method << "," << std::setprecision(10) << m.service_rate << "," << m.mean_wait_s << ","
      << m.mean_ride_s << "," << m.mean_delay_s << "," << m.abs_utilization << ","
      << m.rider_share_rate << "," << m.shared_rate << "," << m.total_distance_km << ","
      << m.mean_pre_charge_wait_s << "\n";
}

void save_timeseries(const std::string& path, const Metrics& m, double day_start) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "t_s,charging_count,distance_km,rolling_service_rate\n";
    f << std::setprecision(10);
    for (std::size_t b = 0; b < m.distance_km.size(); ++b)
        f << day_start + static_cast<double>(b) * kBucket << "," << m.charging_count[b] << ","
          << m.distance_km[b] << "," << m.rolling_service_rate[b] << "\n";
}

void save_events(const std::string& path, const EventLog& log) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "t_s,kind,vehicle_id,request_id,value\n";
    f << std::setprecision(10);
    for (const auto& ev : log.events)
        f << ev.time << "," << event_kind_name(ev.kind) << "," << ev.vehicle << "," << ev.request
          << "," << ev.value << "\n";
}

}  // namespace evfleet
