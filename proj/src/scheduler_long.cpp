#include "evfleet/scheduler_long.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <set>

#include "evfleet/csv.hpp"
#include "evfleet/errors.hpp"

namespace evfleet {

double AvailabilityFunction::value(double t) const {
    if (t <= 0.0) return std::min(1.0, -ramp_slope * t);
    if (t <= charge_duration) return 0.0;
    return std::min(1.0, ramp_slope * (t - charge_duration));
}

void ChargeSchedule::add(VehicleId v, ChargeSlot slot) {
    auto& list = slots[v];
    list.push_back(slot);
    std::sort(list.begin(), list.end(),
              [](const ChargeSlot& a, const ChargeSlot& b) { return a.start < b.start; });
}

bool ChargeSchedule::empty() const {
    for (const auto& [v, list] : slots)
        if (!list.empty()) return false;
    return true;
}

void LongInstance::validate() const {
    if (horizon < 0) throw InvalidArgument("negative horizon");
    if (static_cast<int>(requirement.size()) != horizon)
        throw InvalidArgument("requirement length != horizon");
    if (total_capacity < 0) throw InvalidArgument("negative capacity");
    if (charge_rate <= 0 || discharge_rate <= 0) throw InvalidArgument("rates must be positive");
    for (const auto& v : vehicles) {
        if (v.release_period < 0 || v.release_period > horizon)
            throw InvalidArgument("release period outside horizon");
        if (v.initial_charge < -0.2 || v.initial_charge > 1.0)
            throw InvalidArgument("initial charge outside [-0.2, 1]");
    }
}

double release_date(const RoadNetwork& net, double t_c, NodeId n,
                    std::optional<NodeId> station_node, double buffer_D) {
    if (station_node) return t_c + net.travel_time(n, *station_node);
    double to_nearest = net.travel_time(n, net.nearest_station(n).node);
    return t_c + std::max(to_nearest, buffer_D);
}

bool check_delta_bound(double t_long, double delta) {
    return delta <= 2.0 * t_long;
}

namespace {

// ramp reach of A in whole periods
int ramp_width_periods(const LongInstance& inst) {
    double ramp_seconds = 1.0 / inst.ramp_slope;
    return static_cast<int>(std::ceil(ramp_seconds / inst.period_length_s));
}

int duration_periods(const LongInstance& inst, const LongVehicle& v, int start) {
    double predicted =
        std::clamp(v.initial_charge - inst.discharge_rate * (start - v.release_period), 0.0, 1.0);
    return std::max(1, static_cast<int>(std::ceil((1.0 - predicted) / inst.charge_rate - 1e-9)));
}

double prior_avail(const LongVehicle& v, int t) {
    if (t < 0) return 1.0;
    if (t < static_cast<int>(v.prior_availability.size())) return v.prior_availability[t];
    return 1.0;
}

int base_used(const LongInstance& inst, int t) {
    if (t < 0 || t >= static_cast<int>(inst.base_capacity_used.size())) return 0;
    return inst.base_capacity_used[t];
}

}  // namespace

double long_objective(const LongInstance& inst, const ChargeSchedule& schedule) {
    inst.validate();
    const auto A = inst.availability();
    const double L = inst.period_length_s;
    const int T = inst.horizon;
    const int V = static_cast<int>(inst.vehicles.size());

    // charging periods per vehicle
    std::vector<std::vector<int>> charging(V);
    std::vector<int> count(T, 0);
    for (int t = 0; t < T; ++t) count[t] = base_used(inst, t);
    for (int vi = 0; vi < V; ++vi) {
        auto it = schedule.slots.find(inst.vehicles[vi].id);
        if (it == schedule.slots.end()) continue;
        for (const auto& slot : it->second)
            for (int p = slot.start; p < slot.end(); ++p) {
                charging[vi].push_back(p);
                if (p >= 0 && p < T) ++count[p];
            }
    }
    for (int t = 0; t < T; ++t)
        if (count[t] > inst.total_capacity)
            throw CapacityViolation("period " + std::to_string(t) + " charges " +
                                    std::to_string(count[t]) + " > K");

    double shortfall = 0.0;
    double neg_charge = 0.0;
    for (int t = 0; t < T; ++t) {
        double supply = 0.0;
        for (int vi = 0; vi < V; ++vi) {
            double a = prior_avail(inst.vehicles[vi], t);
            for (int p : charging[vi]) a = std::min(a, A.value((t - p) * L));
            supply += a;
        }
        shortfall += std::max(0.0, inst.requirement[t] - supply);
    }
    for (int vi = 0; vi < V; ++vi) {
        const auto& v = inst.vehicles[vi];
        std::set<int> on(charging[vi].begin(), charging[vi].end());
        double q = v.initial_charge;
        for (int t = v.release_period; t < T; ++t) {
            if (t > v.release_period) {
                bool charged = on.count(t - 1) > 0;
                q = std::min(1.0, q + (charged ? inst.charge_rate : -inst.discharge_rate));
            }
            neg_charge += std::max(0.0, -q);
        }
    }
    return shortfall + inst.penalty * neg_charge;
}

// ---------------------------------------------------------------------------
// exact oracle
// ---------------------------------------------------------------------------

namespace {

struct ExactSearch {
    const LongInstance& inst;
    int V, T, W;
    double L;
    AvailabilityFunction A;

    std::vector<std::vector<char>> c;     // c[v][t]
    std::vector<std::vector<double>> a;   // current availability with decided slots
    std::vector<double> supply;           // sum_v a[v][t]
    double shortfall = 0.0;               // over all periods, decided slots only
    std::vector<double> q;                // charge at the period being decided
    double neg_penalty = 0.0;

    double best = std::numeric_limits<double>::infinity();
    std::vector<std::vector<char>> best_c;

    explicit ExactSearch(const LongInstance& i)
        : inst(i),
          V(static_cast<int>(i.vehicles.size())),
          T(i.horizon),
          W(ramp_width_periods(i)),
          L(i.period_length_s),
          A(i.availability()) {
        c.assign(V, std::vector<char>(T, 0));
        a.assign(V, std::vector<double>(T, 1.0));
        supply.assign(T, 0.0);
        for (int v = 0; v < V; ++v)
            for (int t = 0; t < T; ++t) {
                a[v][t] = prior_avail(inst.vehicles[v], t);
                supply[t] += a[v][t];
            }
        for (int t = 0; t < T; ++t)
            shortfall += std::max(0.0, inst.requirement[t] - supply[t]);
        q.assign(V, 0.0);
    }

    double shortfall_at(int t) const {
        return std::max(0.0, inst.requirement[t] - supply[t]);
    }

    // applies c[v][s] = 1 to availability state, returns undo data
    std::vector<std::pair<int, double>> apply_charge(int v, int s) {
        std::vector<std::pair<int, double>> undo;
        for (int t = std::max(0, s - W); t < std::min(T, s + W + 2); ++t) {
            double na = std::min(a[v][t], A.value((t - s) * L));
            if (na < a[v][t]) {
                undo.push_back({t, a[v][t]});
                shortfall -= shortfall_at(t);
                supply[t] += na - a[v][t];
                a[v][t] = na;
                shortfall += shortfall_at(t);
            }
        }
        return undo;
    }

    void revert(int v, const std::vector<std::pair<int, double>>& undo) {
        for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
            auto [t, old] = *it;
            shortfall -= shortfall_at(t);
            supply[t] += old - a[v][t];
            a[v][t] = old;
            shortfall += shortfall_at(t);
        }
    }

    void search(int t) {
        if (shortfall + neg_penalty >= best) return;
        if (t == T) {
            double obj = shortfall + neg_penalty;
            if (obj < best) {
                best = obj;
                best_c = c;
            }
            return;
        }
        // charge bookkeeping entering period t
        std::vector<double> q_prev = q;
        double pen_prev = neg_penalty;
        for (int v = 0; v < V; ++v) {
            int ev = inst.vehicles[v].release_period;
            if (t < ev) continue;
            if (t == ev)
                q[v] = inst.vehicles[v].initial_charge;
            else
                q[v] = std::min(1.0, q[v] + (c[v][t - 1] ? inst.charge_rate
                                                        : -inst.discharge_rate));
            neg_penalty += inst.penalty * std::max(0.0, -q[v]);
        }
        if (shortfall + neg_penalty < best) {
            // subsets in lexicographic order of (c[0][t], c[1][t], ...)
            int eligible_mask = 0;
            for (int v = 0; v < V; ++v)
                if (t >= std::max(inst.vehicles[v].release_period, inst.frozen_before))
                    eligible_mask |= 1 << v;
            for (int code = 0; code < (1 << V); ++code) {
                // bit (V-1-v) of code is c[v][t] so ascending code = lexicographic
                int mask = 0;
                for (int v = 0; v < V; ++v)
                    if (code & (1 << (V - 1 - v))) mask |= 1 << v;
                if (mask & ~eligible_mask) continue;
                if (__builtin_popcount(mask) > inst.total_capacity - base_used(inst, t)) continue;
                std::vector<std::pair<int, std::vector<std::pair<int, double>>>> undos;
                for (int v = 0; v < V; ++v)
                    if (mask & (1 << v)) {
                        c[v][t] = 1;
                        undos.push_back({v, apply_charge(v, t)});
                    }
                search(t + 1);
                for (auto it = undos.rbegin(); it != undos.rend(); ++it)
                    revert(it->first, it->second);
                for (int v = 0; v < V; ++v)
                    if (mask & (1 << v)) c[v][t] = 0;
            }
        }
        q = q_prev;
        neg_penalty = pen_prev;
    }
};

}  // namespace

ChargeSchedule solve_long_exact(const LongInstance& inst) {
    inst.validate();
    if (inst.vehicles.size() > 4 || inst.horizon > 12)
        throw ScaleError("exact long-horizon solver is limited to 4 vehicles and 12 periods");
    ExactSearch search(inst);
    search.search(0);
    ChargeSchedule out;
    for (int v = 0; v < search.V; ++v) {
        int t = 0;
        while (t < search.T) {
            if (search.best_c[v][t]) {
                int start = t;
                while (t < search.T && search.best_c[v][t]) ++t;
                out.add(inst.vehicles[v].id, {start, t - start, std::nullopt});
            } else {
                ++t;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// heuristic (priority scheduling with recursive push-back)
// ---------------------------------------------------------------------------

namespace {

struct HeuristicState {
    const LongInstance& inst;
    int V, W;
    double L;
    AvailabilityFunction A;
    LongHeuristicReport* report;

    int capacity;  // K
    std::vector<int> count;       // charging vehicles per period
    std::vector<double> supply;   // sum of availabilities per period
    std::vector<double> required; // R(t), 0 beyond horizon
    // occupants[t]: (priority, vehicle-index) of slots covering t
    std::vector<std::set<std::pair<int, int>>> occupants;

    std::vector<std::optional<ChargeSlot>> placed;  // per vehicle index
    std::vector<int> priority_of;                   // vehicle index -> priority rank
    std::vector<int> by_priority;                   // priority rank -> vehicle index
    std::int64_t ops = 0;

    HeuristicState(const LongInstance& i, LongHeuristicReport* r)
        : inst(i),
          V(static_cast<int>(i.vehicles.size())),
          W(ramp_width_periods(i)),
          L(i.period_length_s),
          A(i.availability()),
          report(r),
          capacity(i.total_capacity) {
        placed.assign(V, std::nullopt);
        priority_of.assign(V, 0);
        ensure(inst.horizon + W + 2);
        for (int t = 0; t < static_cast<int>(supply.size()); ++t) {
            double s = 0.0;
            for (int v = 0; v < V; ++v) s += prior_avail(inst.vehicles[v], t);
            supply[t] = s;
        }
    }

    void ensure(int periods) {
        if (periods <= static_cast<int>(count.size())) return;
        std::size_t old = count.size();
        count.resize(periods, 0);
        for (std::size_t t = old; t < count.size(); ++t)
            count[t] = base_used(inst, static_cast<int>(t));
        occupants.resize(periods);
        required.resize(periods, 0.0);
        supply.resize(periods, 0.0);
        for (std::size_t t = old; t < supply.size(); ++t) {
            supply[t] = V;  // priors are 1 past their given range
            required[t] = t < static_cast<std::size_t>(inst.horizon)
                              ? inst.requirement[t]
                              : 0.0;
        }
        for (std::size_t t = old; t < std::min<std::size_t>(inst.horizon, supply.size()); ++t) {
            double s = 0.0;
            for (int v = 0; v < V; ++v) s += prior_avail(inst.vehicles[v], t);
            supply[t] = s;
        }
        if (old < static_cast<std::size_t>(inst.horizon))
            for (std::size_t t = old; t < static_cast<std::size_t>(inst.horizon); ++t)
                required[t] = inst.requirement[t];
    }

    // availability of vehicle v at period t under slot (or none)
    double avail_with(int v, int t, const std::optional<ChargeSlot>& slot) const {
        double a = prior_avail(inst.vehicles[v], t);
        if (slot)
            for (int p = slot->start; p < slot->end(); ++p)
                a = std::min(a, A.value((t - p) * L));
        return a;
    }

    void install(int v, ChargeSlot slot) {
        ensure(slot.end() + W + 2);
        for (int t = std::max(0, slot.start - W); t < slot.end() + W + 1; ++t)
            supply[t] += avail_with(v, t, slot) - avail_with(v, t, placed[v]);
        for (int p = slot.start; p < slot.end(); ++p) {
            ++count[p];
            occupants[p].insert({priority_of[v], v});
        }
        placed[v] = slot;
    }

    void remove(int v) {
        if (!placed[v]) return;
        ChargeSlot slot = *placed[v];
        for (int p = slot.start; p < slot.end(); ++p) {
            --count[p];
            occupants[p].erase({priority_of[v], v});
        }
        placed[v] = std::nullopt;
        for (int t = std::max(0, slot.start - W); t < slot.end() + W + 1; ++t)
            supply[t] += avail_with(v, t, std::nullopt) - avail_with(v, t, slot);
    }

    // capacity and availability check of placing v at [s, s+dur), with the
    // vehicles in `evicted` treated as unscheduled
    bool fits(int v, int s, int dur, const std::set<int>& evicted, bool check_avail,
              int* violation_period, bool* is_capacity) {
        ChargeSlot slot{s, dur, std::nullopt};
        ensure(slot.end() + W + 2);
        for (int p = s; p < s + dur; ++p) {
            ++ops;
            int used = count[p];
            for (int e : evicted)
                if (placed[e] && placed[e]->covers(p)) --used;
            if (used + 1 > capacity) {
                if (violation_period) *violation_period = p;
                if (is_capacity) *is_capacity = true;
                return false;
            }
        }
        if (!check_avail) return true;
        for (int t = std::max(0, s - W); t < s + dur + W + 1; ++t) {
            ++ops;
            double sup = supply[t];
            for (int e : evicted)
                if (placed[e]) sup += avail_with(e, t, std::nullopt) - avail_with(e, t, placed[e]);
            sup += avail_with(v, t, slot) - avail_with(v, t, placed[v]);
            if (sup < required[t] - 1e-9) {
                if (violation_period) *violation_period = t;
                if (is_capacity) *is_capacity = false;
                return false;
            }
        }
        return true;
    }

    // highest-priority occupant near `period` with priority above `floor_priority`
    // not already evicted; capacity blocks look at the period itself, availability
    // blocks at the surrounding ramp window
    int pick_eviction(int period, int floor_priority, bool capacity_block,
                      const std::set<int>& evicted) {
        int lo = capacity_block ? period : std::max(0, period - W);
        int hi = capacity_block ? period : period + W;
        int best_v = -1;
        int best_p = floor_priority;
        for (int t = lo; t <= hi && t < static_cast<int>(occupants.size()); ++t) {
            ++ops;
            if (occupants[t].empty()) continue;
            auto it = occupants[t].rbegin();  // highest priority at t
            while (it != occupants[t].rend()) {
                if (it->first > best_p && !evicted.count(it->second)) {
                    best_p = it->first;
                    best_v = it->second;
                    break;
                }
                ++it;
            }
        }
        return best_v;
    }

    void push_back(std::map<int, std::pair<int, int>> items) {
        while (!items.empty()) {
            auto lowest = items.begin();  // lowest priority first
            int prio = lowest->first;
            auto [v, from] = lowest->second;
            items.erase(lowest);

            int last_occupied = inst.horizon;
            for (int t = static_cast<int>(count.size()) - 1; t >= 0; --t)
                if (count[t] > 0) {
                    last_occupied = std::max(last_occupied, t);
                    break;
                }
            int soft_cap = std::max(last_occupied, from) + duration_periods(inst, inst.vehicles[v], from) + W + 2;

            bool placed_ok = false;
            for (int pass = 0; pass < 2 && !placed_ok; ++pass) {
                bool check_avail = pass == 0;
                for (int s = from; s <= soft_cap + (pass == 1 ? soft_cap : 0); ++s) {
                    int dur = duration_periods(inst, inst.vehicles[v], s);
                    std::set<int> evicted;
                    std::map<int, int> bump_time;  // vehicle -> period it was bumped at
                    bool ok = true;
                    int bad_period = 0;
                    bool capacity_block = false;
                    while (!fits(v, s, dur, evicted, check_avail, &bad_period, &capacity_block)) {
                        int victim = pick_eviction(bad_period, prio, capacity_block, evicted);
                        if (victim < 0) {
                            ok = false;
                            break;
                        }
                        evicted.insert(victim);
                        bump_time[victim] = bad_period;
                    }
                    if (!ok) continue;
                    for (int e : evicted) {
                        remove(e);
                        items[priority_of[e]] = {e, bump_time[e]};
                    }
                    install(v, {s, dur, std::nullopt});
                    placed_ok = true;
                    break;
                }
                if (!placed_ok && pass == 0 && report)
                    report->soft_availability.push_back(inst.vehicles[v].id);
            }
            assert(placed_ok && "push_back failed to place a vehicle");
        }
    }
};

}  // namespace

ChargeSchedule solve_long_heuristic(const LongInstance& inst, const ChargeSchedule& previous,
                                    LongHeuristicReport* report) {
    inst.validate();
    HeuristicState st(inst, report);

    // vehicle index lookup
    std::map<VehicleId, int> vidx;
    for (int v = 0; v < st.V; ++v) vidx[inst.vehicles[v].id] = v;

    // deadlines and priorities (later deadline = higher priority)
    std::vector<double> deadline(st.V);
    for (int v = 0; v < st.V; ++v) {
        const auto& lv = inst.vehicles[v];
        deadline[v] = lv.release_period + std::max(0.0, lv.initial_charge) / inst.discharge_rate;
    }
    st.by_priority.resize(st.V);
    for (int v = 0; v < st.V; ++v) st.by_priority[v] = v;
    std::sort(st.by_priority.begin(), st.by_priority.end(), [&](int l, int r) {
        if (deadline[l] != deadline[r]) return deadline[l] < deadline[r];
        return inst.vehicles[l].id > inst.vehicles[r].id;  // stable, id-deterministic
    });
    for (int rank = 0; rank < st.V; ++rank) st.priority_of[st.by_priority[rank]] = rank;

    // frozen slots survive re-planning untouched
    std::set<int> frozen;
    for (const auto& [vid, list] : previous.slots)
        for (const auto& slot : list)
            if (slot.start < inst.frozen_before && vidx.count(vid)) {
                int v = vidx[vid];
                st.install(v, slot);
                frozen.insert(v);
            }

    // highest priority first: latest-deadline vehicles grab the latest slots
    for (int rank = st.V - 1; rank >= 0; --rank) {
        int v = st.by_priority[rank];
        if (frozen.count(v)) continue;
        int earliest = std::max(inst.vehicles[v].release_period, inst.frozen_before);
        int dl = static_cast<int>(std::floor(deadline[v]));
        if (dl >= inst.horizon) continue;  // battery outlasts the horizon
        bool placed = false;
        for (int s = std::max(dl, earliest); s >= earliest; --s) {
            int dur = duration_periods(inst, inst.vehicles[v], s);
            if (st.fits(v, s, dur, {}, true, nullptr, nullptr)) {
                st.install(v, {s, dur, std::nullopt});
                placed = true;
                break;
            }
        }
        if (!placed)
            st.push_back({{st.priority_of[v], {v, earliest}}});
    }

    ChargeSchedule out;
    for (int v = 0; v < st.V; ++v)
        if (st.placed[v]) {
            out.add(inst.vehicles[v].id, *st.placed[v]);
            if (report && st.placed[v]->start > deadline[v] && !frozen.count(v))
                report->late_vehicles.push_back(inst.vehicles[v].id);
        }
    if (report) report->pushback_operations = st.ops;
    return out;
}

void save_schedule(const std::string& path, const ChargeSchedule& schedule,
                   double period_length_s) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "vehicle_id,start_s,duration_s,station_id\n";
    for (const auto& [v, slots] : schedule.slots)
        for (const auto& slot : slots) {
            f << v << "," << slot.start * period_length_s << ","
              << slot.duration * period_length_s << ",";
            if (slot.station) f << *slot.station;
            f << "\n";
        }
}

ChargeSchedule load_schedule(const std::string& path, double period_length_s) {
    ChargeSchedule out;
    for (const auto& row :
         csv::read_rows(path, {"vehicle_id", "start_s", "duration_s", "station_id"})) {
        ChargeSlot slot;
        slot.start = static_cast<int>(
            std::llround(csv::to_double(row[1], "start_s") / period_length_s));
        slot.duration = static_cast<int>(
            std::llround(csv::to_double(row[2], "duration_s") / period_length_s));
        if (!row[3].empty()) slot.station = static_cast<StationId>(csv::to_int(row[3], "station_id"));
        out.add(static_cast<VehicleId>(csv::to_int(row[0], "vehicle_id")), slot);
    }
    return out;
}

}  // namespace evfleet
