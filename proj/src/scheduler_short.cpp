#include "evfleet/scheduler_short.hpp"

#include <algorithm>
#include <limits>

#include "evfleet/errors.hpp"

namespace evfleet {

ShortInstance build_short_instance(const ChargeSchedule& schedule,
                                   const std::vector<VehicleState>& fleet,
                                   const RoadNetwork& net, const BatteryModel& battery,
                                   double now, double t_sl, double delta,
                                   double period_length_s,
                                   const std::map<VehicleId, StationId>& previous) {
    ShortInstance inst;
    inst.stations = net.stations();

    std::map<VehicleId, const VehicleState*> by_id;
    for (const auto& v : fleet) by_id[v.id] = &v;

    for (const auto& [vid, slots] : schedule.slots) {
        auto it = by_id.find(vid);
        if (it == by_id.end()) continue;
        const VehicleState& veh = *it->second;
        for (const auto& slot : slots) {
            double start_s = slot.start * period_length_s;
            if (start_s < now - 1e-9 || start_s > now + t_sl + delta + 1e-9) continue;

            // predicted final drop-off node and completion time
            auto [node, t_c] = effective_position(net, veh, now);
            for (const auto& stop : veh.route) {
                t_c += net.travel_time(node, stop.node);
                node = stop.node;
            }
            double q_pred = veh.charge - battery.q_est * (t_c - now) / 60.0;
            double reach_m = std::max(0.0, q_pred) * battery.range_km * 1000.0;

            ShortJob job;
            job.vehicle = vid;
            job.start_period = slot.start;
            job.duration_periods = slot.duration;
            for (const auto& s : inst.stations) {
                if (t_c + net.travel_time(node, s.node) > start_s + 1e-9) continue;
                if (net.travel_distance(node, s.node) > reach_m + 1e-9) continue;
                job.reachable.insert(s.id);
                job.cost[s.id] = net.travel_time(node, s.node);
            }
            auto prev = previous.find(vid);
            if (prev != previous.end()) {
                job.pinned = prev->second;
                if (!job.reachable.count(prev->second)) {
                    job.reachable.insert(prev->second);
                    for (const auto& s : inst.stations)
                        if (s.id == prev->second)
                            job.cost[s.id] = net.travel_time(node, s.node);
                }
            }
            inst.jobs.push_back(job);
            break;  // only the vehicle's next slot is assigned a station
        }
    }
    return inst;
}

std::vector<int> clique_checkpoints(const std::vector<ShortJob>& jobs) {
    std::vector<int> starts;
    for (const auto& j : jobs) {
        if (j.duration_periods < 1) throw InvalidArgument("job with empty interval");
        starts.push_back(j.start_period);
    }
    std::sort(starts.begin(), starts.end());
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

    auto active = [&](int t) {
        std::vector<int> out;
        for (std::size_t i = 0; i < jobs.size(); ++i)
            if (t >= jobs[i].start_period && t < jobs[i].end_period())
                out.push_back(static_cast<int>(i));
        return out;
    };
    // keep the start times whose active set is not contained in another's
    std::vector<int> checkpoints;
    for (int t : starts) {
        auto at = active(t);
        bool dominated = false;
        for (int u : starts) {
            if (u == t) continue;
            auto au = active(u);
            if (au.size() <= at.size()) continue;
            if (std::includes(au.begin(), au.end(), at.begin(), at.end())) {
                dominated = true;
                break;
            }
        }
        if (!dominated) checkpoints.push_back(t);
    }
    return checkpoints;
}

namespace {

struct ShortSearch {
    const ShortInstance& inst;
    std::vector<int> order;             // job indices, |S_v| ascending
    std::vector<int> checkpoints;
    std::map<StationId, int> capacity;
    std::map<StationId, std::map<int, int>> usage;  // station -> checkpoint -> count
    std::vector<StationId> chosen;
    std::vector<double> min_cost_suffix;

    double best = std::numeric_limits<double>::infinity();
    std::vector<StationId> best_choice;

    explicit ShortSearch(const ShortInstance& i) : inst(i) {
        for (const auto& s : inst.stations) capacity[s.id] = s.capacity;
        checkpoints = clique_checkpoints(inst.jobs);
        order.resize(inst.jobs.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
        std::sort(order.begin(), order.end(), [&](int l, int r) {
            if (inst.jobs[l].reachable.size() != inst.jobs[r].reachable.size())
                return inst.jobs[l].reachable.size() < inst.jobs[r].reachable.size();
            return inst.jobs[l].vehicle < inst.jobs[r].vehicle;
        });
        chosen.assign(inst.jobs.size(), -1);
        min_cost_suffix.assign(order.size() + 1, 0.0);
        for (int k = static_cast<int>(order.size()) - 1; k >= 0; --k) {
            const auto& job = inst.jobs[order[k]];
            double mc = std::numeric_limits<double>::infinity();
            for (StationId s : job.reachable) mc = std::min(mc, job.cost.at(s));
            if (job.reachable.empty()) mc = std::numeric_limits<double>::infinity();
            min_cost_suffix[k] = min_cost_suffix[k + 1] + mc;
        }
    }

    void search(std::size_t k, double cost) {
        if (cost + min_cost_suffix[k] >= best) return;
        if (k == order.size()) {
            best = cost;
            best_choice = chosen;
            return;
        }
        const auto& job = inst.jobs[order[k]];
        // cheapest first, station id breaking ties
        std::vector<StationId> candidates(job.reachable.begin(), job.reachable.end());
        std::sort(candidates.begin(), candidates.end(), [&](StationId l, StationId r) {
            double cl = job.cost.at(l), cr = job.cost.at(r);
            if (cl != cr) return cl < cr;
            return l < r;
        });
        for (StationId s : candidates) {
            bool fits = true;
            for (int cp : checkpoints) {
                if (cp < job.start_period || cp >= job.end_period()) continue;
                if (usage[s][cp] + 1 > capacity.at(s)) {
                    fits = false;
                    break;
                }
            }
            if (!fits) continue;
            for (int cp : checkpoints)
                if (cp >= job.start_period && cp < job.end_period()) ++usage[s][cp];
            chosen[order[k]] = s;
            search(k + 1, cost + job.cost.at(s));
            chosen[order[k]] = -1;
            for (int cp : checkpoints)
                if (cp >= job.start_period && cp < job.end_period()) --usage[s][cp];
        }
    }
};

}  // namespace

std::map<VehicleId, StationId> solve_short_exact(const ShortInstance& inst) {
    for (const auto& job : inst.jobs) {
        for (StationId s : job.reachable)
            if (!job.cost.count(s)) throw InvalidArgument("missing cost for reachable station");
        if (job.pinned && !job.reachable.count(*job.pinned))
            throw InvalidArgument("pinned station not in reachable set");
    }
    ShortSearch search(inst);
    search.search(0, 0.0);
    if (search.best_choice.empty() && !inst.jobs.empty())
        throw Infeasible("no feasible station assignment");
    std::map<VehicleId, StationId> out;
    for (std::size_t j = 0; j < inst.jobs.size(); ++j)
        out[inst.jobs[j].vehicle] = search.best_choice[j];
    return out;
}

ShortFallbackResult solve_short_fallback(const ShortInstance& inst,
                                         const std::set<VehicleId>& newest) {
    ShortInstance reduced;
    reduced.stations = inst.stations;
    std::vector<ShortJob> new_jobs;
    for (const auto& job : inst.jobs)
        (newest.count(job.vehicle) ? new_jobs : reduced.jobs).push_back(job);

    ShortFallbackResult result;
    result.assignments = solve_short_exact(reduced);

    // remaining per-period capacity after the exact part
    std::map<StationId, std::map<int, int>> usage;
    std::map<StationId, int> capacity;
    for (const auto& s : inst.stations) capacity[s.id] = s.capacity;
    auto occupy = [&](const ShortJob& job, StationId s) {
        for (int p = job.start_period; p < job.end_period(); ++p) ++usage[s][p];
    };
    auto job_fits = [&](const ShortJob& job, StationId s) {
        for (int p = job.start_period; p < job.end_period(); ++p)
            if (usage[s][p] + 1 > capacity.at(s)) return false;
        return true;
    };
    for (const auto& job : reduced.jobs) occupy(job, result.assignments.at(job.vehicle));

    std::sort(new_jobs.begin(), new_jobs.end(), [](const ShortJob& l, const ShortJob& r) {
        if (l.start_period != r.start_period) return l.start_period < r.start_period;
        return l.vehicle < r.vehicle;
    });
    for (const auto& job : new_jobs) {
        StationId pick = -1;
        double pick_cost = std::numeric_limits<double>::infinity();
        for (StationId s : job.reachable) {
            if (!job_fits(job, s)) continue;
            double c = job.cost.at(s);
            if (c < pick_cost || (c == pick_cost && s < pick)) {
                pick = s;
                pick_cost = c;
            }
        }
        if (pick < 0) {
            result.deferred.insert(job.vehicle);
        } else {
            result.assignments[job.vehicle] = pick;
            occupy(job, pick);
        }
    }
    return result;
}

}  // namespace evfleet
