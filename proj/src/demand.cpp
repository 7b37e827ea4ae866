#include "evfleet/demand.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>

#include "evfleet/csv.hpp"
#include "evfleet/errors.hpp"
#include "evfleet/scheduler_long.hpp"

namespace evfleet {

namespace {
const std::vector<std::string> kRequestHeader = {"request_id", "entry_time_s", "origin_node",
                                                 "destination_node"};

// uniform in [0,1) from the top 53 bits, stable across platforms
double unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

int poisson_draw(std::mt19937_64& rng, double rate) {
    if (rate <= 0.0) return 0;
    double limit = std::exp(-rate), prod = unit(rng);
    int k = 0;
    while (prod > limit) {
        prod *= unit(rng);
        ++k;
    }
    return k;
}
}  // namespace

std::vector<Request> load_requests(const std::string& path, const RoadNetwork& net) {
    std::vector<Request> out;
    for (const auto& row : csv::read_rows(path, kRequestHeader)) {
        Request r;
        r.id = static_cast<RequestId>(csv::to_int(row[0], "request_id"));
        r.entry_time = csv::to_double(row[1], "entry_time_s");
        r.origin = static_cast<NodeId>(csv::to_int(row[2], "origin_node"));
        r.destination = static_cast<NodeId>(csv::to_int(row[3], "destination_node"));
        if (!net.has_node(r.origin) || !net.has_node(r.destination))
            throw ValidationError("request " + std::to_string(r.id) + " references unknown node");
        if (r.origin == r.destination)
            throw ValidationError("request " + std::to_string(r.id) + " has origin == destination");
        if (r.entry_time < 0)
            throw ValidationError("request " + std::to_string(r.id) + " has negative entry time");
        out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const Request& l, const Request& r) {
        if (l.entry_time != r.entry_time) return l.entry_time < r.entry_time;
        return l.id < r.id;
    });
    return out;
}

void save_requests(const std::string& path, const std::vector<Request>& requests) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << "request_id,entry_time_s,origin_node,destination_node\n";
    f << std::setprecision(17);
    for (const auto& r : requests)
        f << r.id << "," << r.entry_time << "," << r.origin << "," << r.destination << "\n";
}

std::vector<Request> synth_requests(const RoadNetwork& net, const std::vector<double>& rates,
                                    std::uint64_t seed) {
    for (double rate : rates)
        if (rate < 0) throw InvalidArgument("negative arrival rate");
    if (net.nodes().size() < 2) throw InvalidArgument("need at least two nodes");
    std::mt19937_64 rng(seed);
    std::size_t n = net.nodes().size();
    std::vector<Request> out;
    for (std::size_t minute = 0; minute < rates.size(); ++minute) {
        int count = poisson_draw(rng, rates[minute]);
        for (int k = 0; k < count; ++k) {
            Request r;
            r.entry_time = (static_cast<double>(minute) + unit(rng)) * 60.0;
            r.origin = net.nodes()[rng() % n].id;
            do {
                r.destination = net.nodes()[rng() % n].id;
            } while (r.destination == r.origin);
            out.push_back(r);
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const Request& l, const Request& r) {
        return l.entry_time < r.entry_time;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<RequestId>(i);
    return out;
}

std::vector<double> demand_profile(const std::vector<Request>& requests,
                                   const std::function<double(NodeId, NodeId)>& travel_time,
                                   double block) {
    if (requests.empty()) throw EmptyInput("no requests for demand profile");
    if (block <= 0) throw InvalidArgument("block length must be positive");
    double horizon = 0.0;
    std::vector<std::pair<double, double>> intervals;
    for (const auto& r : requests) {
        double end = r.entry_time + travel_time(r.origin, r.destination);
        intervals.push_back({r.entry_time, end});
        horizon = std::max(horizon, end);
    }
    auto blocks = static_cast<std::size_t>(std::ceil(horizon / block));
    if (blocks == 0) blocks = 1;
    std::vector<double> counts(blocks, 0.0);
    for (const auto& [a, b] : intervals)
        for (std::size_t k = 0; k < blocks; ++k) {
            double lo = k * block, hi = (k + 1) * block;
            if (a < hi && b > lo) counts[k] += 1.0;
        }
    double peak = *std::max_element(counts.begin(), counts.end());
    for (double& c : counts) c /= peak;
    return counts;
}

AvailabilityRequirement availability_requirement(int fleet_size,
                                                 const std::vector<double>& profile,
                                                 double lambda, double period_length) {
    if (lambda < 0 || lambda > 1) throw InvalidArgument("lambda must lie in [0,1]");
    AvailabilityRequirement req;
    req.period_length = period_length;
    req.lambda = lambda;
    req.profile = profile;
    for (double d : profile)
        req.values.push_back(static_cast<int>(
            std::floor(fleet_size * (lambda * d + (1.0 - lambda)) + 1e-9)));
    return req;
}

double calibrate_lambda(int fleet_size, const std::vector<double>& profile,
                        const BatteryModel& battery, int total_capacity, double step) {
    if (step <= 0) throw InvalidArgument("step must be positive");
    if (fleet_size <= 0) throw InvalidArgument("fleet size must be positive");
    if (profile.empty()) throw EmptyInput("empty demand profile");

    LongInstance inst;
    inst.period_length_s = 300.0;
    int per_block = static_cast<int>(std::lround(1800.0 / inst.period_length_s));
    inst.horizon = static_cast<int>(profile.size()) * per_block;
    inst.total_capacity = total_capacity;
    inst.charge_rate = battery.eta * inst.period_length_s / 60.0;
    inst.discharge_rate = battery.q_est * inst.period_length_s / 60.0;
    for (int v = 0; v < fleet_size; ++v) inst.vehicles.push_back({v, 0, 1.0, {}});

    for (double lambda = 0.0; lambda <= 1.0 + 1e-12; lambda += step) {
        double l = std::min(lambda, 1.0);
        auto req = availability_requirement(fleet_size, profile, l);
        inst.requirement.clear();
        for (int r : req.values)
            inst.requirement.insert(inst.requirement.end(), per_block, r);
        LongHeuristicReport report;
        auto schedule = solve_long_heuristic(inst, {}, &report);
        try {
            if (long_objective(inst, schedule) < 1e-9) return l;
        } catch (const CapacityViolation&) {
        }
    }
    throw Infeasible("no lambda <= 1 yields a feasible schedule");
}

}  // namespace evfleet
