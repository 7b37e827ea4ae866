// Command-line front end: scenario runs, demand calibration, station placement.
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "evfleet/csv.hpp"
#include "evfleet/demand.hpp"
#include "evfleet/errors.hpp"
#include "evfleet/network.hpp"
#include "evfleet/simulator.hpp"

namespace fs = std::filesystem;
using namespace evfleet;

namespace {

std::map<std::string, std::string> parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto a = s.find_first_not_of(" \t\r");
            auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = value;
    }
    return kv;
}

struct ConfigFile {
    std::map<std::string, std::string> kv;
    std::string dir;

    bool has(const std::string& k) const { return kv.count(k) > 0; }
    std::string str(const std::string& k) const {
        auto it = kv.find(k);
        if (it == kv.end()) throw ConfigError("missing config key '" + k + "'");
        return it->second;
    }
    std::string path(const std::string& k) const {
        fs::path p = str(k);
        if (p.is_relative()) p = fs::path(dir) / p;
        return p.string();
    }
    double num(const std::string& k, double fallback) const {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : csv::to_double(it->second, k);
    }
    int integer(const std::string& k, int fallback) const {
        auto it = kv.find(k);
        return it == kv.end() ? fallback : static_cast<int>(csv::to_int(it->second, k));
    }
};

ConfigFile load_config(const std::string& path) {
    if (!fs::exists(path)) throw ParseError("config file not found: " + path);
    return {parse_config(path), fs::path(path).parent_path().string()};
}

RoadNetwork load_network(const ConfigFile& cf) {
    if (cf.has("nodes")) {
        for (const char* k : {"nodes", "arcs", "stations"})
            if (!fs::exists(cf.path(k)))
                throw ParseError("network file not found: " + cf.path(k));
        return RoadNetwork::load(cf.path("nodes"), cf.path("arcs"), cf.path("stations"));
    }
    auto net = RoadNetwork::generate_grid(cf.integer("grid_rows", 10), cf.integer("grid_cols", 10),
                                          cf.num("edge_time_s", 60.0),
                                          cf.num("edge_distance_m", 500.0));
    if (cf.has("stations")) {
        if (!fs::exists(cf.path("stations")))
            throw ParseError("station file not found: " + cf.path("stations"));
        std::vector<Station> stations;
        for (const auto& row : csv::read_rows(cf.path("stations"),
                                              {"station_id", "node_id", "capacity"}))
            stations.push_back({static_cast<StationId>(csv::to_int(row[0], "station_id")),
                                static_cast<NodeId>(csv::to_int(row[1], "node_id")),
                                static_cast<int>(csv::to_int(row[2], "capacity"))});
        return RoadNetwork(net.nodes(), net.arcs(), stations);
    }
    return net;
}

std::vector<Request> load_request_set(const ConfigFile& cf, const RoadNetwork& net) {
    if (cf.has("requests")) {
        if (!fs::exists(cf.path("requests")))
            throw ParseError("request file not found: " + cf.path("requests"));
        return load_requests(cf.path("requests"), net);
    }
    if (!cf.has("synth_minutes")) return {};
    int minutes = cf.integer("synth_minutes", 0);
    double base = cf.num("synth_base_rate", 0.5);
    double peak = cf.num("synth_peak_rate", base);
    int p0 = cf.integer("synth_peak_start_min", 0);
    int p1 = cf.integer("synth_peak_end_min", 0);
    double offset = cf.num("synth_offset_s", 0.0);
    std::vector<double> rates(minutes, base);
    for (int i = std::max(0, p0); i < std::min(minutes, p1); ++i) rates[i] = peak;
    auto reqs = synth_requests(net, rates, static_cast<std::uint64_t>(cf.num("synth_seed", 0)));
    for (auto& r : reqs) r.entry_time += offset;
    return reqs;
}

ScenarioConfig scenario_from(const ConfigFile& cf) {
    ScenarioConfig cfg;
    cfg.t_batch = cf.num("t_batch", cfg.t_batch);
    cfg.t_short = cf.num("t_short", cfg.t_batch);
    cfg.t_long = cf.num("t_long", 5.0 * cfg.t_batch);
    cfg.t_sl = cf.num("t_sl", cfg.t_sl);
    cfg.delta = cf.num("delta", 2.0 * cfg.t_long);
    cfg.buffer_D = cf.num("buffer_d", cfg.buffer_D);
    cfg.qos.max_wait = cf.num("max_wait", cfg.qos.max_wait);
    cfg.qos.max_delay = cf.num("max_delay", cfg.qos.max_delay);
    cfg.battery = BatteryModel::make(
        cf.num("battery_q", 0.7), cf.num("battery_r", 15.0), cf.num("battery_t", 30.0),
        cf.num("battery_eta", 1.0 / 30.0), cf.num("battery_q_est", 1.0 / 400.0),
        cf.num("battery_q_min", 0.15), cf.num("range_km", 180.0));
    cfg.fleet_size = cf.integer("fleet_size", cfg.fleet_size);
    cfg.vehicle_capacity = cf.integer("vehicle_capacity", cfg.vehicle_capacity);
    cfg.day_start = cf.num("day_start", cfg.day_start);
    cfg.day_end = cf.num("day_end", cfg.day_end);
    cfg.lambda = cf.num("lambda", cfg.lambda);
    cfg.allow_delta_override = cf.integer("allow_delta_override", 0) != 0;
    cfg.benchmark_threshold = cf.num("benchmark_threshold", cfg.benchmark_threshold);
    cfg.benchmark_radius = cf.num("benchmark_radius", cfg.benchmark_radius);
    if (cf.has("initial_charge")) {
        std::string ic = cf.str("initial_charge");
        if (ic == "full" || ic == "FULL")
            cfg.initial_charge = InitialCharge::FULL;
        else if (ic == "uniform_random" || ic == "UNIFORM_RANDOM")
            cfg.initial_charge = InitialCharge::UNIFORM_RANDOM;
        else
            throw ConfigError("initial_charge must be full or uniform_random");
    }
    return cfg;
}

int cmd_run(const std::string& config_path, const std::string& methods_arg,
            const std::string& out_dir, long long seed) {
    auto cf = load_config(config_path);
    auto net = load_network(cf);
    auto requests = load_request_set(cf, net);
    auto cfg = scenario_from(cf);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    else cfg.seed = static_cast<std::uint64_t>(cf.num("seed", 0));

    std::vector<std::string> methods;
    std::stringstream ss(methods_arg);
    std::string item;
    while (std::getline(ss, item, ',')) methods.push_back(item);
    if (methods.empty()) throw ConfigError("no methods given");

    fs::create_directories(out_dir);
    std::vector<std::pair<std::string, Metrics>> rows;
    for (const auto& name : methods) {
        cfg.method = method_from_string(name);
        auto result = evfleet::run(cfg, net, requests);
        save_metrics((fs::path(out_dir) / (name + "_metrics.csv")).string(), result.metrics,
                     name);
        save_timeseries((fs::path(out_dir) / (name + "_timeseries.csv")).string(),
                        result.metrics, cfg.day_start);
        save_events((fs::path(out_dir) / (name + "_events.csv")).string(), result.log);
        rows.push_back({name, result.metrics});
    }

    std::cout << std::left << std::setw(12) << "method" << std::right << std::setw(10)
              << "service" << std::setw(10) << "wait_s" << std::setw(10) << "ride_s"
              << std::setw(10) << "delay_s" << std::setw(8) << "util" << std::setw(8) << "share"
              << std::setw(10) << "dist_km" << "\n";
    std::cout << std::fixed << std::setprecision(3);
    for (const auto& [name, m] : rows)
        std::cout << std::left << std::setw(12) << name << std::right << std::setw(10)
                  << m.service_rate << std::setw(10) << m.mean_wait_s << std::setw(10)
                  << m.mean_ride_s << std::setw(10) << m.mean_delay_s << std::setw(8)
                  << m.abs_utilization << std::setw(8) << m.shared_rate << std::setw(10)
                  << m.total_distance_km << "\n";
    return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_dir) {
    auto cf = load_config(config_path);
    auto net = load_network(cf);
    auto requests = load_request_set(cf, net);
    auto cfg = scenario_from(cf);

    auto profile = demand_profile(
        requests, [&](NodeId a, NodeId b) { return net.travel_time(a, b); });
    double lambda = calibrate_lambda(cfg.fleet_size, profile, cfg.battery,
                                     net.total_station_capacity(),
                                     cf.num("lambda_step", 0.01));
    auto req = availability_requirement(cfg.fleet_size, profile, lambda);

    fs::create_directories(out_dir);
    {
        std::ofstream f(fs::path(out_dir) / "profile.csv");
        f << "block_index,d\n" << std::setprecision(10);
        for (std::size_t i = 0; i < profile.size(); ++i) f << i << "," << profile[i] << "\n";
    }
    {
        std::ofstream f(fs::path(out_dir) / "lambda.csv");
        f << "lambda\n" << std::setprecision(10) << lambda << "\n";
    }
    {
        std::ofstream f(fs::path(out_dir) / "requirement.csv");
        f << "block_index,r\n";
        for (std::size_t i = 0; i < req.values.size(); ++i) f << i << "," << req.values[i] << "\n";
    }
    std::cout << "lambda = " << lambda << " (" << req.values.size() << " blocks)\n";
    return 0;
}

int cmd_place_stations(const std::string& config_path, const std::string& mode, int k,
                       int total_capacity, long long seed, const std::string& out_path) {
    auto cf = load_config(config_path);
    auto net = load_network(cf);
    std::vector<Station> stations;
    if (mode == "kmeans") {
        auto requests = load_request_set(cf, net);
        std::vector<NodeId> endpoints;
        for (const auto& r : requests) {
            endpoints.push_back(r.origin);
            endpoints.push_back(r.destination);
        }
        if (endpoints.empty())
            for (const auto& nd : net.nodes()) endpoints.push_back(nd.id);
        stations = place_stations_kmeans(net, endpoints, k, total_capacity,
                                         static_cast<unsigned>(seed));
    } else if (mode == "greedy") {
        stations = place_stations_greedy(net, k, static_cast<unsigned>(seed));
    } else {
        throw InvalidArgument("mode must be kmeans or greedy");
    }
    save_stations(out_path, stations);
    std::cout << "wrote " << stations.size() << " stations to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EV ridepooling fleet simulator"};
    app.require_subcommand(1);

    std::string config_path, methods = "heuristic", out_dir = "out", mode = "kmeans";
    std::string stations_out = "stations.csv";
    long long seed = -1;
    int k = 4, total_capacity = 20;

    auto* run_cmd = app.add_subcommand("run", "simulate a scenario with one or more methods");
    run_cmd->add_option("--config", config_path, "flat key=value scenario file")->required();
    run_cmd->add_option("--methods", methods, "comma list: ice,milp,heuristic,benchmark");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--seed", seed, "override the config seed");

    auto* cal_cmd = app.add_subcommand("calibrate", "derive d(t), lambda and R(t) from requests");
    cal_cmd->add_option("--config", config_path, "flat key=value scenario file")->required();
    cal_cmd->add_option("--out", out_dir, "output directory");

    auto* place_cmd = app.add_subcommand("place-stations", "choose charge station locations");
    place_cmd->add_option("--config", config_path, "flat key=value scenario file")->required();
    place_cmd->add_option("--mode", mode, "kmeans or greedy");
    place_cmd->add_option("--k", k, "number of stations");
    place_cmd->add_option("--total-capacity", total_capacity, "chargers across all stations");
    place_cmd->add_option("--seed", seed, "placement seed");
    place_cmd->add_option("--out", stations_out, "stations.csv path");

    try {
        app.parse(argc, argv);
        if (run_cmd->parsed()) return cmd_run(config_path, methods, out_dir, seed);
        if (cal_cmd->parsed()) return cmd_calibrate(config_path, out_dir);
        if (place_cmd->parsed())
            return cmd_place_stations(config_path, mode, k, total_capacity,
                                      seed < 0 ? 0 : seed, stations_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
