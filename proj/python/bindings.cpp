#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "evfleet/battery.hpp"
#include "evfleet/demand.hpp"
#include "evfleet/network.hpp"
#include "evfleet/pooling.hpp"
#include "evfleet/scheduler_long.hpp"
#include "evfleet/simulator.hpp"

namespace py = pybind11;
using namespace evfleet;

PYBIND11_MODULE(_evfleet, m) {
    m.doc() = "EV ridepooling fleet simulator core";

    // ---- network ----
    py::class_<NodePoint>(m, "NodePoint")
        .def(py::init<>())
        .def(py::init([](NodeId id, double x, double y) {
                 return NodePoint{id, x, y};
             }),
             py::arg("id"), py::arg("x") = 0.0, py::arg("y") = 0.0)
        .def_readwrite("id", &NodePoint::id)
        .def_readwrite("x", &NodePoint::x)
        .def_readwrite("y", &NodePoint::y);

    py::class_<Arc>(m, "Arc")
        .def(py::init<>())
        .def(py::init([](NodeId from, NodeId to, double tt, double dist) {
                 return Arc{from, to, tt, dist};
             }),
             py::arg("from_node"), py::arg("to_node"), py::arg("travel_time_s"),
             py::arg("distance_m"))
        .def_readwrite("from_node", &Arc::from)
        .def_readwrite("to_node", &Arc::to)
        .def_readwrite("travel_time_s", &Arc::travel_time_s)
        .def_readwrite("distance_m", &Arc::distance_m);

    py::class_<Station>(m, "Station")
        .def(py::init<>())
        .def(py::init([](StationId id, NodeId node, int capacity) {
                 return Station{id, node, capacity};
             }),
             py::arg("id"), py::arg("node"), py::arg("capacity") = 1)
        .def_readwrite("id", &Station::id)
        .def_readwrite("node", &Station::node)
        .def_readwrite("capacity", &Station::capacity);

    py::class_<RoadNetwork>(m, "RoadNetwork")
        .def(py::init<std::vector<NodePoint>, std::vector<Arc>, std::vector<Station>>(),
             py::arg("nodes"), py::arg("arcs"), py::arg("stations"))
        .def_static("load", &RoadNetwork::load, py::arg("node_file"), py::arg("arc_file"),
                    py::arg("station_file"))
        .def_static("generate_grid", &RoadNetwork::generate_grid, py::arg("rows"),
                    py::arg("cols"), py::arg("edge_time_s"), py::arg("edge_distance_m"))
        .def("save", &RoadNetwork::save, py::arg("node_file"), py::arg("arc_file"),
             py::arg("station_file"))
        .def("num_nodes", &RoadNetwork::num_nodes)
        .def("nodes", &RoadNetwork::nodes)
        .def("arcs", &RoadNetwork::arcs)
        .def("stations", &RoadNetwork::stations)
        .def("travel_time", &RoadNetwork::travel_time, py::arg("a"), py::arg("b"))
        .def("travel_distance", &RoadNetwork::travel_distance, py::arg("a"), py::arg("b"))
        .def("shortest_path", &RoadNetwork::shortest_path, py::arg("a"), py::arg("b"))
        .def("nearest_station", &RoadNetwork::nearest_station, py::arg("from_node"),
             py::return_value_policy::copy)
        .def("total_station_capacity", &RoadNetwork::total_station_capacity);

    m.def("place_stations_kmeans", &place_stations_kmeans, py::arg("net"),
          py::arg("endpoints"), py::arg("k"), py::arg("total_capacity"), py::arg("seed"));
    m.def("place_stations_greedy", &place_stations_greedy, py::arg("net"), py::arg("k"),
          py::arg("seed"));

    // ---- battery ----
    py::class_<BatteryModel>(m, "BatteryModel")
        .def(py::init<>())
        .def_static("make", &BatteryModel::make, py::arg("Q"), py::arg("R"), py::arg("T"),
                    py::arg("eta"), py::arg("q_est"), py::arg("q_min"), py::arg("range_km"))
        .def_readwrite("Q", &BatteryModel::Q)
        .def_readwrite("R", &BatteryModel::R)
        .def_readwrite("T", &BatteryModel::T)
        .def_readwrite("beta", &BatteryModel::beta)
        .def_readwrite("eta", &BatteryModel::eta)
        .def_readwrite("q_est", &BatteryModel::q_est)
        .def_readwrite("q_min", &BatteryModel::q_min)
        .def_readwrite("range_km", &BatteryModel::range_km);

    m.def("solve_beta", &solve_beta, py::arg("Q"), py::arg("R"), py::arg("T"));
    m.def("charge_curve", &charge_curve, py::arg("model"), py::arg("t_minutes"));
    m.def("charge_time_from_empty", &charge_time_from_empty, py::arg("model"), py::arg("q"));
    m.def("avg_cost", &avg_cost, py::arg("model"), py::arg("q_to"), py::arg("d_minutes"),
          py::arg("cost_rate"));
    m.def("optimal_charge_to", &optimal_charge_to, py::arg("model"), py::arg("d_minutes"),
          py::arg("cost_rate"));
    m.def("discharge", &discharge, py::arg("model"), py::arg("q"), py::arg("distance_m"));

    // ---- demand ----
    py::class_<Request>(m, "Request")
        .def(py::init<>())
        .def(py::init([](RequestId id, double t, NodeId o, NodeId d) {
                 return Request{id, t, o, d};
             }),
             py::arg("id"), py::arg("entry_time"), py::arg("origin"), py::arg("destination"))
        .def_readwrite("id", &Request::id)
        .def_readwrite("entry_time", &Request::entry_time)
        .def_readwrite("origin", &Request::origin)
        .def_readwrite("destination", &Request::destination);

    m.def("load_requests", &load_requests, py::arg("path"), py::arg("net"));
    m.def("save_requests", &save_requests, py::arg("path"), py::arg("requests"));
    m.def("synth_requests", &synth_requests, py::arg("net"), py::arg("rates_per_minute"),
          py::arg("seed"));
    m.def(
        "demand_profile",
        [](const std::vector<Request>& reqs, const RoadNetwork& net, double block) {
            return demand_profile(
                reqs, [&](NodeId a, NodeId b) { return net.travel_time(a, b); }, block);
        },
        py::arg("requests"), py::arg("net"), py::arg("block") = 1800.0);
    m.def("calibrate_lambda", &calibrate_lambda, py::arg("fleet_size"), py::arg("profile"),
          py::arg("battery"), py::arg("total_capacity"), py::arg("step") = 0.01);

    py::class_<AvailabilityRequirement>(m, "AvailabilityRequirement")
        .def_readwrite("period_length", &AvailabilityRequirement::period_length)
        .def_readwrite("values", &AvailabilityRequirement::values)
        .def_readwrite("lambda_", &AvailabilityRequirement::lambda)
        .def_readwrite("profile", &AvailabilityRequirement::profile);

    m.def("availability_requirement", &availability_requirement, py::arg("fleet_size"),
          py::arg("profile"), py::arg("lambda_"), py::arg("period_length") = 1800.0);

    // ---- simulation ----
    py::enum_<Method>(m, "Method")
        .value("ICE", Method::ICE)
        .value("MILP", Method::MILP)
        .value("HEURISTIC", Method::HEURISTIC)
        .value("BENCHMARK", Method::BENCHMARK);

    py::enum_<InitialCharge>(m, "InitialCharge")
        .value("FULL", InitialCharge::FULL)
        .value("UNIFORM_RANDOM", InitialCharge::UNIFORM_RANDOM);

    py::class_<QosPolicy>(m, "QosPolicy")
        .def(py::init<>())
        .def_readwrite("max_wait", &QosPolicy::max_wait)
        .def_readwrite("max_delay", &QosPolicy::max_delay);

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("method", &ScenarioConfig::method)
        .def_readwrite("t_batch", &ScenarioConfig::t_batch)
        .def_readwrite("t_short", &ScenarioConfig::t_short)
        .def_readwrite("t_long", &ScenarioConfig::t_long)
        .def_readwrite("t_sl", &ScenarioConfig::t_sl)
        .def_readwrite("delta", &ScenarioConfig::delta)
        .def_readwrite("buffer_D", &ScenarioConfig::buffer_D)
        .def_readwrite("qos", &ScenarioConfig::qos)
        .def_readwrite("battery", &ScenarioConfig::battery)
        .def_readwrite("fleet_size", &ScenarioConfig::fleet_size)
        .def_readwrite("vehicle_capacity", &ScenarioConfig::vehicle_capacity)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("day_start", &ScenarioConfig::day_start)
        .def_readwrite("day_end", &ScenarioConfig::day_end)
        .def_readwrite("initial_charge", &ScenarioConfig::initial_charge)
        .def_readwrite("lambda_", &ScenarioConfig::lambda)
        .def_readwrite("allow_delta_override", &ScenarioConfig::allow_delta_override)
        .def_readwrite("benchmark_threshold", &ScenarioConfig::benchmark_threshold)
        .def_readwrite("benchmark_radius", &ScenarioConfig::benchmark_radius)
        .def("validate", &ScenarioConfig::validate);

    py::enum_<EventKind>(m, "EventKind")
        .value("Pickup", EventKind::Pickup)
        .value("Dropoff", EventKind::Dropoff)
        .value("Reject", EventKind::Reject)
        .value("ChargeStart", EventKind::ChargeStart)
        .value("ChargeEnd", EventKind::ChargeEnd)
        .value("WaitStart", EventKind::WaitStart)
        .value("Rebalance", EventKind::Rebalance)
        .value("Shortfall", EventKind::Shortfall);

    py::class_<Event>(m, "Event")
        .def_readonly("time", &Event::time)
        .def_readonly("kind", &Event::kind)
        .def_readonly("vehicle", &Event::vehicle)
        .def_readonly("request", &Event::request)
        .def_readonly("value", &Event::value);

    py::class_<EventLog>(m, "EventLog").def_readonly("events", &EventLog::events);

    py::class_<Metrics>(m, "Metrics")
        .def_readonly("service_rate", &Metrics::service_rate)
        .def_readonly("mean_wait_s", &Metrics::mean_wait_s)
        .def_readonly("mean_ride_s", &Metrics::mean_ride_s)
        .def_readonly("mean_delay_s", &Metrics::mean_delay_s)
        .def_readonly("abs_utilization", &Metrics::abs_utilization)
        .def_readonly("rider_share_rate", &Metrics::rider_share_rate)
        .def_readonly("shared_rate", &Metrics::shared_rate)
        .def_readonly("total_distance_km", &Metrics::total_distance_km)
        .def_readonly("mean_pre_charge_wait_s", &Metrics::mean_pre_charge_wait_s)
        .def_readonly("charging_count", &Metrics::charging_count)
        .def_readonly("distance_km", &Metrics::distance_km)
        .def_readonly("rolling_service_rate", &Metrics::rolling_service_rate);

    py::class_<ChargeSample>(m, "ChargeSample")
        .def_readonly("time", &ChargeSample::time)
        .def_readonly("vehicle", &ChargeSample::vehicle)
        .def_readonly("charge", &ChargeSample::charge)
        .def_readonly("cumulative_distance_m", &ChargeSample::cumulative_distance_m);

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("metrics", &SimResult::metrics)
        .def_readonly("log", &SimResult::log)
        .def_readonly("distance_km_per_bucket", &SimResult::distance_km_per_bucket)
        .def_readonly("charge_audit", &SimResult::charge_audit);

    m.def("run", &run, py::arg("config"), py::arg("net"), py::arg("requests"),
          py::call_guard<py::gil_scoped_release>());
    m.def("save_metrics", &save_metrics, py::arg("path"), py::arg("metrics"),
          py::arg("method"));
    m.def("save_events", &save_events, py::arg("path"), py::arg("log"));

    // argument-style library errors surface as ValueError; the rest map to
    // RuntimeError through the std::runtime_error default
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<UnknownNode>(m, "UnknownNode", PyExc_ValueError);
}
