import math

import pytest

import evfleet as ev


def paper_battery():
    return ev.BatteryModel.make(0.7, 15.0, 30.0, 1.0 / 30.0, 1.0 / 400.0, 0.15, 180.0)


def test_battery_curve():
    m = paper_battery()
    assert ev.charge_curve(m, 15.0) == pytest.approx(0.7, abs=1e-9)
    assert ev.charge_curve(m, 30.0) == pytest.approx(1.0, abs=1e-6)
    assert ev.charge_time_from_empty(m, 0.7) == pytest.approx(15.0, abs=1e-6)
    assert ev.optimal_charge_to(m, 5.0, 1.0) == pytest.approx(0.782, abs=0.002)


def test_network_queries():
    net = ev.RoadNetwork.generate_grid(4, 4, 60.0, 500.0)
    assert net.num_nodes() == 16
    assert net.travel_time(0, 5) == pytest.approx(120.0)
    assert net.shortest_path(0, 5) == [0, 1, 5]
    with pytest.raises(ValueError):
        net.travel_time(0, 99)


def test_demand_synthesis():
    net = ev.RoadNetwork.generate_grid(4, 4, 60.0, 500.0)
    reqs = ev.synth_requests(net, [2.0] * 60, seed=7)
    key = lambda rs: [(r.id, r.entry_time, r.origin, r.destination) for r in rs]
    assert key(reqs) == key(ev.synth_requests(net, [2.0] * 60, seed=7))
    assert all(r.origin != r.destination for r in reqs)
    profile = ev.demand_profile(reqs, net)
    assert profile and max(profile) == pytest.approx(1.0)


def test_whole_day_run_and_metrics(tmp_path):
    grid = ev.RoadNetwork.generate_grid(4, 4, 60.0, 500.0)
    net = ev.RoadNetwork(grid.nodes(), grid.arcs(),
                         [ev.Station(0, 5, 2), ev.Station(1, 10, 2)])
    cfg = ev.ScenarioConfig()
    cfg.method = ev.Method.HEURISTIC
    cfg.battery = paper_battery()
    cfg.fleet_size = 4
    cfg.day_start = 5 * 3600.0
    cfg.day_end = 6 * 3600.0
    cfg.seed = 3

    rates = [0.0] * 360
    for minute in range(300, 360):
        rates[minute] = 1.0
    reqs = ev.synth_requests(net, rates, seed=3)

    res = ev.run(cfg, net, reqs)
    assert 0.0 <= res.metrics.service_rate <= 1.0
    assert res.metrics.total_distance_km >= 0.0
    assert math.isclose(res.metrics.total_distance_km,
                        sum(res.distance_km_per_bucket), abs_tol=1e-9)

    again = ev.run(cfg, net, reqs)
    assert [(e.time, e.kind, e.vehicle, e.request, e.value) for e in res.log.events] == \
           [(e.time, e.kind, e.vehicle, e.request, e.value) for e in again.log.events]

    out = tmp_path / "metrics.csv"
    ev.save_metrics(str(out), res.metrics, "heuristic")
    assert out.read_text().startswith("method,")


def test_config_validation():
    cfg = ev.ScenarioConfig()
    cfg.battery = paper_battery()
    cfg.delta = 3 * cfg.t_long
    with pytest.raises(ValueError):
        cfg.validate()
