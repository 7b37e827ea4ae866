#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

#include "evfleet/network.hpp"
#include "oracles.hpp"

using namespace evfleet;
namespace fs = std::filesystem;

namespace {
RoadNetwork two_node_net() {
    std::vector<NodePoint> nodes{{0, 0, 0}, {1, 500, 0}};
    std::vector<Arc> arcs{{0, 1, 60, 500}, {1, 0, 60, 500}};
    return RoadNetwork(nodes, arcs, {});
}

RoadNetwork random_net(unsigned seed, int n) {
    std::mt19937 rng(seed);
    std::vector<NodePoint> nodes;
    for (int i = 0; i < n; ++i) nodes.push_back({i, double(rng() % 1000), double(rng() % 1000)});
    std::vector<Arc> arcs;
    std::set<std::pair<int, int>> seen;
    // ring guarantees strong connectivity, then random chords
    for (int i = 0; i < n; ++i) {
        double t = 10.0 + rng() % 100;
        arcs.push_back({i, (i + 1) % n, t, t * 8});
        seen.insert({i, (i + 1) % n});
    }
    for (int i = 0; i < 3 * n; ++i) {
        int a = rng() % n, b = rng() % n;
        if (a == b || !seen.insert({a, b}).second) continue;
        double t = 10.0 + rng() % 200;
        arcs.push_back({a, b, t, t * 8});
    }
    return RoadNetwork(nodes, arcs, {});
}
}  // namespace

TEST_CASE("two nodes with both arcs") {
    auto net = two_node_net();
    CHECK(net.travel_time(0, 1) == doctest::Approx(60.0));
    CHECK(net.travel_time(1, 0) == doctest::Approx(60.0));
}

TEST_CASE("dangling arc endpoint rejected") {
    std::vector<NodePoint> nodes{{0, 0, 0}, {1, 1, 0}};
    std::vector<Arc> arcs{{0, 2, 60, 500}, {1, 0, 60, 500}};
    CHECK_THROWS_AS(RoadNetwork(nodes, arcs, {}), ValidationError);
}

TEST_CASE("disconnected graph rejected") {
    std::vector<NodePoint> nodes{{0, 0, 0}, {1, 1, 0}};
    std::vector<Arc> arcs{{0, 1, 60, 500}};  // no way back
    CHECK_THROWS_AS(RoadNetwork(nodes, arcs, {}), ValidationError);
}

TEST_CASE("grid file round-trips to an identical network") {
    auto net = RoadNetwork::generate_grid(10, 10, 60, 500);
    auto dir = fs::temp_directory_path() / "evfleet_net_rt";
    fs::create_directories(dir);
    net.save((dir / "nodes.csv").string(), (dir / "arcs.csv").string(),
             (dir / "stations.csv").string());
    auto back = RoadNetwork::load((dir / "nodes.csv").string(), (dir / "arcs.csv").string(),
                                  (dir / "stations.csv").string());
    REQUIRE(back.nodes().size() == net.nodes().size());
    REQUIRE(back.arcs().size() == net.arcs().size());
    for (std::size_t i = 0; i < net.arcs().size(); ++i) {
        CHECK(back.arcs()[i].from == net.arcs()[i].from);
        CHECK(back.arcs()[i].to == net.arcs()[i].to);
        CHECK(back.arcs()[i].travel_time_s == doctest::Approx(net.arcs()[i].travel_time_s));
        CHECK(back.arcs()[i].distance_m == doctest::Approx(net.arcs()[i].distance_m));
    }
}

TEST_CASE("travel time identity and grid corner distance") {
    auto net = RoadNetwork::generate_grid(10, 10, 60, 500);
    CHECK(net.travel_time(0, 0) == 0.0);
    CHECK(net.travel_time(0, 99) == doctest::Approx(18 * 60.0));
    CHECK_THROWS_AS(net.travel_time(0, 1000), UnknownNode);
}

TEST_CASE("travel time equals Bellman-Ford on random pairs") {
    auto net = random_net(11, 50);
    std::mt19937 rng(5);
    for (int i = 0; i < 100; ++i) {
        NodeId a = rng() % 50, b = rng() % 50;
        CHECK(net.travel_time(a, b) == doctest::Approx(oracle::bellman_ford(net, a, b)));
    }
}

TEST_CASE("shortest path endpoints, cost and tie-break") {
    auto net = RoadNetwork::generate_grid(4, 4, 60, 500);
    CHECK(net.shortest_path(5, 5) == std::vector<NodeId>{5});
    // equal-cost lattice paths: smallest next node id wins at every branch
    auto p = net.shortest_path(0, 5);
    CHECK(p == std::vector<NodeId>{0, 1, 5});

    auto rnd = random_net(3, 40);
    std::mt19937 rng(9);
    for (int i = 0; i < 100; ++i) {
        NodeId a = rng() % 40, b = rng() % 40;
        auto path = rnd.shortest_path(a, b);
        double cost = 0;
        for (std::size_t j = 0; j + 1 < path.size(); ++j)
            cost += rnd.arc_between(path[j], path[j + 1]).travel_time_s;
        CHECK(cost == doctest::Approx(rnd.travel_time(a, b)));
    }
}

TEST_CASE("grid shapes") {
    auto g22 = RoadNetwork::generate_grid(2, 2, 60, 500);
    CHECK(g22.nodes().size() == 4);
    CHECK(g22.arcs().size() == 8);
    auto g10 = RoadNetwork::generate_grid(10, 10, 60, 500);
    CHECK(g10.nodes().size() == 100);
    CHECK(g10.arcs().size() == 360);
    CHECK_THROWS_AS(RoadNetwork::generate_grid(1, 5, 60, 500), InvalidArgument);
}

TEST_CASE("triangle inequality and grid symmetry") {
    auto net = random_net(21, 30);
    std::mt19937 rng(2);
    for (int i = 0; i < 200; ++i) {
        NodeId a = rng() % 30, b = rng() % 30, c = rng() % 30;
        CHECK(net.travel_time(a, c) <= net.travel_time(a, b) + net.travel_time(b, c) + 1e-9);
    }
    auto grid = RoadNetwork::generate_grid(5, 5, 45, 400);
    for (int i = 0; i < 50; ++i) {
        NodeId a = rng() % 25, b = rng() % 25;
        CHECK(grid.travel_time(a, b) == doctest::Approx(grid.travel_time(b, a)));
    }
}

TEST_CASE("kmeans placement") {
    auto net = RoadNetwork::generate_grid(3, 4, 60, 500);
    std::vector<NodeId> endpoints;
    for (const auto& nd : net.nodes()) endpoints.push_back(nd.id);

    SUBCASE("k=1 gets everything") {
        auto st = place_stations_kmeans(net, endpoints, 1, 7, 42);
        REQUIRE(st.size() == 1);
        CHECK(st[0].capacity == 7);
    }
    SUBCASE("two far clusters split, matches exhaustive 2-medoid oracle") {
        // weight two corners heavily
        std::vector<NodeId> pts = {0, 0, 0, 0, 11, 11, 11, 11};
        auto st = place_stations_kmeans(net, pts, 2, 4, 1);
        REQUIRE(st.size() == 2);
        std::set<NodeId> nodes{st[0].node, st[1].node};
        CHECK(nodes == std::set<NodeId>{0, 11});
    }
    SUBCASE("capacities sum to total over seeds") {
        for (unsigned seed = 0; seed < 50; ++seed) {
            auto st = place_stations_kmeans(net, endpoints, 3, 10, seed);
            int sum = 0;
            for (const auto& s : st) {
                sum += s.capacity;
                CHECK(s.capacity >= 1);
            }
            CHECK(sum == 10);
        }
    }
    SUBCASE("k larger than distinct endpoints rejected") {
        std::vector<NodeId> pts = {0, 0, 1};
        CHECK_THROWS_AS(place_stations_kmeans(net, pts, 3, 5, 0), InvalidArgument);
    }
    SUBCASE("deterministic per seed") {
        auto a = place_stations_kmeans(net, endpoints, 3, 9, 7);
        auto b = place_stations_kmeans(net, endpoints, 3, 9, 7);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].node == b[i].node);
            CHECK(a[i].capacity == b[i].capacity);
        }
    }
}

TEST_CASE("greedy placement") {
    SUBCASE("k=1 single capacity-1 station") {
        auto net = RoadNetwork::generate_grid(3, 3, 60, 500);
        auto st = place_stations_greedy(net, 1, 4);
        REQUIRE(st.size() == 1);
        CHECK(st[0].capacity == 1);
    }
    SUBCASE("3-node path: second station lands at the far end") {
        std::vector<NodePoint> nodes{{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
        std::vector<Arc> arcs{{0, 1, 60, 500}, {1, 0, 60, 500}, {1, 2, 60, 500}, {2, 1, 60, 500}};
        RoadNetwork net(nodes, arcs, {});
        for (unsigned seed = 0; seed < 20; ++seed) {
            auto st = place_stations_greedy(net, 2, seed);
            if (st[0].node == 0) CHECK(st[1].node == 2);
            if (st[0].node == 2) CHECK(st[1].node == 0);
            if (st[0].node == 1) CHECK((st[1].node == 0 || st[1].node == 2));
        }
    }
    SUBCASE("each placement matches the exhaustive max-min scan") {
        auto net = RoadNetwork::generate_grid(5, 5, 60, 500);
        auto st = place_stations_greedy(net, 4, 17);
        for (std::size_t k = 1; k < st.size(); ++k) {
            // recompute the argmax over all nodes given the prefix
            double best = -1;
            NodeId best_node = -1;
            for (const auto& nd : net.nodes()) {
                bool used = false;
                for (std::size_t j = 0; j < k; ++j)
                    if (st[j].node == nd.id) used = true;
                if (used) continue;
                double mind = std::numeric_limits<double>::infinity();
                for (std::size_t j = 0; j < k; ++j)
                    mind = std::min(mind, net.travel_time(nd.id, st[j].node));
                if (mind > best + 1e-9 || (std::abs(mind - best) <= 1e-9 && nd.id < best_node)) {
                    best = mind;
                    best_node = nd.id;
                }
            }
            CHECK(st[k].node == best_node);
        }
    }
    SUBCASE("k above node count rejected") {
        auto net = RoadNetwork::generate_grid(2, 2, 60, 500);
        CHECK_THROWS_AS(place_stations_greedy(net, 5, 0), InvalidArgument);
    }
}

TEST_CASE("nearest station tie-break and capacity sum") {
    std::vector<Station> st{{0, 3, 2}, {1, 5, 3}};
    auto grid = RoadNetwork::generate_grid(3, 3, 60, 500);
    RoadNetwork net(grid.nodes(), grid.arcs(), st);
    CHECK(net.nearest_station(3).id == 0);
    CHECK(net.total_station_capacity() == 5);
    CHECK(net.nearest_station(4).id == 0);  // nodes 3 and 5 both 60 s away, lower id wins
}
