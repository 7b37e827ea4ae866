#pragma once

#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "evfleet/errors.hpp"

namespace evfleet {

using NodeId = int;
using StationId = int;

struct Arc {
    NodeId from = 0;
    NodeId to = 0;
    double travel_time_s = 0.0;
    double distance_m = 0.0;
};

struct Station {
    StationId id = 0;
    NodeId node = 0;
    int capacity = 1;
};

struct NodePoint {
    NodeId id = 0;
    double x = 0.0;  // meters; used for seeding/visual export only
    double y = 0.0;
};

// Directed road graph with travel-time shortest-path queries and charge
// stations.  Immutable after construction; query caches are guarded so
// concurrent reads are safe.
class RoadNetwork {
public:
    RoadNetwork(std::vector<NodePoint> nodes, std::vector<Arc> arcs,
                std::vector<Station> stations);

    static RoadNetwork load(const std::string& node_file, const std::string& arc_file,
                            const std::string& station_file);
    static RoadNetwork generate_grid(int rows, int cols, double edge_time_s,
                                     double edge_distance_m);

    void save(const std::string& node_file, const std::string& arc_file,
              const std::string& station_file) const;

    std::size_t num_nodes() const { return nodes_.size(); }
    const std::vector<NodePoint>& nodes() const { return nodes_; }
    const std::vector<Arc>& arcs() const { return arcs_; }
    const std::vector<Station>& stations() const { return stations_; }

    bool has_node(NodeId id) const { return index_.count(id) > 0; }

    // Minimum travel time a -> b, seconds.  Cached per target node.
    double travel_time(NodeId a, NodeId b) const;

    // Arc distance sum along shortest_path(a, b), meters.
    double travel_distance(NodeId a, NodeId b) const;

    // Minimum-time node sequence a -> b; among equal-cost paths returns the
    // lexicographically smallest node sequence.
    std::vector<NodeId> shortest_path(NodeId a, NodeId b) const;

    const Arc& arc_between(NodeId a, NodeId b) const;

    // Station whose node minimizes travel_time(from, node); ties by station id.
    const Station& nearest_station(NodeId from) const;

    int total_station_capacity() const;

private:
    struct Edge {
        int to;  // dense index
        double time;
        double distance;
    };

    int index_of(NodeId id) const;
    const std::vector<double>& times_to(int target) const;  // dense, reverse-Dijkstra row

    std::vector<NodePoint> nodes_;
    std::vector<Arc> arcs_;
    std::vector<Station> stations_;
    std::map<NodeId, int> index_;
    std::vector<std::vector<Edge>> out_;  // sorted by neighbor NodeId
    std::vector<std::vector<Edge>> in_;

    // All targets precomputed eagerly for small networks, lazily above that.
    static constexpr std::size_t kPrecomputeLimit = 2500;
    mutable std::vector<std::unique_ptr<std::vector<double>>> to_cache_;
    // held indirectly so the network stays movable
    mutable std::unique_ptr<std::mutex> cache_mutex_ = std::make_unique<std::mutex>();
};

// Weighted k-means (k-medoid, travel-time metric) station placement.
// `endpoints` carries multiplicity; capacities are proportional to cluster
// weight with largest-remainder rounding, each at least 1.
std::vector<Station> place_stations_kmeans(const RoadNetwork& net,
                                           const std::vector<NodeId>& endpoints, int k,
                                           int total_capacity, unsigned seed);

// Greedy max-min placement: first station uniformly at random, each next at
// the node maximizing min travel time to the placed set.  Capacity 1 each.
std::vector<Station> place_stations_greedy(const RoadNetwork& net, int k, unsigned seed);

void save_stations(const std::string& path, const std::vector<Station>& stations);

}  // namespace evfleet
