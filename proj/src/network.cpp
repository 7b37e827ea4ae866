#include "evfleet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <queue>
#include <random>
#include <set>

#include "evfleet/csv.hpp"

namespace evfleet {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTimeEps = 1e-9;
}  // namespace

RoadNetwork::RoadNetwork(std::vector<NodePoint> nodes, std::vector<Arc> arcs,
                         std::vector<Station> stations)
    : nodes_(std::move(nodes)), arcs_(std::move(arcs)), stations_(std::move(stations)) {
    if (nodes_.empty()) throw ValidationError("network has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!index_.emplace(nodes_[i].id, static_cast<int>(i)).second)
            throw ValidationError("duplicate node id " + std::to_string(nodes_[i].id));
    }
    out_.resize(nodes_.size());
    in_.resize(nodes_.size());
    for (const auto& a : arcs_) {
        auto fi = index_.find(a.from);
        auto ti = index_.find(a.to);
        if (fi == index_.end() || ti == index_.end())
            throw ValidationError("arc " + std::to_string(a.from) + "->" + std::to_string(a.to) +
                                  " references undeclared node");
        if (a.travel_time_s <= 0) throw ValidationError("arc travel_time must be positive");
        if (a.distance_m < 0) throw ValidationError("arc distance must be nonnegative");
        out_[fi->second].push_back({ti->second, a.travel_time_s, a.distance_m});
        in_[ti->second].push_back({fi->second, a.travel_time_s, a.distance_m});
    }
    auto by_node_id = [this](const Edge& l, const Edge& r) {
        return nodes_[l.to].id < nodes_[r.to].id;
    };
    for (auto& adj : out_) std::sort(adj.begin(), adj.end(), by_node_id);
    for (auto& adj : in_) std::sort(adj.begin(), adj.end(), by_node_id);

    // strong connectivity: forward and reverse reachability from node 0
    for (const auto& adj : {&out_, &in_}) {
        std::vector<char> seen(nodes_.size(), 0);
        std::vector<int> stack = {0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (const auto& e : (*adj)[u])
                if (!seen[e.to]) {
                    seen[e.to] = 1;
                    ++count;
                    stack.push_back(e.to);
                }
        }
        if (count != nodes_.size()) throw ValidationError("graph is not strongly connected");
    }

    std::set<NodeId> station_nodes;
    std::set<StationId> station_ids;
    for (const auto& s : stations_) {
        if (s.capacity < 1) throw ValidationError("station capacity must be >= 1");
        if (!has_node(s.node))
            throw ValidationError("station on undeclared node " + std::to_string(s.node));
        if (!station_nodes.insert(s.node).second)
            throw ValidationError("duplicate station node " + std::to_string(s.node));
        if (!station_ids.insert(s.id).second)
            throw ValidationError("duplicate station id " + std::to_string(s.id));
    }

    to_cache_.resize(nodes_.size());
    if (nodes_.size() <= kPrecomputeLimit)
        for (std::size_t t = 0; t < nodes_.size(); ++t) times_to(static_cast<int>(t));
}

int RoadNetwork::index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownNode("unknown node " + std::to_string(id));
    return it->second;
}

const std::vector<double>& RoadNetwork::times_to(int target) const {
    {
        std::lock_guard<std::mutex> lock(*cache_mutex_);
        if (to_cache_[target]) return *to_cache_[target];
    }
    // reverse Dijkstra from the target over incoming arcs
    auto dist = std::make_unique<std::vector<double>>(nodes_.size(), kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    (*dist)[target] = 0.0;
    heap.push({0.0, target});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > (*dist)[u] + kTimeEps) continue;
        for (const auto& e : in_[u]) {
            double nd = d + e.time;
            if (nd < (*dist)[e.to] - kTimeEps) {
                (*dist)[e.to] = nd;
                heap.push({nd, e.to});
            }
        }
    }
    std::lock_guard<std::mutex> lock(*cache_mutex_);
    if (!to_cache_[target]) to_cache_[target] = std::move(dist);
    return *to_cache_[target];
}

double RoadNetwork::travel_time(NodeId a, NodeId b) const {
    int ai = index_of(a);
    int bi = index_of(b);
    return times_to(bi)[ai];
}

std::vector<NodeId> RoadNetwork::shortest_path(NodeId a, NodeId b) const {
    int ai = index_of(a);
    int bi = index_of(b);
    const auto& to_b = times_to(bi);
    std::vector<NodeId> path = {a};
    int u = ai;
    while (u != bi) {
        // out_ is sorted by neighbor id, so the first on-a-shortest-path
        // neighbor gives the lexicographically smallest sequence
        int next = -1;
        for (const auto& e : out_[u]) {
            if (std::abs(e.time + to_b[e.to] - to_b[u]) <= 1e-6) {
                next = e.to;
                break;
            }
        }
        if (next < 0) throw ValidationError("shortest-path reconstruction failed");
        path.push_back(nodes_[next].id);
        u = next;
    }
    return path;
}

double RoadNetwork::travel_distance(NodeId a, NodeId b) const {
    auto path = shortest_path(a, b);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i)
        total += arc_between(path[i], path[i + 1]).distance_m;
    return total;
}

const Arc& RoadNetwork::arc_between(NodeId a, NodeId b) const {
    index_of(a);
    index_of(b);
    for (const auto& arc : arcs_)
        if (arc.from == a && arc.to == b) return arc;
    throw ValidationError("no arc " + std::to_string(a) + "->" + std::to_string(b));
}

const Station& RoadNetwork::nearest_station(NodeId from) const {
    if (stations_.empty()) throw ValidationError("network has no stations");
    const Station* best = nullptr;
    double best_t = kInf;
    for (const auto& s : stations_) {
        double t = travel_time(from, s.node);
        if (t < best_t - kTimeEps || (t < best_t + kTimeEps && best && s.id < best->id)) {
            best = &s;
            best_t = t;
        }
    }
    return *best;
}

int RoadNetwork::total_station_capacity() const {
    int total = 0;
    for (const auto& s : stations_) total += s.capacity;
    return total;
}

RoadNetwork RoadNetwork::load(const std::string& node_file, const std::string& arc_file,
                              const std::string& station_file) {
    std::vector<NodePoint> nodes;
    for (const auto& row : csv::read_rows(node_file, {"node_id", "x", "y"}))
        nodes.push_back({static_cast<NodeId>(csv::to_int(row[0], "node_id")),
                         csv::to_double(row[1], "x"), csv::to_double(row[2], "y")});
    std::vector<Arc> arcs;
    for (const auto& row : csv::read_rows(arc_file, {"from", "to", "travel_time_s", "distance_m"}))
        arcs.push_back({static_cast<NodeId>(csv::to_int(row[0], "from")),
                        static_cast<NodeId>(csv::to_int(row[1], "to")),
                        csv::to_double(row[2], "travel_time_s"),
                        csv::to_double(row[3], "distance_m")});
    std::vector<Station> stations;
    for (const auto& row : csv::read_rows(station_file, {"station_id", "node_id", "capacity"}))
        stations.push_back({static_cast<StationId>(csv::to_int(row[0], "station_id")),
                            static_cast<NodeId>(csv::to_int(row[1], "node_id")),
                            static_cast<int>(csv::to_int(row[2], "capacity"))});
    return RoadNetwork(std::move(nodes), std::move(arcs), std::move(stations));
}

namespace {
std::string fmt(double v) {
    // trim trailing zeros so round-trips stay byte-stable
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}
}  // namespace

void RoadNetwork::save(const std::string& node_file, const std::string& arc_file,
                       const std::string& station_file) const {
    std::ofstream nf(node_file);
    nf << "node_id,x,y\n";
    for (const auto& n : nodes_) nf << n.id << ',' << fmt(n.x) << ',' << fmt(n.y) << '\n';
    std::ofstream af(arc_file);
    af << "from,to,travel_time_s,distance_m\n";
    for (const auto& a : arcs_)
        af << a.from << ',' << a.to << ',' << fmt(a.travel_time_s) << ',' << fmt(a.distance_m)
           << '\n';
    save_stations(station_file, stations_);
}

void save_stations(const std::string& path, const std::vector<Station>& stations) {
    std::ofstream sf(path);
    sf << "station_id,node_id,capacity\n";
    for (const auto& s : stations) sf << s.id << ',' << s.node << ',' << s.capacity << '\n';
}

RoadNetwork RoadNetwork::generate_grid(int rows, int cols, double edge_time_s,
                                       double edge_distance_m) {
    if (rows < 2 || cols < 2) throw InvalidArgument("grid needs rows, cols >= 2");
    if (edge_time_s <= 0 || edge_distance_m < 0) throw InvalidArgument("bad grid edge parameters");
    std::vector<NodePoint> nodes;
    std::vector<Arc> arcs;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            nodes.push_back({r * cols + c, c * edge_distance_m, r * edge_distance_m});
    auto add_bidirectional = [&](NodeId a, NodeId b) {
        arcs.push_back({a, b, edge_time_s, edge_distance_m});
        arcs.push_back({b, a, edge_time_s, edge_distance_m});
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) add_bidirectional(r * cols + c, r * cols + c + 1);
            if (r + 1 < rows) add_bidirectional(r * cols + c, (r + 1) * cols + c);
        }
    return RoadNetwork(std::move(nodes), std::move(arcs), {});
}

namespace {

// Largest-remainder apportionment with a floor of 1 per cluster.
std::vector<int> apportion_capacity(const std::vector<double>& weights, int total) {
    int k = static_cast<int>(weights.size());
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<int> caps(k, 0);
    std::vector<std::pair<double, int>> rem;
    int assigned = 0;
    for (int i = 0; i < k; ++i) {
        double quota = wsum > 0 ? weights[i] / wsum * total : double(total) / k;
        caps[i] = static_cast<int>(std::floor(quota));
        assigned += caps[i];
        rem.push_back({quota - caps[i], i});
    }
    std::stable_sort(rem.begin(), rem.end(),
                     [](const auto& l, const auto& r) { return l.first > r.first; });
    for (int j = 0; assigned < total; ++j, ++assigned) caps[rem[j % k].second] += 1;
    // enforce the >=1 floor by taking from the largest
    for (int i = 0; i < k; ++i) {
        while (caps[i] < 1) {
            int donor = static_cast<int>(std::max_element(caps.begin(), caps.end()) - caps.begin());
            if (caps[donor] <= 1) throw InvalidArgument("total_capacity < k");
            caps[donor] -= 1;
            caps[i] += 1;
        }
    }
    return caps;
}

}  // namespace

std::vector<Station> place_stations_kmeans(const RoadNetwork& net,
                                           const std::vector<NodeId>& endpoints, int k,
                                           int total_capacity, unsigned seed) {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    if (total_capacity < k) throw InvalidArgument("total_capacity must be >= k");
    if (endpoints.empty()) throw InvalidArgument("endpoints empty");

    std::map<NodeId, double> weight;  // multiplicity per distinct node
    for (NodeId n : endpoints) {
        if (!net.has_node(n)) throw UnknownNode("endpoint node " + std::to_string(n));
        weight[n] += 1.0;
    }
    std::vector<NodeId> points;
    std::vector<double> w;
    for (const auto& [n, cnt] : weight) {
        points.push_back(n);
        w.push_back(cnt);
    }
    int m = static_cast<int>(points.size());
    if (k > m) throw InvalidArgument("k exceeds distinct endpoint nodes");

    // weighted init without replacement
    std::mt19937 rng(seed);
    std::vector<NodeId> centers;
    {
        std::vector<double> pool = w;
        for (int c = 0; c < k; ++c) {
            double total = std::accumulate(pool.begin(), pool.end(), 0.0);
            double pick = std::generate_canonical<double, 32>(rng) * total;
            int chosen = 0;
            for (int i = 0; i < m; ++i) {
                if (pool[i] <= 0) continue;
                pick -= pool[i];
                chosen = i;
                if (pick <= 0) break;
            }
            centers.push_back(points[chosen]);
            pool[chosen] = 0;
        }
    }

    std::vector<int> assign(m, 0);
    std::vector<double> cluster_weight(k, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
        // assignment step: nearest center under travel time, ties to lowest index
        bool changed = iter == 0;
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double best_d = kInf;
            for (int c = 0; c < k; ++c) {
                double d = net.travel_time(points[i], centers[c]);
                if (d < best_d - kTimeEps) {
                    best = c;
                    best_d = d;
                }
            }
            if (assign[i] != best) changed = true;
            assign[i] = best;
        }
        if (!changed) break;
        // medoid update: member node minimizing weighted in-cluster distance sum
        std::vector<NodeId> next = centers;
        for (int c = 0; c < k; ++c) {
            double best_cost = kInf;
            NodeId best_node = centers[c];
            bool any = false;
            for (int i = 0; i < m; ++i) {
                if (assign[i] != c) continue;
                any = true;
                double cost = 0.0;
                for (int j = 0; j < m; ++j)
                    if (assign[j] == c) cost += w[j] * net.travel_time(points[j], points[i]);
                if (cost < best_cost - kTimeEps ||
                    (cost < best_cost + kTimeEps && points[i] < best_node)) {
                    best_cost = cost;
                    best_node = points[i];
                }
            }
            if (any) next[c] = best_node;
        }
        if (next == centers) break;
        centers = next;
    }

    std::fill(cluster_weight.begin(), cluster_weight.end(), 0.0);
    for (int i = 0; i < m; ++i) cluster_weight[assign[i]] += w[i];
    auto caps = apportion_capacity(cluster_weight, total_capacity);

    std::vector<Station> out;
    std::set<NodeId> used;
    for (int c = 0; c < k; ++c) {
        NodeId node = centers[c];
        if (!used.insert(node).second) {
            // empty-cluster collision: fall back to the farthest unused point
            double best_d = -1.0;
            for (int i = 0; i < m; ++i) {
                if (used.count(points[i])) continue;
                double d = net.travel_time(points[i], centers[c]);
                if (d > best_d) {
                    best_d = d;
                    node = points[i];
                }
            }
            used.insert(node);
        }
        out.push_back({c, node, caps[c]});
    }
    return out;
}

std::vector<Station> place_stations_greedy(const RoadNetwork& net, int k, unsigned seed) {
    int n = static_cast<int>(net.num_nodes());
    if (k < 1 || k > n) throw InvalidArgument("k must be in [1, |nodes|]");
    std::mt19937 rng(seed);
    std::vector<Station> out;
    std::set<NodeId> used;
    NodeId first = net.nodes()[rng() % n].id;
    out.push_back({0, first, 1});
    used.insert(first);
    for (int c = 1; c < k; ++c) {
        NodeId best_node = -1;
        double best_d = -1.0;
        for (const auto& np : net.nodes()) {
            if (used.count(np.id)) continue;
            double d = kInf;
            for (const auto& s : out) d = std::min(d, net.travel_time(np.id, s.node));
            if (d > best_d + kTimeEps || (d > best_d - kTimeEps && best_node >= 0 && np.id < best_node)) {
                best_d = d;
                best_node = np.id;
            }
        }
        out.push_back({c, best_node, 1});
        used.insert(best_node);
    }
    return out;
}

}  // namespace evfleet
