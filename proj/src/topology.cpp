#include "deltagossip/topology.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <string>

#include "deltagossip/error.hpp"
#include "deltagossip/rng.hpp"
#include "json.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "topology";
constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();

struct GraphBuilder {
    explicit GraphBuilder(std::size_t n) : adj(n) {}

    bool connected(NodeId a, NodeId b) const {
        return std::find(adj[a].begin(), adj[a].end(), b) != adj[a].end();
    }
    void link(NodeId a, NodeId b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
        ++edges;
    }
    std::vector<std::vector<NodeId>> adj;
    std::size_t edges = 0;
};

bool within(double value, double target, double tolerance) {
    return std::abs(value - target) <= tolerance + 1e-12;
}

}  // namespace

TopologyGraph TopologyGraph::from_edges(std::size_t node_count, const std::vector<Edge>& edges) {
    std::vector<std::vector<NodeId>> adj(node_count);
    for (auto [a, b] : edges) {
        if (a >= node_count || b >= node_count) {
            throw Error(kModule, Errc::malformed, "edge endpoint outside node range");
        }
        if (a == b) throw Error(kModule, Errc::malformed, "self-loop on node " + std::to_string(a));
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        auto& row = adj[i];
        std::sort(row.begin(), row.end());
        if (std::adjacent_find(row.begin(), row.end()) != row.end()) {
            throw Error(kModule, Errc::malformed, "duplicate edge at node " + std::to_string(i));
        }
    }
    TopologyGraph g;
    g.adjacency_ = std::move(adj);
    return g;
}

TopologyGraph TopologyGraph::from_adjacency(std::vector<std::vector<NodeId>> adjacency) {
    for (auto& row : adjacency) std::sort(row.begin(), row.end());
    TopologyGraph g;
    g.adjacency_ = std::move(adjacency);
    return g;
}

TopologyGraph TopologyGraph::ring(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i) {
        e.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n));
    }
    if (n == 2) e.pop_back();
    return from_edges(n, e);
}

TopologyGraph TopologyGraph::complete(std::size_t n) {
    std::vector<Edge> e;
    for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) e.emplace_back(i, j);
    }
    return from_edges(n, e);
}

TopologyGraph TopologyGraph::path(std::size_t n) {
    std::vector<Edge> e;
    for (NodeId i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return from_edges(n, e);
}

TopologyGraph TopologyGraph::star(std::size_t leaves) {
    std::vector<Edge> e;
    for (NodeId i = 1; i <= leaves; ++i) e.emplace_back(0, i);
    return from_edges(leaves + 1, e);
}

const std::vector<NodeId>& TopologyGraph::neighbors(NodeId node) const {
    if (node >= adjacency_.size()) {
        throw Error(kModule, Errc::unknown_node, "node " + std::to_string(node) + " not in graph");
    }
    return adjacency_[node];
}

bool TopologyGraph::has_edge(NodeId a, NodeId b) const {
    const auto& row = neighbors(a);
    return std::binary_search(row.begin(), row.end(), b);
}

std::vector<Edge> TopologyGraph::edges() const {
    std::vector<Edge> out;
    for (NodeId i = 0; i < adjacency_.size(); ++i) {
        for (NodeId j : adjacency_[i]) {
            if (i < j) out.emplace_back(i, j);
        }
    }
    return out;
}

std::size_t TopologyGraph::edge_count() const {
    std::size_t degree_sum = 0;
    for (const auto& row : adjacency_) degree_sum += row.size();
    return degree_sum / 2;
}

void TopologyConstraints::validate() const {
    if (min_degree < 1 || min_degree > max_degree) {
        throw Error(kModule, Errc::invalid_argument, "constraints need 1 <= min_degree <= max_degree");
    }
    if (!(avg_tolerance >= 0.0)) throw Error(kModule, Errc::invalid_argument, "avg_tolerance must be >= 0");
}

TopologyGraph generate_semi_random(std::size_t n, const TopologyConstraints& c, std::uint64_t seed,
                                   int max_attempts) {
    c.validate();
    const double target = c.target_avg_degree;
    auto unsatisfiable = [&](const std::string& why) {
        return Error(kModule, Errc::unsatisfiable,
                     "n=" + std::to_string(n) + ", target " + std::to_string(target) + ": " + why);
    };
    if (n < 2) throw unsatisfiable("need at least 2 nodes");
    if (!std::isfinite(target) || target < static_cast<double>(c.min_degree) ||
        target > static_cast<double>(c.max_degree)) {
        throw unsatisfiable("target average degree outside [min_degree, max_degree]");
    }
    if (target > static_cast<double>(n - 1)) throw unsatisfiable("target average degree exceeds n - 1");
    if (c.min_degree > n - 1) throw unsatisfiable("min_degree exceeds n - 1");
    if (n > 2 && c.max_degree < 2) throw unsatisfiable("a connected graph on > 2 nodes needs max_degree >= 2");

    const double nd = static_cast<double>(n);
    const std::size_t cap = std::min(c.max_degree, n - 1);
    const std::size_t min_edges = n - 1;
    const std::size_t max_edges = n * cap / 2;
    auto target_edges = static_cast<std::size_t>(std::llround(target * nd / 2.0));
    target_edges = std::clamp(target_edges, min_edges, max_edges);
    if (!within(2.0 * static_cast<double>(target_edges) / nd, target, c.avg_tolerance)) {
        throw unsatisfiable("no edge count realises the target within tolerance");
    }

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        auto rng = make_rng(seed, {0x70b0, static_cast<std::uint64_t>(attempt)});
        GraphBuilder b(n);

        // Random recursive spanning tree respecting max_degree.
        std::vector<NodeId> order(n);
        for (NodeId i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);
        bool tree_ok = true;
        for (std::size_t i = 1; i < n && tree_ok; ++i) {
            std::vector<NodeId> open;
            for (std::size_t j = 0; j < i; ++j) {
                if (b.adj[order[j]].size() < c.max_degree) open.push_back(order[j]);
            }
            if (open.empty()) {
                tree_ok = false;
                break;
            }
            std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
            b.link(order[i], open[pick(rng)]);
        }
        if (!tree_ok) continue;

        std::vector<Edge> candidates;
        for (NodeId i = 0; i < n; ++i) {
            for (NodeId j = i + 1; j < n; ++j) {
                if (!b.connected(i, j)) candidates.emplace_back(i, j);
            }
        }
        std::shuffle(candidates.begin(), candidates.end(), rng);
        auto has_room = [&](NodeId v) { return b.adj[v].size() < c.max_degree; };

        // Lift nodes under min_degree first.
        for (auto [i, j] : candidates) {
            const bool needy = b.adj[i].size() < c.min_degree || b.adj[j].size() < c.min_degree;
            if (needy && has_room(i) && has_room(j) && !b.connected(i, j)) b.link(i, j);
        }
        for (auto [i, j] : candidates) {
            if (b.edges >= target_edges) break;
            if (has_room(i) && has_room(j) && !b.connected(i, j)) b.link(i, j);
        }

        auto graph = TopologyGraph::from_adjacency(std::move(b.adj));
        const auto report = validate(graph, c);
        if (report.ok() && within(report.avg_degree, target, c.avg_tolerance)) return graph;
    }
    throw Error(kModule, Errc::attempt_budget_exhausted,
                "no valid topology for n=" + std::to_string(n) + ", target " + std::to_string(target) +
                    " after " + std::to_string(max_attempts) + " attempts");
}

std::vector<std::size_t> bfs_distances(const TopologyGraph& graph, NodeId source) {
    std::vector<std::size_t> dist(graph.node_count(), kUnreachable);
    std::queue<NodeId> frontier;
    dist.at(source) = 0;
    frontier.push(source);
    while (!frontier.empty()) {
        const NodeId v = frontier.front();
        frontier.pop();
        for (NodeId w : graph.neighbors(v)) {
            if (dist[w] == kUnreachable) {
                dist[w] = dist[v] + 1;
                frontier.push(w);
            }
        }
    }
    return dist;
}

bool is_connected(const TopologyGraph& graph) {
    if (graph.node_count() == 0) return false;
    const auto dist = bfs_distances(graph, 0);
    return std::none_of(dist.begin(), dist.end(), [](std::size_t d) { return d == kUnreachable; });
}

ValidationReport validate(const TopologyGraph& graph, const TopologyConstraints& constraints) {
    const std::size_t n = graph.node_count();
    std::size_t degree_sum = 0;
    for (NodeId i = 0; i < n; ++i) {
        const auto& row = graph.neighbors(i);
        for (std::size_t k = 0; k < row.size(); ++k) {
            const NodeId j = row[k];
            if (j >= n) throw Error(kModule, Errc::malformed, "neighbour id out of range");
            if (j == i) throw Error(kModule, Errc::malformed, "self-loop on node " + std::to_string(i));
            if (k > 0 && row[k - 1] == j) throw Error(kModule, Errc::malformed, "duplicate edge");
            if (!graph.has_edge(j, i)) {
                throw Error(kModule, Errc::malformed,
                            "asymmetric adjacency: " + std::to_string(i) + "->" + std::to_string(j));
            }
        }
        degree_sum += row.size();
    }

    ValidationReport report;
    report.connected = is_connected(graph);
    report.avg_degree = n == 0 ? 0.0 : static_cast<double>(degree_sum) / static_cast<double>(n);
    for (NodeId i = 0; i < n; ++i) {
        const auto d = graph.degree(i);
        if (d < constraints.min_degree || d > constraints.max_degree) report.degree_violations.push_back(i);
    }
    return report;
}

TopologyStats stats(const TopologyGraph& graph) {
    const std::size_t n = graph.node_count();
    if (n == 0) throw Error(kModule, Errc::empty_input, "empty graph");
    TopologyStats s;
    s.min_degree = std::numeric_limits<std::size_t>::max();
    std::size_t degree_sum = 0;
    for (NodeId i = 0; i < n; ++i) {
        const auto d = graph.degree(i);
        degree_sum += d;
        s.min_degree = std::min(s.min_degree, d);
        s.max_degree = std::max(s.max_degree, d);
    }
    s.avg_degree = static_cast<double>(degree_sum) / static_cast<double>(n);

    for (NodeId i = 0; i < n; ++i) {
        for (auto d : bfs_distances(graph, i)) {
            if (d == kUnreachable) throw Error(kModule, Errc::disconnected, "diameter undefined: graph is disconnected");
            s.diameter = std::max(s.diameter, d);
        }
    }

    // An edge is a bridge iff removing it disconnects the graph.
    const auto all_edges = graph.edges();
    for (std::size_t k = 0; k < all_edges.size(); ++k) {
        std::vector<Edge> rest;
        rest.reserve(all_edges.size() - 1);
        for (std::size_t m = 0; m < all_edges.size(); ++m) {
            if (m != k) rest.push_back(all_edges[m]);
        }
        if (!is_connected(TopologyGraph::from_edges(n, rest))) ++s.bridges;
    }
    return s;
}

void write_edge_list(const TopologyGraph& graph, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(kModule, Errc::io, "cannot write " + path.string());
    for (auto [a, b] : graph.edges()) out << a << ' ' << b << '\n';
    if (!out) throw Error(kModule, Errc::io, "write failed for " + path.string());
}

TopologyGraph read_edge_list(const std::filesystem::path& path, std::size_t node_count) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, Errc::io, "cannot open " + path.string());
    std::vector<Edge> edges;
    std::size_t max_id = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        long long a = -1, b = -1;
        std::string trailing;
        if (!(fields >> a >> b) || a < 0 || b < 0 || (fields >> trailing)) {
            throw Error(kModule, Errc::malformed,
                        path.string() + ":" + std::to_string(line_no) + ": expected \"i j\"");
        }
        edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
        max_id = std::max<std::size_t>(max_id, static_cast<std::size_t>(std::max(a, b)));
    }
    const std::size_t n = node_count > 0 ? node_count : (edges.empty() ? 0 : max_id + 1);
    return TopologyGraph::from_edges(n, edges);
}

void write_topology(const TopologyGraph& graph, const TopologyDescriptor& d,
                    const std::filesystem::path& json_path) {
    const auto edge_path = json_path.parent_path() / d.edge_list;
    write_edge_list(graph, edge_path);
    nlohmann::json j{
        {"node_count", graph.node_count()},
        {"seed", d.seed},
        {"edge_list", d.edge_list.string()},
        {"constraints",
         {{"min_degree", d.constraints.min_degree},
          {"max_degree", d.constraints.max_degree},
          {"require_connected", d.constraints.require_connected},
          {"target_avg_degree", d.constraints.target_avg_degree}}},
    };
    std::ofstream out(json_path);
    if (!out) throw Error(kModule, Errc::io, "cannot write " + json_path.string());
    out << j.dump(2) << '\n';
}

std::pair<TopologyGraph, TopologyDescriptor> read_topology(const std::filesystem::path& json_path) {
    std::ifstream in(json_path);
    if (!in) throw Error(kModule, Errc::io, "cannot open " + json_path.string());
    TopologyDescriptor d;
    try {
        const auto j = nlohmann::json::parse(in);
        d.node_count = j.at("node_count").get<std::size_t>();
        d.seed = j.value("seed", std::uint64_t{0});
        d.edge_list = j.at("edge_list").get<std::string>();
        if (j.contains("constraints")) {
            const auto& c = j["constraints"];
            d.constraints.min_degree = c.value("min_degree", d.constraints.min_degree);
            d.constraints.max_degree = c.value("max_degree", d.constraints.max_degree);
            d.constraints.require_connected = c.value("require_connected", d.constraints.require_connected);
            d.constraints.target_avg_degree = c.value("target_avg_degree", d.constraints.target_avg_degree);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(kModule, Errc::malformed, json_path.string() + ": " + e.what());
    }
    auto graph = read_edge_list(json_path.parent_path() / d.edge_list, d.node_count);
    return {std::move(graph), std::move(d)};
}

}  // namespace deltagossip
