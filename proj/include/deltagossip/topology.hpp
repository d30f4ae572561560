#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "deltagossip/aggregation.hpp"

namespace deltagossip {

using Edge = std::pair<NodeId, NodeId>;

// Undirected neighbour graph with sorted adjacency lists.
class TopologyGraph {
public:
    TopologyGraph() = default;

    // Builds a symmetric graph; rejects self-loops, duplicates and
    // out-of-range endpoints.
    static TopologyGraph from_edges(std::size_t node_count, const std::vector<Edge>& edges);

    // Takes adjacency as given (sorted per node) without checking symmetry.
    // validate() reports malformed input.
    static TopologyGraph from_adjacency(std::vector<std::vector<NodeId>> adjacency);

    static TopologyGraph ring(std::size_t n);
    static TopologyGraph complete(std::size_t n);
    static TopologyGraph path(std::size_t n);
    static TopologyGraph star(std::size_t leaves);

    std::size_t node_count() const noexcept { return adjacency_.size(); }
    const std::vector<NodeId>& neighbors(NodeId node) const;
    std::size_t degree(NodeId node) const { return neighbors(node).size(); }
    bool has_edge(NodeId a, NodeId b) const;

    // Each undirected edge once, as (lo, hi), sorted.
    std::vector<Edge> edges() const;
    std::size_t edge_count() const;

    bool operator==(const TopologyGraph&) const = default;

private:
    std::vector<std::vector<NodeId>> adjacency_;
};

struct TopologyConstraints {
    std::size_t min_degree = 1;
    std::size_t max_degree = 8;
    bool require_connected = true;
    double target_avg_degree = 3.3;
    // Accepted deviation of the realised average degree from the target.
    double avg_tolerance = 0.5;

    void validate() const;
};

// Seeded random spanning tree, then random extra edges under max_degree until
// the target average degree is met. Retries with fresh randomness up to
// max_attempts times.
TopologyGraph generate_semi_random(std::size_t n, const TopologyConstraints& constraints,
                                   std::uint64_t seed, int max_attempts = 64);

struct ValidationReport {
    bool connected = false;
    std::vector<NodeId> degree_violations;
    double avg_degree = 0.0;

    bool ok() const noexcept { return connected && degree_violations.empty(); }
};

ValidationReport validate(const TopologyGraph& graph, const TopologyConstraints& constraints);

struct TopologyStats {
    double avg_degree = 0.0;
    std::size_t min_degree = 0;
    std::size_t max_degree = 0;
    std::size_t diameter = 0;
    std::size_t bridges = 0;
};

// Throws Errc::disconnected when the diameter is undefined.
TopologyStats stats(const TopologyGraph& graph);

bool is_connected(const TopologyGraph& graph);

// Hop distances from `source`; unreachable nodes get SIZE_MAX.
std::vector<std::size_t> bfs_distances(const TopologyGraph& graph, NodeId source);

// Edge list text: one "i j" per line. The JSON descriptor records node_count,
// seed, constraints and the edge-list file name (relative to the descriptor).
void write_edge_list(const TopologyGraph& graph, const std::filesystem::path& path);
TopologyGraph read_edge_list(const std::filesystem::path& path, std::size_t node_count = 0);

struct TopologyDescriptor {
    std::size_t node_count = 0;
    std::uint64_t seed = 0;
    TopologyConstraints constraints;
    std::filesystem::path edge_list;
};

void write_topology(const TopologyGraph& graph, const TopologyDescriptor& descriptor,
                    const std::filesystem::path& json_path);
std::pair<TopologyGraph, TopologyDescriptor> read_topology(const std::filesystem::path& json_path);

}  // namespace deltagossip
