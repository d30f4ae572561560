#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "deltagossip/aggregation.hpp"
#include "deltagossip/dataset.hpp"
#include "deltagossip/metrics.hpp"
#include "deltagossip/model.hpp"
#include "deltagossip/topology.hpp"

namespace deltagossip {

struct SimSchedule {
    std::size_t train_epochs = 200;
    std::size_t integrate_every = 20;
    std::size_t convergence_until_round = 235;
    std::size_t batch_size = 32;

    void validate() const;
};

enum class ForwardingMode { first_hop_only, multi_hop };

struct Forwarding {
    ForwardingMode mode = ForwardingMode::first_hop_only;
    std::size_t max_hops = 1;  // multi_hop only
};

struct GossipMessage {
    std::string key;
    ModelUpdate update;
    std::size_t hop_count = 1;
};

struct Delivery {
    NodeId node = 0;
    std::size_t hops = 0;
};

struct DeliveryReport {
    std::vector<Delivery> deliveries;  // sorted by node, each node at most once
    std::size_t transmissions = 0;     // sends attempted, duplicates included
};

// Flood from `sender`. first_hop_only reaches exactly the neighbours;
// multi_hop forwards on first receipt until max_hops, dropping duplicates.
DeliveryReport disseminate(const TopologyGraph& graph, NodeId sender, const Forwarding& forwarding);

struct SimConfig {
    TopologyGraph topology;
    IntegrationStrategy strategy;
    SimSchedule schedule;
    ModelConfig model;
    std::uint64_t seed = 0;
    Forwarding forwarding;
    std::string key = "gl-workload";
    std::size_t threads = 1;
};

using UpdateKey = std::pair<NodeId, std::uint64_t>;  // (sender, round)

struct NodeState {
    NodeId node_id = 0;
    Perceptron model;
    const NodeData* data = nullptr;
    std::uint64_t shuffle_seed = 0;
    std::size_t epoch_counter = 0;
    std::size_t epochs_since_integration = 0;
    ParameterVector base_snapshot;
    std::optional<ModelUpdate> outgoing;  // own update for the current round
    std::map<UpdateKey, ModelUpdate> inbox;
    std::set<UpdateKey> seen;
};

// Fresh node starting from `initial` weights.
NodeState make_node(NodeId id, const ModelConfig& config, const ParameterVector& initial,
                    const NodeData& data, std::uint64_t sim_seed);

void train_node_epoch(NodeState& state, std::size_t batch_size);

// Packages base_snapshot and current - base_snapshot. The model is left at
// exactly base_snapshot + delta.
ModelUpdate package_update(NodeState& state, std::uint64_t round);

// Trains `epochs` epochs, then packages the update.
ModelUpdate node_train_phase(NodeState& state, std::size_t epochs, std::size_t batch_size,
                             std::uint64_t round);

// Accepts an update unless (sender, round) was seen before. Returns whether it
// was stored.
bool receive(NodeState& state, const GossipMessage& message);

// Merges the node's own update with its inbox, then resets base_snapshot to
// the result and clears the inbox. `t` is the node's completed-epoch count.
ParameterVector integration_step(NodeState& state, const IntegrationStrategy& strategy, double t);

// Every node replaces its weights with the plain mean of its own and its
// neighbours' pre-round weights.
void convergence_round(std::vector<NodeState>& states, const TopologyGraph& graph);

// max over coordinates of (max_n w_n - min_n w_n), i.e. the largest pairwise
// L-infinity distance between node models.
double max_pairwise_linf(const std::vector<NodeState>& states);

struct AlignmentSample {
    NodeId node_id = 0;
    std::size_t epoch = 0;
    double cosine = 0.0;
    std::size_t remote_updates = 0;
};

struct SimResult {
    std::vector<MetricsRecord> records;
    std::vector<std::pair<std::size_t, double>> spread;  // (index, max pairwise L-inf)
    std::vector<AlignmentSample> alignments;
    std::vector<ParameterVector> final_weights;
};

SimResult run_simulation(const SimConfig& config, const ShardedDataset& data);

}  // namespace deltagossip
