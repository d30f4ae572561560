#include "deltagossip/gossipsim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <queue>
#include <string>
#include <thread>

#include "deltagossip/error.hpp"
#include "deltagossip/rng.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "gossipsim";

// Runs body(i) for i in [0, count) on up to `threads` workers. Work items must
// not share mutable state. The first failure (lowest index) is rethrown.
template <typename Body>
void parallel_for(std::size_t count, std::size_t threads, Body body) {
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t i) {
        try {
            body(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) run(i);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                for (std::size_t i = w; i < count; i += workers) run(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void validate_config(const SimConfig& config, const ShardedDataset& data) {
    const auto n = config.topology.node_count();
    if (n < 2) throw Error(kModule, Errc::config, "topology needs at least 2 nodes");
    const auto report = validate(config.topology, TopologyConstraints{1, n, true, 1.0});
    if (!report.connected) throw Error(kModule, Errc::config, "topology is not connected");
    config.strategy.validate();
    config.schedule.validate();
    config.model.validate();
    if (config.forwarding.mode == ForwardingMode::multi_hop && config.forwarding.max_hops < 1) {
        throw Error(kModule, Errc::config, "multi_hop forwarding needs max_hops >= 1");
    }
    if (data.nodes.size() != n) {
        throw Error(kModule, Errc::config,
                    std::to_string(data.nodes.size()) + " data shards for " + std::to_string(n) + " nodes");
    }
    if (data.global_val.empty()) throw Error(kModule, Errc::config, "global validation set is empty");
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = data.nodes[i];
        if (d.train.empty() || d.local_val.empty()) {
            throw Error(kModule, Errc::config, "node " + std::to_string(i) + " has an empty train or validation shard");
        }
        if (d.train.dim() != config.model.input_dim || d.train.class_count() != config.model.class_count) {
            throw Error(kModule, Errc::config, "node " + std::to_string(i) + " data does not match the model shape");
        }
    }
    if (data.global_val.dim() != config.model.input_dim) {
        throw Error(kModule, Errc::config, "global validation set does not match the model shape");
    }
}

void require_finite(const NodeState& s, const char* when) {
    if (!s.model.weights().all_finite()) {
        throw Error(kModule, Errc::non_finite,
                    "node " + std::to_string(s.node_id) + " has non-finite weights " + when + " at epoch " +
                        std::to_string(s.epoch_counter));
    }
}

}  // namespace

void SimSchedule::validate() const {
    if (train_epochs < 1) throw Error(kModule, Errc::config, "train_epochs must be >= 1");
    if (integrate_every < 1 || train_epochs % integrate_every != 0) {
        throw Error(kModule, Errc::config, "integrate_every must divide train_epochs");
    }
    if (convergence_until_round < train_epochs) {
        throw Error(kModule, Errc::config, "convergence_until_round must be >= train_epochs");
    }
    if (batch_size < 1) throw Error(kModule, Errc::config, "batch_size must be >= 1");
}

DeliveryReport disseminate(const TopologyGraph& graph, NodeId sender, const Forwarding& forwarding) {
    if (sender >= graph.node_count()) {
        throw Error(kModule, Errc::unknown_node, "sender " + std::to_string(sender) + " not in topology");
    }
    const std::size_t max_hops =
        forwarding.mode == ForwardingMode::first_hop_only ? 1 : std::max<std::size_t>(forwarding.max_hops, 1);

    DeliveryReport report;
    std::vector<bool> seen(graph.node_count(), false);
    seen[sender] = true;
    // (holder, hops the message has travelled to reach it)
    std::queue<std::pair<NodeId, std::size_t>> forwarders;
    forwarders.emplace(sender, 0);
    while (!forwarders.empty()) {
        const auto [holder, hops] = forwarders.front();
        forwarders.pop();
        if (hops >= max_hops) continue;
        for (NodeId next : graph.neighbors(holder)) {
            ++report.transmissions;
            if (seen[next]) continue;
            seen[next] = true;
            report.deliveries.push_back(Delivery{next, hops + 1});
            forwarders.emplace(next, hops + 1);
        }
    }
    std::sort(report.deliveries.begin(), report.deliveries.end(),
              [](const Delivery& a, const Delivery& b) { return a.node < b.node; });
    return report;
}

NodeState make_node(NodeId id, const ModelConfig& config, const ParameterVector& initial,
                    const NodeData& data, std::uint64_t sim_seed) {
    NodeState s{id, Perceptron(config, initial), &data, 0, 0, 0, initial, std::nullopt, {}, {}};
    s.shuffle_seed = make_rng(sim_seed, {0x40de, id})();
    return s;
}

void train_node_epoch(NodeState& state, std::size_t batch_size) {
    if (state.data == nullptr || state.data->train.empty()) {
        throw Error(kModule, Errc::empty_input, "node " + std::to_string(state.node_id) + " has no training data");
    }
    train_epochs(state.model, state.data->train, 1, batch_size, state.shuffle_seed, state.epoch_counter);
    ++state.epoch_counter;
    ++state.epochs_since_integration;
}

ModelUpdate package_update(NodeState& state, std::uint64_t round) {
    ModelUpdate u;
    u.node_id = state.node_id;
    u.round = round;
    u.base = state.base_snapshot;
    u.delta = state.model.weights() - state.base_snapshot;
    u.sample_count = static_cast<std::uint64_t>(state.data ? state.data->train.size() : 0) *
                     state.epochs_since_integration;
    u.epochs = state.epochs_since_integration;
    state.model.set_weights(u.base + u.delta);
    state.outgoing = u;
    return u;
}

ModelUpdate node_train_phase(NodeState& state, std::size_t epochs, std::size_t batch_size,
                             std::uint64_t round) {
    if (epochs < 1) throw Error(kModule, Errc::invalid_argument, "node_train_phase needs epochs >= 1");
    for (std::size_t e = 0; e < epochs; ++e) train_node_epoch(state, batch_size);
    return package_update(state, round);
}

bool receive(NodeState& state, const GossipMessage& message) {
    const UpdateKey key{message.update.node_id, message.update.round};
    if (message.update.node_id == state.node_id) return false;
    if (!state.seen.insert(key).second) return false;
    state.inbox.emplace(key, message.update);
    return true;
}

ParameterVector integration_step(NodeState& state, const IntegrationStrategy& strategy, double t) {
    ModelUpdate local;
    if (state.outgoing) {
        local = *state.outgoing;
    } else {
        local.node_id = state.node_id;
        local.base = state.base_snapshot;
        local.delta = ParameterVector(state.base_snapshot.layout());
    }
    std::vector<ModelUpdate> remote;
    remote.reserve(state.inbox.size());
    for (const auto& [key, u] : state.inbox) remote.push_back(u);

    ParameterVector next;
    switch (strategy.kind) {
        case StrategyKind::standard_averaging:
        case StrategyKind::variance_corrected: {
            std::vector<ModelUpdate> all = remote;
            all.push_back(local);
            std::sort(all.begin(), all.end(), [](const ModelUpdate& a, const ModelUpdate& b) {
                return a.node_id != b.node_id ? a.node_id < b.node_id : a.round < b.round;
            });
            std::vector<ParameterVector> models;
            models.reserve(all.size());
            for (const auto& u : all) {
                // The local full model is the node's current weights, which
                // package_update pinned to base + delta.
                models.push_back(u.node_id == state.node_id ? state.model.weights() : u.full_model());
            }
            next = strategy.kind == StrategyKind::standard_averaging ? average_full_models(models)
                                                                     : variance_corrected_average(models);
            break;
        }
        case StrategyKind::fedavg:
        case StrategyKind::sample_weighted: {
            std::vector<ModelUpdate> all = remote;
            all.push_back(local);
            next = strategy.kind == StrategyKind::fedavg ? fedavg_integrate(local.base, all)
                                                         : sample_weighted_integrate(local.base, all);
            break;
        }
        case StrategyKind::delta_sum:
            if (!strategy.schedule) throw Error(kModule, Errc::config, "delta_sum requires a lambda schedule");
            next = delta_sum_integrate(local, remote, *strategy.schedule, t);
            break;
    }

    state.model.set_weights(next);
    state.base_snapshot = next;
    state.inbox.clear();
    state.outgoing.reset();
    state.epochs_since_integration = 0;
    return next;
}

void convergence_round(std::vector<NodeState>& states, const TopologyGraph& graph) {
    if (states.size() != graph.node_count()) {
        throw Error(kModule, Errc::config, "state count does not match topology");
    }
    std::vector<ParameterVector> before;
    before.reserve(states.size());
    for (const auto& s : states) before.push_back(s.model.weights());

    for (auto& s : states) {
        std::vector<NodeId> members = graph.neighbors(s.node_id);
        members.insert(std::upper_bound(members.begin(), members.end(), s.node_id), s.node_id);
        std::vector<ParameterVector> models;
        models.reserve(members.size());
        for (NodeId m : members) models.push_back(before[m]);
        auto next = average_full_models(models);
        s.model.set_weights(next);
        s.base_snapshot = std::move(next);
        s.outgoing.reset();
        s.inbox.clear();
        s.epochs_since_integration = 0;
    }
}

double max_pairwise_linf(const std::vector<NodeState>& states) {
    if (states.empty()) return 0.0;
    const auto p = states.front().model.weights().size();
    double worst = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& s : states) {
            const double v = s.model.weights()[k];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        worst = std::max(worst, hi - lo);
    }
    return worst;
}

SimResult run_simulation(const SimConfig& config, const ShardedDataset& data) {
    validate_config(config, data);
    const auto n = config.topology.node_count();
    const auto& sched = config.schedule;

    ModelConfig init_cfg = config.model;
    init_cfg.seed = config.seed;
    const ParameterVector initial = init_weights(init_cfg);

    std::vector<NodeState> states;
    states.reserve(n);
    for (NodeId i = 0; i < n; ++i) states.push_back(make_node(i, config.model, initial, data.nodes[i], config.seed));

    SimResult result;
    auto record_metrics = [&](std::size_t index, Phase phase) {
        std::vector<MetricsRecord> batch(n);
        parallel_for(n, config.threads, [&](std::size_t i) {
            const auto& s = states[i];
            const auto local = evaluate(s.model, s.data->local_val);
            const auto global = evaluate(s.model, data.global_val);
            batch[i] = MetricsRecord{s.node_id, index, local.accuracy, local.loss,
                                     global.accuracy, global.loss, phase};
        });
        result.records.insert(result.records.end(), batch.begin(), batch.end());
        result.spread.emplace_back(index, max_pairwise_linf(states));
    };

    for (std::size_t epoch = 1; epoch <= sched.train_epochs; ++epoch) {
        parallel_for(n, config.threads, [&](std::size_t i) {
            train_node_epoch(states[i], sched.batch_size);
            require_finite(states[i], "after training");
        });

        if (epoch % sched.integrate_every == 0) {
            const std::uint64_t round = epoch / sched.integrate_every;
            std::vector<ModelUpdate> outgoing;
            outgoing.reserve(n);
            for (auto& s : states) outgoing.push_back(package_update(s, round));
            for (NodeId sender = 0; sender < n; ++sender) {
                const auto report = disseminate(config.topology, sender, config.forwarding);
                for (const auto& d : report.deliveries) {
                    receive(states[d.node], GossipMessage{config.key, outgoing[sender], d.hops});
                }
            }
            for (auto& s : states) {
                if (s.outgoing && s.outgoing->delta.norm() > 0.0) {
                    std::vector<ParameterVector> remote;
                    for (const auto& [key, u] : s.inbox) remote.push_back(u.delta);
                    result.alignments.push_back(AlignmentSample{
                        s.node_id, epoch, delta_alignment(s.outgoing->delta, remote), remote.size()});
                }
                integration_step(s, config.strategy, static_cast<double>(s.epoch_counter));
                require_finite(s, "after integration");
            }
        }
        record_metrics(epoch, Phase::train);
    }

    for (std::size_t round = sched.train_epochs + 1; round <= sched.convergence_until_round; ++round) {
        convergence_round(states, config.topology);
        record_metrics(round, Phase::convergence);
    }

    for (const auto& s : states) result.final_weights.push_back(s.model.weights());
    return result;
}

}  // namespace deltagossip
