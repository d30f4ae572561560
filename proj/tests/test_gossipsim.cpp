#include "doctest.h"

#include "deltagossip/error.hpp"
#include "deltagossip/gossipsim.hpp"
#include "test_support.hpp"

using namespace deltagossip;

namespace {

std::vector<NodeId> delivered(const DeliveryReport& r) {
    std::vector<NodeId> out;
    for (const auto& d : r.deliveries) out.push_back(d.node);
    return out;
}

ModelConfig tiny_model() { return ModelConfig{2, 0, 2, 0.1, 1}; }

NodeData tiny_data(std::uint64_t seed) {
    const auto all = synth_classification(SynthSpec{2, 2, 10, seed});
    auto s = shard_equal(all, ShardPlan{1, 0.8, seed, 0.0});
    return s.nodes.at(0);
}

ModelUpdate update(NodeId id, std::uint64_t round, const ParameterVector& base, const ParameterVector& delta) {
    ModelUpdate u;
    u.node_id = id;
    u.round = round;
    u.base = base;
    u.delta = delta;
    u.sample_count = 10;
    u.epochs = 1;
    return u;
}

// Node whose model holds `base + delta` with that update pending.
NodeState node_with_update(NodeId id, const NodeData& data, const ParameterVector& base, const ParameterVector& delta) {
    auto s = make_node(id, tiny_model(), base, data, 0);
    s.model.set_weights(base + delta);
    s.epochs_since_integration = 1;
    package_update(s, 1);
    return s;
}

ParameterVector filled(double v) {
    const auto layout = perceptron_layout(tiny_model());
    return ParameterVector(layout, std::vector<double>(layout.total_length(), v));
}

struct SmallWorld {
    TopologyGraph graph;
    ShardedDataset data;
    SimConfig config;
};

SmallWorld small_world(StrategyKind kind, std::size_t nodes = 5) {
    SmallWorld w;
    w.graph = generate_semi_random(nodes, TopologyConstraints{1, 8, true, 2.4, 0.5}, 3);
    const auto all = synth_classification(SynthSpec{3, 4, 40, 5});
    w.data = shard_equal(all, ShardPlan{nodes, 0.8, 5, 0.1});
    w.config.topology = w.graph;
    w.config.strategy = IntegrationStrategy{kind, LambdaSchedule{0.15, 40.0, 0.35}};
    w.config.schedule = SimSchedule{8, 4, 14, 8};
    w.config.model = ModelConfig{4, 3, 3, 0.1, 0};
    w.config.seed = 11;
    return w;
}

}  // namespace

TEST_CASE("first-hop and multi-hop dissemination") {
    const auto ring = TopologyGraph::ring(4);
    CHECK(delivered(disseminate(ring, 0, Forwarding{})) == std::vector<NodeId>{1, 3});
    const auto two = disseminate(ring, 0, Forwarding{ForwardingMode::multi_hop, 2});
    CHECK(delivered(two) == std::vector<NodeId>{1, 2, 3});
    CHECK(two.deliveries[1].hops == 2);
    CHECK(delivered(disseminate(TopologyGraph::path(5), 0, Forwarding{ForwardingMode::multi_hop, 2})) ==
          std::vector<NodeId>{1, 2});
    CHECK_THROWS_AS(disseminate(ring, 4, Forwarding{}), Error);
}

TEST_CASE("receive drops duplicates and own updates") {
    const auto data = tiny_data(1);
    auto s = make_node(0, tiny_model(), filled(0.0), data, 0);
    const auto u = update(1, 1, filled(0.0), filled(1.0));
    CHECK(receive(s, GossipMessage{"k", u, 1}));
    CHECK_FALSE(receive(s, GossipMessage{"k", u, 2}));
    CHECK_FALSE(receive(s, GossipMessage{"k", update(0, 1, filled(0.0), filled(1.0)), 1}));
    CHECK(receive(s, GossipMessage{"k", update(1, 2, filled(0.0), filled(1.0)), 1}));
    CHECK(s.inbox.size() == 2);
}

TEST_CASE("integration step per strategy") {
    const auto data = tiny_data(1);
    // Local: base 0, delta 1. Remote: base 2, delta 3 (full model 5).
    // Equal sample counts, so fedavg is the plain delta mean.
    auto remote = update(1, 1, filled(2.0), filled(3.0));
    remote.sample_count = data.train.size();
    auto run = [&](StrategyKind kind, std::optional<LambdaSchedule> sched, double t) {
        auto s = node_with_update(0, data, filled(0.0), filled(1.0));
        receive(s, GossipMessage{"k", remote, 1});
        const auto next = integration_step(s, IntegrationStrategy{kind, sched}, t);
        CHECK(s.inbox.empty());
        CHECK_FALSE(s.outgoing.has_value());
        CHECK(s.base_snapshot == next);
        CHECK(s.model.weights() == next);
        return next[0];
    };
    CHECK(run(StrategyKind::standard_averaging, std::nullopt, 0) == doctest::Approx(3.0));
    CHECK(run(StrategyKind::fedavg, std::nullopt, 0) == doctest::Approx(2.0));
    CHECK(run(StrategyKind::sample_weighted, std::nullopt, 0) == doctest::Approx(4.0));
    // mean base 1 + 0.15 * (1 + 3)
    CHECK(run(StrategyKind::delta_sum, LambdaSchedule{}, 0) == doctest::Approx(1.6));
    // lambda capped at 0.35
    CHECK(run(StrategyKind::delta_sum, LambdaSchedule{}, 1000) == doctest::Approx(2.4));
}

TEST_CASE("integration without remote updates") {
    const auto data = tiny_data(1);
    auto s = node_with_update(0, data, filled(1.0), filled(0.5));
    CHECK(integration_step(s, IntegrationStrategy{StrategyKind::standard_averaging, std::nullopt}, 0)[0] ==
          doctest::Approx(1.5));
    auto d = node_with_update(0, data, filled(1.0), filled(0.5));
    CHECK(integration_step(d, IntegrationStrategy{StrategyKind::delta_sum, LambdaSchedule{}}, 0)[0] ==
          doctest::Approx(1.075));
}

TEST_CASE("convergence rounds") {
    const auto data = tiny_data(1);
    const auto graph = TopologyGraph::path(3);
    std::vector<NodeState> states;
    for (NodeId i = 0; i < 3; ++i) states.push_back(make_node(i, tiny_model(), filled(3.0 * i), data, 0));
    convergence_round(states, graph);
    CHECK(states[0].model.weights()[0] == doctest::Approx(1.5));
    CHECK(states[1].model.weights()[0] == doctest::Approx(3.0));
    CHECK(states[2].model.weights()[0] == doctest::Approx(4.5));
    CHECK(max_pairwise_linf(states) == doctest::Approx(3.0));
}

TEST_CASE("convergence rounds contract and preserve the mean on regular graphs") {
    const auto data = tiny_data(2);
    std::mt19937_64 rng(8);
    for (const auto& graph : {TopologyGraph::ring(7), TopologyGraph::complete(5)}) {
        std::vector<NodeState> states;
        for (NodeId i = 0; i < graph.node_count(); ++i) {
            states.push_back(make_node(i, tiny_model(), testsupport::random_weights(tiny_model(), rng), data, 0));
        }
        auto mean = [&] {
            ParameterVector m(states[0].model.weights().layout());
            for (const auto& s : states) m += s.model.weights();
            m *= 1.0 / static_cast<double>(states.size());
            return m;
        };
        const auto mean0 = mean();
        double prev = max_pairwise_linf(states);
        for (int r = 0; r < 20; ++r) {
            convergence_round(states, graph);
            const double spread = max_pairwise_linf(states);
            CHECK(spread <= prev + 1e-12);
            prev = spread;
        }
        CHECK(mean().max_abs_diff(mean0) < 1e-12);
    }
}

TEST_CASE("two nodes with identical data and full delta sum stay identical") {
    const auto all = synth_classification(SynthSpec{2, 2, 20, 4});
    const auto one = shard_equal(all, ShardPlan{1, 0.8, 4, 0.0});
    ShardedDataset data;
    data.nodes = {one.nodes[0], one.nodes[0]};
    data.global_val = one.nodes[0].local_val;
    SimConfig cfg;
    cfg.topology = TopologyGraph::path(2);
    cfg.strategy = IntegrationStrategy{StrategyKind::delta_sum, LambdaSchedule{1.0, 1.0, 1.0}};
    cfg.schedule = SimSchedule{6, 3, 6, 4};
    cfg.model = ModelConfig{2, 0, 2, 0.1, 0};
    cfg.seed = 9;
    // Shuffle orders differ per node, but both integrate to the same
    // mean base plus the same delta sum.
    const auto result = run_simulation(cfg, data);
    REQUIRE(result.final_weights.size() == 2);
    CHECK(result.final_weights[0].max_abs_diff(result.final_weights[1]) < 1e-12);
}

TEST_CASE("simulation runs every strategy deterministically") {
    for (auto kind : all_strategies()) {
        CAPTURE(strategy_name(kind));
        auto w = small_world(kind);
        const auto a = run_simulation(w.config, w.data);
        const auto b = run_simulation(w.config, w.data);
        CHECK(a.records == b.records);
        CHECK(a.final_weights == b.final_weights);
        // 8 train epochs + 6 convergence rounds, 5 nodes each.
        CHECK(a.records.size() == 14 * 5);
        CHECK(a.spread.size() == 14);
        w.config.threads = 3;
        const auto c = run_simulation(w.config, w.data);
        CHECK(c.records == a.records);
        CHECK(c.final_weights == a.final_weights);
    }
}

TEST_CASE("simulation rejects bad configurations") {
    auto w = small_world(StrategyKind::delta_sum);
    auto one = w.config;
    one.topology = TopologyGraph::from_edges(1, {});
    CHECK_THROWS_AS(run_simulation(one, w.data), Error);

    auto split = w.config;
    split.topology = TopologyGraph::from_edges(5, {{0, 1}, {2, 3}, {3, 4}});
    CHECK_THROWS_AS(run_simulation(split, w.data), Error);

    auto missing = w.data;
    missing.nodes.pop_back();
    CHECK_THROWS_AS(run_simulation(w.config, missing), Error);

    auto no_lambda = w.config;
    no_lambda.strategy.schedule.reset();
    CHECK_THROWS_AS(run_simulation(no_lambda, w.data), Error);

    auto bad_sched = w.config;
    bad_sched.schedule.integrate_every = 3;
    CHECK_THROWS_AS(run_simulation(bad_sched, w.data), Error);
}
