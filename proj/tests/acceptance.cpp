// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deltagossip/aggregation.hpp"
#include "deltagossip/error.hpp"
#include "deltagossip/experiment.hpp"
#include "deltagossip/gossipsim.hpp"
#include "deltagossip/model.hpp"
#include "deltagossip/netmodel.hpp"
#include "deltagossip/topology.hpp"
#include "test_support.hpp"

using namespace deltagossip;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

ParameterVector pv(std::vector<double> v) { return ParameterVector::from_values(std::move(v)); }

ModelUpdate upd(NodeId id, ParameterVector base, ParameterVector delta, std::uint64_t samples = 1) {
    ModelUpdate u;
    u.node_id = id;
    u.base = std::move(base);
    u.delta = std::move(delta);
    u.sample_count = samples;
    u.epochs = 1;
    return u;
}

ParameterVector random_pv(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    return pv(std::move(v));
}

// Criterion 1
Outcome equation_oracles() {
    Outcome o;
    constexpr double tol = 1e-12;
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t count = 2 + trial % 7, p = 1 + trial % 13;
        const auto w0 = random_pv(rng, p);

        // Averaging N+1 full models from a shared start divides progress by N+1.
        std::vector<ParameterVector> models;
        ParameterVector sum(w0.layout());
        for (std::size_t i = 0; i < count; ++i) {
            const auto d = random_pv(rng, p);
            sum += d;
            models.push_back(w0 + d);
        }
        const auto penalty = ParameterVector(w0).axpy(1.0 / static_cast<double>(count), sum);
        o.require(average_full_models(models).max_abs_diff(penalty) <= tol, "averaging penalty law");

        // Sample-weighted progress is N times FedAvg progress.
        std::vector<ModelUpdate> ups;
        std::uniform_int_distribution<std::uint64_t> k(1, 500);
        for (std::size_t i = 0; i < count; ++i) ups.push_back(upd(i, w0, random_pv(rng, p), k(rng)));
        const auto fed = fedavg_integrate(w0, ups) - w0;
        const auto sw = sample_weighted_integrate(w0, ups) - w0;
        o.require(sw.max_abs_diff(static_cast<double>(count) * fed) <= tol, "sample-weighted vs fedavg relation");

        // Equal bases with unit factor: base plus every delta.
        std::vector<ModelUpdate> remote(ups.begin() + 1, ups.end());
        ParameterVector all(w0.layout());
        for (const auto& u : ups) all += u.delta;
        o.require(delta_sum_integrate_with_factor(ups[0], remote, 1.0).max_abs_diff(w0 + all) <= tol,
                  "equal-base identity");
    }

    // Bases [0],[2], deltas [1],[1], factor 0.25 -> [1.5].
    const auto local = upd(0, pv({0}), pv({1}));
    const std::vector<ModelUpdate> remote{upd(1, pv({2}), pv({1}))};
    o.require(std::abs(delta_sum_integrate_with_factor(local, remote, 0.25)[0] - 1.5) <= tol, "[1.5] example");

    const LambdaSchedule defaults{0.15, 1000.0, 0.35};
    o.require(std::abs(lambda_value(defaults, 0) - 0.15) <= tol, "lambda(0)");
    o.require(std::abs(lambda_value(defaults, 200) - 0.35) <= tol, "lambda(200)");
    if (o.ok) o.detail = "200 random draws per law; [1.5] example; lambda(0)=0.15, lambda(200)=0.35";
    return o;
}

// Criterion 2
Outcome gradient_checks() {
    Outcome o;
    std::mt19937_64 rng(202);
    std::size_t draws = 0;
    for (std::size_t hidden : {std::size_t{0}, std::size_t{6}}) {
        const ModelConfig cfg{5, hidden, 4, 0.05, 1};
        for (int i = 0; i < 100; ++i, ++draws) {
            Perceptron m(cfg, testsupport::random_weights(cfg, rng));
            const auto shard = testsupport::random_shard(1 + i % 9, cfg.input_dim, cfg.class_count, rng);
            const auto analytic = m.loss_and_gradient(Batch::of(shard)).grad;
            const auto numeric = testsupport::finite_difference_gradient(cfg, m.weights(), shard);
            o.require(testsupport::gradient_matches(numeric, analytic),
                      "gradient mismatch, hidden_dim " + std::to_string(hidden) + " draw " + std::to_string(i));
        }
    }
    if (o.ok) o.detail = std::to_string(draws) + " draws (softmax regression and one hidden layer)";
    return o;
}

// Criterion 3
Outcome throughput_analytics() {
    Outcome o;
    using namespace netmodel;
    const double baseline = 1.77066;
    o.require(fedavg_rate(5.0, 20.0) == 0.21, "fedavg_rate(5,20) != 0.21");
    const double r25 = expected_rate(baseline, 3.3, 3.2), r50 = expected_rate(baseline, 3.3, 4.2);
    o.require(std::abs(r25 - 1.71700) <= 1e-3, "expected rate at 25 nodes");
    o.require(std::abs(r50 - 2.25357) <= 1e-3, "expected rate at 50 nodes");
    const ThroughputScenario s{baseline};
    const std::vector<std::size_t> ns{10, 25, 50};
    const std::vector<double> conns{3.3, 3.2, 4.2};
    for (const auto& row : scenario_table(s, ns, conns)) {
        o.require(row.constant_connectivity == baseline, "constant-connectivity series is not flat");
    }
    if (o.ok) o.detail = fmt("fedavg 0.21, expected %.5f / %.5f", r25, r50);
    return o;
}

// Shared desk-scale configuration for criteria 4 to 6: synthetic 3-class
// blobs, 60 training epochs integrated every 10, then 15 convergence rounds.
const char* kDeskConfig = R"({
  "seed": 1,
  "dataset": {"kind": "synthetic", "classes": 3, "dim": 8, "per_class": 1500, "noise_sigma": 1.0, "separation": 2.5},
  "model": {"hidden_dim": 8, "learning_rate": 0.02},
  "schedule": {"train_epochs": 60, "integrate_every": 10, "convergence_until_round": 75, "batch_size": 32},
  "lambda": {"A": 0.15, "B": 300, "C": 0.35},
  "strategies": ["standard_averaging", "variance_corrected", "fedavg", "sample_weighted", "delta_sum"],
  "topologies": [{"nodes": 10, "target_avg_degree": 3.3, "seed": 13}]
})";

// Criterion 4
Outcome convergence_property() {
    Outcome o;
    const auto cfg = parse_experiment_config(kDeskConfig, ".");
    const auto prepared = prepare_topology(cfg, cfg.topologies[0]);
    std::string worst;
    double worst_ratio = 0.0;
    for (auto kind : cfg.strategies) {
        const auto result = run_simulation(make_sim_config(cfg, prepared, kind, 1), prepared.data);
        double start = -1.0, prev = 0.0, last = 0.0;
        bool monotone = true;
        for (const auto& [index, spread] : result.spread) {
            if (index == cfg.schedule.train_epochs) {
                start = prev = spread;
            } else if (index > cfg.schedule.train_epochs) {
                monotone = monotone && spread <= prev;
                prev = last = spread;
            }
        }
        const std::string name(strategy_name(kind));
        o.require(start > 0.0, name + ": no spread at the start of convergence");
        o.require(monotone, name + ": spread increased during convergence");
        const double ratio = last / start;
        o.require(ratio < 1e-3, name + fmt(": final/start spread %.3g", ratio));
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst = name;
        }
    }
    if (o.ok) o.detail = "5 strategies; worst final/start spread " + fmt("%.3g", worst_ratio) + " (" + worst + ")";
    return o;
}

// Criterion 5
Outcome scaling_trend() {
    Outcome o;
    auto cfg = parse_experiment_config(kDeskConfig, ".");
    cfg.strategies = {StrategyKind::standard_averaging, StrategyKind::delta_sum};
    cfg.topologies = {TopologySpec{8, 3.3, std::nullopt, std::nullopt}, TopologySpec{24, 3.3, std::nullopt, std::nullopt}};
    int wins = 0;
    double ratio_sum = 0.0;
    std::string per_seed;
    const auto dir = testsupport::scratch_dir("acceptance_scaling");
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        const auto summary = run_experiment(cfg, dir / std::to_string(seed), 1);
        const auto& avg = summary.final_median_by_n.at(StrategyKind::standard_averaging);
        const auto& ds = summary.final_median_by_n.at(StrategyKind::delta_sum);
        const double drop_avg = accuracy_drop(avg), drop_ds = accuracy_drop(ds);
        if (drop_ds < drop_avg) ++wins;
        const double ratio = accuracy_drop_ratio(avg, ds);
        ratio_sum += ratio;
        per_seed += fmt(" [%.4f vs %.4f, ratio %.3f]", drop_avg, drop_ds, ratio);
    }
    const double mean_ratio = ratio_sum / 3.0;
    o.require(wins >= 2, "delta_sum drop smaller in only " + std::to_string(wins) + " of 3 seeds");
    o.require(mean_ratio > 0.0, fmt("mean accuracy_drop_ratio %.4f", mean_ratio));
    o.detail = (o.ok ? "" : o.detail + ";") + " drops averaging vs delta_sum:" + per_seed +
               fmt("; mean ratio %.3f", mean_ratio);
    return o;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Criterion 6
Outcome determinism() {
    Outcome o;
    const auto dir = testsupport::scratch_dir("acceptance_determinism");
    std::ofstream(dir / "config.json") << kDeskConfig;
    std::ostringstream log;
    cmd_run(RunOptions{dir / "config.json", dir / "a", {}, std::nullopt, 1}, log);
    cmd_run(RunOptions{dir / "config.json", dir / "b", {}, std::nullopt, 4}, log);
    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
        if (entry.path().extension() != ".csv") continue;
        ++files;
        const auto other = dir / "b" / entry.path().filename();
        o.require(std::filesystem::exists(other) && slurp(entry.path()) == slurp(other),
                  entry.path().filename().string() + " differs between thread counts");
    }
    o.require(files == 5, "expected 5 CSV files, found " + std::to_string(files));
    if (o.ok) o.detail = std::to_string(files) + " CSVs byte-identical with --threads 1 and 4";
    return o;
}

// Criterion 7
Outcome topology_contract() {
    Outcome o;
    std::mt19937_64 rng(707);
    std::uniform_int_distribution<std::size_t> size(5, 60);
    std::uniform_real_distribution<double> target(1.0, 8.0);
    std::size_t valid = 0, unsatisfiable = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = size(rng);
        TopologyConstraints c;
        c.target_avg_degree = target(rng);
        try {
            const auto g = generate_semi_random(n, c, rng());
            const auto r = validate(g, c);
            o.require(r.ok() && std::abs(r.avg_degree - c.target_avg_degree) <= c.avg_tolerance + 1e-12,
                      fmt("invalid topology n=%.0f target %.2f", static_cast<double>(n), c.target_avg_degree));
            ++valid;
        } catch (const Error& e) {
            o.require(e.code() == Errc::unsatisfiable, std::string("unexpected error: ") + e.what());
            ++unsatisfiable;
        }
    }
    if (o.ok) o.detail = std::to_string(valid) + " valid, " + std::to_string(unsatisfiable) + " unsatisfiable";
    return o;
}

// Criterion 8
Outcome dissemination_dedup() {
    Outcome o;
    std::mt19937_64 rng(808);
    std::size_t graphs = 0, messages = 0;
    const ModelConfig tiny{1, 0, 2, 0.1, 0};
    const NodeData no_data;
    for (int g = 0; g < 300; ++g, ++graphs) {
        const std::size_t n = 2 + rng() % 19;
        std::bernoulli_distribution coin(0.05 + 0.4 * static_cast<double>(g % 10) / 10.0);
        std::vector<Edge> edges;
        for (NodeId a = 0; a < n; ++a)
            for (NodeId b = a + 1; b < n; ++b)
                if (coin(rng)) edges.emplace_back(a, b);
        const auto graph = TopologyGraph::from_edges(n, edges);

        // Brute-force hop distances by repeated relaxation over the edge list.
        constexpr std::size_t inf = 1000;
        std::vector<std::vector<std::size_t>> dist(n, std::vector<std::size_t>(n, inf));
        for (std::size_t v = 0; v < n; ++v) dist[v][v] = 0;
        for (const auto& [a, b] : edges) dist[a][b] = dist[b][a] = 1;
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) dist[i][j] = std::min(dist[i][j], dist[i][k] + dist[k][j]);

        const std::size_t hops = 1 + rng() % n;
        const Forwarding fw{ForwardingMode::multi_hop, hops};
        std::vector<NodeState> states;
        const auto zero = init_weights(tiny);
        for (NodeId v = 0; v < n; ++v) states.push_back(make_node(v, tiny, zero, no_data, 0));

        for (NodeId sender = 0; sender < n; ++sender) {
            ++messages;
            const auto report = disseminate(graph, sender, fw);
            ModelUpdate u;
            u.node_id = sender;
            u.round = 1;
            u.base = zero;
            u.delta = zero;
            // Every delivery is replayed twice to exercise receiver-side dedup.
            std::vector<std::size_t> stored(n, 0);
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto& d : report.deliveries) {
                    if (receive(states[d.node], GossipMessage{"acceptance", u, d.hops})) ++stored[d.node];
                }
            }
            for (NodeId v = 0; v < n; ++v) {
                const bool reachable = v != sender && dist[sender][v] <= hops;
                o.require(stored[v] == (reachable ? 1u : 0u),
                          "graph " + std::to_string(g) + " sender " + std::to_string(sender) + " node " +
                              std::to_string(v) + " stored " + std::to_string(stored[v]) + " copies");
            }
            for (const auto& d : report.deliveries) {
                o.require(d.hops == dist[sender][d.node], "delivery hop count differs from shortest path");
            }
        }
    }
    if (o.ok) o.detail = std::to_string(graphs) + " graphs, " + std::to_string(messages) + " floods";
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "equation oracles", 1.0, equation_oracles},
        {2, "gradient correctness", 30.0, gradient_checks},
        {3, "throughput analytics", 1.0, throughput_analytics},
        {4, "convergence property", 300.0, convergence_property},
        {5, "scaling trend", 1200.0, scaling_trend},
        {6, "determinism", 300.0, determinism},
        {7, "topology contract", 30.0, topology_contract},
        {8, "dissemination dedup", 10.0, dissemination_dedup},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.ok = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            o.ok = false;
            o.detail += fmt("; runtime %.2fs over budget %.0fs", secs, c.budget_s);
        }
        if (!o.ok) ++failures;
        std::printf("%s criterion %d (%s): %s [%.2fs]\n", o.ok ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
