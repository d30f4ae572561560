#include "doctest.h"

#include <fstream>
#include <sstream>

#include "deltagossip/error.hpp"
#include "deltagossip/experiment.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace deltagossip;

namespace {

const char* kSmallConfig = R"({
  "seed": 7,
  "dataset": {"kind": "synthetic", "classes": 3, "dim": 4, "per_class": 40},
  "model": {"hidden_dim": 3, "learning_rate": 0.1},
  "schedule": {"train_epochs": 6, "integrate_every": 3, "convergence_until_round": 9, "batch_size": 8},
  "lambda": {"A": 0.15, "B": 60, "C": 0.35},
  "strategies": ["standard_averaging", "delta_sum"],
  "topologies": [{"nodes": 4, "target_avg_degree": 2.0}, {"nodes": 6, "target_avg_degree": 2.4}]
})";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = parse_experiment_config(kSmallConfig, "/base");
    CHECK(cfg.seed == 7);
    CHECK(cfg.dataset.synth.dim == 4);
    CHECK(cfg.hidden_dim == 3);
    CHECK(cfg.schedule.integrate_every == 3);
    CHECK(cfg.lambda.slope_epochs == 60.0);
    CHECK(cfg.strategies == std::vector<StrategyKind>{StrategyKind::standard_averaging, StrategyKind::delta_sum});
    REQUIRE(cfg.topologies.size() == 2);
    CHECK(cfg.topologies[1].nodes == 6);
    CHECK(cfg.forwarding.mode == ForwardingMode::first_hop_only);

    const auto idx = parse_experiment_config(
        R"({"dataset": {"kind": "idx", "train_images": "a", "train_labels": "b", "downsample": 2},
            "strategies": ["fedavg"], "topologies": [{"file": "t.json"}]})",
        "/base");
    CHECK(idx.dataset.train_images == std::filesystem::path("/base/a"));
    CHECK(idx.dataset.idx.downsample == 2);
    CHECK(idx.topologies[0].file.value() == std::filesystem::path("/base/t.json"));
}

TEST_CASE("config errors") {
    auto code_of = [](const std::string& text) {
        try {
            parse_experiment_config(text, ".");
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::io;
    };
    CHECK(code_of("{not json") == Errc::config);
    CHECK(code_of(R"({"dataset": {}, "strategies": ["nope"], "topologies": [{"nodes": 4}]})") == Errc::config);
    CHECK(code_of(R"({"dataset": {}, "strategies": [], "topologies": [{"nodes": 4}]})") == Errc::config);
    CHECK(code_of(R"({"dataset": {}, "strategies": ["fedavg"], "topologies": [{"nodes": 4}], "extra": 1})") ==
          Errc::config);
    CHECK(code_of(R"({"dataset": {"kind": "csv"}, "strategies": ["fedavg"], "topologies": [{"nodes": 4}]})") ==
          Errc::config);
}

TEST_CASE("run output is independent of thread count") {
    const auto dir = testsupport::scratch_dir("experiment_run");
    std::ofstream(dir / "config.json") << kSmallConfig;
    std::ostringstream log;
    RunOptions a{dir / "config.json", dir / "t1", {}, std::nullopt, 1};
    RunOptions b{dir / "config.json", dir / "t4", {}, std::nullopt, 4};
    CHECK(cmd_run(a, log) == 0);
    CHECK(cmd_run(b, log) == 0);
    for (const char* name : {"4nodes_standard_averaging.csv", "4nodes_delta_sum.csv", "6nodes_standard_averaging.csv",
                             "6nodes_delta_sum.csv", "summary.json"}) {
        CAPTURE(name);
        const auto one = slurp(dir / "t1" / name);
        CHECK_FALSE(one.empty());
        CHECK(one == slurp(dir / "t4" / name));
    }
    const auto rows = parse_csv(dir / "t1" / "6nodes_delta_sum.csv");
    CHECK(rows.size() == 9);
    const auto summary = nlohmann::json::parse(slurp(dir / "t1" / "summary.json"));
    CHECK(summary["runs"].size() == 4);
    CHECK(summary.contains("accuracy_drop"));

    RunOptions other_seed{dir / "config.json", dir / "s2", {"delta_sum"}, 2, 1};
    CHECK(cmd_run(other_seed, log) == 0);
    CHECK_FALSE(std::filesystem::exists(dir / "s2" / "4nodes_standard_averaging.csv"));
    CHECK(slurp(dir / "s2" / "4nodes_delta_sum.csv") != slurp(dir / "t1" / "4nodes_delta_sum.csv"));
}

TEST_CASE("missing dataset is reported") {
    const auto path = std::filesystem::path(DELTAGOSSIP_SOURCE_DIR) / "tests/data/missing_dataset.json";
    std::ostringstream log;
    RunOptions opts{path, testsupport::scratch_dir("missing_out"), {}, std::nullopt, 1};
    try {
        cmd_run(opts, log);
        FAIL("expected an io error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::io);
    }
}

TEST_CASE("gen-topology writes a loadable descriptor") {
    const auto dir = testsupport::scratch_dir("gen_topology");
    std::ostringstream log;
    CHECK(cmd_gen_topology(10, 3.3, 5, dir / "t10.json", log) == 0);
    CHECK(log.str().find("avg_degree") != std::string::npos);
    const auto [graph, desc] = read_topology(dir / "t10.json");
    CHECK(graph.node_count() == 10);
    CHECK(desc.seed == 5);
    CHECK(validate(graph, desc.constraints).ok());
    CHECK(std::filesystem::exists(dir / "t10.edges"));

    try {
        cmd_gen_topology(10, 0.5, 5, dir / "bad.json", log);
        FAIL("expected unsatisfiable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unsatisfiable);
    }
}

TEST_CASE("topology file in a config") {
    const auto dir = testsupport::scratch_dir("topology_file");
    std::ostringstream log;
    cmd_gen_topology(5, 2.0, 3, dir / "t5.json", log);
    auto cfg = parse_experiment_config(
        R"({"dataset": {"classes": 2, "dim": 2, "per_class": 30}, "strategies": ["fedavg"],
            "schedule": {"train_epochs": 2, "integrate_every": 1, "convergence_until_round": 3},
            "topologies": [{"file": "t5.json"}]})",
        dir);
    const auto prepared = prepare_topology(cfg, cfg.topologies[0]);
    CHECK(prepared.graph == read_topology(dir / "t5.json").first);
    CHECK(prepared.data.nodes.size() == 5);
}

TEST_CASE("netmodel command") {
    std::ostringstream out;
    NetmodelOptions opts;
    CHECK(cmd_netmodel(opts, out) == 0);
    CHECK(out.str().find("1.71700") != std::string::npos);
    CHECK(out.str().find("2.25357") != std::string::npos);
    CHECK(out.str().find("0.21000") != std::string::npos);
}
