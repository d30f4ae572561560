#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deltagossip/aggregation.hpp"
#include "deltagossip/dataset.hpp"
#include "deltagossip/gossipsim.hpp"
#include "deltagossip/metrics.hpp"
#include "deltagossip/netmodel.hpp"
#include "deltagossip/topology.hpp"

namespace deltagossip {

struct DatasetSource {
    enum class Kind { synthetic, idx };
    Kind kind = Kind::synthetic;
    SynthSpec synth;
    std::optional<std::uint64_t> synth_seed;  // defaults to the experiment seed
    std::filesystem::path train_images, train_labels;
    std::filesystem::path test_images, test_labels;  // optional designated global validation set
    IdxOptions idx;
    std::size_t test_limit = 0;
};

struct TopologySpec {
    std::size_t nodes = 10;
    double target_avg_degree = 3.3;
    std::optional<std::uint64_t> seed;          // defaults to the experiment seed
    std::optional<std::filesystem::path> file;  // descriptor JSON or edge list
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    DatasetSource dataset;
    double train_fraction = 0.8;
    double global_fraction = 0.1;
    std::optional<std::uint64_t> shard_seed;
    std::size_t hidden_dim = 16;
    double learning_rate = 0.05;
    SimSchedule schedule;
    LambdaSchedule lambda;
    std::vector<StrategyKind> strategies;
    std::vector<TopologySpec> topologies;
    Forwarding forwarding;
    bool percentiles = false;
    bool node_records = false;
};

// Parses the JSON schema documented in docs/config.schema.json. Relative paths
// resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct FinalAccuracy {
    double min = 0.0, median = 0.0, max = 0.0;
};

struct RunSummary {
    std::size_t nodes = 0;
    StrategyKind strategy = StrategyKind::delta_sum;
    double avg_degree = 0.0;
    std::size_t diameter = 0;
    std::size_t final_index = 0;
    FinalAccuracy final_global;
    std::string csv_name;
};

struct ExperimentSummary {
    std::vector<RunSummary> runs;
    // Strategy -> (N -> final median global accuracy).
    std::map<StrategyKind, std::map<std::size_t, double>> final_median_by_n;
};

// Builds topology, data and simulations for every (topology, strategy) pair.
// Writes "<N>nodes_<strategy>.csv" per run and summary.json into out_dir.
ExperimentSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                 std::size_t threads);

// Prepared inputs for a single topology, shared by every strategy.
struct PreparedTopology {
    TopologyGraph graph;
    ShardedDataset data;
    std::size_t input_dim = 0;
    std::size_t class_count = 0;
};

PreparedTopology prepare_topology(const ExperimentConfig& config, const TopologySpec& spec);
SimConfig make_sim_config(const ExperimentConfig& config, const PreparedTopology& prepared,
                          StrategyKind strategy, std::size_t threads);

// --threads fallback: DELTAGOSSIP_THREADS, else 1.
std::size_t default_thread_count();

// Subcommands. Each returns a process exit code and writes human-readable
// output to `out`.
int cmd_gen_topology(std::size_t n, double target_avg_degree, std::uint64_t seed,
                     const std::filesystem::path& out_path, std::ostream& out);

struct RunOptions {
    std::filesystem::path config_path;
    std::optional<std::filesystem::path> out_dir;
    std::vector<std::string> strategies;  // overrides config when non-empty
    std::optional<std::uint64_t> seed;
    std::size_t threads = 1;
};

int cmd_run(const RunOptions& options, std::ostream& out);

struct NetmodelOptions {
    netmodel::ThroughputScenario scenario;
    std::vector<double> conns{3.3, 3.2, 4.2};
    std::vector<std::size_t> ns{10, 25, 50};
    std::optional<std::filesystem::path> csv_path;
};

int cmd_netmodel(const NetmodelOptions& options, std::ostream& out);

}  // namespace deltagossip
