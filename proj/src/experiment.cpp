#include "deltagossip/experiment.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "deltagossip/error.hpp"
#include "json.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "cli";
using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw Error(kModule, Errc::config, "unknown key \"" + key + "\" in " + where);
    }
}

struct LoadedData {
    DatasetShard all;
    std::optional<DatasetShard> designated_global;
};

LoadedData load_dataset(const ExperimentConfig& config) {
    const auto& src = config.dataset;
    if (src.kind == DatasetSource::Kind::synthetic) {
        SynthSpec spec = src.synth;
        spec.seed = src.synth_seed.value_or(config.seed);
        return LoadedData{synth_classification(spec), std::nullopt};
    }
    LoadedData loaded{load_idx(src.train_images, src.train_labels, src.idx), std::nullopt};
    if (!src.test_images.empty()) {
        IdxOptions test_opts = src.idx;
        test_opts.limit = src.test_limit;
        test_opts.class_count = loaded.all.class_count();
        loaded.designated_global = load_idx(src.test_images, src.test_labels, test_opts);
    }
    return loaded;
}

PreparedTopology prepare_from(const ExperimentConfig& config, const TopologySpec& spec, const LoadedData& loaded) {
    PreparedTopology p;
    if (spec.file) {
        if (spec.file->extension() == ".json") {
            p.graph = read_topology(*spec.file).first;
        } else {
            p.graph = read_edge_list(*spec.file);
        }
    } else {
        TopologyConstraints c;
        c.target_avg_degree = spec.target_avg_degree;
        p.graph = generate_semi_random(spec.nodes, c, spec.seed.value_or(config.seed));
    }
    ShardPlan plan;
    plan.node_count = p.graph.node_count();
    plan.train_fraction = config.train_fraction;
    plan.global_fraction = config.global_fraction;
    plan.seed = config.shard_seed.value_or(config.seed);
    p.data = shard_equal(loaded.all, plan, loaded.designated_global);
    p.input_dim = loaded.all.dim();
    p.class_count = loaded.all.class_count();
    return p;
}

std::string csv_name(std::size_t nodes, StrategyKind kind) {
    return std::to_string(nodes) + "nodes_" + std::string(strategy_name(kind)) + ".csv";
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    try {
        const auto j = json::parse(json_text);
        reject_unknown_keys(j, {"seed", "dataset", "shard", "model", "schedule", "lambda", "strategies",
                                "topologies", "forwarding", "output", "$schema", "description"},
                            "config");
        cfg.seed = j.value("seed", cfg.seed);

        const auto& d = j.at("dataset");
        const auto kind = d.value("kind", std::string("synthetic"));
        if (kind == "synthetic") {
            reject_unknown_keys(d, {"kind", "classes", "dim", "per_class", "noise_sigma", "separation", "box_scale", "seed"},
                                "dataset");
            auto& s = cfg.dataset.synth;
            s.classes = d.value("classes", s.classes);
            s.dim = d.value("dim", s.dim);
            s.per_class = d.value("per_class", s.per_class);
            s.noise_sigma = d.value("noise_sigma", s.noise_sigma);
            s.separation = d.value("separation", s.separation);
            s.box_scale = d.value("box_scale", s.box_scale);
            if (d.contains("seed")) cfg.dataset.synth_seed = d["seed"].get<std::uint64_t>();
        } else if (kind == "idx") {
            reject_unknown_keys(d, {"kind", "train_images", "train_labels", "test_images", "test_labels", "downsample",
                                    "limit", "test_limit", "class_count"},
                                "dataset");
            cfg.dataset.kind = DatasetSource::Kind::idx;
            cfg.dataset.train_images = resolve(base_dir, d.at("train_images").get<std::string>());
            cfg.dataset.train_labels = resolve(base_dir, d.at("train_labels").get<std::string>());
            if (d.contains("test_images") != d.contains("test_labels")) {
                throw Error(kModule, Errc::config, "test_images and test_labels must be given together");
            }
            if (d.contains("test_images")) {
                cfg.dataset.test_images = resolve(base_dir, d["test_images"].get<std::string>());
                cfg.dataset.test_labels = resolve(base_dir, d["test_labels"].get<std::string>());
            }
            cfg.dataset.idx.downsample = d.value("downsample", std::size_t{1});
            cfg.dataset.idx.limit = d.value("limit", std::size_t{0});
            cfg.dataset.idx.class_count = d.value("class_count", std::size_t{0});
            cfg.dataset.test_limit = d.value("test_limit", std::size_t{0});
        } else {
            throw Error(kModule, Errc::config, "dataset.kind must be \"synthetic\" or \"idx\"");
        }

        if (j.contains("shard")) {
            const auto& s = j["shard"];
            reject_unknown_keys(s, {"train_fraction", "global_fraction", "seed"}, "shard");
            cfg.train_fraction = s.value("train_fraction", cfg.train_fraction);
            cfg.global_fraction = s.value("global_fraction", cfg.global_fraction);
            if (s.contains("seed")) cfg.shard_seed = s["seed"].get<std::uint64_t>();
        }
        if (j.contains("model")) {
            const auto& m = j["model"];
            reject_unknown_keys(m, {"hidden_dim", "learning_rate"}, "model");
            cfg.hidden_dim = m.value("hidden_dim", cfg.hidden_dim);
            cfg.learning_rate = m.value("learning_rate", cfg.learning_rate);
        }
        if (j.contains("schedule")) {
            const auto& s = j["schedule"];
            reject_unknown_keys(s, {"train_epochs", "integrate_every", "convergence_until_round", "batch_size"},
                                "schedule");
            cfg.schedule.train_epochs = s.value("train_epochs", cfg.schedule.train_epochs);
            cfg.schedule.integrate_every = s.value("integrate_every", cfg.schedule.integrate_every);
            cfg.schedule.convergence_until_round = s.value("convergence_until_round", cfg.schedule.convergence_until_round);
            cfg.schedule.batch_size = s.value("batch_size", cfg.schedule.batch_size);
        }
        if (j.contains("lambda")) {
            const auto& l = j["lambda"];
            reject_unknown_keys(l, {"A", "B", "C"}, "lambda");
            cfg.lambda.offset = l.value("A", cfg.lambda.offset);
            cfg.lambda.slope_epochs = l.value("B", cfg.lambda.slope_epochs);
            cfg.lambda.cap = l.value("C", cfg.lambda.cap);
        }
        for (const auto& s : j.at("strategies")) {
            const auto name = s.get<std::string>();
            const auto kind_opt = parse_strategy(name);
            if (!kind_opt) throw Error(kModule, Errc::config, "unknown strategy \"" + name + "\"");
            cfg.strategies.push_back(*kind_opt);
        }
        for (const auto& t : j.at("topologies")) {
            reject_unknown_keys(t, {"nodes", "target_avg_degree", "seed", "file"}, "topology");
            TopologySpec spec;
            if (t.contains("file")) {
                spec.file = resolve(base_dir, t["file"].get<std::string>());
            } else {
                spec.nodes = t.at("nodes").get<std::size_t>();
                spec.target_avg_degree = t.value("target_avg_degree", spec.target_avg_degree);
            }
            if (t.contains("seed")) spec.seed = t["seed"].get<std::uint64_t>();
            cfg.topologies.push_back(spec);
        }
        if (j.contains("forwarding")) {
            const auto& f = j["forwarding"];
            reject_unknown_keys(f, {"mode", "max_hops"}, "forwarding");
            const auto mode = f.value("mode", std::string("first_hop_only"));
            if (mode == "first_hop_only") {
                cfg.forwarding.mode = ForwardingMode::first_hop_only;
            } else if (mode == "multi_hop") {
                cfg.forwarding.mode = ForwardingMode::multi_hop;
                cfg.forwarding.max_hops = f.value("max_hops", std::size_t{2});
            } else {
                throw Error(kModule, Errc::config, "forwarding.mode must be first_hop_only or multi_hop");
            }
        }
        if (j.contains("output")) {
            const auto& o = j["output"];
            reject_unknown_keys(o, {"percentiles", "node_records"}, "output");
            cfg.percentiles = o.value("percentiles", false);
            cfg.node_records = o.value("node_records", false);
        }
    } catch (const json::exception& e) {
        throw Error(kModule, Errc::config, std::string("invalid config: ") + e.what());
    }
    if (cfg.strategies.empty()) throw Error(kModule, Errc::config, "strategies must not be empty");
    if (cfg.topologies.empty()) throw Error(kModule, Errc::config, "topologies must not be empty");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, Errc::io, "cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_experiment_config(buf.str(), path.parent_path());
}

PreparedTopology prepare_topology(const ExperimentConfig& config, const TopologySpec& spec) {
    return prepare_from(config, spec, load_dataset(config));
}

SimConfig make_sim_config(const ExperimentConfig& config, const PreparedTopology& prepared,
                          StrategyKind strategy, std::size_t threads) {
    SimConfig sim;
    sim.topology = prepared.graph;
    sim.strategy.kind = strategy;
    if (strategy == StrategyKind::delta_sum) sim.strategy.schedule = config.lambda;
    sim.schedule = config.schedule;
    sim.model.input_dim = prepared.input_dim;
    sim.model.hidden_dim = config.hidden_dim;
    sim.model.class_count = prepared.class_count;
    sim.model.learning_rate = config.learning_rate;
    sim.model.seed = config.seed;
    sim.seed = config.seed;
    sim.forwarding = config.forwarding;
    sim.threads = threads;
    return sim;
}

ExperimentSummary run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                                 std::size_t threads) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(kModule, Errc::io, "cannot create output directory " + out_dir.string());

    const LoadedData loaded = load_dataset(config);
    ExperimentSummary summary;
    std::set<std::string> written;
    json runs = json::array();

    for (const auto& spec : config.topologies) {
        const PreparedTopology prepared = prepare_from(config, spec, loaded);
        const auto topo_stats = stats(prepared.graph);
        const auto n = prepared.graph.node_count();
        for (const auto kind : config.strategies) {
            const auto name = csv_name(n, kind);
            if (!written.insert(name).second) {
                throw Error(kModule, Errc::config, "two runs would both write " + name);
            }
            const SimResult result = run_simulation(make_sim_config(config, prepared, kind, threads), prepared.data);
            const auto rows = aggregate_across_nodes(result.records, config.percentiles);
            export_csv(rows, out_dir / name);
            if (config.node_records) {
                export_records_csv(result.records,
                                   out_dir / (std::to_string(n) + "nodes_" + std::string(strategy_name(kind)) + "_nodes.csv"));
            }

            RunSummary run;
            run.nodes = n;
            run.strategy = kind;
            run.avg_degree = topo_stats.avg_degree;
            run.diameter = topo_stats.diameter;
            run.csv_name = name;
            if (!rows.empty()) {
                run.final_index = rows.back().index;
                run.final_global = {rows.back().test_acc_min, rows.back().test_acc_median, rows.back().test_acc_max};
            }
            summary.final_median_by_n[kind][n] = run.final_global.median;
            summary.runs.push_back(run);
            runs.push_back({{"nodes", n},
                            {"strategy", strategy_name(kind)},
                            {"avg_degree", run.avg_degree},
                            {"diameter", run.diameter},
                            {"final_index", run.final_index},
                            {"final_global_acc",
                             {{"min", run.final_global.min},
                              {"median", run.final_global.median},
                              {"max", run.final_global.max}}},
                            {"csv", name}});
        }
    }

    json report{{"seed", config.seed}, {"runs", runs}};
    json drops = json::object();
    json ratios = json::object();
    const auto baseline = summary.final_median_by_n.find(StrategyKind::standard_averaging);
    for (const auto& [kind, by_n] : summary.final_median_by_n) {
        if (by_n.size() < 2) continue;
        drops[std::string(strategy_name(kind))] = accuracy_drop(by_n);
        if (baseline != summary.final_median_by_n.end() && kind != StrategyKind::standard_averaging &&
            baseline->second.size() >= 2) {
            const double base_drop = accuracy_drop(baseline->second);
            ratios[std::string(strategy_name(kind))] =
                base_drop == 0.0 ? json(nullptr) : json(accuracy_drop_ratio(baseline->second, by_n));
        }
    }
    if (!drops.empty()) report["accuracy_drop"] = drops;
    if (!ratios.empty()) report["accuracy_drop_ratio_vs_standard_averaging"] = ratios;

    std::ofstream out(out_dir / "summary.json", std::ios::binary);
    if (!out) throw Error(kModule, Errc::io, "cannot write summary.json");
    out << report.dump(2) << '\n';
    if (!out) throw Error(kModule, Errc::io, "write failed for summary.json");
    return summary;
}

std::size_t default_thread_count() {
    if (const char* env = std::getenv("DELTAGOSSIP_THREADS")) {
        char* end = nullptr;
        const auto v = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return 1;
}

int cmd_gen_topology(std::size_t n, double target_avg_degree, std::uint64_t seed,
                     const std::filesystem::path& out_path, std::ostream& out) {
    TopologyConstraints c;
    c.target_avg_degree = target_avg_degree;
    const auto graph = generate_semi_random(n, c, seed);

    std::filesystem::path json_path = out_path;
    std::filesystem::path edge_path = out_path;
    if (out_path.extension() == ".json") {
        edge_path.replace_extension(".edges");
    } else {
        json_path += ".json";
    }
    if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
    TopologyDescriptor d{n, seed, c, edge_path.filename()};
    write_topology(graph, d, json_path);

    const auto s = stats(graph);
    char buf[256];
    std::snprintf(buf, sizeof buf, "nodes %zu  edges %zu  avg_degree %.3f  min %zu  max %zu  diameter %zu  bridges %zu\n",
                  n, graph.edge_count(), s.avg_degree, s.min_degree, s.max_degree, s.diameter, s.bridges);
    out << buf << "wrote " << json_path.string() << " and " << edge_path.string() << '\n';
    return 0;
}

int cmd_run(const RunOptions& options, std::ostream& out) {
    ExperimentConfig config = load_experiment_config(options.config_path);
    if (options.seed) config.seed = *options.seed;
    if (!options.strategies.empty()) {
        config.strategies.clear();
        for (const auto& name : options.strategies) {
            const auto kind = parse_strategy(name);
            if (!kind) throw Error(kModule, Errc::config, "unknown strategy \"" + name + "\"");
            config.strategies.push_back(*kind);
        }
    }
    const auto out_dir = options.out_dir.value_or(std::filesystem::path("results"));
    const auto summary = run_experiment(config, out_dir, std::max<std::size_t>(options.threads, 1));

    char buf[256];
    for (const auto& r : summary.runs) {
        std::snprintf(buf, sizeof buf, "%3zu nodes  %-20s  final(%zu) global acc min %.4f median %.4f max %.4f\n",
                      r.nodes, std::string(strategy_name(r.strategy)).c_str(), r.final_index, r.final_global.min,
                      r.final_global.median, r.final_global.max);
        out << buf;
    }
    out << "wrote " << (out_dir / "summary.json").string() << '\n';
    return 0;
}

int cmd_netmodel(const NetmodelOptions& options, std::ostream& out) {
    const auto rows = netmodel::scenario_table(options.scenario, options.ns, options.conns);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%6s %9s %10s %12s %14s %8s %10s\n", "nodes", "avg_conn", "expected", "constant_conn",
                  "conn_increase", "fedavg", "gl/fedavg");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%6zu %9.3f %10.5f %12.5f %14.5f %8.5f %10.3f\n", r.n, r.avg_conn, r.expected,
                      r.constant_connectivity, r.connectivity_increase, r.fedavg, r.expected / r.fedavg);
        out << buf;
    }
    if (options.csv_path) {
        netmodel::export_table_csv(rows, *options.csv_path);
        out << "wrote " << options.csv_path->string() << '\n';
    }
    return 0;
}

}  // namespace deltagossip
