#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "deltagossip/error.hpp"
#include "deltagossip/experiment.hpp"

int main(int argc, char** argv) {
    using namespace deltagossip;
    CLI::App app{"Gossip learning simulator with delta sum integration"};
    app.require_subcommand(1);

    std::size_t topo_nodes = 10;
    double topo_target = 3.3;
    std::uint64_t topo_seed = 1;
    std::string topo_out = "topology.json";
    auto* gen = app.add_subcommand("gen-topology", "Generate a semi-random topology");
    gen->add_option("-n,--nodes", topo_nodes, "Node count")->required();
    gen->add_option("--target", topo_target, "Target average degree")->capture_default_str();
    gen->add_option("--seed", topo_seed, "Generator seed")->capture_default_str();
    gen->add_option("-o,--out", topo_out, "Descriptor path (.json); the edge list is written alongside")
        ->capture_default_str();

    RunOptions run_opts;
    std::string run_out;
    std::uint64_t run_seed = 0;
    std::size_t run_threads = 0;
    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("-c,--config", run_opts.config_path, "Experiment config (JSON)")->required();
    run->add_option("-o,--out", run_out, "Output directory (default: results)");
    run->add_option("-s,--strategy", run_opts.strategies, "Strategy to run; repeatable, overrides the config");
    auto* seed_opt = run->add_option("--seed", run_seed, "Override the experiment seed");
    run->add_option("-j,--threads", run_threads, "Worker threads (default: $DELTAGOSSIP_THREADS or 1)");

    NetmodelOptions net_opts;
    std::string net_csv;
    auto* net = app.add_subcommand("netmodel", "Tabulate analytical throughput scenarios");
    net->add_option("--baseline", net_opts.scenario.baseline_rate, "Measured updates/s at the reference topology")
        ->capture_default_str();
    net->add_option("--ref-nodes", net_opts.scenario.reference_n)->capture_default_str();
    net->add_option("--ref-conn", net_opts.scenario.reference_avg_conn)->capture_default_str();
    net->add_option("--nodes", net_opts.ns, "Topology sizes")->delimiter(',');
    net->add_option("--conn", net_opts.conns, "Average connectivity per size")->delimiter(',');
    net->add_option("--density-exponent", net_opts.scenario.density_exponent)->capture_default_str();
    net->add_option("--fedavg-interval", net_opts.scenario.update_interval_s, "Seconds between FedAvg updates")
        ->capture_default_str();
    net->add_option("--fedavg-sync", net_opts.scenario.sync_every_updates, "Updates per FedAvg synchronisation")
        ->capture_default_str();
    net->add_option("--csv", net_csv, "Also write the table as CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) return cmd_gen_topology(topo_nodes, topo_target, topo_seed, topo_out, std::cout);
        if (*run) {
            if (!run_out.empty()) run_opts.out_dir = run_out;
            if (seed_opt->count() > 0) run_opts.seed = run_seed;
            run_opts.threads = run_threads > 0 ? run_threads : default_thread_count();
            return cmd_run(run_opts, std::cout);
        }
        if (*net) {
            if (!net_csv.empty()) net_opts.csv_path = net_csv;
            return cmd_netmodel(net_opts, std::cout);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error [%s/%s]: %s\n", e.module().c_str(), std::string(errc_name(e.code())).c_str(),
                     e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
