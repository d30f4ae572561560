#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace deltagossip::netmodel {

// All rates are model updates per second per topology.

enum class ScenarioKind { expected, constant_connectivity, connectivity_increase, fedavg };

std::string_view scenario_name(ScenarioKind kind);

struct ThroughputScenario {
    double baseline_rate = 1.77065882205598;  // measured at the reference topology
    std::size_t reference_n = 10;
    double reference_avg_conn = 3.3;
    double density_exponent = 1.0;
    double update_interval_s = 5.0;
    double sync_every_updates = 20.0;

    void validate() const;
};

// One model update per interval plus one synchronisation every
// sync_every updates.
double fedavg_rate(double update_interval_s, double sync_every_updates);

// Per-node rate scales with average connectivity.
double expected_rate(double baseline, double ref_conn, double conn_at_n);

double constant_connectivity_rate(double baseline);

// baseline * (n / ref_n)^density_exponent
double connectivity_increase_rate(double baseline, std::size_t ref_n, std::size_t n, double density_exponent);

double scenario_rate(const ThroughputScenario& scenario, ScenarioKind kind, std::size_t n, double conn_at_n);

struct ScenarioRow {
    std::size_t n = 0;
    double avg_conn = 0.0;
    double expected = 0.0;
    double constant_connectivity = 0.0;
    double connectivity_increase = 0.0;
    double fedavg = 0.0;
};

// One row per (n, conn) pair; the two spans must have equal length.
std::vector<ScenarioRow> scenario_table(const ThroughputScenario& scenario, std::span<const std::size_t> ns,
                                        std::span<const double> conns);

void export_table_csv(std::span<const ScenarioRow> rows, const std::filesystem::path& path);

}  // namespace deltagossip::netmodel
