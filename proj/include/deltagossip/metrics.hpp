#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "deltagossip/aggregation.hpp"

namespace deltagossip {

enum class Phase { train, convergence };

std::string_view phase_name(Phase phase);

struct MetricsRecord {
    NodeId node_id = 0;
    std::size_t index = 0;  // training epoch, or round number after training
    double local_acc = 0.0;
    double local_loss = 0.0;
    double global_acc = 0.0;
    double global_loss = 0.0;
    Phase phase = Phase::train;

    bool operator==(const MetricsRecord&) const = default;
};

struct AggregateRow {
    std::size_t index = 0;
    double test_acc_min = 0.0;
    double test_acc_median = 0.0;
    double test_acc_max = 0.0;
    // Filled only when percentiles are requested.
    std::optional<double> test_acc_p05;
    std::optional<double> test_acc_p95;
};

// Per index: min, lower-middle median and max of global_acc over all nodes.
// Every node seen anywhere in `records` must report at every index.
std::vector<AggregateRow> aggregate_across_nodes(std::span<const MetricsRecord> records,
                                                 bool with_percentiles = false);

// Header "index,test_acc_min,test_acc_median,test_acc_max" (plus
// ",test_acc_p05,test_acc_p95" when the rows carry them), values with six
// decimals.
void export_csv(std::span<const AggregateRow> rows, const std::filesystem::path& path);
std::vector<AggregateRow> parse_csv(const std::filesystem::path& path);

// Raw per-node records, one line each.
void export_records_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path);

// Given final accuracy keyed by topology size for a baseline (a) and a
// candidate (b): 1 - drop_b / drop_a, where drop = acc(smallest N) -
// acc(largest N).
double accuracy_drop_ratio(const std::map<std::size_t, double>& baseline_final_by_n,
                           const std::map<std::size_t, double>& candidate_final_by_n);

// acc(smallest N) - acc(largest N)
double accuracy_drop(const std::map<std::size_t, double>& final_by_n);

}  // namespace deltagossip
