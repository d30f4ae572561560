#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "deltagossip/parameter_vector.hpp"

namespace deltagossip {

using NodeId = std::uint32_t;

// One node's gossip payload: the weights it started its training window from
// and what that window added on top.
struct ModelUpdate {
    NodeId node_id = 0;
    std::uint64_t round = 0;
    ParameterVector base;
    ParameterVector delta;
    std::uint64_t sample_count = 0;
    std::uint64_t epochs = 0;

    ParameterVector full_model() const { return base + delta; }
};

// Gossip learning factor ramp: lambda(t) = min(offset + t / slope_epochs, cap).
struct LambdaSchedule {
    double offset = 0.15;
    double slope_epochs = 1000.0;
    double cap = 0.35;

    void validate() const;
};

enum class StrategyKind { standard_averaging, variance_corrected, fedavg, sample_weighted, delta_sum };

std::string_view strategy_name(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view name);
std::vector<StrategyKind> all_strategies();

struct IntegrationStrategy {
    StrategyKind kind = StrategyKind::delta_sum;
    std::optional<LambdaSchedule> schedule;  // required for delta_sum

    void validate() const;
};

double lambda_value(const LambdaSchedule& schedule, double t);

// Elementwise mean of full models.
ParameterVector average_full_models(std::span<const ParameterVector> models);

// Plain average with each layer segment's spread restored: deviations from
// the segment mean are scaled by sqrt(mean input variance) / stddev(average).
// Segments whose average has zero spread are left as the plain average.
ParameterVector variance_corrected_average(std::span<const ParameterVector> models);

// w + sum(k_n * delta_n) / sum(k_n)
ParameterVector fedavg_integrate(const ParameterVector& w, std::span<const ModelUpdate> updates);

// w + sum(k_n * delta_n) / mean(k_n)
ParameterVector sample_weighted_integrate(const ParameterVector& w, std::span<const ModelUpdate> updates);

// mean(bases) + lambda(t) * sum(deltas) over the local update and all remote
// ones. The local update counts exactly once.
ParameterVector delta_sum_integrate(const ModelUpdate& local, std::span<const ModelUpdate> remote,
                                    const LambdaSchedule& schedule, double t);

// Same as delta_sum_integrate with an explicit factor instead of a schedule.
ParameterVector delta_sum_integrate_with_factor(const ModelUpdate& local,
                                                std::span<const ModelUpdate> remote, double factor);

// Cosine between the local delta and the summed remote deltas. Negative
// values mean local training is pulling against what the neighbours report.
double delta_alignment(const ParameterVector& local_delta, std::span<const ParameterVector> remote_deltas);

}  // namespace deltagossip
