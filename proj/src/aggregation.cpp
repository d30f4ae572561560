#include "deltagossip/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "deltagossip/error.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "aggregation";

// Accumulation order is fixed by (node_id, round) so results do not depend on
// the order updates arrived in.
std::vector<const ModelUpdate*> sorted_updates(std::span<const ModelUpdate> updates) {
    std::vector<const ModelUpdate*> out;
    out.reserve(updates.size());
    for (const auto& u : updates) out.push_back(&u);
    std::sort(out.begin(), out.end(), [](const ModelUpdate* a, const ModelUpdate* b) {
        return a->node_id != b->node_id ? a->node_id < b->node_id : a->round < b->round;
    });
    return out;
}

void require_layout(const ParameterVector& reference, const ParameterVector& v, const char* what) {
    if (!reference.same_layout(v)) {
        throw Error(kModule, Errc::layout_mismatch, std::string(what) + ": parameter layouts differ");
    }
}

void require_update_shape(const ParameterVector& reference, const ModelUpdate& u, const char* what) {
    require_layout(reference, u.base, what);
    require_layout(reference, u.delta, what);
}

ParameterVector weighted_delta_sum(const ParameterVector& w, std::span<const ModelUpdate> updates,
                                   const char* what, double& weight_total) {
    if (updates.empty()) throw Error(kModule, Errc::empty_input, std::string(what) + ": no updates");
    ParameterVector acc(w.layout());
    weight_total = 0.0;
    for (const auto* u : sorted_updates(updates)) {
        require_layout(w, u->delta, what);
        const auto k = static_cast<double>(u->sample_count);
        acc.axpy(k, u->delta);
        weight_total += k;
    }
    if (weight_total == 0.0) {
        throw Error(kModule, Errc::zero_weight, std::string(what) + ": all sample counts are zero");
    }
    return acc;
}

double mean_of(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double variance_of(std::span<const double> xs, double mean) {
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return s / static_cast<double>(xs.size());
}

}  // namespace

void LambdaSchedule::validate() const {
    if (!(slope_epochs > 0.0)) throw Error(kModule, Errc::invalid_argument, "lambda slope B must be > 0");
    if (!(cap > 0.0 && cap <= 1.0)) throw Error(kModule, Errc::invalid_argument, "lambda cap C must be in (0, 1]");
    if (offset > cap) throw Error(kModule, Errc::invalid_argument, "lambda offset A must not exceed cap C");
}

std::string_view strategy_name(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::standard_averaging: return "standard_averaging";
        case StrategyKind::variance_corrected: return "variance_corrected";
        case StrategyKind::fedavg: return "fedavg";
        case StrategyKind::sample_weighted: return "sample_weighted";
        case StrategyKind::delta_sum: return "delta_sum";
    }
    return "unknown";
}

std::optional<StrategyKind> parse_strategy(std::string_view name) {
    for (auto kind : all_strategies()) {
        if (strategy_name(kind) == name) return kind;
    }
    return std::nullopt;
}

std::vector<StrategyKind> all_strategies() {
    return {StrategyKind::standard_averaging, StrategyKind::variance_corrected, StrategyKind::fedavg,
            StrategyKind::sample_weighted, StrategyKind::delta_sum};
}

void IntegrationStrategy::validate() const {
    if (kind == StrategyKind::delta_sum) {
        if (!schedule) throw Error(kModule, Errc::invalid_argument, "delta_sum requires a lambda schedule");
        schedule->validate();
    }
}

double lambda_value(const LambdaSchedule& schedule, double t) {
    return std::min(schedule.offset + t / schedule.slope_epochs, schedule.cap);
}

ParameterVector average_full_models(std::span<const ParameterVector> models) {
    if (models.empty()) throw Error(kModule, Errc::empty_input, "average_full_models: no models");
    ParameterVector acc(models.front().layout());
    for (const auto& m : models) {
        require_layout(acc, m, "average_full_models");
        acc += m;
    }
    acc *= 1.0 / static_cast<double>(models.size());
    return acc;
}

ParameterVector variance_corrected_average(std::span<const ParameterVector> models) {
    ParameterVector avg = average_full_models(models);
    const auto& segments = avg.layout().segments();
    for (std::size_t s = 0; s < segments.size(); ++s) {
        auto seg = avg.segment(s);
        if (seg.empty()) continue;
        const double mean = mean_of(seg);
        const double sigma_avg = std::sqrt(variance_of(seg, mean));
        if (sigma_avg == 0.0) continue;

        double var_sum = 0.0;
        for (const auto& m : models) {
            const auto in = m.segment(s);
            var_sum += variance_of(in, mean_of(in));
        }
        const double sigma_target = std::sqrt(var_sum / static_cast<double>(models.size()));
        const double scale = sigma_target / sigma_avg;
        for (double& v : seg) v = mean + (v - mean) * scale;
    }
    return avg;
}

ParameterVector fedavg_integrate(const ParameterVector& w, std::span<const ModelUpdate> updates) {
    double total = 0.0;
    ParameterVector acc = weighted_delta_sum(w, updates, "fedavg_integrate", total);
    return ParameterVector(w).axpy(1.0 / total, acc);
}

ParameterVector sample_weighted_integrate(const ParameterVector& w, std::span<const ModelUpdate> updates) {
    double total = 0.0;
    ParameterVector acc = weighted_delta_sum(w, updates, "sample_weighted_integrate", total);
    const double mean_k = total / static_cast<double>(updates.size());
    return ParameterVector(w).axpy(1.0 / mean_k, acc);
}

ParameterVector delta_sum_integrate_with_factor(const ModelUpdate& local,
                                                std::span<const ModelUpdate> remote, double factor) {
    require_layout(local.base, local.delta, "delta_sum_integrate");
    std::vector<ModelUpdate> all;
    all.reserve(remote.size() + 1);
    all.push_back(local);
    all.insert(all.end(), remote.begin(), remote.end());

    ParameterVector base_sum(local.base.layout());
    ParameterVector delta_sum(local.base.layout());
    for (const auto* u : sorted_updates(all)) {
        require_update_shape(local.base, *u, "delta_sum_integrate");
        base_sum += u->base;
        delta_sum += u->delta;
    }
    base_sum *= 1.0 / static_cast<double>(all.size());
    return base_sum.axpy(factor, delta_sum);
}

ParameterVector delta_sum_integrate(const ModelUpdate& local, std::span<const ModelUpdate> remote,
                                    const LambdaSchedule& schedule, double t) {
    return delta_sum_integrate_with_factor(local, remote, lambda_value(schedule, t));
}

double delta_alignment(const ParameterVector& local_delta, std::span<const ParameterVector> remote_deltas) {
    if (local_delta.size() == 0) throw Error(kModule, Errc::empty_input, "delta_alignment: zero-length delta");
    const double local_norm = local_delta.norm();
    if (local_norm == 0.0) throw Error(kModule, Errc::invalid_argument, "delta_alignment: local delta is zero");
    ParameterVector remote_sum(local_delta.layout());
    for (const auto& d : remote_deltas) {
        require_layout(local_delta, d, "delta_alignment");
        remote_sum += d;
    }
    const double remote_norm = remote_sum.norm();
    if (remote_norm == 0.0) return 0.0;
    return std::clamp(local_delta.dot(remote_sum) / (local_norm * remote_norm), -1.0, 1.0);
}

}  // namespace deltagossip
