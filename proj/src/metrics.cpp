#include "deltagossip/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "deltagossip/error.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "metrics";

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Value at rank floor(q * (n - 1)) of a sorted sample.
double lower_quantile(const std::vector<double>& sorted, double q) {
    const auto rank = static_cast<std::size_t>(std::floor(q * static_cast<double>(sorted.size() - 1)));
    return sorted[rank];
}

}  // namespace

std::string_view phase_name(Phase phase) {
    return phase == Phase::train ? "train" : "convergence";
}

std::vector<AggregateRow> aggregate_across_nodes(std::span<const MetricsRecord> records, bool with_percentiles) {
    std::set<NodeId> nodes;
    std::map<std::size_t, std::map<NodeId, double>> by_index;
    for (const auto& r : records) {
        nodes.insert(r.node_id);
        if (!by_index[r.index].emplace(r.node_id, r.global_acc).second) {
            throw Error(kModule, Errc::malformed,
                        "node " + std::to_string(r.node_id) + " reported twice at index " + std::to_string(r.index));
        }
    }

    std::vector<AggregateRow> rows;
    rows.reserve(by_index.size());
    for (const auto& [index, accs] : by_index) {
        if (accs.size() != nodes.size()) {
            for (NodeId n : nodes) {
                if (!accs.count(n)) {
                    throw Error(kModule, Errc::empty_input,
                                "node " + std::to_string(n) + " missing at index " + std::to_string(index));
                }
            }
        }
        std::vector<double> values;
        values.reserve(accs.size());
        for (const auto& [node, acc] : accs) values.push_back(acc);
        std::sort(values.begin(), values.end());

        AggregateRow row;
        row.index = index;
        row.test_acc_min = values.front();
        row.test_acc_median = values[(values.size() - 1) / 2];
        row.test_acc_max = values.back();
        if (with_percentiles) {
            row.test_acc_p05 = lower_quantile(values, 0.05);
            row.test_acc_p95 = lower_quantile(values, 0.95);
        }
        rows.push_back(row);
    }
    return rows;
}

void export_csv(std::span<const AggregateRow> rows, const std::filesystem::path& path) {
    const bool percentiles = !rows.empty() && rows.front().test_acc_p05.has_value();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(kModule, Errc::io, "cannot write " + path.string());
    out << "index,test_acc_min,test_acc_median,test_acc_max";
    if (percentiles) out << ",test_acc_p05,test_acc_p95";
    out << '\n';
    for (const auto& r : rows) {
        out << r.index << ',' << fixed6(r.test_acc_min) << ',' << fixed6(r.test_acc_median) << ','
            << fixed6(r.test_acc_max);
        if (percentiles) out << ',' << fixed6(r.test_acc_p05.value_or(0.0)) << ',' << fixed6(r.test_acc_p95.value_or(0.0));
        out << '\n';
    }
    if (!out) throw Error(kModule, Errc::io, "write failed for " + path.string());
}

std::vector<AggregateRow> parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(kModule, Errc::io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error(kModule, Errc::malformed, path.string() + ": missing header");
    const bool percentiles = line.find("test_acc_p05") != std::string::npos;

    std::vector<AggregateRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != (percentiles ? 6u : 4u)) {
            throw Error(kModule, Errc::malformed, path.string() + ": bad row \"" + line + "\"");
        }
        try {
            AggregateRow r;
            r.index = std::stoull(cells[0]);
            r.test_acc_min = std::stod(cells[1]);
            r.test_acc_median = std::stod(cells[2]);
            r.test_acc_max = std::stod(cells[3]);
            if (percentiles) {
                r.test_acc_p05 = std::stod(cells[4]);
                r.test_acc_p95 = std::stod(cells[5]);
            }
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw Error(kModule, Errc::malformed, path.string() + ": bad number in \"" + line + "\"");
        }
    }
    return rows;
}

void export_records_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(kModule, Errc::io, "cannot write " + path.string());
    out << "node_id,index,phase,local_acc,local_loss,global_acc,global_loss\n";
    for (const auto& r : records) {
        out << r.node_id << ',' << r.index << ',' << phase_name(r.phase) << ',' << fixed6(r.local_acc) << ','
            << fixed6(r.local_loss) << ',' << fixed6(r.global_acc) << ',' << fixed6(r.global_loss) << '\n';
    }
    if (!out) throw Error(kModule, Errc::io, "write failed for " + path.string());
}

double accuracy_drop(const std::map<std::size_t, double>& final_by_n) {
    if (final_by_n.size() < 2) {
        throw Error(kModule, Errc::invalid_argument, "need accuracies for at least two topology sizes");
    }
    return final_by_n.begin()->second - final_by_n.rbegin()->second;
}

double accuracy_drop_ratio(const std::map<std::size_t, double>& baseline_final_by_n,
                           const std::map<std::size_t, double>& candidate_final_by_n) {
    if (baseline_final_by_n.size() < 2 || candidate_final_by_n.size() < 2 ||
        baseline_final_by_n.begin()->first != candidate_final_by_n.begin()->first ||
        baseline_final_by_n.rbegin()->first != candidate_final_by_n.rbegin()->first) {
        throw Error(kModule, Errc::invalid_argument, "series must share their smallest and largest N");
    }
    const double drop_a = accuracy_drop(baseline_final_by_n);
    if (drop_a == 0.0) throw Error(kModule, Errc::zero_weight, "baseline accuracy drop is zero");
    return 1.0 - accuracy_drop(candidate_final_by_n) / drop_a;
}

}  // namespace deltagossip
