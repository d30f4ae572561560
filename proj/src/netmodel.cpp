#include "deltagossip/netmodel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "deltagossip/error.hpp"

namespace deltagossip::netmodel {

namespace {

constexpr const char* kModule = "netmodel";

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || std::isnan(v)) throw Error(kModule, Errc::invalid_argument, std::string(what) + " must be positive");
}

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::expected: return "expected";
        case ScenarioKind::constant_connectivity: return "constant_connectivity";
        case ScenarioKind::connectivity_increase: return "connectivity_increase";
        case ScenarioKind::fedavg: return "fedavg";
    }
    return "unknown";
}

void ThroughputScenario::validate() const {
    require_positive(baseline_rate, "baseline_rate");
    require_positive(reference_avg_conn, "reference_avg_conn");
    require_positive(update_interval_s, "update_interval_s");
    require_positive(sync_every_updates, "sync_every_updates");
    require_positive(density_exponent, "density_exponent");
    if (reference_n == 0) throw Error(kModule, Errc::invalid_argument, "reference_n must be positive");
}

double fedavg_rate(double update_interval_s, double sync_every_updates) {
    require_positive(update_interval_s, "update interval");
    require_positive(sync_every_updates, "sync interval");
    if (std::isinf(sync_every_updates)) return 1.0 / update_interval_s;
    // (s + 1) / (i * s): a single rounding when the inputs are small integers.
    return (sync_every_updates + 1.0) / (update_interval_s * sync_every_updates);
}

double expected_rate(double baseline, double ref_conn, double conn_at_n) {
    require_positive(baseline, "baseline");
    require_positive(ref_conn, "reference connectivity");
    require_positive(conn_at_n, "connectivity");
    return baseline * conn_at_n / ref_conn;
}

double constant_connectivity_rate(double baseline) {
    require_positive(baseline, "baseline");
    return baseline;
}

double connectivity_increase_rate(double baseline, std::size_t ref_n, std::size_t n, double density_exponent) {
    require_positive(baseline, "baseline");
    if (!std::isfinite(density_exponent) || density_exponent <= 0.0) {
        throw Error(kModule, Errc::invalid_argument, "density exponent must be finite and positive");
    }
    if (ref_n == 0 || n < ref_n) {
        throw Error(kModule, Errc::invalid_argument, "need n >= ref_n > 0");
    }
    return baseline * std::pow(static_cast<double>(n) / static_cast<double>(ref_n), density_exponent);
}

double scenario_rate(const ThroughputScenario& s, ScenarioKind kind, std::size_t n, double conn_at_n) {
    switch (kind) {
        case ScenarioKind::expected: return expected_rate(s.baseline_rate, s.reference_avg_conn, conn_at_n);
        case ScenarioKind::constant_connectivity: return constant_connectivity_rate(s.baseline_rate);
        case ScenarioKind::connectivity_increase:
            return connectivity_increase_rate(s.baseline_rate, s.reference_n, n, s.density_exponent);
        case ScenarioKind::fedavg: return fedavg_rate(s.update_interval_s, s.sync_every_updates);
    }
    return 0.0;
}

std::vector<ScenarioRow> scenario_table(const ThroughputScenario& s, std::span<const std::size_t> ns,
                                        std::span<const double> conns) {
    s.validate();
    if (ns.size() != conns.size()) {
        throw Error(kModule, Errc::invalid_argument, "node counts and connectivities differ in length");
    }
    std::vector<ScenarioRow> rows;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        ScenarioRow r;
        r.n = ns[i];
        r.avg_conn = conns[i];
        r.expected = scenario_rate(s, ScenarioKind::expected, ns[i], conns[i]);
        r.constant_connectivity = scenario_rate(s, ScenarioKind::constant_connectivity, ns[i], conns[i]);
        r.connectivity_increase = scenario_rate(s, ScenarioKind::connectivity_increase, ns[i], conns[i]);
        r.fedavg = scenario_rate(s, ScenarioKind::fedavg, ns[i], conns[i]);
        rows.push_back(r);
    }
    return rows;
}

void export_table_csv(std::span<const ScenarioRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(kModule, Errc::io, "cannot write " + path.string());
    out << "nodes,avg_conn,expected,constant_connectivity,connectivity_increase,fedavg\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.n, r.avg_conn, r.expected,
                      r.constant_connectivity, r.connectivity_increase, r.fedavg);
        out << buf;
    }
    if (!out) throw Error(kModule, Errc::io, "write failed for " + path.string());
}

}  // namespace deltagossip::netmodel
