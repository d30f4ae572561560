#include "deltagossip/error.hpp"

namespace deltagossip {

std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::invalid_argument: return "invalid_argument";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::layout_mismatch: return "layout_mismatch";
        case Errc::non_finite: return "non_finite";
        case Errc::empty_input: return "empty_input";
        case Errc::zero_weight: return "zero_weight";
        case Errc::unsatisfiable: return "unsatisfiable";
        case Errc::attempt_budget_exhausted: return "attempt_budget_exhausted";
        case Errc::malformed: return "malformed";
        case Errc::disconnected: return "disconnected";
        case Errc::unknown_node: return "unknown_node";
        case Errc::bad_magic: return "bad_magic";
        case Errc::truncated: return "truncated";
        case Errc::count_mismatch: return "count_mismatch";
        case Errc::io: return "io";
        case Errc::config: return "config";
    }
    return "unknown";
}

}  // namespace deltagossip
