#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace deltagossip {

enum class Errc {
    invalid_argument,
    dimension_mismatch,
    layout_mismatch,
    non_finite,
    empty_input,
    zero_weight,
    unsatisfiable,
    attempt_budget_exhausted,
    malformed,
    disconnected,
    unknown_node,
    bad_magic,
    truncated,
    count_mismatch,
    io,
    config,
};

std::string_view errc_name(Errc code);

// Every failure raised by the library carries the module that produced it, so
// the CLI can report provenance without parsing messages.
class Error : public std::runtime_error {
public:
    Error(std::string module, Errc code, const std::string& message)
        : std::runtime_error(module + ": " + message),
          module_(std::move(module)),
          code_(code) {}

    const std::string& module() const noexcept { return module_; }
    Errc code() const noexcept { return code_; }

private:
    std::string module_;
    Errc code_;
};

}  // namespace deltagossip
