#include "deltagossip/parameter_vector.hpp"

#include <algorithm>
#include <cmath>

#include "deltagossip/error.hpp"

namespace deltagossip {

namespace {
constexpr const char* kModule = "model-core";
}

Layout& Layout::add(std::string name, std::size_t length) {
    segments_.push_back(Segment{std::move(name), total_, length});
    total_ += length;
    return *this;
}

ParameterVector::ParameterVector(Layout layout)
    : layout_(std::move(layout)), values_(layout_.total_length(), 0.0) {}

ParameterVector::ParameterVector(Layout layout, std::vector<double> values)
    : layout_(std::move(layout)), values_(std::move(values)) {
    if (values_.size() != layout_.total_length()) {
        throw Error(kModule, Errc::dimension_mismatch,
                    "value count " + std::to_string(values_.size()) +
                        " does not match layout length " +
                        std::to_string(layout_.total_length()));
    }
}

ParameterVector ParameterVector::from_values(std::vector<double> values) {
    Layout layout;
    layout.add("w", values.size());
    return ParameterVector(std::move(layout), std::move(values));
}

std::span<const double> ParameterVector::segment(std::size_t index) const {
    const auto& s = layout_.segments().at(index);
    return std::span<const double>(values_).subspan(s.offset, s.length);
}

std::span<double> ParameterVector::segment(std::size_t index) {
    const auto& s = layout_.segments().at(index);
    return std::span<double>(values_).subspan(s.offset, s.length);
}

void ParameterVector::require_same_layout(const ParameterVector& other,
                                          const char* what) const {
    if (!same_layout(other)) {
        throw Error(kModule, Errc::layout_mismatch,
                    std::string(what) + ": parameter layouts differ");
    }
}

bool ParameterVector::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(),
                       [](double v) { return std::isfinite(v); });
}

ParameterVector& ParameterVector::operator+=(const ParameterVector& rhs) {
    require_same_layout(rhs, "add");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += rhs.values_[i];
    return *this;
}

ParameterVector& ParameterVector::operator-=(const ParameterVector& rhs) {
    require_same_layout(rhs, "subtract");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= rhs.values_[i];
    return *this;
}

ParameterVector& ParameterVector::operator*=(double factor) {
    for (double& v : values_) v *= factor;
    return *this;
}

ParameterVector& ParameterVector::axpy(double factor, const ParameterVector& x) {
    require_same_layout(x, "axpy");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += factor * x.values_[i];
    return *this;
}

double ParameterVector::dot(const ParameterVector& rhs) const {
    require_same_layout(rhs, "dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) sum += values_[i] * rhs.values_[i];
    return sum;
}

double ParameterVector::norm() const {
    double sum = 0.0;
    for (double v : values_) sum += v * v;
    return std::sqrt(sum);
}

double ParameterVector::max_abs_diff(const ParameterVector& rhs) const {
    require_same_layout(rhs, "max_abs_diff");
    double worst = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        worst = std::max(worst, std::abs(values_[i] - rhs.values_[i]));
    }
    return worst;
}

ParameterVector operator+(ParameterVector lhs, const ParameterVector& rhs) {
    lhs += rhs;
    return lhs;
}

ParameterVector operator-(ParameterVector lhs, const ParameterVector& rhs) {
    lhs -= rhs;
    return lhs;
}

ParameterVector operator*(double factor, ParameterVector v) {
    v *= factor;
    return v;
}

}  // namespace deltagossip
