#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace deltagossip {

struct Segment {
    std::string name;
    std::size_t offset = 0;
    std::size_t length = 0;

    bool operator==(const Segment&) const = default;
};

// Ordered, contiguous segmentation of a flat weight vector.
class Layout {
public:
    Layout() = default;

    // Appends a segment directly after the previous one.
    Layout& add(std::string name, std::size_t length);

    const std::vector<Segment>& segments() const noexcept { return segments_; }
    std::size_t total_length() const noexcept { return total_; }

    bool operator==(const Layout&) const = default;

private:
    std::vector<Segment> segments_;
    std::size_t total_ = 0;
};

// Flat real-valued model weights plus their layer layout. Every binary
// operation requires identical layouts and throws Errc::layout_mismatch
// otherwise.
class ParameterVector {
public:
    ParameterVector() = default;
    explicit ParameterVector(Layout layout);  // zero-filled
    ParameterVector(Layout layout, std::vector<double> values);

    // Single-segment vector named "w"; handy for small fixtures.
    static ParameterVector from_values(std::vector<double> values);

    const Layout& layout() const noexcept { return layout_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    std::span<const double> segment(std::size_t index) const;
    std::span<double> segment(std::size_t index);

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }

    bool same_layout(const ParameterVector& other) const noexcept {
        return layout_ == other.layout_;
    }
    void require_same_layout(const ParameterVector& other, const char* what) const;

    bool all_finite() const noexcept;

    ParameterVector& operator+=(const ParameterVector& rhs);
    ParameterVector& operator-=(const ParameterVector& rhs);
    ParameterVector& operator*=(double factor);
    // this += factor * x
    ParameterVector& axpy(double factor, const ParameterVector& x);

    double dot(const ParameterVector& rhs) const;
    double norm() const;
    // max_i |this_i - rhs_i|
    double max_abs_diff(const ParameterVector& rhs) const;

    bool operator==(const ParameterVector&) const = default;

private:
    Layout layout_;
    std::vector<double> values_;
};

ParameterVector operator+(ParameterVector lhs, const ParameterVector& rhs);
ParameterVector operator-(ParameterVector lhs, const ParameterVector& rhs);
ParameterVector operator*(double factor, ParameterVector v);

}  // namespace deltagossip
