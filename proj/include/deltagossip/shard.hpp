#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace deltagossip {

enum class Origin { train, local_val, global_val };

std::string_view origin_name(Origin origin);

// A labelled sample set with row-major features in [0, 1].
class DatasetShard {
public:
    DatasetShard() = default;
    DatasetShard(std::size_t dim, std::size_t class_count, Origin origin);
    DatasetShard(std::size_t dim, std::size_t class_count, Origin origin,
                 std::vector<double> features, std::vector<std::uint32_t> labels);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t class_count() const noexcept { return class_count_; }
    Origin origin() const noexcept { return origin_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }

    std::span<const double> features() const noexcept { return features_; }
    std::span<const std::uint32_t> labels() const noexcept { return labels_; }
    std::span<const double> row(std::size_t i) const {
        return std::span<const double>(features_).subspan(i * dim_, dim_);
    }
    std::uint32_t label(std::size_t i) const { return labels_[i]; }

    void push_back(std::span<const double> x, std::uint32_t label);
    void set_origin(Origin origin) noexcept { origin_ = origin; }

    // Rows picked by index, in the given order.
    DatasetShard select(std::span<const std::size_t> indices, Origin origin) const;

    // Appends all rows of `other`; dims and class counts must agree.
    void append(const DatasetShard& other);

    bool operator==(const DatasetShard&) const = default;

private:
    std::size_t dim_ = 0;
    std::size_t class_count_ = 0;
    Origin origin_ = Origin::train;
    std::vector<double> features_;
    std::vector<std::uint32_t> labels_;
};

}  // namespace deltagossip
