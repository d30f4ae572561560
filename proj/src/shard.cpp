#include "deltagossip/shard.hpp"

#include <string>

#include "deltagossip/error.hpp"

namespace deltagossip {

namespace {
constexpr const char* kModule = "dataset";
}

std::string_view origin_name(Origin origin) {
    switch (origin) {
        case Origin::train: return "train";
        case Origin::local_val: return "local_val";
        case Origin::global_val: return "global_val";
    }
    return "unknown";
}

DatasetShard::DatasetShard(std::size_t dim, std::size_t class_count, Origin origin)
    : dim_(dim), class_count_(class_count), origin_(origin) {
    if (dim == 0) throw Error(kModule, Errc::invalid_argument, "feature dimension must be positive");
    if (class_count < 2) throw Error(kModule, Errc::invalid_argument, "class_count must be >= 2");
}

DatasetShard::DatasetShard(std::size_t dim, std::size_t class_count, Origin origin,
                           std::vector<double> features, std::vector<std::uint32_t> labels)
    : DatasetShard(dim, class_count, origin) {
    if (features.size() != labels.size() * dim) {
        throw Error(kModule, Errc::dimension_mismatch,
                    "feature count " + std::to_string(features.size()) + " != " +
                        std::to_string(labels.size()) + " rows x " + std::to_string(dim));
    }
    for (auto y : labels) {
        if (y >= class_count) {
            throw Error(kModule, Errc::invalid_argument,
                        "label " + std::to_string(y) + " outside class_count " +
                            std::to_string(class_count));
        }
    }
    features_ = std::move(features);
    labels_ = std::move(labels);
}

void DatasetShard::push_back(std::span<const double> x, std::uint32_t label) {
    if (x.size() != dim_) {
        throw Error(kModule, Errc::dimension_mismatch, "row has wrong dimension");
    }
    if (label >= class_count_) {
        throw Error(kModule, Errc::invalid_argument, "label outside class_count");
    }
    features_.insert(features_.end(), x.begin(), x.end());
    labels_.push_back(label);
}

DatasetShard DatasetShard::select(std::span<const std::size_t> indices, Origin origin) const {
    DatasetShard out(dim_, class_count_, origin);
    out.features_.reserve(indices.size() * dim_);
    out.labels_.reserve(indices.size());
    for (auto i : indices) {
        if (i >= size()) throw Error(kModule, Errc::invalid_argument, "row index out of range");
        auto x = row(i);
        out.features_.insert(out.features_.end(), x.begin(), x.end());
        out.labels_.push_back(labels_[i]);
    }
    return out;
}

void DatasetShard::append(const DatasetShard& other) {
    if (other.dim_ != dim_ || other.class_count_ != class_count_) {
        throw Error(kModule, Errc::dimension_mismatch, "cannot append shard with different shape");
    }
    features_.insert(features_.end(), other.features_.begin(), other.features_.end());
    labels_.insert(labels_.end(), other.labels_.begin(), other.labels_.end());
}

}  // namespace deltagossip
