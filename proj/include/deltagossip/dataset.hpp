#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "deltagossip/shard.hpp"

namespace deltagossip {

struct SynthSpec {
    std::size_t classes = 3;
    std::size_t dim = 2;
    std::size_t per_class = 100;
    std::uint64_t seed = 0;
    double noise_sigma = 1.0;
    // Minimum distance between any two class means, in units of noise_sigma.
    double separation = 4.0;
    // Means are drawn in a cube of side separation * noise_sigma * box_scale
    // (widened for many classes in few dimensions).
    double box_scale = 1.5;
};

// Gaussian blobs, exactly per_class rows per class, features min-max scaled to
// [0, 1]. Rows are grouped by class.
DatasetShard synth_classification(const SynthSpec& spec);

struct IdxOptions {
    std::size_t downsample = 1;   // mean-pool factor applied to rows and cols
    std::size_t class_count = 0;  // 0 = max label + 1
    std::size_t limit = 0;        // 0 = all items
};

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
DatasetShard load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path,
                      const IdxOptions& options = {});

struct ShardPlan {
    std::size_t node_count = 1;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
    // Used only when no designated validation set is supplied.
    double global_fraction = 0.1;

    void validate() const;
};

struct NodeIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> local_val;
};

struct ShardIndices {
    std::vector<NodeIndices> nodes;
    std::vector<std::size_t> global_val;  // empty when a designated set is used
};

// Index-level partition of `dataset_size` rows: seeded permutation, optional
// global hold-out, then near-equal contiguous blocks per node.
ShardIndices plan_shards(std::size_t dataset_size, const ShardPlan& plan, bool hold_out_global);

struct NodeData {
    DatasetShard train;
    DatasetShard local_val;
};

struct ShardedDataset {
    std::vector<NodeData> nodes;
    DatasetShard global_val;
};

// Splits `dataset` across plan.node_count nodes. If `designated_global_val` is
// given it becomes the shared validation set and every row of `dataset` is
// assigned to a node; otherwise global_fraction of the rows are held out.
ShardedDataset shard_equal(const DatasetShard& dataset, const ShardPlan& plan,
                           std::optional<DatasetShard> designated_global_val = std::nullopt);

}  // namespace deltagossip
