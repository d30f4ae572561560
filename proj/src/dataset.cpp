#include "deltagossip/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "deltagossip/error.hpp"
#include "deltagossip/rng.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "dataset";
constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(kModule, Errc::io, "cannot open " + path.string());
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
    if (offset + 4 > bytes.size()) {
        throw Error(kModule, Errc::truncated, path.string() + ": truncated header");
    }
    return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
           (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void expect_magic(std::uint32_t found, std::uint32_t expected, const std::filesystem::path& path) {
    if (found != expected) {
        char buf[96];
        std::snprintf(buf, sizeof buf, ": bad magic 0x%08x (expected 0x%08x)", found, expected);
        throw Error(kModule, Errc::bad_magic, path.string() + buf);
    }
}

}  // namespace

DatasetShard synth_classification(const SynthSpec& spec) {
    if (spec.classes < 2) throw Error(kModule, Errc::invalid_argument, "synth: need at least 2 classes");
    if (spec.per_class < 1) throw Error(kModule, Errc::invalid_argument, "synth: per_class must be >= 1");
    if (spec.dim < 1) throw Error(kModule, Errc::invalid_argument, "synth: dim must be >= 1");
    if (!(spec.noise_sigma > 0.0) || !(spec.separation >= 0.0) || !(spec.box_scale >= 1.0)) {
        throw Error(kModule, Errc::invalid_argument, "synth: invalid sigma/separation/box_scale");
    }

    auto rng = make_rng(spec.seed, {0xda7a});
    const double min_dist = spec.separation * spec.noise_sigma;
    const double crowding = std::max(1.0, std::pow(static_cast<double>(spec.classes),
                                                   1.0 / static_cast<double>(spec.dim)));
    const double side = std::max(min_dist, spec.noise_sigma) * spec.box_scale * crowding;
    std::uniform_real_distribution<double> in_box(0.0, side);

    std::vector<std::vector<double>> means;
    constexpr int kMaxAttempts = 100000;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            std::vector<double> m(spec.dim);
            for (double& v : m) v = in_box(rng);
            placed = std::all_of(means.begin(), means.end(), [&](const std::vector<double>& o) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < spec.dim; ++j) d2 += (m[j] - o[j]) * (m[j] - o[j]);
                return std::sqrt(d2) >= min_dist;
            });
            if (placed) means.push_back(std::move(m));
        }
        if (!placed) throw Error(kModule, Errc::invalid_argument, "synth: could not place separated class means");
    }

    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    std::vector<double> features;
    std::vector<std::uint32_t> labels;
    features.reserve(spec.classes * spec.per_class * spec.dim);
    for (std::size_t c = 0; c < spec.classes; ++c) {
        for (std::size_t i = 0; i < spec.per_class; ++i) {
            for (std::size_t j = 0; j < spec.dim; ++j) features.push_back(means[c][j] + noise(rng));
            labels.push_back(static_cast<std::uint32_t>(c));
        }
    }

    const std::size_t rows = labels.size();
    for (std::size_t j = 0; j < spec.dim; ++j) {
        double lo = features[j], hi = features[j];
        for (std::size_t r = 0; r < rows; ++r) {
            lo = std::min(lo, features[r * spec.dim + j]);
            hi = std::max(hi, features[r * spec.dim + j]);
        }
        const double range = hi - lo;
        for (std::size_t r = 0; r < rows; ++r) {
            double& v = features[r * spec.dim + j];
            v = range > 0.0 ? (v - lo) / range : 0.0;
        }
    }
    return DatasetShard(spec.dim, spec.classes, Origin::train, std::move(features), std::move(labels));
}

DatasetShard load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path, const IdxOptions& options) {
    const auto images = read_file(images_path);
    const auto labels = read_file(labels_path);

    expect_magic(read_be32(images, 0, images_path), kImagesMagic, images_path);
    expect_magic(read_be32(labels, 0, labels_path), kLabelsMagic, labels_path);

    const std::size_t count = read_be32(images, 4, images_path);
    const std::size_t rows = read_be32(images, 8, images_path);
    const std::size_t cols = read_be32(images, 12, images_path);
    const std::size_t label_count = read_be32(labels, 4, labels_path);
    if (count != label_count) {
        throw Error(kModule, Errc::count_mismatch,
                    std::to_string(count) + " images but " + std::to_string(label_count) + " labels");
    }
    constexpr std::size_t kImagesHeader = 16;
    constexpr std::size_t kLabelsHeader = 8;
    if (images.size() < kImagesHeader + count * rows * cols) {
        throw Error(kModule, Errc::truncated, images_path.string() + ": pixel data truncated");
    }
    if (labels.size() < kLabelsHeader + count) {
        throw Error(kModule, Errc::truncated, labels_path.string() + ": label data truncated");
    }

    const std::size_t f = options.downsample;
    if (f == 0 || rows % f != 0 || cols % f != 0) {
        throw Error(kModule, Errc::invalid_argument,
                    "downsample factor " + std::to_string(f) + " must divide the image size");
    }
    const std::size_t out_rows = rows / f, out_cols = cols / f;
    const std::size_t dim = out_rows * out_cols;
    const std::size_t n = options.limit > 0 ? std::min(options.limit, count) : count;

    std::vector<std::uint32_t> ys(labels.begin() + kLabelsHeader, labels.begin() + kLabelsHeader + n);
    std::size_t classes = options.class_count;
    if (classes == 0) {
        classes = std::max<std::size_t>(2, *std::max_element(ys.begin(), ys.end()) + 1);
    }

    std::vector<double> xs;
    xs.reserve(n * dim);
    const double norm = 1.0 / (255.0 * static_cast<double>(f * f));
    for (std::size_t item = 0; item < n; ++item) {
        const unsigned char* px = images.data() + kImagesHeader + item * rows * cols;
        for (std::size_t r = 0; r < out_rows; ++r) {
            for (std::size_t c = 0; c < out_cols; ++c) {
                unsigned sum = 0;
                for (std::size_t dr = 0; dr < f; ++dr) {
                    for (std::size_t dc = 0; dc < f; ++dc) sum += px[(r * f + dr) * cols + c * f + dc];
                }
                xs.push_back(sum * norm);
            }
        }
    }
    return DatasetShard(dim, classes, Origin::train, std::move(xs), std::move(ys));
}

void ShardPlan::validate() const {
    if (node_count < 1) throw Error(kModule, Errc::invalid_argument, "node_count must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error(kModule, Errc::invalid_argument, "train_fraction must be in (0, 1)");
    }
    if (!(global_fraction >= 0.0 && global_fraction < 1.0)) {
        throw Error(kModule, Errc::invalid_argument, "global_fraction must be in [0, 1)");
    }
}

ShardIndices plan_shards(std::size_t dataset_size, const ShardPlan& plan, bool hold_out_global) {
    plan.validate();
    std::vector<std::size_t> order(dataset_size);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(plan.seed, {0x5a4d});
    std::shuffle(order.begin(), order.end(), rng);

    ShardIndices out;
    std::size_t held = 0;
    if (hold_out_global && plan.global_fraction > 0.0) {
        held = static_cast<std::size_t>(std::llround(static_cast<double>(dataset_size) * plan.global_fraction));
        held = std::max<std::size_t>(held, 1);
    }
    if (dataset_size < held + plan.node_count) {
        throw Error(kModule, Errc::invalid_argument,
                    "node_count " + std::to_string(plan.node_count) + " exceeds the " +
                        std::to_string(dataset_size - std::min(held, dataset_size)) + " rows available for sharding");
    }
    out.global_val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));

    const std::size_t available = dataset_size - held;
    const std::size_t base = available / plan.node_count;
    const std::size_t extra = available % plan.node_count;
    std::size_t cursor = held;
    for (std::size_t node = 0; node < plan.node_count; ++node) {
        const std::size_t n = base + (node < extra ? 1 : 0);
        std::size_t n_train = n;
        if (n >= 2) {
            n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * plan.train_fraction));
            n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
        }
        NodeIndices idx;
        auto first = order.begin() + static_cast<std::ptrdiff_t>(cursor);
        idx.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
        idx.local_val.assign(first + static_cast<std::ptrdiff_t>(n_train), first + static_cast<std::ptrdiff_t>(n));
        out.nodes.push_back(std::move(idx));
        cursor += n;
    }
    return out;
}

ShardedDataset shard_equal(const DatasetShard& dataset, const ShardPlan& plan,
                           std::optional<DatasetShard> designated_global_val) {
    if (designated_global_val) {
        if (designated_global_val->dim() != dataset.dim() ||
            designated_global_val->class_count() != dataset.class_count()) {
            throw Error(kModule, Errc::dimension_mismatch, "validation set shape differs from training data");
        }
    }
    const auto indices = plan_shards(dataset.size(), plan, !designated_global_val.has_value());
    ShardedDataset out;
    for (const auto& node : indices.nodes) {
        out.nodes.push_back(NodeData{dataset.select(node.train, Origin::train),
                                     dataset.select(node.local_val, Origin::local_val)});
    }
    if (designated_global_val) {
        out.global_val = std::move(*designated_global_val);
        out.global_val.set_origin(Origin::global_val);
    } else {
        out.global_val = dataset.select(indices.global_val, Origin::global_val);
    }
    return out;
}

}  // namespace deltagossip
