#include "deltagossip/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "deltagossip/error.hpp"
#include "deltagossip/rng.hpp"

namespace deltagossip {

namespace {

constexpr const char* kModule = "model-core";

void softmax_inplace(std::span<double> z) {
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - peak);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

double log_sum_exp(std::span<const double> z) {
    const double peak = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - peak);
    return peak + std::log(sum);
}

void check_batch(const TrainableModel& model, const Batch& batch) {
    if (batch.size() == 0) throw Error(kModule, Errc::empty_input, "batch is empty");
    if (batch.dim != model.input_dim() || batch.inputs.size() != batch.size() * batch.dim) {
        throw Error(kModule, Errc::dimension_mismatch,
                    "batch dimension " + std::to_string(batch.dim) + " does not match model input " +
                        std::to_string(model.input_dim()));
    }
    for (auto y : batch.labels) {
        if (y >= model.class_count()) {
            throw Error(kModule, Errc::dimension_mismatch,
                        "label " + std::to_string(y) + " outside model class count");
        }
    }
}

// Parameter views of a Perceptron weight vector. Weight matrices are stored
// row-major as [out][in].
struct DenseViews {
    std::span<const double> hidden_w, hidden_b, out_w, out_b;
};

DenseViews views_of(const ModelConfig& cfg, const ParameterVector& w) {
    DenseViews v;
    if (cfg.hidden_dim == 0) {
        v.out_w = w.segment(0);
        v.out_b = w.segment(1);
    } else {
        v.hidden_w = w.segment(0);
        v.hidden_b = w.segment(1);
        v.out_w = w.segment(2);
        v.out_b = w.segment(3);
    }
    return v;
}

void dense_forward(std::span<const double> weight, std::span<const double> bias,
                   std::span<const double> in, std::span<double> out) {
    const std::size_t n_in = in.size();
    for (std::size_t o = 0; o < out.size(); ++o) {
        const double* row = weight.data() + o * n_in;
        double acc = bias[o];
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
        out[o] = acc;
    }
}

}  // namespace

void ModelConfig::validate() const {
    if (input_dim == 0) throw Error(kModule, Errc::invalid_argument, "input_dim must be positive");
    if (class_count < 2) throw Error(kModule, Errc::invalid_argument, "class_count must be >= 2");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(kModule, Errc::invalid_argument, "learning_rate must be positive and finite");
    }
}

TrainableModel::TrainableModel(ParameterVector weights, double learning_rate)
    : weights_(std::move(weights)), learning_rate_(learning_rate) {}

void TrainableModel::set_weights(ParameterVector weights) {
    weights_.require_same_layout(weights, "set_weights");
    weights_ = std::move(weights);
}

Layout perceptron_layout(const ModelConfig& config) {
    config.validate();
    Layout layout;
    if (config.hidden_dim == 0) {
        layout.add("output.weight", config.class_count * config.input_dim)
            .add("output.bias", config.class_count);
    } else {
        layout.add("hidden.weight", config.hidden_dim * config.input_dim)
            .add("hidden.bias", config.hidden_dim)
            .add("output.weight", config.class_count * config.hidden_dim)
            .add("output.bias", config.class_count);
    }
    return layout;
}

ParameterVector init_weights(const ModelConfig& config) {
    ParameterVector w(perceptron_layout(config));
    auto rng = make_rng(config.seed, {0x1417});
    auto fill = [&rng](std::span<double> seg, std::size_t fan_in) {
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-s, s);
        for (double& v : seg) v = dist(rng);
    };
    if (config.hidden_dim == 0) {
        fill(w.segment(0), config.input_dim);
    } else {
        fill(w.segment(0), config.input_dim);
        fill(w.segment(2), config.hidden_dim);
    }
    return w;
}

Perceptron::Perceptron(const ModelConfig& config)
    : TrainableModel(init_weights(config), config.learning_rate), config_(config) {}

Perceptron::Perceptron(const ModelConfig& config, ParameterVector weights)
    : TrainableModel(ParameterVector(perceptron_layout(config)), config.learning_rate),
      config_(config) {
    set_weights(std::move(weights));
}

void Perceptron::class_probabilities(std::span<const double> x, std::span<double> out) const {
    if (x.size() != config_.input_dim || out.size() != config_.class_count) {
        throw Error(kModule, Errc::dimension_mismatch, "class_probabilities: wrong span sizes");
    }
    const auto v = views_of(config_, weights());
    if (config_.hidden_dim == 0) {
        dense_forward(v.out_w, v.out_b, x, out);
    } else {
        std::vector<double> hidden(config_.hidden_dim);
        dense_forward(v.hidden_w, v.hidden_b, x, hidden);
        for (double& h : hidden) h = std::tanh(h);
        dense_forward(v.out_w, v.out_b, hidden, out);
    }
    softmax_inplace(out);
}

LossGradient Perceptron::loss_and_gradient(const Batch& batch) const {
    check_batch(*this, batch);
    const auto& cfg = config_;
    const auto v = views_of(cfg, weights());
    const bool has_hidden = cfg.hidden_dim > 0;

    LossGradient result{0.0, ParameterVector(weights().layout())};
    auto& g = result.grad;
    std::span<double> g_hidden_w, g_hidden_b, g_out_w, g_out_b;
    if (has_hidden) {
        g_hidden_w = g.segment(0);
        g_hidden_b = g.segment(1);
        g_out_w = g.segment(2);
        g_out_b = g.segment(3);
    } else {
        g_out_w = g.segment(0);
        g_out_b = g.segment(1);
    }

    const std::size_t feat = has_hidden ? cfg.hidden_dim : cfg.input_dim;
    std::vector<double> hidden(cfg.hidden_dim);
    std::vector<double> logits(cfg.class_count);
    std::vector<double> d_hidden(cfg.hidden_dim);

    double loss_sum = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const auto x = batch.row(s);
        const auto y = batch.labels[s];
        std::span<const double> features = x;
        if (has_hidden) {
            dense_forward(v.hidden_w, v.hidden_b, x, hidden);
            for (double& h : hidden) h = std::tanh(h);
            features = hidden;
        }
        dense_forward(v.out_w, v.out_b, features, logits);
        loss_sum += log_sum_exp(logits) - logits[y];

        // dL/dz = softmax(z) - onehot(y)
        softmax_inplace(logits);
        logits[y] -= 1.0;
        for (std::size_t c = 0; c < cfg.class_count; ++c) {
            const double dz = logits[c];
            g_out_b[c] += dz;
            double* row = g_out_w.data() + c * feat;
            for (std::size_t j = 0; j < feat; ++j) row[j] += dz * features[j];
        }
        if (has_hidden) {
            for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < cfg.class_count; ++c) {
                    acc += v.out_w[c * feat + j] * logits[c];
                }
                d_hidden[j] = acc * (1.0 - hidden[j] * hidden[j]);
            }
            for (std::size_t j = 0; j < cfg.hidden_dim; ++j) {
                const double dh = d_hidden[j];
                g_hidden_b[j] += dh;
                double* row = g_hidden_w.data() + j * cfg.input_dim;
                for (std::size_t i = 0; i < cfg.input_dim; ++i) row[i] += dh * x[i];
            }
        }
    }

    const double inv = 1.0 / static_cast<double>(batch.size());
    result.loss = loss_sum * inv;
    g *= inv;
    if (!std::isfinite(result.loss) || !g.all_finite()) {
        throw Error(kModule, Errc::non_finite, "non-finite loss or gradient");
    }
    return result;
}

LossGradient loss_and_gradient(const TrainableModel& model, const Batch& batch) {
    return model.loss_and_gradient(batch);
}

ParameterVector sgd_batch_step(TrainableModel& model, const Batch& batch) {
    auto lg = model.loss_and_gradient(batch);
    ParameterVector next = model.weights();
    next.axpy(-model.learning_rate(), lg.grad);
    if (!next.all_finite()) throw Error(kModule, Errc::non_finite, "SGD step produced non-finite weights");
    model.set_weights(next);
    return next;
}

ParameterVector train_epochs(TrainableModel& model, const DatasetShard& shard,
                             std::size_t epochs, std::size_t batch_size,
                             std::uint64_t seed, std::size_t first_epoch) {
    if (epochs == 0) throw Error(kModule, Errc::invalid_argument, "epochs must be >= 1");
    if (batch_size == 0) throw Error(kModule, Errc::invalid_argument, "batch_size must be >= 1");
    if (shard.empty()) throw Error(kModule, Errc::empty_input, "cannot train on an empty shard");
    if (shard.dim() != model.input_dim()) {
        throw Error(kModule, Errc::dimension_mismatch, "shard dimension does not match model");
    }

    const ParameterVector before = model.weights();
    std::vector<std::size_t> order(shard.size());
    for (std::size_t e = first_epoch; e < first_epoch + epochs; ++e) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        auto rng = make_rng(seed, {0x5eed, e});
        std::shuffle(order.begin(), order.end(), rng);
        const DatasetShard permuted = shard.select(order, shard.origin());
        const Batch all = Batch::of(permuted);
        for (std::size_t start = 0; start < all.size(); start += batch_size) {
            const std::size_t n = std::min(batch_size, all.size() - start);
            Batch batch{all.dim, all.inputs.subspan(start * all.dim, n * all.dim),
                        all.labels.subspan(start, n)};
            sgd_batch_step(model, batch);
        }
    }
    // Pin the final weights to before + delta so the delta replays exactly.
    ParameterVector delta = model.weights() - before;
    model.set_weights(before + delta);
    return delta;
}

ParameterVector centralized_reference_train(std::span<const DatasetShard> shards,
                                            const ModelConfig& config,
                                            std::size_t epochs, std::size_t batch_size) {
    if (shards.empty()) throw Error(kModule, Errc::empty_input, "need at least one shard");
    DatasetShard all(shards.front().dim(), shards.front().class_count(), Origin::train);
    for (const auto& s : shards) {
        if (s.dim() != config.input_dim || s.class_count() != shards.front().class_count()) {
            throw Error(kModule, Errc::dimension_mismatch, "shard shapes disagree");
        }
        all.append(s);
    }
    Perceptron model(config);
    train_epochs(model, all, epochs, batch_size, config.seed);
    return model.weights();
}

Evaluation evaluate(const TrainableModel& model, const DatasetShard& dataset) {
    if (dataset.empty()) throw Error(kModule, Errc::empty_input, "cannot evaluate on an empty dataset");
    if (dataset.dim() != model.input_dim()) {
        throw Error(kModule, Errc::dimension_mismatch, "dataset dimension does not match model");
    }
    std::vector<double> probs(model.class_count());
    std::size_t correct = 0;
    double loss = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        model.class_probabilities(dataset.row(i), probs);
        const auto best = static_cast<std::size_t>(
            std::max_element(probs.begin(), probs.end()) - probs.begin());
        const auto y = dataset.label(i);
        if (best == y) ++correct;
        loss -= std::log(std::max(probs[y], 1e-300));
    }
    const double n = static_cast<double>(dataset.size());
    return Evaluation{static_cast<double>(correct) / n, loss / n};
}

}  // namespace deltagossip
