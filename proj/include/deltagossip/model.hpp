#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "deltagossip/parameter_vector.hpp"
#include "deltagossip/shard.hpp"

namespace deltagossip {

struct ModelConfig {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;  // 0 selects softmax regression
    std::size_t class_count = 0;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

// Non-owning view of S labelled rows.
struct Batch {
    std::size_t dim = 0;
    std::span<const double> inputs;
    std::span<const std::uint32_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return inputs.subspan(i * dim, dim); }

    static Batch of(const DatasetShard& shard) {
        return Batch{shard.dim(), shard.features(), shard.labels()};
    }
};

struct LossGradient {
    double loss = 0.0;  // mean over the batch
    ParameterVector grad;
};

// A differentiable classifier whose state is a single ParameterVector. The
// layout is fixed when the model is constructed.
class TrainableModel {
public:
    virtual ~TrainableModel() = default;

    const ParameterVector& weights() const noexcept { return weights_; }
    void set_weights(ParameterVector weights);
    double learning_rate() const noexcept { return learning_rate_; }

    virtual std::size_t input_dim() const = 0;
    virtual std::size_t class_count() const = 0;

    virtual LossGradient loss_and_gradient(const Batch& batch) const = 0;

    // Writes class_count() probabilities for one input row into `out`.
    virtual void class_probabilities(std::span<const double> x, std::span<double> out) const = 0;

protected:
    TrainableModel(ParameterVector weights, double learning_rate);
    TrainableModel(const TrainableModel&) = default;
    TrainableModel& operator=(const TrainableModel&) = default;

private:
    ParameterVector weights_;
    double learning_rate_;
};

// Dense classifier: softmax regression when hidden_dim == 0, otherwise one
// tanh hidden layer followed by a softmax output layer.
class Perceptron final : public TrainableModel {
public:
    explicit Perceptron(const ModelConfig& config);
    Perceptron(const ModelConfig& config, ParameterVector weights);

    const ModelConfig& config() const noexcept { return config_; }

    std::size_t input_dim() const override { return config_.input_dim; }
    std::size_t class_count() const override { return config_.class_count; }

    LossGradient loss_and_gradient(const Batch& batch) const override;
    void class_probabilities(std::span<const double> x, std::span<double> out) const override;

private:
    ModelConfig config_;
};

Layout perceptron_layout(const ModelConfig& config);

// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
ParameterVector init_weights(const ModelConfig& config);

LossGradient loss_and_gradient(const TrainableModel& model, const Batch& batch);

// One descent step w <- w - lr * grad. Returns the new weights.
ParameterVector sgd_batch_step(TrainableModel& model, const Batch& batch);

// Mini-batch SGD for `epochs` passes over `shard`. Epoch e (counting from
// first_epoch) visits rows in a permutation derived from (seed, e). Returns
// the weight delta; the model keeps the trained weights.
ParameterVector train_epochs(TrainableModel& model, const DatasetShard& shard,
                             std::size_t epochs, std::size_t batch_size,
                             std::uint64_t seed, std::size_t first_epoch = 0);

// Trains one fresh model on the concatenation of all shards, shuffled with
// config.seed. Serves as the idealised all-nodes-share-one-model reference.
ParameterVector centralized_reference_train(std::span<const DatasetShard> shards,
                                            const ModelConfig& config,
                                            std::size_t epochs, std::size_t batch_size);

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

// Argmax accuracy (ties go to the lowest class index) and mean cross-entropy.
Evaluation evaluate(const TrainableModel& model, const DatasetShard& dataset);

}  // namespace deltagossip
