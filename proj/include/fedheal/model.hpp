#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedheal/types.hpp"

namespace fedheal {

/// Dense classifier shape. `hidden_dims` may be empty (softmax regression).
///
/// Flattened parameter layout, layer by layer from the input side:
///   W_0 (hidden_dims[0] x input_dim, row-major: one row per output unit),
///   b_0 (hidden_dims[0]), W_1, b_1, ..., W_L (num_classes x last), b_L.
/// Hidden layers use tanh; the output layer feeds a softmax.
struct ModelArch {
  std::size_t input_dim = 8;
  std::vector<std::size_t> hidden_dims{16};
  std::size_t num_classes = 4;

  bool operator==(const ModelArch&) const = default;
};

/// Throws ConfigError naming the first invalid field.
void validate(const ModelArch& arch);

/// Total scalar parameter count G.
std::size_t parameter_count(const ModelArch& arch);

struct OptimizerConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  std::size_t batch_size = 16;
  std::size_t local_epochs = 5;

  bool operator==(const OptimizerConfig&) const = default;
};

/// local_epochs = 0 is accepted (no-op training).
void validate(const OptimizerConfig& opt);

/// Labeled samples stored row-major: features has size() * feature_dim entries.
struct Dataset {
  std::size_t feature_dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::span<const double> sample(std::size_t n) const {
    return {features.data() + n * feature_dim, feature_dim};
  }
  void push_back(std::span<const double> x, int label);

  bool operator==(const Dataset&) const = default;
};

struct LossAndGrad {
  double loss = 0.0;
  ParamVector grad;
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
ParamVector init_model(const ModelArch& arch, std::uint64_t seed);

/// Mean cross-entropy over the batch and its gradient with respect to the
/// flat parameters.
LossAndGrad loss_and_grad(std::span<const double> params, const Dataset& batch, const ModelArch& arch);

/// Same, restricted to the listed sample indices.
LossAndGrad loss_and_grad(std::span<const double> params, const Dataset& data,
                          std::span<const std::size_t> indices, const ModelArch& arch);

/// Output logits for one sample.
std::vector<double> predict_logits(std::span<const double> params, std::span<const double> x,
                                   const ModelArch& arch);

/// Argmax class for one sample; ties go to the lowest class index.
int predict(std::span<const double> params, std::span<const double> x, const ModelArch& arch);

/// `local_epochs` passes of mini-batch SGD starting from `global`, with
/// heavy-ball momentum and L2 weight decay folded into the gradient:
///   g = grad + weight_decay * w;  v = momentum * v + g;  w -= lr * v.
/// The velocity starts at zero on every call. Each epoch visits a fresh
/// permutation drawn from derive_key(seed, {epoch}); the last batch of an
/// epoch may be short.
///
/// Throws std::invalid_argument on empty data, std::runtime_error if the
/// parameters become non-finite.
ParamVector local_train(std::span<const double> global, const Dataset& data, const OptimizerConfig& opt,
                        const ModelArch& arch, std::uint64_t seed);

/// Top-1 accuracy in [0, 1].
double evaluate(std::span<const double> params, const Dataset& dataset, const ModelArch& arch);

}  // namespace fedheal
