#include "fedheal/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedheal/rng.hpp"

namespace fedheal {

namespace {

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

std::vector<Layer> layout(const ModelArch& arch) {
  std::vector<Layer> layers;
  std::size_t in = arch.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    Layer layer{in, out, offset, offset + in * out};
    offset = layer.bias_offset + out;
    layers.push_back(layer);
    in = out;
  };
  for (const auto h : arch.hidden_dims) {
    add(h);
  }
  add(arch.num_classes);
  return layers;
}

void check_params(std::span<const double> params, const ModelArch& arch) {
  if (params.size() != parameter_count(arch)) {
    throw DimensionError("parameter vector has length " + std::to_string(params.size()) + ", architecture needs " +
                         std::to_string(parameter_count(arch)));
  }
}

void check_features(const Dataset& data, const ModelArch& arch) {
  if (data.feature_dim != arch.input_dim) {
    throw DimensionError("dataset feature dimension " + std::to_string(data.feature_dim) +
                         " does not match model input_dim " + std::to_string(arch.input_dim));
  }
}

// Per-sample scratch space reused across a batch.
struct Workspace {
  std::vector<std::vector<double>> activations;  // activations[0] is the input
  std::vector<std::vector<double>> deltas;

  explicit Workspace(const std::vector<Layer>& layers) {
    activations.resize(layers.size() + 1);
    deltas.resize(layers.size());
    activations[0].resize(layers.front().in);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      activations[l + 1].resize(layers[l].out);
      deltas[l].resize(layers[l].out);
    }
  }
};

// Fills ws.activations; the last entry holds the raw logits.
void forward(std::span<const double> params, std::span<const double> x, const std::vector<Layer>& layers,
             Workspace& ws) {
  std::copy(x.begin(), x.end(), ws.activations[0].begin());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    const auto& input = ws.activations[l];
    auto& output = ws.activations[l + 1];
    const bool hidden = l + 1 < layers.size();
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = params.data() + layer.weight_offset + o * layer.in;
      double z = params[layer.bias_offset + o];
      for (std::size_t k = 0; k < layer.in; ++k) {
        z += w[k] * input[k];
      }
      output[o] = hidden ? std::tanh(z) : z;
    }
  }
}

// Softmax cross-entropy of the logits in place: returns the loss and leaves
// softmax(logits) - onehot(label) in `delta`.
double softmax_cross_entropy(std::span<const double> logits, int label, std::span<double> delta) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double normalizer = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    delta[c] = std::exp(logits[c] - peak);
    normalizer += delta[c];
  }
  const double log_normalizer = std::log(normalizer) + peak;
  for (auto& d : delta) {
    d /= normalizer;
  }
  const auto y = static_cast<std::size_t>(label);
  delta[y] -= 1.0;
  return log_normalizer - logits[y];
}

void check_label(int label, const ModelArch& arch) {
  if (label < 0 || static_cast<std::size_t>(label) >= arch.num_classes) {
    throw DimensionError("label " + std::to_string(label) + " outside [0, " + std::to_string(arch.num_classes) + ")");
  }
}

}  // namespace

void validate(const ModelArch& arch) {
  if (arch.input_dim == 0) {
    throw ConfigError("arch.input_dim", "must be a positive integer");
  }
  for (const auto h : arch.hidden_dims) {
    if (h == 0) {
      throw ConfigError("arch.hidden_dims", "entries must be positive integers");
    }
  }
  if (arch.num_classes < 2) {
    throw ConfigError("arch.num_classes", "must be >= 2");
  }
}

std::size_t parameter_count(const ModelArch& arch) {
  std::size_t count = 0;
  std::size_t in = arch.input_dim;
  for (const auto h : arch.hidden_dims) {
    count += in * h + h;
    in = h;
  }
  return count + in * arch.num_classes + arch.num_classes;
}

void validate(const OptimizerConfig& opt) {
  if (!(opt.learning_rate >= 0.0) || !std::isfinite(opt.learning_rate)) {
    throw ConfigError("optimizer.learning_rate", "must be a finite non-negative real");
  }
  if (!(opt.momentum >= 0.0 && opt.momentum < 1.0)) {
    throw ConfigError("optimizer.momentum", "must lie in [0, 1)");
  }
  if (!(opt.weight_decay >= 0.0) || !std::isfinite(opt.weight_decay)) {
    throw ConfigError("optimizer.weight_decay", "must be a finite non-negative real");
  }
  if (opt.batch_size == 0) {
    throw ConfigError("optimizer.batch_size", "must be a positive integer");
  }
}

void Dataset::push_back(std::span<const double> x, int label) {
  if (x.size() != feature_dim) {
    throw DimensionError("sample has " + std::to_string(x.size()) + " features, dataset expects " +
                         std::to_string(feature_dim));
  }
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

ParamVector init_model(const ModelArch& arch, std::uint64_t seed) {
  validate(arch);
  ParamVector params(parameter_count(arch), 0.0);
  CounterRng rng(derive_key(seed, {0x1A17ULL}));
  for (const Layer& layer : layout(arch)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
      params[layer.weight_offset + k] = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  return params;
}

LossAndGrad loss_and_grad(std::span<const double> params, const Dataset& batch, const ModelArch& arch) {
  std::vector<std::size_t> all(batch.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return loss_and_grad(params, batch, all, arch);
}

LossAndGrad loss_and_grad(std::span<const double> params, const Dataset& data, std::span<const std::size_t> indices,
                          const ModelArch& arch) {
  check_params(params, arch);
  check_features(data, arch);
  if (indices.empty()) {
    throw std::invalid_argument("loss_and_grad: empty batch");
  }

  const auto layers = layout(arch);
  Workspace ws(layers);
  LossAndGrad result{0.0, ParamVector(params.size(), 0.0)};
  auto& grad = result.grad;

  for (const auto n : indices) {
    if (n >= data.size()) {
      throw DimensionError("loss_and_grad: sample index out of range");
    }
    check_label(data.labels[n], arch);
    forward(params, data.sample(n), layers, ws);
    result.loss += softmax_cross_entropy(ws.activations.back(), data.labels[n], ws.deltas.back());

    for (std::size_t l = layers.size(); l-- > 0;) {
      const Layer& layer = layers[l];
      const auto& input = ws.activations[l];
      const auto& delta = ws.deltas[l];
      for (std::size_t o = 0; o < layer.out; ++o) {
        double* gw = grad.data() + layer.weight_offset + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) {
          gw[k] += delta[o] * input[k];
        }
        grad[layer.bias_offset + o] += delta[o];
      }
      if (l == 0) {
        break;
      }
      // Back through W_l and the tanh of the previous layer.
      auto& prev_delta = ws.deltas[l - 1];
      std::fill(prev_delta.begin(), prev_delta.end(), 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* w = params.data() + layer.weight_offset + o * layer.in;
        for (std::size_t k = 0; k < layer.in; ++k) {
          prev_delta[k] += w[k] * delta[o];
        }
      }
      for (std::size_t k = 0; k < layer.in; ++k) {
        prev_delta[k] *= 1.0 - input[k] * input[k];
      }
    }
  }

  const double scale = 1.0 / static_cast<double>(indices.size());
  result.loss *= scale;
  for (auto& g : grad) {
    g *= scale;
  }
  return result;
}

std::vector<double> predict_logits(std::span<const double> params, std::span<const double> x, const ModelArch& arch) {
  check_params(params, arch);
  if (x.size() != arch.input_dim) {
    throw DimensionError("sample feature dimension does not match model input_dim");
  }
  const auto layers = layout(arch);
  Workspace ws(layers);
  forward(params, x, layers, ws);
  return ws.activations.back();
}

int predict(std::span<const double> params, std::span<const double> x, const ModelArch& arch) {
  const auto logits = predict_logits(params, x, arch);
  // max_element returns the first maximum, i.e. the lowest class index.
  return static_cast<int>(std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
}

ParamVector local_train(std::span<const double> global, const Dataset& data, const OptimizerConfig& opt,
                        const ModelArch& arch, std::uint64_t seed) {
  check_params(global, arch);
  check_features(data, arch);
  validate(opt);
  if (data.empty()) {
    throw std::invalid_argument("local_train: client dataset is empty");
  }

  ParamVector w(global.begin(), global.end());
  ParamVector velocity(w.size(), 0.0);
  std::vector<std::size_t> order(data.size());

  for (std::size_t epoch = 0; epoch < opt.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    CounterRng rng(derive_key(seed, {epoch}));
    rng.shuffle(std::span<std::size_t>(order));

    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t stop = std::min(order.size(), start + opt.batch_size);
      const auto batch = std::span<const std::size_t>(order).subspan(start, stop - start);
      const auto step = loss_and_grad(w, data, batch, arch);
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double g = step.grad[i] + opt.weight_decay * w[i];
        velocity[i] = opt.momentum * velocity[i] + g;
        w[i] -= opt.learning_rate * velocity[i];
      }
    }
  }

  for (const double v : w) {
    if (!std::isfinite(v)) {
      throw std::runtime_error("local_train: parameters diverged to a non-finite value");
    }
  }
  return w;
}

double evaluate(std::span<const double> params, const Dataset& dataset, const ModelArch& arch) {
  check_params(params, arch);
  check_features(dataset, arch);
  if (dataset.empty()) {
    throw std::invalid_argument("evaluate: dataset is empty");
  }
  const auto layers = layout(arch);
  Workspace ws(layers);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < dataset.size(); ++n) {
    forward(params, dataset.sample(n), layers, ws);
    const auto& logits = ws.activations.back();
    const auto best = std::distance(logits.begin(), std::max_element(logits.begin(), logits.end()));
    if (best == dataset.labels[n]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

}  // namespace fedheal
