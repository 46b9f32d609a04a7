#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fedheal/model.hpp"
#include "fedheal/orchestrator.hpp"
#include "fedheal/rng.hpp"

namespace fedheal::testing {

inline Dataset random_dataset(CounterRng& rng, std::size_t n, std::size_t dim, std::size_t classes) {
  Dataset data;
  data.feature_dim = dim;
  std::vector<double> x(dim);
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& v : x) {
      v = 2.0 * rng.gaussian();
    }
    data.push_back(x, static_cast<int>(rng.below(classes)));
  }
  return data;
}

inline ParamVector random_params(CounterRng& rng, std::size_t g, double scale = 0.7) {
  ParamVector w(g);
  for (auto& v : w) {
    v = scale * rng.gaussian();
  }
  return w;
}

// Central difference of the mean loss, one coordinate at a time.
inline ParamVector finite_difference_grad(const ParamVector& params, const Dataset& data, const ModelArch& arch,
                                          double h = 1e-5) {
  ParamVector grad(params.size());
  ParamVector probe = params;
  for (std::size_t i = 0; i < params.size(); ++i) {
    probe[i] = params[i] + h;
    const double up = loss_and_grad(probe, data, arch).loss;
    probe[i] = params[i] - h;
    const double down = loss_and_grad(probe, data, arch).loss;
    probe[i] = params[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Relative agreement with a floor of 1e-6 on the scale, so coordinates whose
// true derivative is essentially zero are judged against rounding noise.
inline bool relatively_close(double a, double b, double rel) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) <= rel * scale;
}

// A four-client federation that trains in milliseconds.
inline ExperimentConfig small_config(Method method, std::uint64_t seed) {
  ExperimentConfig config = default_experiment_config(seed);
  config.method = method;
  config.federation.num_domains = 2;
  config.federation.clients_per_domain = 2;
  config.federation.samples_per_client = 16;
  config.federation.test_samples_per_domain = 40;
  config.federation.feature_dim = 4;
  config.federation.num_classes = 2;
  DefaultDomainOptions options;
  options.hard_domain = 1;
  config.federation.domain_specs = default_domain_specs(2, 4, 2, seed, options);
  config.arch = ModelArch{4, {5}, 2};
  config.opt.local_epochs = 2;
  config.opt.batch_size = 8;
  config.rounds = 8;
  return config;
}

}  // namespace fedheal::testing
