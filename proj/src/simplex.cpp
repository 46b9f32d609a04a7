#include "fedheal/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace fedheal {

double ordered_sum(std::span<const double> values) {
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  return sum;
}

bool is_on_simplex(std::span<const double> weights, double tol) {
  if (weights.empty()) {
    return false;
  }
  for (const double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      return false;
    }
  }
  return std::abs(ordered_sum(weights) - 1.0) <= tol;
}

std::vector<double> normalize_simplex(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("normalize_simplex: empty weight vector");
  }
  for (const double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("normalize_simplex: weights must be finite and non-negative");
    }
  }
  const double total = ordered_sum(values);
  if (!(total > 0.0)) {
    throw std::invalid_argument("normalize_simplex: weights sum to zero");
  }

  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) {
    v /= total;
  }

  return out;
}

std::vector<double> project_onto_simplex(std::span<const double> values) {
  if (values.empty()) {
    throw std::invalid_argument("project_onto_simplex: empty vector");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    cumulative += sorted[k];
    const double candidate = (cumulative - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) {
      theta = candidate;
    }
  }

  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::max(0.0, values[i] - theta);
  }
  return out;
}

}  // namespace fedheal
