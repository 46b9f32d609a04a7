#include "fedheal/fael.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "fedheal/simplex.hpp"

namespace fedheal {

namespace {

void check_models(std::span<const ParamVector> models) {
  if (models.empty()) {
    throw DimensionError("at least one local model is required");
  }
  for (const auto& w : models) {
    if (w.size() != models.front().size()) {
      throw DimensionError("local models differ in length");
    }
  }
}

double population_variance(std::span<const double> values) {
  const double mean = ordered_sum(values) / static_cast<double>(values.size());
  double acc = 0.0;
  for (const double v : values) {
    acc += (v - mean) * (v - mean);
  }
  return acc / static_cast<double>(values.size());
}

// The variance objective expressed through the Gram matrix of the centered
// models. Translating every model by the same vector leaves all distances
// unchanged because the weights sum to one.
class GramObjective {
 public:
  explicit GramObjective(std::span<const ParamVector> models) : m_(models.size()), gram_(m_, m_) {
    const std::size_t g = models.front().size();
    std::vector<double> centroid(g, 0.0);
    for (const auto& w : models) {
      for (std::size_t i = 0; i < g; ++i) {
        centroid[i] += w[i];
      }
    }
    for (auto& c : centroid) {
      c /= static_cast<double>(m_);
    }
    for (std::size_t a = 0; a < m_; ++a) {
      for (std::size_t b = a; b < m_; ++b) {
        double dot = 0.0;
        for (std::size_t i = 0; i < g; ++i) {
          dot += (models[a][i] - centroid[i]) * (models[b][i] - centroid[i]);
        }
        gram_(a, b) = dot;
        gram_(b, a) = dot;
      }
    }
  }

  std::size_t size() const { return m_; }

  // Distances d_m = p'Kp - 2 (Kp)_m + K_mm.
  std::vector<double> distances(std::span<const double> p) const {
    std::vector<double> kp(m_, 0.0);
    for (std::size_t a = 0; a < m_; ++a) {
      for (std::size_t b = 0; b < m_; ++b) {
        kp[a] += gram_(a, b) * p[b];
      }
    }
    double pkp = 0.0;
    for (std::size_t a = 0; a < m_; ++a) {
      pkp += p[a] * kp[a];
    }
    std::vector<double> d(m_);
    for (std::size_t a = 0; a < m_; ++a) {
      d[a] = pkp - 2.0 * kp[a] + gram_(a, a);
    }
    return d;
  }

  double value(std::span<const double> p) const { return population_variance(distances(p)); }

  // dVar/dp_k = -(4/M) sum_m (d_m - mean d) K_mk; the p'Kp part cancels.
  std::vector<double> gradient(std::span<const double> p) const {
    const auto d = distances(p);
    const double mean = ordered_sum(d) / static_cast<double>(m_);
    std::vector<double> grad(m_, 0.0);
    for (std::size_t k = 0; k < m_; ++k) {
      for (std::size_t a = 0; a < m_; ++a) {
        grad[k] += (d[a] - mean) * gram_(a, k);
      }
      grad[k] *= -4.0 / static_cast<double>(m_);
    }
    return grad;
  }

  double frobenius_sq() const {
    double acc = 0.0;
    for (const double v : gram_.data()) {
      acc += v * v;
    }
    return acc;
  }

 private:
  std::size_t m_;
  Matrix gram_;
};

struct DescentRun {
  std::vector<double> weights;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

DescentRun projected_descent(const GramObjective& objective, std::vector<double> start, std::size_t max_iterations,
                             double initial_step) {
  DescentRun run{project_onto_simplex(start), 0.0, 0, false};
  run.value = objective.value(run.weights);
  double step = initial_step;

  for (; run.iterations < max_iterations; ++run.iterations) {
    const auto grad = objective.gradient(run.weights);
    bool accepted = false;
    double moved = 0.0;
    for (int attempt = 0; attempt < 80; ++attempt) {
      std::vector<double> trial(run.weights.size());
      for (std::size_t k = 0; k < trial.size(); ++k) {
        trial[k] = run.weights[k] - step * grad[k];
      }
      trial = project_onto_simplex(trial);

      double linear = 0.0;
      double dist_sq = 0.0;
      for (std::size_t k = 0; k < trial.size(); ++k) {
        const double diff = trial[k] - run.weights[k];
        linear += grad[k] * diff;
        dist_sq += diff * diff;
      }
      const double trial_value = objective.value(trial);
      // Quadratic upper-bound test; guarantees monotone descent.
      if (trial_value <= run.value + linear + dist_sq / (2.0 * step) && trial_value <= run.value) {
        moved = std::sqrt(dist_sq);
        run.weights = std::move(trial);
        run.value = trial_value;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || moved < 1e-12) {
      run.converged = true;
      break;
    }
    step *= 2.0;
  }
  return run;
}

}  // namespace

AggregationState make_aggregation_state(std::span<const double> initial_weights, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("beta", "must lie in [0, 1]");
  }
  AggregationState state;
  state.p = normalize_simplex(initial_weights);
  state.delta_p.assign(state.p.size(), 0.0);
  state.beta = beta;
  return state;
}

double masked_update_distance(std::span<const double> delta_w, std::span<const std::uint8_t> mask_row) {
  if (delta_w.size() != mask_row.size()) {
    throw DimensionError("masked_update_distance: update has " + std::to_string(delta_w.size()) +
                         " entries, mask has " + std::to_string(mask_row.size()));
  }
  double d = 0.0;
  for (std::size_t i = 0; i < delta_w.size(); ++i) {
    if (mask_row[i] != 0) {
      d += delta_w[i] * delta_w[i];
    }
  }
  return d;
}

AggregationState update_client_weights(const AggregationState& state, std::span<const double> distances) {
  const std::size_t m = state.p.size();
  if (distances.size() != m || state.delta_p.size() != m) {
    throw DimensionError("update_client_weights: expected " + std::to_string(m) + " distances");
  }
  for (const double d : distances) {
    if (!(d >= 0.0) || !std::isfinite(d)) {
      throw std::invalid_argument("update_client_weights: distances must be finite and non-negative");
    }
  }
  const double total = ordered_sum(distances);
  if (total == 0.0) {
    return state;
  }

  AggregationState next = state;
  std::vector<double> unnormalized(m);
  for (std::size_t k = 0; k < m; ++k) {
    next.delta_p[k] = (1.0 - state.beta) * state.delta_p[k] + state.beta * (distances[k] / total);
    unnormalized[k] = state.p[k] + next.delta_p[k];
  }
  // A zero increment leaves p on the simplex already; dividing by its
  // rounded sum would only add drift.
  if (std::any_of(next.delta_p.begin(), next.delta_p.end(), [](double v) { return v != 0.0; })) {
    next.p = normalize_simplex(unnormalized);
  }
  return next;
}

double distance_variance(std::span<const double> weights, std::span<const ParamVector> local_models) {
  check_models(local_models);
  if (weights.size() != local_models.size()) {
    throw DimensionError("distance_variance: one weight per local model is required");
  }
  const std::size_t g = local_models.front().size();
  std::vector<double> global(g, 0.0);
  for (std::size_t m = 0; m < local_models.size(); ++m) {
    for (std::size_t i = 0; i < g; ++i) {
      global[i] += weights[m] * local_models[m][i];
    }
  }
  std::vector<double> distances(local_models.size(), 0.0);
  for (std::size_t m = 0; m < local_models.size(); ++m) {
    for (std::size_t i = 0; i < g; ++i) {
      const double diff = global[i] - local_models[m][i];
      distances[m] += diff * diff;
    }
  }
  return population_variance(distances);
}

OracleResult variance_oracle(std::span<const ParamVector> local_models, std::size_t iterations, double step,
                             std::span<const std::vector<double>> extra_starts) {
  check_models(local_models);
  const std::size_t m = local_models.size();
  if (m == 1) {
    return {{1.0}, 0.0, 0, true};
  }

  const GramObjective objective(local_models);
  if (!(step > 0.0)) {
    // The gradient is a cubic in p; on the simplex its Lipschitz constant is
    // bounded by a small multiple of ||K||_F^2.
    step = 1.0 / (16.0 * objective.frobenius_sq() + std::numeric_limits<double>::min());
  }

  std::vector<std::vector<double>> starts;
  starts.emplace_back(m, 1.0 / static_cast<double>(m));
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<double> vertex(m, 0.0);
    vertex[k] = 1.0;
    starts.push_back(std::move(vertex));
  }
  for (const auto& s : extra_starts) {
    if (s.size() != m) {
      throw DimensionError("variance_oracle: start point has the wrong length");
    }
    starts.push_back(s);
  }

  OracleResult best;
  best.variance = std::numeric_limits<double>::infinity();
  best.converged = true;
  for (const auto& start : starts) {
    auto run = projected_descent(objective, start, iterations, step);
    best.iterations += run.iterations;
    best.converged = best.converged && run.converged;
    const double exact = distance_variance(run.weights, local_models);
    if (exact < best.variance) {
      best.variance = exact;
      best.weights = std::move(run.weights);
    }
  }
  return best;
}

}  // namespace fedheal
