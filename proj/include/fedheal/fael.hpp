#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedheal/types.hpp"

namespace fedheal {

/// Client weights and their momentum terms.
struct AggregationState {
  std::vector<double> p;        // on the simplex
  std::vector<double> delta_p;  // entrywise >= 0
  double beta = 0.4;

  bool operator==(const AggregationState&) const = default;
};

/// p = normalized initial weights, delta_p = 0. Throws ConfigError if beta
/// is outside [0, 1].
AggregationState make_aggregation_state(std::span<const double> initial_weights, double beta);

/// Squared L2 norm of the update with masked-out coordinates zeroed.
double masked_update_distance(std::span<const double> delta_w, std::span<const std::uint8_t> mask_row);

/// One momentum step on the client weights:
///   delta_p <- (1 - beta) delta_p + beta d / sum(d)
///   p <- normalize(p + delta_p)
/// If every distance is zero the state is returned unchanged.
///
/// Throws DimensionError on length mismatch and std::invalid_argument on
/// negative or non-finite distances.
AggregationState update_client_weights(const AggregationState& state, std::span<const double> distances);

/// Population variance over clients of ||U - w_m||^2 where
/// U = sum_m weights[m] w_m.
double distance_variance(std::span<const double> weights, std::span<const ParamVector> local_models);

struct OracleResult {
  std::vector<double> weights;
  double variance = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes distance_variance over the simplex by projected gradient
/// descent with Armijo backtracking. The objective is a quartic in the
/// weights and need not be convex, so the descent is restarted from the
/// uniform point, every vertex and each entry of `extra_starts`; the best
/// iterate wins. Since every run is monotone, the result is never worse
/// than any start point.
///
/// `step` is the initial trial step; pass 0 to derive it from a bound on the
/// gradient's Lipschitz constant. `converged` is false when some restart hit
/// the iteration cap before its projected-gradient step fell below 1e-12.
///
/// Intended as a reference for tests and diagnostics. Cost is O(M^2 G) for
/// the Gram matrix plus O(M^2) per iteration.
OracleResult variance_oracle(std::span<const ParamVector> local_models, std::size_t iterations, double step,
                             std::span<const std::vector<double>> extra_starts = {});

}  // namespace fedheal
