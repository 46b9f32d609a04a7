#pragma once

#include <cstddef>
#include <vector>

#include "fedheal/orchestrator.hpp"

namespace fedheal {

inline constexpr std::size_t kPucBins = 10;

/// How consistently one client pushed each parameter in one direction over
/// the last `window` logged rounds.
struct PucHistogram {
  std::size_t client_id = 0;
  std::size_t window = 0;
  std::size_t first_round = 0;  // 1-based round where the window starts
  /// consistency[i] = max(#increments, #decrements) of parameter i.
  std::vector<std::size_t> consistency;
  /// bins[b] counts parameters whose consistency / window falls in
  /// [b/10, (b+1)/10); a full window lands in the last bin.
  std::vector<std::size_t> bins;

  /// Share of parameters with consistency >= `threshold`.
  double fraction_at_least(std::size_t threshold) const;
  double mean_consistency() const;
};

std::size_t puc_bin(std::size_t consistency, std::size_t window);

/// Throws std::invalid_argument when window is zero or exceeds the logged
/// rounds, or the client index is out of range.
PucHistogram puc_report(const SignLog& log, std::size_t client, std::size_t window);

/// Throws std::invalid_argument with guidance when the report was produced
/// without sign logging.
PucHistogram puc_report(const ExperimentReport& report, std::size_t client, std::size_t window);

/// Reference distribution under IID fair-coin signs: entry k is
/// P(max(K, W - K) = k) with K ~ Binomial(W, 1/2).
std::vector<double> binomial_consistency_null(std::size_t window);

/// P(max(K, W - K) >= threshold) under the same null.
double binomial_consistency_tail(std::size_t window, std::size_t threshold);

/// Null probabilities aggregated into the histogram's bins.
std::vector<double> binomial_bin_null(std::size_t window);

}  // namespace fedheal
