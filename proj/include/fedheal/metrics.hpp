#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fedheal {

/// Divisor for the spread of per-domain scores: number of domains
/// (population) or number of domains minus one (sample).
enum class StdConvention { kPopulation, kSample };

std::string_view to_string(StdConvention convention);
/// Accepts "population" or "sample"; throws ConfigError otherwise.
StdConvention parse_std_convention(std::string_view text);

/// Number of trailing evaluations averaged into a domain's final score.
inline constexpr std::size_t kFinalWindow = 5;

struct FairnessMetrics {
  double avg = 0.0;
  double std = 0.0;
  std::vector<double> per_domain;  // mean of each domain's last five evaluations

  bool operator==(const FairnessMetrics&) const = default;
};

/// `per_domain_histories[d]` lists domain d's accuracies in evaluation
/// order. Each domain scores the mean of its last five entries; AVG and STD
/// are taken across domains.
///
/// Throws std::invalid_argument if there are no domains or a history has
/// fewer than five entries.
FairnessMetrics compute_metrics(std::span<const std::vector<double>> per_domain_histories,
                                StdConvention convention = StdConvention::kPopulation);

}  // namespace fedheal
