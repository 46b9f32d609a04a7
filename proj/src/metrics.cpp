#include "fedheal/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fedheal/types.hpp"

namespace fedheal {

std::string_view to_string(StdConvention convention) {
  return convention == StdConvention::kSample ? "sample" : "population";
}

StdConvention parse_std_convention(std::string_view text) {
  if (text == "population") {
    return StdConvention::kPopulation;
  }
  if (text == "sample") {
    return StdConvention::kSample;
  }
  throw ConfigError("std_convention", "must be \"population\" or \"sample\"");
}

FairnessMetrics compute_metrics(std::span<const std::vector<double>> per_domain_histories,
                                StdConvention convention) {
  if (per_domain_histories.empty()) {
    throw std::invalid_argument("compute_metrics: no domains");
  }
  FairnessMetrics metrics;
  for (std::size_t d = 0; d < per_domain_histories.size(); ++d) {
    const auto& history = per_domain_histories[d];
    if (history.size() < kFinalWindow) {
      throw std::invalid_argument("compute_metrics: domain " + std::to_string(d) + " has " +
                                  std::to_string(history.size()) + " evaluations, need at least " +
                                  std::to_string(kFinalWindow));
    }
    double sum = 0.0;
    for (std::size_t k = history.size() - kFinalWindow; k < history.size(); ++k) {
      sum += history[k];
    }
    metrics.per_domain.push_back(sum / static_cast<double>(kFinalWindow));
  }

  const auto domains = static_cast<double>(metrics.per_domain.size());
  double total = 0.0;
  for (const double s : metrics.per_domain) {
    total += s;
  }
  metrics.avg = total / domains;

  double squares = 0.0;
  for (const double s : metrics.per_domain) {
    squares += (s - metrics.avg) * (s - metrics.avg);
  }
  const double divisor = convention == StdConvention::kSample ? domains - 1.0 : domains;
  metrics.std = divisor > 0.0 ? std::sqrt(squares / divisor) : 0.0;
  return metrics;
}

}  // namespace fedheal
