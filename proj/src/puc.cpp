#include "fedheal/puc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fedheal {

double PucHistogram::fraction_at_least(std::size_t threshold) const {
  if (consistency.empty()) {
    return 0.0;
  }
  const auto hits = std::count_if(consistency.begin(), consistency.end(),
                                  [threshold](std::size_t c) { return c >= threshold; });
  return static_cast<double>(hits) / static_cast<double>(consistency.size());
}

double PucHistogram::mean_consistency() const {
  if (consistency.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const auto c : consistency) {
    total += static_cast<double>(c);
  }
  return total / static_cast<double>(consistency.size());
}

std::size_t puc_bin(std::size_t consistency, std::size_t window) {
  return std::min(kPucBins - 1, consistency * kPucBins / window);
}

PucHistogram puc_report(const SignLog& log, std::size_t client, std::size_t window) {
  if (window == 0) {
    throw std::invalid_argument("puc_report: window must be at least 1");
  }
  if (window > log.rounds.size()) {
    throw std::invalid_argument("puc_report: window of " + std::to_string(window) + " rounds exceeds the " +
                                std::to_string(log.rounds.size()) + " logged rounds");
  }
  if (client >= log.num_clients) {
    throw std::invalid_argument("puc_report: client " + std::to_string(client) + " out of range");
  }

  PucHistogram hist;
  hist.client_id = client;
  hist.window = window;
  hist.first_round = log.rounds.size() - window + 1;
  hist.consistency.assign(log.num_params, 0);
  hist.bins.assign(kPucBins, 0);
  for (std::size_t i = 0; i < log.num_params; ++i) {
    std::size_t increments = 0;
    for (std::size_t r = log.rounds.size() - window; r < log.rounds.size(); ++r) {
      increments += log.increment(r, client, i) ? 1 : 0;
    }
    hist.consistency[i] = std::max(increments, window - increments);
    ++hist.bins[puc_bin(hist.consistency[i], window)];
  }
  return hist;
}

PucHistogram puc_report(const ExperimentReport& report, std::size_t client, std::size_t window) {
  if (!report.sign_log) {
    throw std::invalid_argument(
        "puc_report: the run did not record update signs; rerun with log_signs enabled "
        "(config key \"log_signs\": true or the CLI's puc-report subcommand)");
  }
  return puc_report(*report.sign_log, client, window);
}

std::vector<double> binomial_consistency_null(std::size_t window) {
  // log C(W, k) - W log 2 via lgamma keeps large windows finite.
  std::vector<double> pmf(window + 1, 0.0);
  const double w = static_cast<double>(window);
  for (std::size_t k = 0; k <= window; ++k) {
    const double kk = static_cast<double>(k);
    const double log_p = std::lgamma(w + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(w - kk + 1.0) - w * std::log(2.0);
    pmf[std::max(k, window - k)] += std::exp(log_p);
  }
  return pmf;
}

double binomial_consistency_tail(std::size_t window, std::size_t threshold) {
  const auto pmf = binomial_consistency_null(window);
  double tail = 0.0;
  for (std::size_t k = threshold; k <= window; ++k) {
    tail += pmf[k];
  }
  return tail;
}

std::vector<double> binomial_bin_null(std::size_t window) {
  const auto pmf = binomial_consistency_null(window);
  std::vector<double> bins(kPucBins, 0.0);
  for (std::size_t k = 0; k <= window; ++k) {
    bins[puc_bin(k, window)] += pmf[k];
  }
  return bins;
}

}  // namespace fedheal
