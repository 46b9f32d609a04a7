#include "fedheal/orchestrator.hpp"

#include <fmt/format.h>

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fedheal/parallel.hpp"
#include "fedheal/rng.hpp"
#include "fedheal/simplex.hpp"

namespace fedheal {

namespace {

constexpr std::uint64_t kInitSalt = 0x1417;
constexpr std::uint64_t kLocalTrainSalt = 0x10CA;

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kFedAvgProportional:
      return "fedavg-proportional";
    case Method::kFedAvgUniform:
      return "fedavg-uniform";
    case Method::kFphlOnly:
      return "fphl-only";
    case Method::kFaelOnly:
      return "fael-only";
    case Method::kFedHeal:
      return "fedheal";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "fedavg-proportional" || text == "fedavg") {
    return Method::kFedAvgProportional;
  }
  if (text == "fedavg-uniform") {
    return Method::kFedAvgUniform;
  }
  if (text == "fphl-only") {
    return Method::kFphlOnly;
  }
  if (text == "fael-only") {
    return Method::kFaelOnly;
  }
  if (text == "fedheal") {
    return Method::kFedHeal;
  }
  throw ConfigError("method", "must be one of fedavg-proportional, fedavg-uniform, fphl-only, fael-only, fedheal");
}

bool uses_masking(Method method) { return method == Method::kFphlOnly || method == Method::kFedHeal; }

bool uses_reweighting(Method method) { return method == Method::kFaelOnly || method == Method::kFedHeal; }

void validate(const ExperimentConfig& config) {
  validate(config.federation);
  validate(config.arch);
  validate(config.opt);
  if (config.arch.input_dim != config.federation.feature_dim) {
    throw ConfigError("arch.input_dim", "must equal federation.feature_dim");
  }
  if (config.arch.num_classes != config.federation.num_classes) {
    throw ConfigError("arch.num_classes", "must equal federation.num_classes");
  }
  if (config.eval_every == 0) {
    throw ConfigError("eval_every", "must be a positive integer");
  }
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) {
    throw ConfigError("tau", "tau ∈ [0,1] required");
  }
  if (!(config.beta >= 0.0 && config.beta <= 1.0)) {
    throw ConfigError("beta", "beta ∈ [0,1] required");
  }
}

ExperimentConfig default_experiment_config(std::uint64_t seed) {
  ExperimentConfig config;
  config.federation = default_federation_config(seed);
  config.seed = seed;
  return config;
}

std::vector<std::vector<double>> ExperimentReport::weight_trajectory() const {
  std::vector<std::vector<double>> out;
  out.reserve(rounds.size());
  for (const auto& r : rounds) {
    out.push_back(r.client_weights);
  }
  return out;
}

std::optional<FairnessMetrics> summarize(std::span<const RoundRecord> records, std::size_t num_domains,
                                         StdConvention convention) {
  std::vector<std::vector<double>> histories(num_domains);
  for (const auto& r : records) {
    if (!r.evaluated) {
      continue;
    }
    for (std::size_t d = 0; d < num_domains; ++d) {
      histories[d].push_back(r.per_domain_accuracy.at(d));
    }
  }
  if (num_domains == 0 || histories.front().size() < kFinalWindow) {
    return std::nullopt;
  }
  return compute_metrics(histories, convention);
}

std::vector<double> fedavg_weights(std::span<const std::size_t> sample_sizes) {
  if (sample_sizes.empty()) {
    throw std::invalid_argument("fedavg_weights: no clients");
  }
  std::vector<double> sizes;
  sizes.reserve(sample_sizes.size());
  for (const auto n : sample_sizes) {
    if (n == 0) {
      throw std::invalid_argument("fedavg_weights: sample sizes must be positive");
    }
    sizes.push_back(static_cast<double>(n));
  }
  return normalize_simplex(sizes);
}

ParamVector aggregate(std::span<const double> global, std::span<const ParamVector> updates, const Matrix& q) {
  if (q.rows() != updates.size() || q.cols() != global.size()) {
    throw DimensionError(fmt::format("aggregate: q is {} x {}, expected {} x {}", q.rows(), q.cols(), updates.size(),
                                     global.size()));
  }
  for (const auto& u : updates) {
    if (u.size() != global.size()) {
      throw DimensionError("aggregate: update length does not match the global model");
    }
  }
  ParamVector next(global.begin(), global.end());
  for (std::size_t i = 0; i < next.size(); ++i) {
    double step = 0.0;
    for (std::size_t m = 0; m < updates.size(); ++m) {
      step += q(m, i) * updates[m][i];
    }
    next[i] += step;
  }
  return next;
}

std::uint64_t model_digest(std::span<const double> params) {
  std::uint64_t hash = 0xCBF29CE484222325ULL;
  for (const double v : params) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      hash ^= bits & 0xFF;
      hash *= 0x100000001B3ULL;
      bits >>= 8;
    }
  }
  return hash;
}

Server::Server(ExperimentConfig config, Federation federation, RunOptions options)
    : config_(std::move(config)), federation_(std::move(federation)), options_(std::move(options)) {
  validate(config_);
  const std::size_t clients = config_.federation.num_clients();
  if (federation_.clients.size() != clients) {
    throw DimensionError(fmt::format("federation has {} clients, config describes {}", federation_.clients.size(), clients));
  }
  if (federation_.test_sets.size() != config_.federation.num_domains) {
    throw DimensionError("federation test sets do not match federation.num_domains");
  }
  std::vector<std::size_t> sizes;
  for (const auto& c : federation_.clients) {
    if (c.samples.empty()) {
      throw std::invalid_argument(fmt::format("client {} has no samples", c.client_id));
    }
    if (c.domain_id < 0 || static_cast<std::size_t>(c.domain_id) >= config_.federation.num_domains) {
      throw DimensionError(fmt::format("client {} has domain_id {} outside the federation", c.client_id, c.domain_id));
    }
    sizes.push_back(c.sample_count());
  }

  global_ = init_model(config_.arch, derive_key(config_.seed, {kInitSalt}));
  table_ = ConsistencyTable(clients, global_.size());
  initial_weights_ = config_.method == Method::kFedAvgUniform ? normalize_simplex(std::vector<double>(clients, 1.0))
                                                              : fedavg_weights(sizes);
  weights_ = make_aggregation_state(initial_weights_, config_.beta);
  if (config_.log_signs) {
    sign_log_ = SignLog{clients, global_.size(), {}};
  }
}

std::vector<double> Server::evaluate_domains() const {
  std::vector<double> accuracy;
  accuracy.reserve(federation_.test_sets.size());
  for (const auto& test : federation_.test_sets) {
    accuracy.push_back(evaluate(global_, test, config_.arch));
  }
  return accuracy;
}

RoundRecord Server::initial_record() const {
  RoundRecord record;
  record.round = round_;
  record.evaluated = true;
  record.per_domain_accuracy = evaluate_domains();
  record.client_weights = weights_.p;
  record.model_digest = model_digest(global_);
  return record;
}

RoundRecord Server::run_round() {
  ++round_;
  const std::size_t clients = federation_.clients.size();
  const std::size_t params = global_.size();

  std::vector<ParamVector> local_models(clients);
  parallel_for(clients, options_.workers, [&](std::size_t m) {
    const auto seed = derive_key(config_.seed, {kLocalTrainSalt, round_, m});
    local_models[m] = local_train(global_, federation_.clients[m].samples, config_.opt, config_.arch, seed);
  });

  std::vector<ParamVector> updates(clients, ParamVector(params));
  for (std::size_t m = 0; m < clients; ++m) {
    for (std::size_t i = 0; i < params; ++i) {
      updates[m][i] = local_models[m][i] - global_[i];
    }
  }

  if (sign_log_) {
    std::vector<std::uint8_t> signs(clients * params);
    for (std::size_t m = 0; m < clients; ++m) {
      for (std::size_t i = 0; i < params; ++i) {
        signs[m * params + i] = updates[m][i] >= 0.0 ? 1 : 0;
      }
    }
    sign_log_->rounds.push_back(std::move(signs));
  }

  ImportanceMask mask(clients, params, 1);
  if (uses_masking(config_.method)) {
    table_.update(updates);
    mask = importance_mask(puc_matrix(table_, updates), config_.tau);
  }

  std::vector<double> distances;
  if (uses_reweighting(config_.method)) {
    distances.resize(clients);
    for (std::size_t m = 0; m < clients; ++m) {
      distances[m] = masked_update_distance(updates[m], mask.row(m));
    }
    weights_ = update_client_weights(weights_, distances);
  }

  Matrix q;
  if (uses_masking(config_.method)) {
    q = per_parameter_weights(weights_.p, mask);
  } else {
    q = Matrix(clients, params);
    for (std::size_t m = 0; m < clients; ++m) {
      for (std::size_t i = 0; i < params; ++i) {
        q(m, i) = weights_.p[m];
      }
    }
  }

  ParamVector next = aggregate(global_, updates, q);

  if (options_.observer) {
    RoundTrace trace;
    trace.round = round_;
    trace.global_before = global_;
    trace.global_after = next;
    trace.local_models = local_models;
    trace.updates = updates;
    trace.mask = &mask;
    trace.q = &q;
    trace.weights = &weights_;
    trace.distances = distances;
    options_.observer(trace);
  }
  global_ = std::move(next);

  RoundRecord record;
  record.round = round_;
  record.client_weights = weights_.p;
  record.distance_variance = distance_variance(weights_.p, local_models);
  record.baseline_distance_variance = distance_variance(initial_weights_, local_models);
  record.discarded_fraction = mask.discarded_fraction();
  record.model_digest = model_digest(global_);
  if (round_ % config_.eval_every == 0 || round_ == config_.rounds) {
    record.evaluated = true;
    record.per_domain_accuracy = evaluate_domains();
  }
  return record;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  validate(config);
  return run_experiment(config, make_federation(config.federation), options);
}

ExperimentReport run_experiment(const ExperimentConfig& config, Federation federation, const RunOptions& options) {
  Server server(config, std::move(federation), options);
  ExperimentReport report;
  report.config = config;
  report.rounds.push_back(server.initial_record());
  for (std::size_t t = 0; t < config.rounds; ++t) {
    report.rounds.push_back(server.run_round());
  }
  report.final_metrics = summarize(report.rounds, config.federation.num_domains, config.std_convention);
  report.sign_log = server.sign_log();
  return report;
}

}  // namespace fedheal
