#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fedheal/datagen.hpp"
#include "fedheal/fael.hpp"
#include "fedheal/fphl.hpp"
#include "fedheal/metrics.hpp"
#include "fedheal/model.hpp"
#include "fedheal/types.hpp"

namespace fedheal {

/// Aggregation arms. The FedAvg arms keep p fixed and never mask; fphl-only
/// masks low-consistency updates with fixed p; fael-only reweights clients
/// without masking; fedheal does both.
enum class Method { kFedAvgProportional, kFedAvgUniform, kFphlOnly, kFaelOnly, kFedHeal };

std::string_view to_string(Method method);
/// Accepts the names used in config files: "fedavg-proportional" (alias
/// "fedavg"), "fedavg-uniform", "fphl-only", "fael-only", "fedheal".
Method parse_method(std::string_view text);
bool uses_masking(Method method);
bool uses_reweighting(Method method);

struct ExperimentConfig {
  FederationConfig federation;
  ModelArch arch;
  OptimizerConfig opt;
  std::size_t rounds = 100;
  Method method = Method::kFedHeal;
  double tau = 0.3;
  double beta = 0.4;
  std::size_t eval_every = 1;
  std::uint64_t seed = 0;
  /// Keep every client's per-round update signs (needed for PUC reports).
  bool log_signs = false;
  StdConvention std_convention = StdConvention::kPopulation;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError naming the first offending field.
void validate(const ExperimentConfig& config);

/// Desk-scale defaults: the default federation, an 8-16-4 tanh MLP,
/// 100 rounds, fedheal with tau 0.3 and beta 0.4.
ExperimentConfig default_experiment_config(std::uint64_t seed);

/// One entry per round. Round 0 is the evaluation of the initial model;
/// its training fields hold the initial weights and zeros.
struct RoundRecord {
  std::size_t round = 0;
  bool evaluated = false;
  std::vector<double> per_domain_accuracy;  // empty unless evaluated
  std::vector<double> client_weights;       // p used to aggregate this round
  double distance_variance = 0.0;           // Var_m ||U - w_m||^2 at client_weights
  double baseline_distance_variance = 0.0;  // same at the initial (FedAvg) weights
  double discarded_fraction = 0.0;          // masked-out share of (m, i) cells
  std::uint64_t model_digest = 0;           // FNV-1a of the global model's bytes after the round

  bool operator==(const RoundRecord&) const = default;
};

/// Signs of every client's update, one M x G byte block per round
/// (1 = increment, i.e. delta >= 0).
struct SignLog {
  std::size_t num_clients = 0;
  std::size_t num_params = 0;
  std::vector<std::vector<std::uint8_t>> rounds;

  bool increment(std::size_t round, std::size_t client, std::size_t param) const {
    return rounds[round][client * num_params + param] != 0;
  }
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RoundRecord> rounds;
  std::optional<FairnessMetrics> final_metrics;  // absent with fewer than five evaluations
  std::optional<SignLog> sign_log;               // present when config.log_signs; never exported

  /// Client weights per round, round 0 first.
  std::vector<std::vector<double>> weight_trajectory() const;
};

/// Final AVG/STD from the evaluated records, or nullopt with fewer than
/// five evaluations.
std::optional<FairnessMetrics> summarize(std::span<const RoundRecord> records, std::size_t num_domains,
                                         StdConvention convention);

/// p_m = N_m / sum N. Throws std::invalid_argument on an empty list or a
/// zero size.
std::vector<double> fedavg_weights(std::span<const std::size_t> sample_sizes);

/// W_i + sum_m q(m, i) delta_w[m][i] for every coordinate i.
ParamVector aggregate(std::span<const double> global, std::span<const ParamVector> updates, const Matrix& q);

std::uint64_t model_digest(std::span<const double> params);

/// Everything computed during one round, for tests and diagnostics.
struct RoundTrace {
  std::size_t round = 0;
  std::span<const double> global_before;
  std::span<const double> global_after;
  std::span<const ParamVector> local_models;
  std::span<const ParamVector> updates;
  const ImportanceMask* mask = nullptr;  // all ones for methods that do not mask
  const Matrix* q = nullptr;
  const AggregationState* weights = nullptr;
  std::span<const double> distances;  // empty unless the method reweights
};

using RoundObserver = std::function<void(const RoundTrace&)>;

struct RunOptions {
  std::size_t workers = 0;  // 0 = default_worker_count()
  RoundObserver observer;
};

/// Server side of the training loop. Holds the global model, the
/// consistency table and the client weights; owns the federation.
class Server {
 public:
  Server(ExperimentConfig config, Federation federation, RunOptions options = {});

  /// Evaluation of the current model as a round-0 record.
  RoundRecord initial_record() const;

  /// Executes the next round:
  ///  1. every client trains from the current global model (in parallel),
  ///  2. delta_w = w_m - W,
  ///  3. masking methods fold the signs into the table and mask updates
  ///     whose consistency is below tau,
  ///  4. reweighting methods update p from the masked update distances,
  ///  5. per-parameter weights q from p and the mask,
  ///  6. W <- W + sum_m q(m, .) delta_w_m.
  RoundRecord run_round();

  std::size_t round() const noexcept { return round_; }
  const ParamVector& global() const noexcept { return global_; }
  const ConsistencyTable& table() const noexcept { return table_; }
  const AggregationState& weights() const noexcept { return weights_; }
  const Federation& federation() const noexcept { return federation_; }
  const std::optional<SignLog>& sign_log() const noexcept { return sign_log_; }

 private:
  std::vector<double> evaluate_domains() const;

  ExperimentConfig config_;
  Federation federation_;
  RunOptions options_;
  ParamVector global_;
  ConsistencyTable table_;
  AggregationState weights_;
  std::vector<double> initial_weights_;
  std::optional<SignLog> sign_log_;
  std::size_t round_ = 0;
};

/// Validates the config, builds its federation and runs all rounds.
ExperimentReport run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Same, on an already materialized federation (e.g. loaded from disk).
ExperimentReport run_experiment(const ExperimentConfig& config, Federation federation, const RunOptions& options = {});

}  // namespace fedheal
