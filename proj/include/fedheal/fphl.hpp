#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "fedheal/types.hpp"

namespace fedheal {

/// Server-side record of how often each client pushed each parameter up.
///
/// proportion(m, i) is the share of the `round_count()` observed rounds in
/// which client m's update to parameter i was non-negative. Zero updates
/// count as increments.
class ConsistencyTable {
 public:
  ConsistencyTable() = default;
  ConsistencyTable(std::size_t clients, std::size_t params)
      : proportions_(clients, params, 0.0) {}

  std::size_t num_clients() const noexcept { return proportions_.rows(); }
  std::size_t num_params() const noexcept { return proportions_.cols(); }
  std::size_t round_count() const noexcept { return round_count_; }

  double proportion(std::size_t m, std::size_t i) const { return proportions_(m, i); }
  const Matrix& proportions() const noexcept { return proportions_; }

  /// Folds one round of updates (one vector of length G per client) into
  /// the table with the running-proportion recurrence
  ///   t <- t + 1;  l <- (l * (t - 1) + [delta >= 0]) / t.
  void update(std::span<const ParamVector> updates);

  /// Rebuilds a table from raw state, e.g. a checkpoint. Entries must lie in
  /// [0, 1].
  static ConsistencyTable from_state(std::size_t round_count, Matrix proportions);

  bool operator==(const ConsistencyTable&) const = default;

 private:
  Matrix proportions_;
  std::size_t round_count_ = 0;
};

/// Functional form of ConsistencyTable::update.
ConsistencyTable update_increment_proportions(ConsistencyTable table, std::span<const ParamVector> updates);

/// Parameter update consistency of one update against its history:
/// l if delta >= 0, 1 - l otherwise.
inline double compute_puc(double increment_proportion, double delta) {
  return delta >= 0.0 ? increment_proportion : 1.0 - increment_proportion;
}

/// M x G consistency matrix for this round's updates against the table.
/// Call after the table has absorbed the same updates.
Matrix puc_matrix(const ConsistencyTable& table, std::span<const ParamVector> updates);

/// Bit (m, i) is set iff puc(m, i) >= tau.
ImportanceMask importance_mask(const Matrix& puc, double tau);

/// q(m, i) = mask(m, i) p_m / sum_j mask(j, i) p_j. A column where every
/// client survives is p itself (the denominator is sum p = 1), so an
/// all-ones mask reproduces plain weighted averaging bit for bit. A column
/// where every client is masked out is all zeros, which leaves that
/// parameter frozen for the round.
///
/// Throws std::invalid_argument if p is not on the simplex and
/// DimensionError if p and the mask disagree on M.
Matrix per_parameter_weights(std::span<const double> p, const ImportanceMask& mask);

/// Checkpoint text format:
///   line 1: "fedheal-consistency-table 1"
///   line 2: "<t> <M> <G>"
///   then M lines of G hexadecimal floats ("%a"), space separated.
/// Hex floats make the round trip bit-exact.
void save_table(const ConsistencyTable& table, const std::filesystem::path& path);
ConsistencyTable load_table(const std::filesystem::path& path);

}  // namespace fedheal
