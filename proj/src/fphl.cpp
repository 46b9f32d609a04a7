#include "fedheal/fphl.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedheal/simplex.hpp"

namespace fedheal {

double ImportanceMask::discarded_fraction() const {
  if (bits_.empty()) {
    return 0.0;
  }
  std::size_t zeros = 0;
  for (const auto b : bits_) {
    zeros += b == 0 ? 1 : 0;
  }
  return static_cast<double>(zeros) / static_cast<double>(bits_.size());
}

void ConsistencyTable::update(std::span<const ParamVector> updates) {
  if (updates.size() != num_clients()) {
    throw DimensionError("consistency table tracks " + std::to_string(num_clients()) + " clients, got " +
                         std::to_string(updates.size()) + " updates");
  }
  for (const auto& u : updates) {
    if (u.size() != num_params()) {
      throw DimensionError("update length " + std::to_string(u.size()) + " does not match table width " +
                           std::to_string(num_params()));
    }
  }

  ++round_count_;
  const auto t = static_cast<double>(round_count_);
  for (std::size_t m = 0; m < num_clients(); ++m) {
    auto row = proportions_.row(m);
    const auto& delta = updates[m];
    for (std::size_t i = 0; i < row.size(); ++i) {
      const double increment = delta[i] >= 0.0 ? 1.0 : 0.0;
      row[i] = (row[i] * (t - 1.0) + increment) / t;
    }
  }
}

ConsistencyTable ConsistencyTable::from_state(std::size_t round_count, Matrix proportions) {
  for (const double v : proportions.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("consistency table entries must lie in [0, 1]");
    }
  }
  ConsistencyTable table;
  table.proportions_ = std::move(proportions);
  table.round_count_ = round_count;
  return table;
}

ConsistencyTable update_increment_proportions(ConsistencyTable table, std::span<const ParamVector> updates) {
  table.update(updates);
  return table;
}

Matrix puc_matrix(const ConsistencyTable& table, std::span<const ParamVector> updates) {
  if (updates.size() != table.num_clients()) {
    throw DimensionError("puc_matrix: client count mismatch");
  }
  Matrix puc(table.num_clients(), table.num_params());
  for (std::size_t m = 0; m < table.num_clients(); ++m) {
    if (updates[m].size() != table.num_params()) {
      throw DimensionError("puc_matrix: update length mismatch");
    }
    for (std::size_t i = 0; i < table.num_params(); ++i) {
      puc(m, i) = compute_puc(table.proportion(m, i), updates[m][i]);
    }
  }
  return puc;
}

ImportanceMask importance_mask(const Matrix& puc, double tau) {
  ImportanceMask mask(puc.rows(), puc.cols(), 0);
  for (std::size_t m = 0; m < puc.rows(); ++m) {
    for (std::size_t i = 0; i < puc.cols(); ++i) {
      mask(m, i) = puc(m, i) >= tau ? 1 : 0;
    }
  }
  return mask;
}

Matrix per_parameter_weights(std::span<const double> p, const ImportanceMask& mask) {
  if (!is_on_simplex(p)) {
    throw std::invalid_argument("per_parameter_weights: client weights are not on the probability simplex");
  }
  if (p.size() != mask.rows()) {
    throw DimensionError("per_parameter_weights: " + std::to_string(p.size()) + " client weights for a mask with " +
                         std::to_string(mask.rows()) + " rows");
  }
  const std::size_t clients = mask.rows();
  const std::size_t params = mask.cols();
  Matrix q(clients, params, 0.0);
  for (std::size_t i = 0; i < params; ++i) {
    double denominator = 0.0;
    std::size_t survivors = 0;
    for (std::size_t m = 0; m < clients; ++m) {
      if (mask(m, i) != 0) {
        denominator += p[m];
        ++survivors;
      }
    }
    if (survivors == clients) {
      // sum of p is 1, so the column is p itself
      for (std::size_t m = 0; m < clients; ++m) {
        q(m, i) = p[m];
      }
      continue;
    }
    if (denominator == 0.0) {
      continue;  // nobody survived: frozen column
    }
    for (std::size_t m = 0; m < clients; ++m) {
      if (mask(m, i) != 0) {
        q(m, i) = p[m] / denominator;
      }
    }
  }
  return q;
}

void save_table(const ConsistencyTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << "fedheal-consistency-table 1\n";
  out << table.round_count() << ' ' << table.num_clients() << ' ' << table.num_params() << '\n';
  char buffer[64];
  for (std::size_t m = 0; m < table.num_clients(); ++m) {
    for (std::size_t i = 0; i < table.num_params(); ++i) {
      std::snprintf(buffer, sizeof buffer, "%a", table.proportion(m, i));
      out << (i == 0 ? "" : " ") << buffer;
    }
    out << '\n';
  }
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

ConsistencyTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "fedheal-consistency-table" || version != 1) {
    throw std::runtime_error(path.string() + ": not a consistency table checkpoint");
  }
  std::size_t rounds = 0;
  std::size_t clients = 0;
  std::size_t params = 0;
  if (!(in >> rounds >> clients >> params)) {
    throw std::runtime_error(path.string() + ": malformed header");
  }
  Matrix proportions(clients, params);
  std::string token;
  for (std::size_t m = 0; m < clients; ++m) {
    for (std::size_t i = 0; i < params; ++i) {
      if (!(in >> token)) {
        throw std::runtime_error(path.string() + ": truncated table");
      }
      char* end = nullptr;
      proportions(m, i) = std::strtod(token.c_str(), &end);
      if (end == token.c_str() || *end != '\0') {
        throw std::runtime_error(path.string() + ": bad number '" + token + "'");
      }
    }
  }
  return ConsistencyTable::from_state(rounds, std::move(proportions));
}

}  // namespace fedheal
