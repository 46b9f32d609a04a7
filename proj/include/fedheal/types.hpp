#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fedheal {

/// Raised when array shapes disagree (parameter counts, client counts,
/// feature dimensions).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for invalid configuration values. `field()` names the offending
/// key using the dotted path of the config file, e.g. "optimizer.momentum".
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Flat model parameters or a flat model update. Index i always refers to
/// the same scalar parameter for a fixed architecture.
using ParamVector = std::vector<double>;

/// Dense row-major matrix. Used for M x G tables (clients by parameters).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// M x G matrix of {0,1}: bit (m, i) set when client m's update to
/// parameter i is retained during aggregation.
class ImportanceMask {
 public:
  ImportanceMask() = default;
  ImportanceMask(std::size_t clients, std::size_t params, std::uint8_t fill = 1)
      : rows_(clients), cols_(params), bits_(clients * params, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::uint8_t& operator()(std::size_t m, std::size_t i) { return bits_[m * cols_ + i]; }
  std::uint8_t operator()(std::size_t m, std::size_t i) const { return bits_[m * cols_ + i]; }

  std::span<const std::uint8_t> row(std::size_t m) const { return {bits_.data() + m * cols_, cols_}; }

  /// Share of (m, i) cells whose bit is zero.
  double discarded_fraction() const;

  bool operator==(const ImportanceMask&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace fedheal
