#pragma once

#include <span>
#include <vector>

namespace fedheal {

inline constexpr double kSimplexTolerance = 1e-9;

/// Left-to-right sum. Every weight sum in the library goes through this so
/// that equal inputs always produce equal bits.
double ordered_sum(std::span<const double> values);

/// True when all entries are non-negative and they sum to 1 within `tol`.
bool is_on_simplex(std::span<const double> weights, double tol = kSimplexTolerance);

/// Divides every entry by ordered_sum().
///
/// Throws std::invalid_argument if any entry is negative or the sum is not
/// positive.
std::vector<double> normalize_simplex(std::span<const double> values);

/// Euclidean projection onto the probability simplex (sort-based).
std::vector<double> project_onto_simplex(std::span<const double> values);

}  // namespace fedheal
