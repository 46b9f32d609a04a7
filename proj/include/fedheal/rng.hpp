#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>

namespace fedheal {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Derives a stream key from a base seed and an ordered list of salts.
/// Keys for different salt tuples are independent for practical purposes,
/// so e.g. (seed, round, client, epoch) streams never overlap.
std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> salts);

/// Counter-based generator: the n-th output is mix64(key + n * golden).
/// The stream is a pure function of (key, counter), so any stream can be
/// re-created anywhere without sharing generator state between workers.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);
  /// Standard normal via Box-Muller; the second variate is cached.
  double gaussian();

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fedheal
