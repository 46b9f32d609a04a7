#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "fedheal/model.hpp"
#include "fedheal/types.hpp"

namespace fedheal {

/// Class-conditional feature distribution of one domain:
///   x = linear_transform * (class_means[c] + noise_scale * difficulty_scale * g),
/// with g standard Gaussian. Domains share the label marginal (uniform) and
/// differ in P(x|y) through the transform and the noise.
struct DomainSpec {
  int domain_id = 0;
  Matrix class_means;       // num_classes x feature_dim
  Matrix linear_transform;  // feature_dim x feature_dim, invertible
  double noise_scale = 1.0;
  double difficulty_scale = 1.0;

  bool operator==(const DomainSpec&) const = default;
};

/// Throws ConfigError if the spec is malformed or the transform is
/// (numerically) singular.
void validate(const DomainSpec& spec, std::size_t feature_dim, std::size_t num_classes);

double determinant(const Matrix& square);

struct FederationConfig {
  std::size_t num_domains = 4;
  std::size_t clients_per_domain = 5;
  std::size_t samples_per_client = 40;
  std::size_t test_samples_per_domain = 400;
  std::size_t feature_dim = 8;
  std::size_t num_classes = 4;
  std::uint64_t seed = 0;
  std::vector<DomainSpec> domain_specs;

  std::size_t num_clients() const noexcept { return num_domains * clients_per_domain; }

  bool operator==(const FederationConfig&) const = default;
};

void validate(const FederationConfig& config);

/// Knobs for the built-in domain family used when a config does not list
/// explicit domain specs.
struct DefaultDomainOptions {
  double class_separation = 2.5;  // radius of the class means
  double noise_scale = 1.0;
  double rotation_angle = 1.0;    // radians per Givens step
  double scale_jitter = 0.3;      // per-axis scale drawn from 1 +- jitter
  std::size_t hard_domain = 3;    // index of the domain with difficulty_scale > 1
  double hard_difficulty = 2.0;
};

/// Builds `num_domains` specs sharing one set of class means. Domain 0 uses
/// the identity transform; every other domain gets feature_dim random Givens
/// rotations of up to `rotation_angle` radians followed by a per-axis
/// scaling in 1 +- scale_jitter. The hard domain additionally multiplies
/// its noise by `hard_difficulty`.
std::vector<DomainSpec> default_domain_specs(std::size_t num_domains, std::size_t feature_dim,
                                             std::size_t num_classes, std::uint64_t seed,
                                             const DefaultDomainOptions& options = {});

/// The desk-scale federation: 4 domains x 5 clients, 8 features, 4 classes,
/// domain 3 hard.
FederationConfig default_federation_config(std::uint64_t seed);

struct ClientData {
  int client_id = 0;
  int domain_id = 0;
  Dataset samples;

  std::size_t sample_count() const noexcept { return samples.size(); }
  bool operator==(const ClientData&) const = default;
};

struct Federation {
  std::vector<ClientData> clients;
  std::vector<Dataset> test_sets;  // indexed by domain_id

  bool operator==(const Federation&) const = default;
};

/// Stratified draw: exactly n / num_classes samples per class, classes in
/// ascending order. Throws std::invalid_argument if n is not divisible by
/// num_classes.
Dataset sample_domain(const DomainSpec& spec, std::size_t n, std::size_t num_classes, std::uint64_t seed);

/// Client m belongs to domain m / clients_per_domain. Training draws and
/// test draws use disjoint RNG streams.
Federation make_federation(const FederationConfig& config);

/// Text dump, one record per sample:
///   split,client_id,domain_id,label,f0,...,f{D-1}
/// `split` is "train" or "test"; test records carry client_id -1. Reals are
/// printed with 17 significant digits so loading reproduces the exact bits.
void save_federation(const Federation& federation, const std::filesystem::path& path);
Federation load_federation(const std::filesystem::path& path);

}  // namespace fedheal
