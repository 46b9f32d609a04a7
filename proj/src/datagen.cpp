#include "fedheal/datagen.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fedheal/rng.hpp"

namespace fedheal {

namespace {

// Stream tags; every random draw in this module is keyed by one of these.
constexpr std::uint64_t kTrainStream = 0x7121;
constexpr std::uint64_t kTestStream = 0x7E57;
constexpr std::uint64_t kSpecStream = 0x5BEC;

Matrix identity(std::size_t n) {
  Matrix eye(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    eye(i, i) = 1.0;
  }
  return eye;
}

// Product of n Givens rotations in random coordinate planes, each by
// an angle drawn from [angle / 2, angle]. Small angles give domains that
// overlap but disagree near the class boundaries.
Matrix random_rotation(std::size_t n, double angle, CounterRng& rng) {
  Matrix q = identity(n);
  if (n < 2) {
    return q;
  }
  for (std::size_t step = 0; step < n; ++step) {
    const auto a = static_cast<std::size_t>(rng.below(n));
    auto b = static_cast<std::size_t>(rng.below(n - 1));
    if (b >= a) {
      ++b;
    }
    const double theta = angle * (0.5 + 0.5 * rng.uniform()) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t col = 0; col < n; ++col) {
      const double qa = q(a, col);
      const double qb = q(b, col);
      q(a, col) = c * qa - s * qb;
      q(b, col) = s * qa + c * qb;
    }
  }
  return q;
}

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

double determinant(const Matrix& square) {
  if (square.rows() != square.cols()) {
    throw DimensionError("determinant: matrix is not square");
  }
  const std::size_t n = square.rows();
  Matrix a = square;
  double det = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) {
        pivot = r;
      }
    }
    if (a(pivot, col) == 0.0) {
      return 0.0;
    }
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(a(pivot, c), a(col, c));
      }
      det = -det;
    }
    det *= a(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = a(r, col) / a(col, col);
      for (std::size_t c = col; c < n; ++c) {
        a(r, c) -= factor * a(col, c);
      }
    }
  }
  return det;
}

void validate(const DomainSpec& spec, std::size_t feature_dim, std::size_t num_classes) {
  const std::string field = fmt::format("federation.domain_specs[{}]", spec.domain_id);
  if (spec.class_means.rows() != num_classes || spec.class_means.cols() != feature_dim) {
    throw ConfigError(field + ".class_means", fmt::format("must be {} x {}", num_classes, feature_dim));
  }
  if (spec.linear_transform.rows() != feature_dim || spec.linear_transform.cols() != feature_dim) {
    throw ConfigError(field + ".linear_transform", fmt::format("must be {} x {}", feature_dim, feature_dim));
  }
  if (!(std::abs(determinant(spec.linear_transform)) > 1e-6)) {
    throw ConfigError(field + ".linear_transform", "must be invertible (|det| > 1e-6)");
  }
  if (!(spec.noise_scale >= 0.0) || !std::isfinite(spec.noise_scale)) {
    throw ConfigError(field + ".noise_scale", "must be a finite non-negative real");
  }
  if (!(spec.difficulty_scale > 0.0) || !std::isfinite(spec.difficulty_scale)) {
    throw ConfigError(field + ".difficulty_scale", "must be a finite positive real");
  }
}

void validate(const FederationConfig& config) {
  if (config.num_domains == 0) {
    throw ConfigError("federation.num_domains", "must be a positive integer");
  }
  if (config.clients_per_domain == 0) {
    throw ConfigError("federation.clients_per_domain", "must be a positive integer");
  }
  if (config.feature_dim == 0) {
    throw ConfigError("federation.feature_dim", "must be a positive integer");
  }
  if (config.num_classes < 2) {
    throw ConfigError("federation.num_classes", "must be >= 2");
  }
  if (config.samples_per_client == 0 || config.samples_per_client % config.num_classes != 0) {
    throw ConfigError("federation.samples_per_client", "must be a positive multiple of num_classes");
  }
  if (config.test_samples_per_domain == 0 || config.test_samples_per_domain % config.num_classes != 0) {
    throw ConfigError("federation.test_samples_per_domain", "must be a positive multiple of num_classes");
  }
  if (config.domain_specs.size() != config.num_domains) {
    throw ConfigError("federation.domain_specs", fmt::format("expected {} entries", config.num_domains));
  }
  for (std::size_t d = 0; d < config.domain_specs.size(); ++d) {
    const auto& spec = config.domain_specs[d];
    if (spec.domain_id != static_cast<int>(d)) {
      throw ConfigError(fmt::format("federation.domain_specs[{}].domain_id", d), "must equal its list position");
    }
    validate(spec, config.feature_dim, config.num_classes);
  }
}

std::vector<DomainSpec> default_domain_specs(std::size_t num_domains, std::size_t feature_dim,
                                             std::size_t num_classes, std::uint64_t seed,
                                             const DefaultDomainOptions& options) {
  CounterRng mean_rng(derive_key(seed, {kSpecStream, 0}));
  Matrix means(num_classes, feature_dim);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double norm = 0.0;
    for (std::size_t k = 0; k < feature_dim; ++k) {
      means(c, k) = mean_rng.gaussian();
      norm += means(c, k) * means(c, k);
    }
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < feature_dim; ++k) {
      means(c, k) *= options.class_separation / norm;
    }
  }

  std::vector<DomainSpec> specs;
  for (std::size_t d = 0; d < num_domains; ++d) {
    DomainSpec spec;
    spec.domain_id = static_cast<int>(d);
    spec.class_means = means;
    spec.noise_scale = options.noise_scale;
    spec.difficulty_scale = d == options.hard_domain ? options.hard_difficulty : 1.0;
    if (d == 0) {
      spec.linear_transform = identity(feature_dim);
    } else {
      CounterRng rng(derive_key(seed, {kSpecStream, d + 1}));
      Matrix rotation = random_rotation(feature_dim, options.rotation_angle, rng);
      for (std::size_t r = 0; r < feature_dim; ++r) {
        const double scale = 1.0 + options.scale_jitter * (2.0 * rng.uniform() - 1.0);
        for (std::size_t c = 0; c < feature_dim; ++c) {
          rotation(r, c) *= scale;
        }
      }
      spec.linear_transform = std::move(rotation);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

FederationConfig default_federation_config(std::uint64_t seed) {
  FederationConfig config;
  config.seed = seed;
  config.domain_specs = default_domain_specs(config.num_domains, config.feature_dim, config.num_classes, seed);
  return config;
}

Dataset sample_domain(const DomainSpec& spec, std::size_t n, std::size_t num_classes, std::uint64_t seed) {
  if (num_classes == 0 || n % num_classes != 0) {
    throw std::invalid_argument(fmt::format("sample_domain: n = {} is not divisible by num_classes = {}", n, num_classes));
  }
  const std::size_t dim = spec.linear_transform.rows();
  validate(spec, dim, num_classes);

  Dataset out;
  out.feature_dim = dim;
  out.features.reserve(n * dim);
  out.labels.reserve(n);

  CounterRng rng(seed);
  const double sigma = spec.noise_scale * spec.difficulty_scale;
  std::vector<double> latent(dim);
  std::vector<double> x(dim);
  const std::size_t per_class = n / num_classes;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t s = 0; s < per_class; ++s) {
      for (std::size_t k = 0; k < dim; ++k) {
        latent[k] = spec.class_means(c, k) + sigma * rng.gaussian();
      }
      for (std::size_t r = 0; r < dim; ++r) {
        double v = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          v += spec.linear_transform(r, k) * latent[k];
        }
        x[r] = v;
      }
      out.push_back(x, static_cast<int>(c));
    }
  }
  return out;
}

Federation make_federation(const FederationConfig& config) {
  validate(config);
  Federation federation;
  for (std::size_t m = 0; m < config.num_clients(); ++m) {
    ClientData client;
    client.client_id = static_cast<int>(m);
    client.domain_id = static_cast<int>(m / config.clients_per_domain);
    const auto& spec = config.domain_specs[static_cast<std::size_t>(client.domain_id)];
    client.samples =
        sample_domain(spec, config.samples_per_client, config.num_classes, derive_key(config.seed, {kTrainStream, m}));
    federation.clients.push_back(std::move(client));
  }
  for (std::size_t d = 0; d < config.num_domains; ++d) {
    federation.test_sets.push_back(sample_domain(config.domain_specs[d], config.test_samples_per_domain,
                                                 config.num_classes, derive_key(config.seed, {kTestStream, d})));
  }
  return federation;
}

void save_federation(const Federation& federation, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  auto write_set = [&](const char* split, int client_id, int domain_id, const Dataset& data) {
    for (std::size_t n = 0; n < data.size(); ++n) {
      out << split << ',' << client_id << ',' << domain_id << ',' << data.labels[n];
      for (const double v : data.sample(n)) {
        out << ',' << format_real(v);
      }
      out << '\n';
    }
  };
  for (const auto& client : federation.clients) {
    write_set("train", client.client_id, client.domain_id, client.samples);
  }
  for (std::size_t d = 0; d < federation.test_sets.size(); ++d) {
    write_set("test", -1, static_cast<int>(d), federation.test_sets[d]);
  }
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

Federation load_federation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  Federation federation;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) {
      fields.push_back(field);
    }
    if (fields.size() < 5) {
      throw std::runtime_error(fmt::format("{}:{}: expected split,client_id,domain_id,label,features...", path.string(), line_no));
    }
    const std::size_t this_dim = fields.size() - 4;
    if (dim == 0) {
      dim = this_dim;
    } else if (dim != this_dim) {
      throw std::runtime_error(fmt::format("{}:{}: inconsistent feature count", path.string(), line_no));
    }
    const int client_id = std::stoi(fields[1]);
    const int domain_id = std::stoi(fields[2]);
    const int label = std::stoi(fields[3]);
    if (domain_id < 0) {
      throw std::runtime_error(fmt::format("{}:{}: negative domain_id", path.string(), line_no));
    }
    std::vector<double> x(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      x[k] = std::stod(fields[4 + k]);
    }

    Dataset* target = nullptr;
    if (fields[0] == "train") {
      if (client_id < 0) {
        throw std::runtime_error(fmt::format("{}:{}: train record needs a client_id", path.string(), line_no));
      }
      const auto idx = static_cast<std::size_t>(client_id);
      if (federation.clients.size() <= idx) {
        federation.clients.resize(idx + 1);
      }
      auto& client = federation.clients[idx];
      client.client_id = client_id;
      client.domain_id = domain_id;
      client.samples.feature_dim = dim;
      target = &client.samples;
    } else if (fields[0] == "test") {
      const auto idx = static_cast<std::size_t>(domain_id);
      if (federation.test_sets.size() <= idx) {
        federation.test_sets.resize(idx + 1);
      }
      federation.test_sets[idx].feature_dim = dim;
      target = &federation.test_sets[idx];
    } else {
      throw std::runtime_error(fmt::format("{}:{}: unknown split '{}'", path.string(), line_no, fields[0]));
    }
    target->push_back(x, label);
  }
  return federation;
}

}  // namespace fedheal
