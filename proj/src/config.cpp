#include "fedheal/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

namespace fedheal {

namespace {

// Typed access to one JSON object with unknown-key rejection. `path` is the
// dotted prefix used in error messages.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) {
      throw ConfigError(path_.empty() ? "<root>" : path_, "must be a JSON object");
    }
  }

  bool has(const std::string& key) const { return object_.contains(key); }

  const Json& raw(const std::string& key) {
    seen_.insert(key);
    return object_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  std::size_t count(const std::string& key, std::size_t fallback) {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = raw(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(field(key), "must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }

  std::uint64_t seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = raw(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(field(key), "must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  double real(const std::string& key, double fallback) {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = raw(key);
    if (!v.is_number()) {
      throw ConfigError(field(key), "must be a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      throw ConfigError(field(key), "must be finite");
    }
    return x;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) {
      return fallback;
    }
    const auto& v = raw(key);
    if (!v.is_boolean()) {
      throw ConfigError(field(key), "must be true or false");
    }
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) {
      throw ConfigError(field(key), "must be a string");
    }
    return v.get<std::string>();
  }

  void reject_unknown() const {
    for (const auto& item : object_.items()) {
      if (!seen_.contains(item.key())) {
        throw ConfigError(field(item.key()), "unknown key");
      }
    }
  }

 private:
  const Json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

Matrix read_matrix(const Json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) {
    throw ConfigError(field, "must be a non-empty array of rows");
  }
  const std::size_t rows = v.size();
  const std::size_t cols = v.front().is_array() ? v.front().size() : 0;
  if (cols == 0) {
    throw ConfigError(field, "rows must be non-empty arrays of numbers");
  }
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!v[r].is_array() || v[r].size() != cols) {
      throw ConfigError(field, "rows must all have the same length");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[r][c].is_number()) {
        throw ConfigError(field, "entries must be numbers");
      }
      m(r, c) = v[r][c].get<double>();
    }
  }
  return m;
}

Json write_matrix(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (const double v : m.row(r)) {
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

FederationConfig read_federation(const Json& doc, std::uint64_t default_seed) {
  ObjectReader in(doc, "federation");
  FederationConfig fed;
  fed.num_domains = in.count("num_domains", fed.num_domains);
  fed.clients_per_domain = in.count("clients_per_domain", fed.clients_per_domain);
  fed.samples_per_client = in.count("samples_per_client", fed.samples_per_client);
  fed.test_samples_per_domain = in.count("test_samples_per_domain", fed.test_samples_per_domain);
  fed.feature_dim = in.count("feature_dim", fed.feature_dim);
  fed.num_classes = in.count("num_classes", fed.num_classes);
  fed.seed = in.seed("seed", default_seed);

  if (in.has("domain_specs")) {
    for (const char* knob : {"class_separation", "noise_scale", "rotation_angle", "scale_jitter", "hard_domain",
                             "hard_difficulty"}) {
      if (in.has(knob)) {
        throw ConfigError(in.field(knob), "only allowed when domain_specs is absent");
      }
    }
    const auto& specs = in.raw("domain_specs");
    if (!specs.is_array()) {
      throw ConfigError("federation.domain_specs", "must be an array");
    }
    for (std::size_t d = 0; d < specs.size(); ++d) {
      ObjectReader s(specs[d], fmt::format("federation.domain_specs[{}]", d));
      DomainSpec spec;
      spec.domain_id = static_cast<int>(s.count("domain_id", d));
      spec.class_means = read_matrix(s.raw("class_means"), s.field("class_means"));
      spec.linear_transform = read_matrix(s.raw("linear_transform"), s.field("linear_transform"));
      spec.noise_scale = s.real("noise_scale", spec.noise_scale);
      spec.difficulty_scale = s.real("difficulty_scale", spec.difficulty_scale);
      s.reject_unknown();
      fed.domain_specs.push_back(std::move(spec));
    }
  } else {
    DefaultDomainOptions options;
    options.class_separation = in.real("class_separation", options.class_separation);
    options.noise_scale = in.real("noise_scale", options.noise_scale);
    options.rotation_angle = in.real("rotation_angle", options.rotation_angle);
    options.scale_jitter = in.real("scale_jitter", options.scale_jitter);
    options.hard_domain = in.count("hard_domain", options.hard_domain);
    options.hard_difficulty = in.real("hard_difficulty", options.hard_difficulty);
    if (!(options.class_separation > 0.0)) {
      throw ConfigError("federation.class_separation", "must be positive");
    }
    if (!(options.noise_scale >= 0.0)) {
      throw ConfigError("federation.noise_scale", "must be non-negative");
    }
    if (!(options.scale_jitter >= 0.0 && options.scale_jitter < 1.0)) {
      throw ConfigError("federation.scale_jitter", "must lie in [0, 1)");
    }
    if (!(options.hard_difficulty > 0.0)) {
      throw ConfigError("federation.hard_difficulty", "must be positive");
    }
    if (fed.feature_dim > 0 && fed.num_classes > 0) {
      fed.domain_specs = default_domain_specs(fed.num_domains, fed.feature_dim, fed.num_classes, fed.seed, options);
    }
  }
  in.reject_unknown();
  return fed;
}

}  // namespace

ExperimentConfig config_from_json(const Json& doc) {
  ObjectReader in(doc, "");
  ExperimentConfig config;
  if (!in.has("method")) {
    throw ConfigError("method", "is required");
  }
  config.method = parse_method(in.text("method"));
  config.seed = in.seed("seed", config.seed);
  config.rounds = in.count("rounds", config.rounds);
  config.eval_every = in.count("eval_every", config.eval_every);
  config.tau = in.real("tau", config.tau);
  config.beta = in.real("beta", config.beta);
  config.log_signs = in.flag("log_signs", config.log_signs);
  if (in.has("std_convention")) {
    config.std_convention = parse_std_convention(in.text("std_convention"));
  }

  if (in.has("federation")) {
    config.federation = read_federation(in.raw("federation"), config.seed);
  } else {
    config.federation = read_federation(Json::object(), config.seed);
  }

  config.arch.input_dim = config.federation.feature_dim;
  config.arch.num_classes = config.federation.num_classes;
  if (in.has("arch")) {
    ObjectReader a(in.raw("arch"), "arch");
    config.arch.input_dim = a.count("input_dim", config.arch.input_dim);
    config.arch.num_classes = a.count("num_classes", config.arch.num_classes);
    if (a.has("hidden_dims")) {
      const auto& dims = a.raw("hidden_dims");
      if (!dims.is_array()) {
        throw ConfigError("arch.hidden_dims", "must be an array of positive integers");
      }
      config.arch.hidden_dims.clear();
      for (const auto& h : dims) {
        if (!h.is_number_unsigned()) {
          throw ConfigError("arch.hidden_dims", "must be an array of positive integers");
        }
        config.arch.hidden_dims.push_back(h.get<std::size_t>());
      }
    }
    a.reject_unknown();
  }

  if (in.has("optimizer")) {
    ObjectReader o(in.raw("optimizer"), "optimizer");
    config.opt.learning_rate = o.real("learning_rate", config.opt.learning_rate);
    config.opt.momentum = o.real("momentum", config.opt.momentum);
    config.opt.weight_decay = o.real("weight_decay", config.opt.weight_decay);
    config.opt.batch_size = o.count("batch_size", config.opt.batch_size);
    config.opt.local_epochs = o.count("local_epochs", config.opt.local_epochs);
    o.reject_unknown();
  }
  in.reject_unknown();

  validate(config);
  return config;
}

Json config_to_json(const ExperimentConfig& config) {
  Json doc;
  doc["method"] = std::string(to_string(config.method));
  doc["seed"] = config.seed;
  doc["rounds"] = config.rounds;
  doc["eval_every"] = config.eval_every;
  doc["tau"] = config.tau;
  doc["beta"] = config.beta;
  doc["log_signs"] = config.log_signs;
  doc["std_convention"] = std::string(to_string(config.std_convention));

  const auto& fed = config.federation;
  Json f;
  f["num_domains"] = fed.num_domains;
  f["clients_per_domain"] = fed.clients_per_domain;
  f["samples_per_client"] = fed.samples_per_client;
  f["test_samples_per_domain"] = fed.test_samples_per_domain;
  f["feature_dim"] = fed.feature_dim;
  f["num_classes"] = fed.num_classes;
  f["seed"] = fed.seed;
  Json specs = Json::array();
  for (const auto& spec : fed.domain_specs) {
    Json s;
    s["domain_id"] = static_cast<std::uint64_t>(spec.domain_id);
    s["class_means"] = write_matrix(spec.class_means);
    s["linear_transform"] = write_matrix(spec.linear_transform);
    s["noise_scale"] = spec.noise_scale;
    s["difficulty_scale"] = spec.difficulty_scale;
    specs.push_back(std::move(s));
  }
  f["domain_specs"] = std::move(specs);
  doc["federation"] = std::move(f);

  doc["arch"] = {{"input_dim", config.arch.input_dim},
                 {"hidden_dims", config.arch.hidden_dims},
                 {"num_classes", config.arch.num_classes}};
  doc["optimizer"] = {{"learning_rate", config.opt.learning_rate},
                      {"momentum", config.opt.momentum},
                      {"weight_decay", config.opt.weight_decay},
                      {"batch_size", config.opt.batch_size},
                      {"local_epochs", config.opt.local_epochs}};
  return doc;
}

Json read_config_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  try {
    return Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": invalid JSON: " + e.what());
  }
}

ExperimentConfig parse_config(const std::filesystem::path& path) { return config_from_json(read_config_document(path)); }

}  // namespace fedheal
