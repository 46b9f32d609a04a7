#pragma once

#include <filesystem>

#include "json.hpp"

#include "fedheal/orchestrator.hpp"

namespace fedheal {

using Json = nlohmann::ordered_json;

/// Experiment config file (JSON). Only "method" is required; everything
/// else falls back to the desk-scale defaults (tau 0.3, beta 0.4).
///
///   {
///     "method": "fedheal",            // see parse_method()
///     "seed": 7, "rounds": 100, "eval_every": 1,
///     "tau": 0.3, "beta": 0.4,
///     "log_signs": false, "std_convention": "population",
///     "federation": {
///       "num_domains": 4, "clients_per_domain": 5, "samples_per_client": 40,
///       "test_samples_per_domain": 400, "feature_dim": 8, "num_classes": 4,
///       "seed": 7,                     // defaults to the top-level seed
///       // either explicit specs ...
///       "domain_specs": [{"domain_id": 0, "class_means": [[...]],
///                         "linear_transform": [[...]], "noise_scale": 1.0,
///                         "difficulty_scale": 1.0}, ...],
///       // ... or knobs for the built-in family (only without domain_specs)
///       "class_separation": 2.5, "noise_scale": 1.0,
///       "rotation_angle": 1.0, "scale_jitter": 0.3,
///       "hard_domain": 3, "hard_difficulty": 2.0
///     },
///     "arch": {"hidden_dims": [16]},   // input_dim / num_classes follow the federation
///     "optimizer": {"learning_rate": 0.01, "momentum": 0.9, "weight_decay": 1e-5,
///                   "batch_size": 16, "local_epochs": 5}
///   }
///
/// Unknown keys are rejected. Errors are ConfigError naming the field.
ExperimentConfig config_from_json(const Json& doc);

/// Fully explicit form (domain specs written out). Parsing the result gives
/// back an identical config.
Json config_to_json(const ExperimentConfig& config);

/// Reads and validates a config file. Throws std::runtime_error if the file
/// cannot be read or is not JSON, ConfigError for schema violations.
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Reads a config file into a JSON document without interpreting it, so
/// command-line overrides can be layered on before config_from_json.
Json read_config_document(const std::filesystem::path& path);

}  // namespace fedheal
