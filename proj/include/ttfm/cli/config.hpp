#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "json.hpp"
#include "ttfm/datasets/datasets.hpp"
#include "ttfm/probpath.hpp"
#include "ttfm/training/trainer.hpp"

namespace ttfm::cli {

struct NetConfig {
  int hidden_width = 256;
  int n_hidden = 8;
  int pe_dim = 256;
};

struct EvalConfig {
  std::vector<int> nfe{1, 2, 4, 8};
  std::size_t n_samples = 50000;
  int ode_steps = 100;
};

/// Everything a CLI verb needs. Unset sections keep their defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "run";
  datasets::DatasetSpec dataset;
  path::PathConfig path;
  NetConfig teacher;
  NetConfig student;
  training::TrainConfig train;  // train.loss holds the "loss" section
  EvalConfig eval;
  std::filesystem::path teacher_checkpoint;
  std::filesystem::path student_checkpoint;

  /// Structural checks shared by every verb; errors name the offending field.
  void validate() const;
};

/// Parses a config document. Unknown keys and type mismatches raise ConfigError
/// naming the field path (e.g. "train.batch_size").
RunConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& file);

}  // namespace ttfm::cli
