#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ttfm/nn/models.hpp"

namespace ttfm::nn {

/// Model snapshot. On disk: one line of JSON header, a newline, then each
/// payload as raw little-endian float64 values in header order.
struct Checkpoint {
  std::string kind;  // "teacher" or "student"
  int dim = 0;
  int pe_dim = 0;
  MlpSpec mlp;
  double sigma_min = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  nlohmann::json extra = nlohmann::json::object();
  std::vector<std::pair<std::string, ParamStore>> payloads;

  const ParamStore& payload(const std::string& name) const;
  bool has_payload(const std::string& name) const;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Networks rebuilt from a checkpoint with the named payload as parameters.
TeacherNet teacher_from_checkpoint(const Checkpoint& ckpt, const std::string& payload = "ema_test");
StudentAvm student_from_checkpoint(const Checkpoint& ckpt, const std::string& payload = "ema_test");

}  // namespace ttfm::nn
