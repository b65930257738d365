#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "json.hpp"
#include "ttfm/losses/losses.hpp"
#include "ttfm/nn/models.hpp"
#include "ttfm/probpath.hpp"
#include "ttfm/training/optim.hpp"

namespace ttfm::training {

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t total_examples = 256 * 20000;
  std::uint64_t seed = 0;
  losses::LossSpec loss;
  std::size_t eval_every = 100;
  std::size_t checkpoint_every = 1000;
  AdamConfig adam;
  double test_ema_decay = 0.999;

  void validate() const;
  std::size_t iterations() const { return batch_size == 0 ? 0 : total_examples / batch_size; }
};

/// Loss averaged over the iterations since the previous record.
struct TelemetryRecord {
  std::uint64_t iter = 0;
  double loss = 0.0;
  std::map<std::string, double> loss_terms;
  double lr = 0.0;
  double wall_ms = 0.0;
};

nlohmann::json to_json(const TelemetryRecord& rec);

/// Parameters at a checkpoint. `ema_loss` is null for teachers.
struct TrainSnapshot {
  std::uint64_t iteration = 0;
  const nn::ParamStore* params = nullptr;
  const nn::ParamStore* ema_test = nullptr;
  const nn::ParamStore* ema_loss = nullptr;
};

struct TrainHooks {
  std::function<void(const TelemetryRecord&)> on_telemetry;
  /// Called every checkpoint_every iterations and once after the last iteration.
  std::function<void(const TrainSnapshot&)> on_checkpoint;
};

struct TrainResult {
  nn::ParamStore params;
  nn::ParamStore ema_test;
  nn::ParamStore ema_loss;  // empty for teachers
  std::uint64_t iterations = 0;
};

/// Flow-matching teacher training with the CFM loss. Per iteration the run RNG
/// draws t for every example, then noise, then data indices.
TrainResult train_teacher(const nn::TeacherNet& init, const path::PathConfig& path,
                          const path::DataSource& data, const TrainConfig& cfg,
                          const TrainHooks& hooks = {});

/// Student distillation with cfg.loss (ITVM, TVM_ONLY, LFMD, EFMD or PID).
/// ITVM splits each batch into one slice per active term, drawn in the order
/// IIVM, IAVM, TVM; the in-loss EMA starts at the initial parameters.
TrainResult distill(const nn::StudentAvm& init, const nn::VelocityField& teacher,
                    const losses::StateSampler& states, const TrainConfig& cfg,
                    const TrainHooks& hooks = {});

/// Slice sizes of an ITVM batch for the active terms (weight > 0), remainder to the first.
std::array<Eigen::Index, 3> itvm_slices(std::size_t batch_size, const losses::LossSpec& spec);

}  // namespace ttfm::training
