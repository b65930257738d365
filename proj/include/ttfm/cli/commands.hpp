#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ttfm/cli/config.hpp"
#include "ttfm/eval/kl.hpp"
#include "ttfm/nn/checkpoint.hpp"

namespace ttfm::cli {

// Every command writes under cfg.output_dir and refreshes its manifest.json.
// Sub-seeds come from derive_seed(cfg.seed, tag) with tags "teacher.init",
// "teacher.train", "student.init", "student.train", "sample.nfe<K>" and "eval.nfe<K>".

/// dataset.csv
std::filesystem::path cmd_dataset(const RunConfig& cfg);

/// teacher.ckpt, teacher_telemetry.jsonl and checkpoints/teacher_<iter>.ckpt.
std::filesystem::path cmd_train_teacher(const RunConfig& cfg);

/// student.ckpt, student_telemetry.jsonl and checkpoints/student_<iter>.ckpt.
/// Needs cfg.teacher_checkpoint.
std::filesystem::path cmd_distill(const RunConfig& cfg);

/// samples_nfe<K>.csv from the student's test-time EMA. Needs cfg.student_checkpoint.
std::filesystem::path cmd_sample(const RunConfig& cfg, int nfe, std::size_t n);

/// kl_nfe<K>.json for every K in cfg.eval.nfe. Needs both checkpoints.
std::vector<eval::KlReport> cmd_eval_kl(const RunConfig& cfg);

/// One `<axis>=<value>/` run (distill + eval-kl) per value and summary.csv.
/// Axis is one of u_strategy, tau, mu.
std::filesystem::path cmd_ablate(const RunConfig& cfg, const std::string& axis,
                                 const std::vector<std::string>& values);

/// SVG scatter for a .csv input, loss curve for a .jsonl telemetry input.
std::filesystem::path cmd_plot(const RunConfig& cfg, const std::filesystem::path& input,
                               const std::filesystem::path& out);

/// Throws ConfigError listing every field in which the checkpoint disagrees with
/// the expected kind, dimension or sigma_min.
void check_compatible(const nn::Checkpoint& ckpt, const std::string& kind, int dim,
                      double sigma_min, const std::string& label);

}  // namespace ttfm::cli
