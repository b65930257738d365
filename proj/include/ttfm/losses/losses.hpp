#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>

#include "ttfm/nn/autodiff.hpp"
#include "ttfm/nn/models.hpp"
#include "ttfm/probpath.hpp"
#include "ttfm/rng.hpp"

namespace ttfm::losses {

enum class LossKind { Cfm, Itvm, Lfmd, Efmd, Pid, TvmOnly };
/// Intermediate time u of the TVM term.
enum class UStrategy { TerminalMinusTau, InitialPlusTau, UniformOnInterval };
/// EFMD residual: PdeConsistent uses d_s phi + (d_x phi) v, PaperLiteral uses d_s phi - (d_x phi) v.
enum class EfmdSign { PaperLiteral, PdeConsistent };

struct LossSpec {
  LossKind kind = LossKind::Itvm;
  double tau = 0.005;
  double mu = 0.99;  // in-loss EMA decay
  UStrategy u_strategy = UStrategy::TerminalMinusTau;
  EfmdSign efmd_sign = EfmdSign::PdeConsistent;
  std::array<double, 3> term_weights{1.0, 1.0, 1.0};  // IIVM, IAVM, TVM

  void validate() const;
};

std::string to_string(LossKind kind);
std::string to_string(UStrategy u);
std::string to_string(EfmdSign sign);
LossKind loss_kind_from_string(const std::string& s);
UStrategy u_strategy_from_string(const std::string& s);
EfmdSign efmd_sign_from_string(const std::string& s);

/// Points x_s ~ p_s at one time per column.
struct PointBatch {
  Vec s;
  Mat xs;
};

struct IntervalBatch {
  Vec s;
  Vec t;
  Mat xs;
};

struct TvmBatch {
  Vec s;
  Vec t;
  Vec u;
  Mat xs;
};

struct ItvmBatch {
  PointBatch iivm;
  PointBatch iavm;
  TvmBatch tvm;
};

/// Draws x_s ~ p_s for one time per column.
using StateSampler = std::function<Mat(const Vec& s, Rng& rng)>;

/// Sampler backed by the probability path and a data source (both must outlive it).
StateSampler path_sampler(const path::PathConfig& cfg, const path::DataSource& data);

/// s ~ U[0, s_max]. Draw order: all s, then x_s.
PointBatch sample_point_batch(const StateSampler& states, Rng& rng, Eigen::Index n, double s_max);
/// s ~ U[0, 1 - gap], t ~ U[s + gap, 1]. Draw order: all s, all t, then x_s.
IntervalBatch sample_interval_batch(const StateSampler& states, Rng& rng, Eigen::Index n,
                                    double gap);
/// TVM times. TerminalMinusTau: u = t - tau; UniformOnInterval: u ~ U[s, t - tau];
/// InitialPlusTau: u = s + tau with s ~ U[0, 1 - 2 tau], t ~ U[s + 2 tau, 1] so t - u >= tau.
TvmBatch sample_tvm_batch(const StateSampler& states, Rng& rng, Eigen::Index n, double tau,
                          UStrategy strategy);

struct LossValue {
  double value = 0.0;
  Vec grad;
};

struct LossBatchReport {
  double total = 0.0;
  std::map<std::string, double> per_term;
  std::size_t n = 0;
  Vec grad;
};

// Recorded loss terms. Teacher outputs and EMA outputs enter as constants;
// `theta` is the binding of the parameters under training.

nn::ad::Var cfm_term(nn::ad::Tape& tape, const nn::TeacherNet& net, const nn::ad::MlpVars& eta,
                     const path::CoupledBatch& batch);
nn::ad::Var iivm_term(nn::ad::Tape& tape, const nn::StudentAvm& student,
                      const nn::ad::MlpVars& theta, const nn::VelocityField& teacher,
                      const PointBatch& batch);
nn::ad::Var iavm_term(nn::ad::Tape& tape, const nn::StudentAvm& student,
                      const nn::ad::MlpVars& theta, const nn::VelocityField& teacher,
                      const PointBatch& batch, double tau);
/// `ema` may be bound trainable: the target is built from its values only, so
/// no gradient reaches it.
nn::ad::Var tvm_term(nn::ad::Tape& tape, const nn::StudentAvm& student,
                     const nn::ad::MlpVars& theta, const nn::ad::MlpVars& ema,
                     const TvmBatch& batch);
nn::ad::Var lfmd_term(nn::ad::Tape& tape, const nn::StudentAvm& student,
                      const nn::ad::MlpVars& theta, const nn::VelocityField& teacher,
                      const IntervalBatch& batch);
nn::ad::Var efmd_term(nn::ad::Tape& tape, const nn::StudentAvm& student,
                      const nn::ad::MlpVars& theta, const nn::VelocityField& teacher,
                      const IntervalBatch& batch, EfmdSign sign);
nn::ad::Var pid_term(nn::ad::Tape& tape, const nn::StudentAvm& student,
                     const nn::ad::MlpVars& theta, const nn::VelocityField& teacher,
                     const IntervalBatch& batch, double tau);

/// Mean ||v^eta_t(x_t) - v_t(x_t | x_data)||^2 and its gradient w.r.t. the teacher's parameters.
LossValue cfm_loss(const nn::TeacherNet& net, const path::CoupledBatch& batch);
LossValue iivm_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const PointBatch& batch);
LossValue iavm_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const PointBatch& batch, double tau);
LossValue tvm_loss(const nn::StudentAvm& student, const nn::ParamStore& ema,
                   const TvmBatch& batch);
LossValue lfmd_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const IntervalBatch& batch);
LossValue efmd_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const IntervalBatch& batch, EfmdSign sign);
LossValue pid_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                   const IntervalBatch& batch, double tau);

/// Weighted IIVM + IAVM + TVM over independent slices. Terms with weight 0 are skipped.
LossBatchReport itvm_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                          const nn::ParamStore& ema, const ItvmBatch& batch, const LossSpec& spec);

/// One Heun step of size tau from (s, x); the teacher-side IAVM target is (result - x) / tau.
Mat heun_target(const nn::VelocityField& teacher, const Vec& s, const Mat& x, double tau);

}  // namespace ttfm::losses
