#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "ttfm/nn/models.hpp"
#include "ttfm/rng.hpp"

namespace ttfm::eval {

/// K student evaluations on knots 0 = u_0 < ... < u_K = 1.
struct NfeSchedule {
  int K = 1;
  std::vector<double> knots;

  static NfeSchedule uniform(int K);
  void validate() const;
};

/// Batched sampling traces: y[0] = x0 and y[k] = phi_{u_{k-1}, u_k}(y[k-1]).
/// Columns whose output turned non-finite are removed; `rejected` counts them.
struct SampleTraces {
  std::vector<Mat> y;
  Eigen::Index rejected = 0;

  const Mat& x0() const { return y.front(); }
  const Mat& final() const { return y.back(); }
  Eigen::Index size() const { return y.empty() ? 0 : y.front().cols(); }
};

/// Draws x0 ~ N(0, I) (d x n, column by column) and composes the K jumps.
SampleTraces sample_student(const nn::Ttfm& ttfm, const NfeSchedule& schedule, Eigen::Index n,
                            Rng& rng);

/// Standard-normal log-density per column.
Vec log_normal(const Mat& x);

/// log|det m|; 2 x 2 closed form, LU otherwise. Throws SingularJacobianError below 1e-12.
double log_abs_det(const Mat& m);

/// log p0(x0) - sum_k log|det d phi / d x| per trace. A column whose Jacobian is
/// singular gets NaN and is listed in `singular` when that pointer is given;
/// without it a singular column throws SingularJacobianError.
Vec logprob_student(const nn::Ttfm& ttfm, const NfeSchedule& schedule, const SampleTraces& traces,
                    std::vector<Eigen::Index>* singular = nullptr);

/// log p0(x0) - integral of tr(grad v) along the backward Heun trajectory from y.
Vec logprob_teacher(const nn::VelocityField& teacher, const Mat& y, int n_steps = 100);

struct KlReport {
  int nfe = 0;
  Eigen::Index n = 0;  // summands used
  double estimate = 0.0;
  double std_error = 0.0;
  Eigen::Index dropped = 0;
  std::string warning;
  Vec per_sample;  // not serialized
};

nlohmann::json to_json(const KlReport& report);

/// Monte-Carlo KL(student || teacher) with summands exp(z) - 1 - z, z = log p_teacher - log p_student.
/// Singular or non-finite samples are dropped and counted; more than 1% dropped sets a warning.
KlReport kl_estimate(const nn::Ttfm& ttfm, const nn::VelocityField& teacher,
                     const NfeSchedule& schedule, Eigen::Index n, Rng& rng, int ode_steps = 100);

/// Schulman summand for one log-ratio.
inline double schulman_term(double z) { return std::expm1(z) - z; }

}  // namespace ttfm::eval
