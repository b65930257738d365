#include "ttfm/eval/kl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ttfm/ode/solvers.hpp"

namespace ttfm::eval {

NfeSchedule NfeSchedule::uniform(int K) {
  if (K < 1) throw ConfigError("nfe must be >= 1");
  NfeSchedule s;
  s.K = K;
  s.knots.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) s.knots[static_cast<std::size_t>(k)] = static_cast<double>(k) / K;
  return s;
}

void NfeSchedule::validate() const {
  if (K < 1) throw ConfigError("nfe must be >= 1");
  if (knots.size() != static_cast<std::size_t>(K) + 1)
    throw ConfigError("schedule needs K + 1 knots");
  if (knots.front() != 0.0 || knots.back() != 1.0)
    throw ConfigError("schedule knots must start at 0 and end at 1");
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (!(knots[k] > knots[k - 1])) throw ConfigError("schedule knots must increase");
}

namespace {

Mat keep_columns(const Mat& m, const std::vector<Eigen::Index>& cols) {
  Mat out(m.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(cols[j]);
  return out;
}

}  // namespace

SampleTraces sample_student(const nn::Ttfm& ttfm, const NfeSchedule& schedule, Eigen::Index n,
                            Rng& rng) {
  schedule.validate();
  require(n >= 0, "sample_student: n must be >= 0");
  SampleTraces tr;
  tr.y.reserve(static_cast<std::size_t>(schedule.K) + 1);
  tr.y.push_back(rng.normal_matrix(ttfm.dim(), n));
  for (int k = 1; k <= schedule.K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    tr.y.push_back(ttfm.apply(schedule.knots[kk - 1], schedule.knots[kk], tr.y.back()));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < n; ++j) {
    bool ok = true;
    for (const Mat& m : tr.y) ok = ok && m.col(j).allFinite();
    if (ok) keep.push_back(j);
  }
  if (static_cast<Eigen::Index>(keep.size()) != n) {
    tr.rejected = n - static_cast<Eigen::Index>(keep.size());
    for (Mat& m : tr.y) m = keep_columns(m, keep);
  }
  return tr;
}

Vec log_normal(const Mat& x) {
  const double c = -0.5 * static_cast<double>(x.rows()) * std::log(2.0 * std::numbers::pi);
  return (c - 0.5 * x.colwise().squaredNorm().array()).matrix().transpose();
}

double log_abs_det(const Mat& m) {
  require(m.rows() == m.cols(), "log_abs_det: square matrix expected");
  double det;
  if (m.rows() == 2) {
    det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  } else {
    det = m.partialPivLu().determinant();
  }
  if (!(std::abs(det) >= 1e-12))
    throw SingularJacobianError("Jacobian determinant " + std::to_string(det) + " below 1e-12");
  return std::log(std::abs(det));
}

Vec logprob_student(const nn::Ttfm& ttfm, const NfeSchedule& schedule, const SampleTraces& traces,
                    std::vector<Eigen::Index>* singular) {
  schedule.validate();
  require(traces.y.size() == static_cast<std::size_t>(schedule.K) + 1,
          "logprob_student: trace length does not match the schedule");
  Vec out = log_normal(traces.x0());
  for (int k = 1; k <= schedule.K; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    const std::vector<Mat> jac =
        ttfm.jacobians_x(schedule.knots[kk - 1], schedule.knots[kk], traces.y[kk - 1]);
    for (std::size_t j = 0; j < jac.size(); ++j) {
      const auto col = static_cast<Eigen::Index>(j);
      if (std::isnan(out(col))) continue;
      try {
        out(col) -= log_abs_det(jac[j]);
      } catch (const SingularJacobianError& e) {
        if (!singular)
          throw SingularJacobianError("sample " + std::to_string(j) + ", step " +
                                      std::to_string(k) + ": " + e.what());
        out(col) = std::numeric_limits<double>::quiet_NaN();
        singular->push_back(col);
      }
    }
  }
  return out;
}

Vec logprob_teacher(const nn::VelocityField& teacher, const Mat& y, int n_steps) {
  // Columns are independent; fixed-size chunks keep the working set in cache.
  constexpr Eigen::Index kChunk = 512;
  Vec out(y.cols());
  for (Eigen::Index at = 0; at < y.cols(); at += kChunk) {
    const Eigen::Index n = std::min(kChunk, y.cols() - at);
    const ode::LogProbPath p = ode::integrate_logprob_backward(teacher, y.middleCols(at, n), n_steps);
    out.segment(at, n) = log_normal(p.x0) - p.divergence_integral;
  }
  return out;
}

nlohmann::json to_json(const KlReport& report) {
  nlohmann::json j;
  j["nfe"] = report.nfe;
  j["n"] = report.n;
  j["estimate"] = report.estimate;
  j["std_error"] = report.std_error;
  j["dropped"] = report.dropped;
  if (!report.warning.empty()) j["warning"] = report.warning;
  return j;
}

KlReport kl_estimate(const nn::Ttfm& ttfm, const nn::VelocityField& teacher,
                     const NfeSchedule& schedule, Eigen::Index n, Rng& rng, int ode_steps) {
  require(n >= 2, "kl_estimate: n must be >= 2");
  require(teacher.dim() == ttfm.dim(), "kl_estimate: teacher and student dimensions differ");
  const SampleTraces traces = sample_student(ttfm, schedule, n, rng);
  std::vector<Eigen::Index> singular;
  const Vec lp_student = logprob_student(ttfm, schedule, traces, &singular);
  const Vec lp_teacher = logprob_teacher(teacher, traces.final(), ode_steps);

  KlReport rep;
  rep.nfe = schedule.K;
  rep.dropped = traces.rejected;
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(traces.size()));
  for (Eigen::Index j = 0; j < traces.size(); ++j) {
    const double term = schulman_term(lp_teacher(j) - lp_student(j));
    if (std::isfinite(term)) {
      terms.push_back(term);
    } else {
      ++rep.dropped;
    }
  }
  rep.per_sample = Eigen::Map<const Vec>(terms.data(), static_cast<Eigen::Index>(terms.size()));
  rep.n = rep.per_sample.size();
  if (rep.n > 0) {
    rep.estimate = rep.per_sample.mean();
    if (rep.n > 1) {
      const double var =
          (rep.per_sample.array() - rep.estimate).square().sum() / static_cast<double>(rep.n - 1);
      rep.std_error = std::sqrt(var / static_cast<double>(rep.n));
    }
  }
  if (rep.dropped * 100 > n)
    rep.warning = std::to_string(rep.dropped) + " of " + std::to_string(n) +
                  " samples dropped (singular Jacobian or non-finite density)";
  return rep;
}

}  // namespace ttfm::eval
