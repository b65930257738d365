#pragma once

#include "ttfm/nn/models.hpp"

namespace ttfm::nn {

/// v_t(x) = c.
class ConstantField final : public VelocityField {
 public:
  explicit ConstantField(Vec c) : c_(std::move(c)) {}
  Eigen::Index dim() const override { return c_.size(); }
  Mat velocity(const Vec& t, const Mat& x) const override;
  Mat jvp_x(const Vec& t, const Mat& x, const Mat& tangent) const override;
  Vec divergence(const Vec& t, const Mat& x) const override;

 private:
  Vec c_;
};

/// v_t(x) = A x, independent of t.
class LinearField final : public VelocityField {
 public:
  explicit LinearField(Mat a) : a_(std::move(a)) {}
  /// a * I in `dim` dimensions.
  static LinearField scalar(double a, Eigen::Index dim);
  Eigen::Index dim() const override { return a_.rows(); }
  Mat velocity(const Vec& t, const Mat& x) const override;
  Mat jvp_x(const Vec& t, const Mat& x, const Mat& tangent) const override;
  Vec divergence(const Vec& t, const Mat& x) const override;

 private:
  Mat a_;
};

/// v_{s,t}(x) = c.
class ConstantAvm final : public AverageVelocityModel {
 public:
  explicit ConstantAvm(Vec c) : c_(std::move(c)) {}
  Eigen::Index dim() const override { return c_.size(); }
  Mat velocity(const Vec& s, const Vec& t, const Mat& x) const override;
  Mat directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds, const Vec& dt,
                  const Mat& dx) const override;

 private:
  Vec c_;
};

/// v_{s,t}(x) = A x for all (s, t).
class LinearAvm final : public AverageVelocityModel {
 public:
  explicit LinearAvm(Mat a) : a_(std::move(a)) {}
  Eigen::Index dim() const override { return a_.rows(); }
  Mat velocity(const Vec& s, const Vec& t, const Mat& x) const override;
  Mat directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds, const Vec& dt,
                  const Mat& dx) const override;

 private:
  Mat a_;
};

/// Exact average velocity of the flow of dx/dt = diag(rates) x:
/// v_{s,t}(x) = diag((exp(r (t-s)) - 1) / (t-s)) x, equal to diag(r) x at t = s.
/// The induced two-timed map is exactly consistent.
class ExactLinearFlowAvm final : public AverageVelocityModel {
 public:
  explicit ExactLinearFlowAvm(Vec rates) : rates_(std::move(rates)) {}
  Eigen::Index dim() const override { return rates_.size(); }
  Mat velocity(const Vec& s, const Vec& t, const Mat& x) const override;
  Mat directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds, const Vec& dt,
                  const Mat& dx) const override;

 private:
  Vec rates_;
};

}  // namespace ttfm::nn
