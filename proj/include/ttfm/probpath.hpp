#pragma once

#include "ttfm/common.hpp"
#include "ttfm/rng.hpp"

namespace ttfm::path {

/// Linear optimal-transport probability path with noise floor sigma_min.
struct PathConfig {
  double sigma_min = 0.001;

  /// Run configurations require 0 < sigma_min < 1.
  void validate() const;
};

/// Source of data points x_data.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual Eigen::Index dim() const = 0;
  /// Draws n points (d x n) using rng.
  virtual Mat draw(Eigen::Index n, Rng& rng) const = 0;
};

/// Every draw returns the same point.
class PointMass final : public DataSource {
 public:
  explicit PointMass(Vec point) : point_(std::move(point)) {}
  Eigen::Index dim() const override { return point_.size(); }
  Mat draw(Eigen::Index n, Rng& rng) const override;

 private:
  Vec point_;
};

/// sigma_t = 1 - (1 - sigma_min) t, for t in [0, 1].
double sigma_t(const PathConfig& cfg, double t);

Vec interpolate(const PathConfig& cfg, const Vec& x0, const Vec& x_data, double t);
Vec cond_velocity(const PathConfig& cfg, const Vec& x, const Vec& x_data, double t);

// Column-wise versions; t holds one time per column.
Mat interpolate(const PathConfig& cfg, const Mat& x0, const Mat& x_data, const Vec& t);
Mat cond_velocity(const PathConfig& cfg, const Mat& x, const Mat& x_data, const Vec& t);

/// One draw from the marginal p_s: x0 ~ N(0, I), x_data ~ data.
Vec sample_ps(const PathConfig& cfg, const DataSource& data, Rng& rng, double s);

/// One draw from p_{s_j} per column j. All noise is drawn first, then all data.
Mat sample_ps(const PathConfig& cfg, const DataSource& data, Rng& rng, const Vec& s);

/// (x0, x_data, t, x_t, v_t(x_t | x_data)) tuples for the CFM loss.
struct CoupledBatch {
  Vec t;
  Mat x0;
  Mat x_data;
  Mat x_t;
  Mat v_cond;
};

/// Draws t ~ U[0,1] per example, then noise, then data.
CoupledBatch sample_coupled(const PathConfig& cfg, const DataSource& data, Rng& rng,
                            Eigen::Index n);

}  // namespace ttfm::path
