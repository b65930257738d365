#include "ttfm/probpath.hpp"

#include <cmath>
#include <string>

namespace ttfm::path {

namespace {

void check_time(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw DomainError("time " + std::to_string(t) + " outside [0, 1]");
}

void check_sigma(const PathConfig& cfg) {
  if (!(cfg.sigma_min >= 0.0 && cfg.sigma_min < 1.0))
    throw DomainError("sigma_min must lie in [0, 1)");
}

}  // namespace

void PathConfig::validate() const {
  if (!(sigma_min > 0.0 && sigma_min < 1.0))
    throw ConfigError("sigma_min must satisfy 0 < sigma_min < 1");
}

Mat PointMass::draw(Eigen::Index n, Rng&) const { return point_.replicate(1, n); }

double sigma_t(const PathConfig& cfg, double t) {
  check_sigma(cfg);
  check_time(t);
  return 1.0 - (1.0 - cfg.sigma_min) * t;
}

Vec interpolate(const PathConfig& cfg, const Vec& x0, const Vec& x_data, double t) {
  require(x0.size() == x_data.size(), "interpolate: dimension mismatch");
  return sigma_t(cfg, t) * x0 + t * x_data;
}

Vec cond_velocity(const PathConfig& cfg, const Vec& x, const Vec& x_data, double t) {
  require(x.size() == x_data.size(), "cond_velocity: dimension mismatch");
  const double denom = sigma_t(cfg, t);
  require(denom > 0.0, "cond_velocity: sigma_t vanishes (sigma_min = 0 at t = 1)");
  return (x_data - (1.0 - cfg.sigma_min) * x) / denom;
}

Mat interpolate(const PathConfig& cfg, const Mat& x0, const Mat& x_data, const Vec& t) {
  require(x0.rows() == x_data.rows() && x0.cols() == x_data.cols() && t.size() == x0.cols(),
          "interpolate: shape mismatch");
  Mat out(x0.rows(), x0.cols());
  for (Eigen::Index j = 0; j < x0.cols(); ++j)
    out.col(j) = sigma_t(cfg, t(j)) * x0.col(j) + t(j) * x_data.col(j);
  return out;
}

Mat cond_velocity(const PathConfig& cfg, const Mat& x, const Mat& x_data, const Vec& t) {
  require(x.rows() == x_data.rows() && x.cols() == x_data.cols() && t.size() == x.cols(),
          "cond_velocity: shape mismatch");
  Mat out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double denom = sigma_t(cfg, t(j));
    require(denom > 0.0, "cond_velocity: sigma_t vanishes (sigma_min = 0 at t = 1)");
    out.col(j) = (x_data.col(j) - (1.0 - cfg.sigma_min) * x.col(j)) / denom;
  }
  return out;
}

Vec sample_ps(const PathConfig& cfg, const DataSource& data, Rng& rng, double s) {
  return sample_ps(cfg, data, rng, Vec::Constant(1, s)).col(0);
}

Mat sample_ps(const PathConfig& cfg, const DataSource& data, Rng& rng, const Vec& s) {
  const Mat x0 = rng.normal_matrix(data.dim(), s.size());
  const Mat x_data = data.draw(s.size(), rng);
  return interpolate(cfg, x0, x_data, s);
}

CoupledBatch sample_coupled(const PathConfig& cfg, const DataSource& data, Rng& rng,
                            Eigen::Index n) {
  CoupledBatch b;
  b.t.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) b.t(j) = rng.uniform();
  b.x0 = rng.normal_matrix(data.dim(), n);
  b.x_data = data.draw(n, rng);
  b.x_t = interpolate(cfg, b.x0, b.x_data, b.t);
  b.v_cond = cond_velocity(cfg, b.x_t, b.x_data, b.t);
  return b;
}

}  // namespace ttfm::path
