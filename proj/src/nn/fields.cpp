#include "ttfm/nn/fields.hpp"

#include <cmath>

namespace ttfm::nn {

Mat ConstantField::velocity(const Vec&, const Mat& x) const {
  require(x.rows() == dim(), "ConstantField: dimension mismatch");
  return c_.replicate(1, x.cols());
}

Mat ConstantField::jvp_x(const Vec&, const Mat& x, const Mat&) const {
  return Mat::Zero(x.rows(), x.cols());
}

Vec ConstantField::divergence(const Vec&, const Mat& x) const { return Vec::Zero(x.cols()); }

LinearField LinearField::scalar(double a, Eigen::Index dim) {
  return LinearField(a * Mat::Identity(dim, dim));
}

Mat LinearField::velocity(const Vec&, const Mat& x) const {
  require(x.rows() == dim(), "LinearField: dimension mismatch");
  return a_ * x;
}

Mat LinearField::jvp_x(const Vec&, const Mat&, const Mat& tangent) const { return a_ * tangent; }

Vec LinearField::divergence(const Vec&, const Mat& x) const {
  return Vec::Constant(x.cols(), a_.trace());
}

Mat ConstantAvm::velocity(const Vec&, const Vec&, const Mat& x) const {
  require(x.rows() == dim(), "ConstantAvm: dimension mismatch");
  return c_.replicate(1, x.cols());
}

Mat ConstantAvm::directional(const Vec&, const Vec&, const Mat& x, const Vec&, const Vec&,
                             const Mat&) const {
  return Mat::Zero(x.rows(), x.cols());
}

Mat LinearAvm::velocity(const Vec&, const Vec&, const Mat& x) const {
  require(x.rows() == dim(), "LinearAvm: dimension mismatch");
  return a_ * x;
}

Mat LinearAvm::directional(const Vec&, const Vec&, const Mat&, const Vec&, const Vec&,
                           const Mat& dx) const {
  return a_ * dx;
}

namespace {

// g(h) = (e^{r h} - 1) / h and its derivative, with series near h = 0.
double growth(double r, double h) {
  if (std::abs(r * h) < 1e-5) return r + r * r * h / 2.0 + r * r * r * h * h / 6.0;
  return std::expm1(r * h) / h;
}

double growth_dh(double r, double h) {
  if (std::abs(r * h) < 1e-5) return r * r / 2.0 + r * r * r * h / 3.0;
  const double e = std::exp(r * h);
  return (r * h * e - std::expm1(r * h)) / (h * h);
}

}  // namespace

Mat ExactLinearFlowAvm::velocity(const Vec& s, const Vec& t, const Mat& x) const {
  require(x.rows() == dim(), "ExactLinearFlowAvm: dimension mismatch");
  Mat out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      out(i, j) = growth(rates_(i), t(j) - s(j)) * x(i, j);
  return out;
}

Mat ExactLinearFlowAvm::directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds,
                                    const Vec& dt, const Mat& dx) const {
  Mat out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double h = t(j) - s(j);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double r = rates_(i);
      out(i, j) = growth_dh(r, h) * (dt(j) - ds(j)) * x(i, j) + growth(r, h) * dx(i, j);
    }
  }
  return out;
}

}  // namespace ttfm::nn
