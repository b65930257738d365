#include "ttfm/nn/encoding.hpp"

#include <cmath>

namespace ttfm::nn {

namespace {

void check_dim(int dim) {
  if (dim <= 0 || dim % 2 != 0)
    throw ConfigError("positional encoding width must be a positive even number, got " +
                      std::to_string(dim));
}

}  // namespace

Vec pe_frequencies(int dim) {
  check_dim(dim);
  const int half = dim / 2;
  Vec w(half);
  for (int k = 0; k < half; ++k)
    w(k) = std::pow(10000.0, -2.0 * k / static_cast<double>(dim));
  return w;
}

Vec pe_encode(double t, int dim) {
  Mat out(dim, 1);
  pe_fill(Vec::Constant(1, t), dim, out);
  return out.col(0);
}

Vec pe_encode_dt(double t, int dim) {
  Mat out(dim, 1);
  pe_fill_dt(Vec::Constant(1, t), Vec::Ones(1), dim, out);
  return out.col(0);
}

void pe_fill(const Vec& t, int dim, Eigen::Ref<Mat> out) {
  const Vec w = pe_frequencies(dim);
  const Eigen::Index half = w.size();
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    for (Eigen::Index k = 0; k < half; ++k) {
      const double a = t(j) * w(k);
      out(k, j) = std::sin(a);
      out(half + k, j) = std::cos(a);
    }
  }
}

void pe_fill_dt(const Vec& t, const Vec& scale, int dim, Eigen::Ref<Mat> out) {
  const Vec w = pe_frequencies(dim);
  const Eigen::Index half = w.size();
  for (Eigen::Index j = 0; j < t.size(); ++j) {
    for (Eigen::Index k = 0; k < half; ++k) {
      const double a = t(j) * w(k);
      out(k, j) = scale(j) * w(k) * std::cos(a);
      out(half + k, j) = -scale(j) * w(k) * std::sin(a);
    }
  }
}

}  // namespace ttfm::nn
