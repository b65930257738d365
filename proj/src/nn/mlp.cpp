#include "ttfm/nn/mlp.hpp"

#include <cmath>

namespace ttfm::nn {

double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
double elu_prime(double z) { return z > 0.0 ? 1.0 : std::exp(z); }
double elu_second(double z) { return z > 0.0 ? 0.0 : std::exp(z); }

Mat elu(const Mat& z) {
  // max(z, 0) + (e - 1): the second summand is exactly 0 for z > 0.
  return z.array().max(0.0) + (z.array().min(0.0).exp() - 1.0);
}

Mat elu_prime(const Mat& z) { return z.array().min(0.0).exp(); }

Mat elu_second(const Mat& z) {
  return (z.array() > 0.0).select(Mat::Zero(z.rows(), z.cols()), z.array().min(0.0).exp());
}

namespace {

void check_input(const MlpSpec& spec, const ParamStore& params, const Mat& input) {
  require(input.rows() == spec.in_dim, "mlp: input has " + std::to_string(input.rows()) +
                                           " rows, expected " + std::to_string(spec.in_dim));
  require(params.n_layers() == static_cast<std::size_t>(spec.n_layers()),
          "mlp: parameter layout does not match spec");
}

}  // namespace

Mat mlp_forward(const MlpSpec& spec, const ParamStore& params, const Mat& input) {
  check_input(spec, params, input);
  Mat h = input;
  for (int i = 0; i < spec.n_layers(); ++i) {
    Mat z = params.weight(i) * h;
    z.colwise() += params.bias(i);
    if (i < spec.n_hidden) z = elu(z);
    h = std::move(z);
  }
  return h;
}

ForwardTangent mlp_forward_tangent(const MlpSpec& spec, const ParamStore& params,
                                   const Mat& input, const Mat& tangent) {
  check_input(spec, params, input);
  const Eigen::Index n = input.cols();
  require(tangent.rows() == input.rows() && n > 0 && tangent.cols() % n == 0,
          "mlp: tangent shape incompatible with input");
  const Eigen::Index k = tangent.cols() / n;
  Mat h = input;
  Mat dh = tangent;
  for (int i = 0; i < spec.n_layers(); ++i) {
    Mat z = params.weight(i) * h;
    z.colwise() += params.bias(i);
    Mat dz = params.weight(i) * dh;
    if (i < spec.n_hidden) {
      const Mat slope = elu_prime(z);
      for (Eigen::Index b = 0; b < k; ++b)
        dz.middleCols(b * n, n).array() *= slope.array();
      z = elu(z);
    }
    h = std::move(z);
    dh = std::move(dz);
  }
  return {std::move(h), std::move(dh)};
}

}  // namespace ttfm::nn
