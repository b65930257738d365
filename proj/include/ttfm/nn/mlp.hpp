#pragma once

#include "ttfm/nn/params.hpp"

namespace ttfm::nn {

double elu(double z);
double elu_prime(double z);
double elu_second(double z);

// Elementwise versions, vectorized through exp(min(z, 0)).
Mat elu(const Mat& z);
Mat elu_prime(const Mat& z);
Mat elu_second(const Mat& z);

/// Plain (non-recording) forward pass; input is in_dim x n.
Mat mlp_forward(const MlpSpec& spec, const ParamStore& params, const Mat& input);

struct ForwardTangent {
  Mat value;    // out_dim x n
  Mat tangent;  // out_dim x (k n)
};

/// Forward pass that also pushes k stacked tangent directions through the network.
/// `tangent` is in_dim x (k n); block b (columns [b n, (b+1) n)) is the direction
/// applied to the n primal columns.
ForwardTangent mlp_forward_tangent(const MlpSpec& spec, const ParamStore& params,
                                   const Mat& input, const Mat& tangent);

}  // namespace ttfm::nn
