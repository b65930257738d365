#pragma once

#include "ttfm/common.hpp"

namespace ttfm::nn {

/// Sinusoidal time encoding with frequencies w_k = 10000^(-2k/dim),
/// laid out as [sin(t w_0) ... sin(t w_{h-1}) | cos(t w_0) ... cos(t w_{h-1})]
/// with h = dim / 2. `dim` must be even.
Vec pe_encode(double t, int dim);

/// d/dt of pe_encode.
Vec pe_encode_dt(double t, int dim);

Vec pe_frequencies(int dim);

/// Writes pe_encode(t(j), dim) into column j of `out` (dim x t.size()).
void pe_fill(const Vec& t, int dim, Eigen::Ref<Mat> out);

/// Writes scale(j) * pe_encode_dt(t(j), dim) into column j of `out`.
void pe_fill_dt(const Vec& t, const Vec& scale, int dim, Eigen::Ref<Mat> out);

}  // namespace ttfm::nn
