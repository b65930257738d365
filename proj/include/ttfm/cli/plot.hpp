#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ttfm/common.hpp"

namespace ttfm::cli {

inline constexpr Eigen::Index kMaxScatterPoints = 20000;

/// SVG scatter of the first two coordinates. More than kMaxScatterPoints points are
/// subsampled uniformly without replacement using `seed`.
std::string scatter_svg(const Mat& points, std::uint64_t seed, const std::string& title = "");

/// SVG polyline of log10(loss) against iteration.
std::string loss_curve_svg(const std::vector<double>& iters, const std::vector<double>& loss,
                           const std::string& title = "");

}  // namespace ttfm::cli
