#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ttfm/probpath.hpp"

namespace ttfm::datasets {

enum class DatasetKind { Lobes5, Checker, Spiral, CsvPointCloud };

std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::Checker;
  std::size_t n_points = 1000000;
  std::uint64_t seed = 0;
  std::filesystem::path csv_path;  // CsvPointCloud only

  void validate() const;
};

// Generator constants.
inline constexpr double kLobeRadius = 1.5;
inline constexpr double kLobeStd = 0.3;
inline constexpr double kSpiralGrowth = 0.3;
inline constexpr double kSpiralThetaMin = 0.5;
inline constexpr double kSpiralThetaMax = 6.0 * 3.14159265358979323846;
inline constexpr double kSpiralNoise = 0.05;
/// Maps the noiseless spiral's outer radius onto 2.
inline constexpr double kSpiralScale = 2.0 / (kSpiralGrowth * kSpiralThetaMax);

/// Five isotropic Gaussians (std 0.3) centred at angles 2 pi k / 5 on radius 1.5, equal weights.
/// Per point: component index, then two normals.
Mat gen_lobes5(std::size_t n, std::uint64_t seed);

/// Uniform over the cells (i, j) with i + j even of the 4 x 4 tiling of [-2, 2]^2,
/// cell (i, j) = [-2 + i, -1 + i] x [-2 + j, -1 + j]. Per point: cell index, then x, then y.
Mat gen_checker(std::size_t n, std::uint64_t seed);

/// kSpiralScale * (0.3 theta (cos theta, sin theta) + 0.05 N), theta ~ U[0.5, 6 pi].
/// `theta` (optional) receives the latent angle of every point.
Mat gen_spiral(std::size_t n, std::uint64_t seed, Vec* theta = nullptr);

/// Checker cell membership predicate.
bool in_black_cell(double x, double y);

/// Points of the dataset described by `spec`.
Mat generate(const DatasetSpec& spec);

/// Rows of comma-separated reals; blank lines are skipped. An empty file gives
/// an empty matrix with `expected_dim` rows (0 when unknown).
Mat load_csv(const std::filesystem::path& path, Eigen::Index expected_dim = 0);
/// One point per row, 17 significant digits.
void save_csv(const Mat& points, const std::filesystem::path& path);
std::string to_csv(const Mat& points);
Mat parse_csv(const std::string& text, Eigen::Index expected_dim = 0,
              const std::string& source = "<csv>");

/// Draws uniformly (with replacement) from a fixed point cloud.
class PointCloud final : public path::DataSource {
 public:
  explicit PointCloud(Mat points);
  Eigen::Index dim() const override { return points_.rows(); }
  Mat draw(Eigen::Index n, Rng& rng) const override;
  const Mat& points() const { return points_; }

 private:
  Mat points_;
};

}  // namespace ttfm::datasets
