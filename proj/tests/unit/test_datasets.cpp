#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <cstring>

#include "doctest.h"
#include "ttfm/datasets/datasets.hpp"

using namespace ttfm;
using namespace ttfm::datasets;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ttfm_unit_datasets";
  fs::create_directories(dir);
  return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("lobes5 statistics") {
  const std::size_t n = 1000000;
  const Mat x = gen_lobes5(n, 1);
  CHECK(x.rows() == 2);
  CHECK(x.cols() == static_cast<Eigen::Index>(n));
  for (int i = 0; i < 2; ++i) {
    const double m = x.row(i).mean();
    const double sd = std::sqrt((x.row(i).array() - m).square().mean());
    CHECK(std::abs(m) < 4.0 * sd / std::sqrt(static_cast<double>(n)));
  }
  Mat means(2, 5);
  for (int k = 0; k < 5; ++k) {
    const double a = 2.0 * std::numbers::pi * k / 5.0;
    means.col(k) << kLobeRadius * std::cos(a), kLobeRadius * std::sin(a);
  }
  std::array<double, 5> count{}, sq{};
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    Eigen::Index best;
    (means.colwise() - x.col(j)).colwise().squaredNorm().minCoeff(&best);
    count[best] += 1;
    sq[best] += (x.col(j) - means.col(best)).squaredNorm();
  }
  for (int k = 0; k < 5; ++k) {
    CHECK(std::abs(count[k] / (n / 5.0) - 1.0) < 0.03);
    CHECK(std::abs(std::sqrt(sq[k] / (2.0 * count[k])) / kLobeStd - 1.0) < 0.02);
  }
}

TEST_CASE("checker membership and cell counts") {
  const std::size_t n = 400000;
  const Mat x = gen_checker(n, 2);
  std::array<double, 16> cells{};
  bool all_black = true;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    all_black = all_black && in_black_cell(x(0, j), x(1, j));
    const int i = static_cast<int>(std::floor(x(0, j) + 2.0));
    const int k = static_cast<int>(std::floor(x(1, j) + 2.0));
    REQUIRE(i >= 0);
    REQUIRE(i < 4);
    REQUIRE(k >= 0);
    REQUIRE(k < 4);
    cells[4 * i + k] += 1;
  }
  CHECK(all_black);
  const double p = 1.0 / 8.0;
  const double se = std::sqrt(n * p * (1 - p));
  int black = 0;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) {
      if ((i + k) % 2 == 0) {
        ++black;
        CHECK(std::abs(cells[4 * i + k] - n * p) < 3 * se);
      } else {
        CHECK(cells[4 * i + k] == 0);
      }
    }
  CHECK(black == 8);
  for (int r = 0; r < 2; ++r) {
    const double m = x.row(r).mean();
    const double sd = std::sqrt((x.row(r).array() - m).square().mean());
    CHECK(std::abs(m) < 4 * sd / std::sqrt(static_cast<double>(n)));
  }
  CHECK(in_black_cell(-1.5, -1.5));
  CHECK(!in_black_cell(-0.5, -1.5));
  CHECK(!in_black_cell(2.5, 0.5));
}

TEST_CASE("spiral geometry") {
  const std::size_t n = 200000;
  Vec theta;
  const Mat x = gen_spiral(n, 3, &theta);
  CHECK(x.cwiseAbs().maxCoeff() <= 2.2);
  CHECK(theta.minCoeff() >= kSpiralThetaMin);
  CHECK(theta.maxCoeff() <= kSpiralThetaMax);
  // Undo the rescaling; the radius then follows 0.3 theta up to the noise.
  std::size_t inside = 0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double r = (x.col(j) / kSpiralScale).norm();
    if (std::abs(r - kSpiralGrowth * theta(j)) <= 3 * kSpiralNoise) ++inside;
  }
  CHECK(static_cast<double>(inside) / n >= 0.95);
  // Chi-square over 20 equal bins; 36.19 is the 0.99 quantile with 19 degrees of freedom.
  std::array<double, 20> bins{};
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const auto b = static_cast<int>((theta(j) - kSpiralThetaMin) / (kSpiralThetaMax - kSpiralThetaMin) * 20);
    bins[std::min(b, 19)] += 1;
  }
  double chi2 = 0.0;
  for (double c : bins) chi2 += (c - n / 20.0) * (c - n / 20.0) / (n / 20.0);
  CHECK(chi2 < 36.19);
}

TEST_CASE("generators are deterministic per seed") {
  CHECK(gen_lobes5(1000, 5) == gen_lobes5(1000, 5));
  CHECK(gen_checker(1000, 5) == gen_checker(1000, 5));
  CHECK(gen_spiral(1000, 5) == gen_spiral(1000, 5));
  CHECK(gen_checker(1000, 5) != gen_checker(1000, 6));
  DatasetSpec spec;
  spec.kind = DatasetKind::Spiral;
  spec.n_points = 500;
  spec.seed = 7;
  CHECK(generate(spec) == gen_spiral(500, 7));
  spec.n_points = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  for (auto k : {DatasetKind::Lobes5, DatasetKind::Checker, DatasetKind::Spiral, DatasetKind::CsvPointCloud})
    CHECK(dataset_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(dataset_kind_from_string("word"), ConfigError);
}

TEST_CASE("csv round trip is bit-exact") {
  Mat pts = gen_lobes5(200, 8);
  pts(0, 0) = 1e-300;
  pts(1, 0) = -std::nextafter(1.0, 0.0);
  pts(0, 1) = 0.1;
  const fs::path p = scratch("round.csv");
  save_csv(pts, p);
  const Mat back = load_csv(p);
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 200);
  CHECK(std::memcmp(back.data(), pts.data(), sizeof(double) * 400) == 0);
}

TEST_CASE("empty csv is an empty dataset") {
  const fs::path p = scratch("empty.csv");
  write_file(p, "");
  const Mat m = load_csv(p);
  CHECK(m.cols() == 0);
  CHECK(load_csv(p, 2).rows() == 2);
  CHECK(to_csv(Mat(2, 0)).empty());
}

TEST_CASE("hand-written csv fixture") {
  const fs::path p = scratch("three.csv");
  write_file(p, "1.5,-2\n0,0.25\n\n-3e-1,4\n");
  const Mat m = load_csv(p);
  REQUIRE(m.cols() == 3);
  CHECK(m(0, 0) == 1.5);
  CHECK(m(1, 0) == -2.0);
  CHECK(m(0, 1) == 0.0);
  CHECK(m(1, 1) == 0.25);
  CHECK(m(0, 2) == -0.3);
  CHECK(m(1, 2) == 4.0);
}

TEST_CASE("malformed rows report the line number") {
  auto message = [](const std::string& text, Eigen::Index dim = 0) {
    try {
      parse_csv(text, dim, "pts.csv");
    } catch (const FormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("1,2\n3,x\n").find("pts.csv:2") != std::string::npos);
  CHECK(message("1,2\n3,4\n5\n").find("pts.csv:3") != std::string::npos);
  CHECK(message("1,2,3\n", 2).find("pts.csv:1") != std::string::npos);
  CHECK(message("1,nan\n").find("pts.csv:1") != std::string::npos);
  CHECK_THROWS(load_csv(scratch("missing.csv")));
}

TEST_CASE("csv datasets load through generate") {
  const fs::path p = scratch("cloud.csv");
  save_csv(gen_checker(50, 9), p);
  DatasetSpec spec;
  spec.kind = DatasetKind::CsvPointCloud;
  spec.csv_path = p;
  CHECK(generate(spec) == gen_checker(50, 9));
  spec.csv_path = scratch("nope.csv");
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("point cloud draws uniformly from its points") {
  Mat pts(2, 4);
  pts << 0, 1, 2, 3, 0, 0, 0, 0;
  const PointCloud cloud(pts);
  Rng rng(10);
  const Mat d = cloud.draw(40000, rng);
  std::array<double, 4> c{};
  for (Eigen::Index j = 0; j < d.cols(); ++j) c[static_cast<std::size_t>(d(0, j))] += 1;
  for (double v : c) CHECK(std::abs(v - 10000) < 3 * std::sqrt(40000 * 0.25 * 0.75));
  CHECK_THROWS(PointCloud(Mat(2, 0)));
}

}
