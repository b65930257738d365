#include "ttfm/datasets/datasets.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <vector>

namespace ttfm::datasets {

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Lobes5: return "lobes5";
    case DatasetKind::Checker: return "checker";
    case DatasetKind::Spiral: return "spiral";
    case DatasetKind::CsvPointCloud: return "csv";
  }
  return "?";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
  if (s == "lobes5") return DatasetKind::Lobes5;
  if (s == "checker") return DatasetKind::Checker;
  if (s == "spiral") return DatasetKind::Spiral;
  if (s == "csv") return DatasetKind::CsvPointCloud;
  throw ConfigError("unknown dataset kind '" + s + "' (lobes5, checker, spiral, csv)");
}

void DatasetSpec::validate() const {
  if (kind == DatasetKind::CsvPointCloud) {
    if (csv_path.empty()) throw ConfigError("dataset.csv_path is required for kind csv");
    if (!std::filesystem::exists(csv_path))
      throw ConfigError("dataset.csv_path: file not found: " + csv_path.string());
  } else if (n_points < 1) {
    throw ConfigError("dataset.n_points must be >= 1");
  }
}

Mat gen_lobes5(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Mat out(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(rng.index(5)) / 5.0;
    const double nx = rng.normal();
    const double ny = rng.normal();
    out(0, j) = kLobeRadius * std::cos(a) + kLobeStd * nx;
    out(1, j) = kLobeRadius * std::sin(a) + kLobeStd * ny;
  }
  return out;
}

bool in_black_cell(double x, double y) {
  if (!(x >= -2.0 && x <= 2.0 && y >= -2.0 && y <= 2.0)) return false;
  const int i = std::min(3, static_cast<int>(std::floor(x + 2.0)));
  const int j = std::min(3, static_cast<int>(std::floor(y + 2.0)));
  return (i + j) % 2 == 0;
}

Mat gen_checker(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Mat out(2, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const auto cell = static_cast<int>(rng.index(8));
    const int ci = cell / 2;
    const int cj = 2 * (cell % 2) + (ci % 2);  // keeps ci + cj even
    out(0, j) = -2.0 + ci + rng.uniform();
    out(1, j) = -2.0 + cj + rng.uniform();
  }
  return out;
}

Mat gen_spiral(std::size_t n, std::uint64_t seed, Vec* theta) {
  Rng rng(seed);
  Mat out(2, static_cast<Eigen::Index>(n));
  if (theta) theta->resize(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    const double th = rng.uniform(kSpiralThetaMin, kSpiralThetaMax);
    const double r = kSpiralGrowth * th;
    const double nx = rng.normal();
    const double ny = rng.normal();
    out(0, j) = kSpiralScale * (r * std::cos(th) + kSpiralNoise * nx);
    out(1, j) = kSpiralScale * (r * std::sin(th) + kSpiralNoise * ny);
    if (theta) (*theta)(j) = th;
  }
  return out;
}

Mat generate(const DatasetSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case DatasetKind::Lobes5: return gen_lobes5(spec.n_points, spec.seed);
    case DatasetKind::Checker: return gen_checker(spec.n_points, spec.seed);
    case DatasetKind::Spiral: return gen_spiral(spec.n_points, spec.seed);
    case DatasetKind::CsvPointCloud: return load_csv(spec.csv_path);
  }
  throw ConfigError("unknown dataset kind");
}

std::string to_csv(const Mat& points) {
  std::string out;
  char buf[32];
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (i) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", points(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void save_csv(const Mat& points, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << to_csv(points);
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

Mat parse_csv(const std::string& text, Eigen::Index expected_dim, const std::string& source) {
  std::vector<double> values;
  Eigen::Index dim = expected_dim;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    Eigen::Index count = 0;
    std::size_t p = 0;
    while (true) {
      std::size_t q = line.find(',', p);
      std::string_view field = line.substr(p, q == std::string_view::npos ? line.npos : q - p);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc() || ptr != field.data() + field.size() ||
          !std::isfinite(v))
        throw FormatError(source + ":" + std::to_string(line_no) + ": malformed value '" +
                          std::string(field) + "'");
      values.push_back(v);
      ++count;
      if (q == std::string_view::npos) break;
      p = q + 1;
    }
    if (dim == 0) dim = count;
    if (count != dim)
      throw FormatError(source + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, found " + std::to_string(count));
  }
  if (values.empty()) return Mat(dim, 0);
  return Eigen::Map<const Mat>(values.data(), dim, static_cast<Eigen::Index>(values.size()) / dim);
}

Mat load_csv(const std::filesystem::path& path, Eigen::Index expected_dim) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str(), expected_dim, path.string());
}

PointCloud::PointCloud(Mat points) : points_(std::move(points)) {
  require(points_.cols() > 0, "PointCloud: empty point cloud");
}

Mat PointCloud::draw(Eigen::Index n, Rng& rng) const {
  Mat out(points_.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j)
    out.col(j) = points_.col(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(points_.cols()))));
  return out;
}

}  // namespace ttfm::datasets
