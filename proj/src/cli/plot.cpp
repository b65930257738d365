#include "ttfm/cli/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ttfm/rng.hpp"

namespace ttfm::cli {

namespace {

constexpr double kSize = 600.0;
constexpr double kPad = 40.0;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string header(const std::string& title) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kSize) +
                    "\" height=\"" + fmt(kSize) + "\" viewBox=\"0 0 " + fmt(kSize) + " " +
                    fmt(kSize) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    out += "<text x=\"" + fmt(kSize / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" +
           escape(title) + "</text>\n";
  return out;
}

struct Range {
  double lo, hi;
  double map(double v, double a, double b) const {
    const double span = hi > lo ? hi - lo : 1.0;
    return a + (v - lo) / span * (b - a);
  }
};

Range range_of(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 1.0};
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  return {*mn, *mx};
}

}  // namespace

std::string scatter_svg(const Mat& points, std::uint64_t seed, const std::string& title) {
  require(points.rows() >= 2 || points.cols() == 0, "scatter_svg: need at least 2 coordinates");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points.cols()));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<Eigen::Index>(i);
  if (points.cols() > kMaxScatterPoints) {
    Rng rng(seed);
    for (std::size_t i = 0; i < static_cast<std::size_t>(kMaxScatterPoints); ++i)
      std::swap(idx[i], idx[i + rng.index(idx.size() - i)]);
    idx.resize(static_cast<std::size_t>(kMaxScatterPoints));
    std::sort(idx.begin(), idx.end());
  }
  std::vector<double> xs, ys;
  for (Eigen::Index j : idx) {
    xs.push_back(points(0, j));
    ys.push_back(points(1, j));
  }
  Range rx = range_of(xs), ry = range_of(ys);
  // Same scale on both axes.
  const double half = std::max(rx.hi - rx.lo, ry.hi - ry.lo) / 2.0;
  const double cx = (rx.lo + rx.hi) / 2.0, cy = (ry.lo + ry.hi) / 2.0;
  rx = {cx - half, cx + half};
  ry = {cy - half, cy + half};

  std::string out = header(title);
  out += "<g fill=\"#1f4e9c\" fill-opacity=\"0.35\">\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out += "<circle cx=\"" + fmt(rx.map(xs[i], kPad, kSize - kPad)) + "\" cy=\"" +
           fmt(ry.map(ys[i], kSize - kPad, kPad)) + "\" r=\"1.2\"/>\n";
  out += "</g>\n</svg>\n";
  return out;
}

std::string loss_curve_svg(const std::vector<double>& iters, const std::vector<double>& loss,
                           const std::string& title) {
  require(iters.size() == loss.size(), "loss_curve_svg: length mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < loss.size(); ++i) {
    if (!(loss[i] > 0.0) || !std::isfinite(loss[i])) continue;
    xs.push_back(iters[i]);
    ys.push_back(std::log10(loss[i]));
  }
  const Range rx = range_of(xs), ry = range_of(ys);
  std::string out = header(title);
  out += "<line x1=\"" + fmt(kPad) + "\" y1=\"" + fmt(kSize - kPad) + "\" x2=\"" +
         fmt(kSize - kPad) + "\" y2=\"" + fmt(kSize - kPad) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + fmt(kPad) + "\" y1=\"" + fmt(kPad) + "\" x2=\"" + fmt(kPad) +
         "\" y2=\"" + fmt(kSize - kPad) + "\" stroke=\"black\"/>\n";
  out += "<text x=\"" + fmt(kPad) + "\" y=\"" + fmt(kPad - 6) + "\" font-size=\"11\">log10 loss " +
         fmt(ry.lo) + " .. " + fmt(ry.hi) + "</text>\n";
  out += "<polyline fill=\"none\" stroke=\"#b22222\" stroke-width=\"1.5\" points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ' ';
    out += fmt(rx.map(xs[i], kPad, kSize - kPad)) + "," + fmt(ry.map(ys[i], kSize - kPad, kPad));
  }
  out += "\"/>\n</svg>\n";
  return out;
}

}  // namespace ttfm::cli
