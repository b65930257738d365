#include "support.hpp"

#include <cmath>
#include <numbers>

namespace ttfm::test {

Vec naive_pe(double t, int dim) {
  Vec out(dim);
  const int half = dim / 2;
  for (int k = 0; k < half; ++k) {
    const double w = std::pow(10000.0, -2.0 * k / dim);
    out(k) = std::sin(t * w);
    out(half + k) = std::cos(t * w);
  }
  return out;
}

Vec naive_mlp(const nn::MlpSpec& spec, const nn::ParamStore& params, const Vec& input) {
  std::vector<double> h(input.data(), input.data() + input.size());
  const double* v = params.values().data();
  std::size_t offset = 0;
  for (int layer = 0; layer < spec.n_layers(); ++layer) {
    const int fan_in = static_cast<int>(h.size());
    const int fan_out = layer == spec.n_hidden ? spec.out_dim : spec.hidden_width;
    std::vector<double> z(static_cast<std::size_t>(fan_out), 0.0);
    // Column-major weight: entry (r, c) at offset + c * fan_out + r.
    for (int r = 0; r < fan_out; ++r) {
      double acc = 0.0;
      for (int c = 0; c < fan_in; ++c)
        acc += v[offset + static_cast<std::size_t>(c) * fan_out + r] * h[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = acc;
    }
    offset += static_cast<std::size_t>(fan_in) * fan_out;
    for (int r = 0; r < fan_out; ++r) z[static_cast<std::size_t>(r)] += v[offset + r];
    offset += static_cast<std::size_t>(fan_out);
    if (layer < spec.n_hidden)
      for (double& e : z) e = e > 0.0 ? e : std::expm1(e);
    h = std::move(z);
  }
  return Eigen::Map<const Vec>(h.data(), static_cast<Eigen::Index>(h.size()));
}

Vec naive_teacher(const nn::TeacherNet& net, double t, const Vec& x) {
  Vec in(net.spec().in_dim);
  in << naive_pe(t, net.pe_dim()), x;
  return naive_mlp(net.spec(), net.params(), in);
}

Vec naive_student(const nn::StudentAvm& net, double s, double t, const Vec& x) {
  Vec in(net.spec().in_dim);
  in << naive_pe(s, net.pe_dim()), naive_pe(t, net.pe_dim()), x;
  return naive_mlp(net.spec(), net.params(), in);
}

Vec naive_flow(const nn::StudentAvm& net, double s, double t, const Vec& x) {
  return x + (t - s) * naive_student(net, s, t, x);
}

nn::ParamStore random_params(const nn::MlpSpec& spec, std::uint64_t seed, double bias_scale) {
  nn::ParamStore p = nn::init_params(spec, seed);
  Rng rng(derive_seed(seed, "test.biases"));
  for (std::size_t i = 0; i < p.n_layers(); ++i) {
    auto b = p.bias(i);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-bias_scale, bias_scale);
  }
  return p;
}

void make_constant(nn::TimeConditionedNet& net, const Vec& c) {
  nn::ParamStore p(net.spec());
  p.bias(p.n_layers() - 1) = c;
  net.set_params(std::move(p));
}

void make_linear(nn::TimeConditionedNet& net, const Mat& a) {
  constexpr double kOffset = 50.0;
  const auto& spec = net.spec();
  const int d = spec.out_dim;
  const int x_start = spec.in_dim - d;
  nn::ParamStore p(spec);
  for (int i = 0; i < d; ++i) {
    p.weight(0)(i, x_start + i) = 1.0;
    p.bias(0)(i) = kOffset;
  }
  for (int layer = 1; layer < spec.n_hidden; ++layer)
    for (int i = 0; i < d; ++i) p.weight(static_cast<std::size_t>(layer))(i, i) = 1.0;
  const auto last = static_cast<std::size_t>(spec.n_hidden);
  p.weight(last).leftCols(d) = a;
  p.bias(last) = -kOffset * a * Vec::Ones(d);
  net.set_params(std::move(p));
}

Vec central_diff(const std::function<Vec(double)>& f, double h) {
  return (f(h) - f(-h)) / (2.0 * h);
}

double rel_err(const Vec& a, const Vec& b, double floor) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

double gaussian_logpdf(const Vec& y, const Mat& cov) {
  const double d = static_cast<double>(y.size());
  const Eigen::LLT<Mat> llt(cov);
  const Mat l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  const double quad = y.dot(llt.solve(y));
  return -0.5 * (quad + logdet + d * std::log(2.0 * std::numbers::pi));
}

Vec random_vec(Rng& rng, Eigen::Index n, double lo, double hi) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

}  // namespace ttfm::test
