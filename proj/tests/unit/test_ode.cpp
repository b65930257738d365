#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "ttfm/nn/fields.hpp"
#include "ttfm/ode/solvers.hpp"

using namespace ttfm;
using ode::SolverKind;

namespace {

// Least-squares slope of log(err) against log(h).
double loglog_slope(const std::vector<double>& h, const std::vector<double>& err) {
  const auto n = static_cast<double>(h.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("ode") {

TEST_CASE("both solvers are exact on constant fields") {
  const nn::ConstantField field(Vec{{0.3, -2.0}});
  const Mat x{{1.0, 5.0}, {2.0, -1.0}};
  for (auto kind : {SolverKind::Euler, SolverKind::Heun}) {
    for (double h : {0.5, -0.25, 1e-3}) {
      const Mat out = ode::solver_step(field, kind, Vec::Constant(2, 0.2), h, x);
      const Mat expect = x + h * Vec{{0.3, -2.0}}.replicate(1, 2);
      CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-15);
    }
    for (int n : {1, 3, 17, 100}) {
      const Mat out = ode::integrate(field, kind, 0.0, 1.0, n, x);
      CHECK((out - (x + Vec{{0.3, -2.0}}.replicate(1, 2))).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("one step on v = -x") {
  const nn::LinearField field = nn::LinearField::scalar(-1.0, 1);
  const Mat x = Mat::Constant(1, 1, 2.0);
  const double h = 0.1;
  CHECK(ode::solver_step(field, SolverKind::Euler, Vec::Zero(1), h, x)(0, 0) ==
        doctest::Approx(2.0 * (1 - h)).epsilon(1e-15));
  CHECK(ode::solver_step(field, SolverKind::Heun, Vec::Zero(1), h, x)(0, 0) ==
        doctest::Approx(2.0 * (1 - h + h * h / 2)).epsilon(1e-15));
  CHECK_THROWS_AS(ode::solver_step(field, SolverKind::Euler, Vec::Zero(1), 0.0, x), DomainError);
}

TEST_CASE("heun evaluates the second stage at s + h") {
  // Hand-written Heun rule on a time-dependent network.
  nn::TeacherNet net(2, 8, 2, 4);
  net.set_params(test::random_params(net.spec(), 1, 0.5));
  const Vec x{{0.3, -0.4}};
  const double s = 0.2, h = 0.3;
  const Vec k1 = test::naive_teacher(net, s, x);
  const Vec k2 = test::naive_teacher(net, s + h, x + h * k1);
  const Mat out = ode::solver_step(net, SolverKind::Heun, Vec::Constant(1, s), h, x);
  CHECK((out.col(0) - (x + h / 2 * (k1 + k2))).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("integrate with one step equals solver_step, and s = t is the identity") {
  nn::TeacherNet net(2, 8, 2, 4);
  net.set_params(test::random_params(net.spec(), 2, 0.5));
  Rng rng(3);
  const Mat x = rng.normal_matrix(2, 5);
  for (auto kind : {SolverKind::Euler, SolverKind::Heun}) {
    CHECK(ode::integrate(net, kind, 0.3, 0.8, 1, x) ==
          ode::solver_step(net, kind, Vec::Constant(5, 0.3), 0.5, x));
    CHECK(ode::integrate(net, kind, 0.4, 0.4, 10, x) == x);
  }
  CHECK_THROWS_AS(ode::integrate(net, SolverKind::Heun, 0.0, 1.0, 0, x), DomainError);
}

TEST_CASE("observed convergence order on v = -x") {
  const nn::LinearField field = nn::LinearField::scalar(-1.0, 1);
  const Mat x0 = Mat::Ones(1, 1);
  const double exact = std::exp(-1.0);
  std::vector<double> hs, euler, heun;
  for (int n : {10, 20, 40, 80, 160}) {
    hs.push_back(1.0 / n);
    euler.push_back(std::abs(ode::integrate(field, SolverKind::Euler, 0, 1, n, x0)(0, 0) - exact));
    heun.push_back(std::abs(ode::integrate(field, SolverKind::Heun, 0, 1, n, x0)(0, 0) - exact));
  }
  for (std::size_t i = 1; i < hs.size(); ++i) {
    CHECK(euler[i - 1] / euler[i] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(heun[i - 1] / heun[i] == doctest::Approx(4.0).epsilon(0.05));
  }
  CHECK(std::abs(loglog_slope(hs, euler) - 1.0) < 0.1);
  CHECK(std::abs(loglog_slope(hs, heun) - 2.0) < 0.1);
}

TEST_CASE("forward then backward round trip") {
  const nn::LinearField field(Mat{{-1.0, 0.5}, {0.2, 0.3}});
  Rng rng(4);
  const Mat x = rng.normal_matrix(2, 20);
  const Mat fwd = ode::integrate(field, SolverKind::Heun, 0.0, 1.0, 100, x);
  const Mat back = ode::integrate(field, SolverKind::Heun, 1.0, 0.0, 100, fwd);
  CHECK((back - x).cwiseAbs().maxCoeff() < 1e-4);
  // Backward integration on the scalar field recovers y e^{-a}.
  const nn::LinearField lin = nn::LinearField::scalar(-1.0, 1);
  const Mat y = ode::integrate(lin, SolverKind::Heun, 1.0, 0.0, 100, Mat::Ones(1, 1));
  CHECK(std::abs(y(0, 0) - std::exp(1.0)) < 1e-4);
}

TEST_CASE("augmented backward integration on constant and linear fields") {
  Rng rng(5);
  const Mat y = rng.normal_matrix(2, 10);
  const Vec c{{0.5, -1.5}};
  const auto cst = ode::integrate_logprob_backward(nn::ConstantField(c), y, 100);
  CHECK((cst.x0 - (y.colwise() - c)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(cst.divergence_integral.cwiseAbs().maxCoeff() == 0.0);

  const double a = 0.7;
  std::vector<double> err;
  for (int n : {25, 50, 100}) {
    const auto lin = ode::integrate_logprob_backward(nn::LinearField::scalar(a, 2), y, n);
    CHECK((lin.divergence_integral.array() - 2 * a).abs().maxCoeff() < 1e-13);
    err.push_back((lin.x0 - y * std::exp(-a)).cwiseAbs().maxCoeff());
  }
  CHECK(err[2] < 1e-4);
  CHECK(err[0] / err[1] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(err[1] / err[2] == doctest::Approx(4.0).epsilon(0.05));

  // log p1(y) = log p0(x0) - integral against N(0, e^{2a} I).
  const auto lin = ode::integrate_logprob_backward(nn::LinearField::scalar(a, 2), y, 100);
  const Mat cov = std::exp(2 * a) * Mat::Identity(2, 2);
  for (int j = 0; j < 10; ++j) {
    const Vec x0 = lin.x0.col(j);
    const double logp0 = -0.5 * x0.squaredNorm() - std::log(2 * M_PI);
    CHECK(std::abs(logp0 - lin.divergence_integral(j) - test::gaussian_logpdf(y.col(j), cov)) < 1e-4);
  }
}

TEST_CASE("non-finite field output is reported") {
  const nn::LinearField field = nn::LinearField::scalar(1.0, 1);
  const Mat x = Mat::Constant(1, 1, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(ode::solver_step(field, SolverKind::Heun, Vec::Zero(1), 0.1, x), NonFiniteError);
}

}
