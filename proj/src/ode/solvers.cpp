#include "ttfm/ode/solvers.hpp"

namespace ttfm::ode {

namespace {

Mat checked(Mat v, const char* where) {
  if (!v.allFinite()) throw NonFiniteError(std::string(where) + ": non-finite field output");
  return v;
}

}  // namespace

Mat solver_step(const nn::VelocityField& field, SolverKind kind, const Vec& s, double h,
                const Mat& x) {
  require(h != 0.0, "solver_step: step size must be nonzero");
  require(s.size() == x.cols(), "solver_step: one start time per column expected");
  const Mat k1 = checked(field.velocity(s, x), "solver_step");
  if (kind == SolverKind::Euler) return x + h * k1;
  const Vec s_next = s.array() + h;
  const Mat k2 = checked(field.velocity(s_next, x + h * k1), "solver_step");
  return x + (h / 2.0) * (k1 + k2);
}

Mat integrate(const nn::VelocityField& field, SolverKind kind, double s, double t, int n_steps,
              const Mat& x) {
  require(n_steps >= 1, "integrate: n_steps must be >= 1");
  if (s == t) return x;
  const double h = (t - s) / n_steps;
  Mat cur = x;
  for (int k = 0; k < n_steps; ++k)
    cur = solver_step(field, kind, Vec::Constant(x.cols(), s + k * h), h, cur);
  return cur;
}

LogProbPath integrate_logprob_backward(const nn::VelocityField& field, const Mat& y,
                                       int n_steps) {
  require(n_steps >= 1, "integrate_logprob_backward: n_steps must be >= 1");
  const Eigen::Index n = y.cols();
  const double h = -1.0 / n_steps;
  Mat x = y;
  Vec acc = Vec::Zero(n);  // A(u) - A(1)
  for (int k = 0; k < n_steps; ++k) {
    const Vec u = Vec::Constant(n, 1.0 + k * h);
    const Vec u_next = Vec::Constant(n, 1.0 + (k + 1) * h);
    auto [v1, a1] = field.velocity_divergence(u, x);
    const Mat k1 = checked(std::move(v1), "integrate_logprob_backward");
    const Mat x_pred = x + h * k1;
    auto [v2, a2] = field.velocity_divergence(u_next, x_pred);
    const Mat k2 = checked(std::move(v2), "integrate_logprob_backward");
    x += (h / 2.0) * (k1 + k2);
    acc += (h / 2.0) * (a1 + a2);
  }
  if (!acc.allFinite()) throw NonFiniteError("integrate_logprob_backward: non-finite divergence");
  // acc = A(0) - A(1) = -integral.
  return {std::move(x), -acc};
}

}  // namespace ttfm::ode
