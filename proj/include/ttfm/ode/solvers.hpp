#pragma once

#include "ttfm/nn/models.hpp"

namespace ttfm::ode {

enum class SolverKind { Euler, Heun };

/// One step of size h (negative h integrates backward) starting at times s
/// (one per column of x).
///   Euler: x + h v(s, x)
///   Heun:  k1 = v(s, x), k2 = v(s + h, x + h k1), x + h/2 (k1 + k2)
Mat solver_step(const nn::VelocityField& field, SolverKind kind, const Vec& s, double h,
                const Mat& x);

/// n_steps uniform steps from time s to time t (either order).
Mat integrate(const nn::VelocityField& field, SolverKind kind, double s, double t, int n_steps,
              const Mat& x);

struct LogProbPath {
  Mat x0;                // recovered starting points at t = 0
  Vec divergence_integral;  // integral over [0, 1] of tr(grad v) along each trajectory
};

/// Heun integration of the augmented state (x, A) with dx/du = v_u(x) and
/// dA/du = tr(grad v_u(x)), from u = 1 back to u = 0.
LogProbPath integrate_logprob_backward(const nn::VelocityField& field, const Mat& y, int n_steps);

}  // namespace ttfm::ode
