#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ttfm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Batches of points are stored column-wise: a d x n matrix holds n points.

/// Argument outside the domain of an operation (bad time, dimension mismatch).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid configuration (odd encoding width, malformed config field, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A NaN or infinity appeared in a forward value, gradient or loss.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The Jacobian of a flow step is (numerically) singular at some point.
class SingularJacobianError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A finite-difference interval collapsed (t - u too small).
class DegenerateIntervalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents; the message carries the location.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw DomainError(msg);
}

}  // namespace ttfm

namespace ttfm {

/// Keeps large Eigen temporaries on the heap instead of fresh mmap'd pages,
/// which otherwise dominate training time through page faults. Call once at
/// program start; a no-op outside glibc.
void configure_allocator();

}  // namespace ttfm
