#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ttfm/nn/autodiff.hpp"
#include "ttfm/nn/params.hpp"

namespace ttfm::nn {

/// Time-dependent velocity field v_t(x), evaluated column-wise.
class VelocityField {
 public:
  virtual ~VelocityField() = default;
  virtual Eigen::Index dim() const = 0;
  /// t holds one time per column of x.
  virtual Mat velocity(const Vec& t, const Mat& x) const = 0;
  /// (d v / d x) applied to the matching column of `tangent`.
  virtual Mat jvp_x(const Vec& t, const Mat& x, const Mat& tangent) const = 0;
  /// tr(d v / d x) per column.
  virtual Vec divergence(const Vec& t, const Mat& x) const = 0;
  /// velocity() and divergence() together; networks share one forward pass.
  virtual std::pair<Mat, Vec> velocity_divergence(const Vec& t, const Mat& x) const {
    return {velocity(t, x), divergence(t, x)};
  }
};

/// Average velocity v_{s,t}(x), evaluated column-wise.
class AverageVelocityModel {
 public:
  virtual ~AverageVelocityModel() = default;
  virtual Eigen::Index dim() const = 0;
  virtual Mat velocity(const Vec& s, const Vec& t, const Mat& x) const = 0;
  /// Directional derivative of v along (ds, dt, dx), one direction per column.
  virtual Mat directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds, const Vec& dt,
                          const Mat& dx) const = 0;
  /// (d v / d x) e_i for every basis vector e_i; d matrices of shape d x n.
  virtual std::vector<Mat> jvp_x_basis(const Vec& s, const Vec& t, const Mat& x) const;
};

/// MLP over [pe(time_1); ...; pe(time_k); x]. Shared body of the teacher and the student.
class TimeConditionedNet {
 public:
  TimeConditionedNet(int n_times, int dim, int hidden_width, int n_hidden, int pe_dim);

  const MlpSpec& spec() const { return spec_; }
  int pe_dim() const { return pe_dim_; }
  int n_times() const { return n_times_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  void set_params(ParamStore params);

  /// Network input for the given times (each of length n) and points.
  Mat input(std::initializer_list<const Vec*> times, const Mat& x) const;
  /// Input tangent for time rates `dtimes` and point direction dx.
  Mat input_tangent(std::initializer_list<const Vec*> times,
                    std::initializer_list<const Vec*> dtimes, const Mat& dx) const;

 protected:
  int n_times_;
  int dim_;
  int pe_dim_;
  MlpSpec spec_;
  ParamStore params_;
};

/// Flow-matching teacher v^eta_t(x).
class TeacherNet final : public TimeConditionedNet, public VelocityField {
 public:
  TeacherNet(int dim, int hidden_width, int n_hidden, int pe_dim = 256);

  Eigen::Index dim() const override { return dim_; }
  Mat velocity(const Vec& t, const Mat& x) const override;
  Mat jvp_x(const Vec& t, const Mat& x, const Mat& tangent) const override;
  Vec divergence(const Vec& t, const Mat& x) const override;
  std::pair<Mat, Vec> velocity_divergence(const Vec& t, const Mat& x) const override;

  /// Recorded forward pass with the given parameter binding.
  ad::Var velocity_on(ad::Tape& tape, const ad::MlpVars& vars, const Vec& t, const Mat& x) const;
};

/// Student average-velocity model v^theta_{s,t}(x).
class StudentAvm final : public TimeConditionedNet, public AverageVelocityModel {
 public:
  StudentAvm(int dim, int hidden_width, int n_hidden, int pe_dim = 256);

  Eigen::Index dim() const override { return dim_; }
  Mat velocity(const Vec& s, const Vec& t, const Mat& x) const override;
  Mat directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds, const Vec& dt,
                  const Mat& dx) const override;
  std::vector<Mat> jvp_x_basis(const Vec& s, const Vec& t, const Mat& x) const override;

  ad::Var velocity_on(ad::Tape& tape, const ad::MlpVars& vars, const Vec& s, const Vec& t,
                      const Mat& x) const;
  /// Value and directional derivative along (ds, dt, dx), both recorded.
  ad::Dual directional_on(ad::Tape& tape, const ad::MlpVars& vars, const Vec& s, const Vec& t,
                          const Mat& x, const Vec& ds, const Vec& dt, const Mat& dx) const;
};

/// Two-timed flow map phi_{s,t}(x) = x + (t - s) v_{s,t}(x). Non-owning.
class Ttfm {
 public:
  explicit Ttfm(const AverageVelocityModel& avm) : avm_(&avm) {}

  const AverageVelocityModel& avm() const { return *avm_; }
  Eigen::Index dim() const { return avm_->dim(); }

  Mat apply(const Vec& s, const Vec& t, const Mat& x) const;
  Mat apply(double s, double t, const Mat& x) const;
  /// d phi / d t.
  Mat dt_flow(const Vec& s, const Vec& t, const Mat& x) const;
  /// d phi / d s.
  Mat ds_flow(const Vec& s, const Vec& t, const Mat& x) const;
  /// (d phi / d x) tangent.
  Mat jvp_x(const Vec& s, const Vec& t, const Mat& x, const Mat& tangent) const;
  /// Full d x d Jacobian of phi at a single point.
  Mat jacobian_x(double s, double t, const Vec& x) const;
  /// Jacobians at every column of x.
  std::vector<Mat> jacobians_x(double s, double t, const Mat& x) const;

 private:
  const AverageVelocityModel* avm_;
};

/// Exact trace of the teacher's spatial Jacobian at a single point.
double trace_jac_teacher(const VelocityField& field, double t, const Vec& x);

}  // namespace ttfm::nn
