#include "ttfm/nn/models.hpp"

#include "ttfm/nn/encoding.hpp"
#include "ttfm/nn/mlp.hpp"

namespace ttfm::nn {

std::vector<Mat> AverageVelocityModel::jvp_x_basis(const Vec& s, const Vec& t, const Mat& x) const {
  const Eigen::Index d = dim(), n = x.cols();
  const Vec zero = Vec::Zero(n);
  std::vector<Mat> out;
  for (Eigen::Index i = 0; i < d; ++i) {
    Mat e = Mat::Zero(d, n);
    e.row(i).setOnes();
    out.push_back(directional(s, t, x, zero, zero, e));
  }
  return out;
}

TimeConditionedNet::TimeConditionedNet(int n_times, int dim, int hidden_width, int n_hidden,
                                       int pe_dim)
    : n_times_(n_times), dim_(dim), pe_dim_(pe_dim) {
  if (pe_dim <= 0 || pe_dim % 2 != 0) throw ConfigError("pe_dim must be positive and even");
  if (dim < 1) throw ConfigError("point dimension must be >= 1");
  spec_ = MlpSpec{n_times * pe_dim + dim, hidden_width, n_hidden, dim, Activation::Elu};
  spec_.validate();
  params_ = ParamStore(spec_);
}

void TimeConditionedNet::set_params(ParamStore params) {
  if (!params.same_layout(params_)) throw ConfigError("parameter layout does not match network");
  params_ = std::move(params);
}

Mat TimeConditionedNet::input(std::initializer_list<const Vec*> times, const Mat& x) const {
  require(static_cast<int>(times.size()) == n_times_, "network: wrong number of time inputs");
  require(x.rows() == dim_, "network: point dimension mismatch");
  const Eigen::Index n = x.cols();
  Mat in(spec_.in_dim, n);
  Eigen::Index row = 0;
  for (const Vec* t : times) {
    require(t->size() == n, "network: one time per column expected");
    pe_fill(*t, pe_dim_, in.middleRows(row, pe_dim_));
    row += pe_dim_;
  }
  in.bottomRows(dim_) = x;
  return in;
}

Mat TimeConditionedNet::input_tangent(std::initializer_list<const Vec*> times,
                                      std::initializer_list<const Vec*> dtimes,
                                      const Mat& dx) const {
  require(times.size() == dtimes.size(), "network: time/rate count mismatch");
  const Eigen::Index n = dx.cols();
  Mat in(spec_.in_dim, n);
  Eigen::Index row = 0;
  auto rate = dtimes.begin();
  for (const Vec* t : times) {
    pe_fill_dt(*t, **rate, pe_dim_, in.middleRows(row, pe_dim_));
    row += pe_dim_;
    ++rate;
  }
  in.bottomRows(dim_) = dx;
  return in;
}

TeacherNet::TeacherNet(int dim, int hidden_width, int n_hidden, int pe_dim)
    : TimeConditionedNet(1, dim, hidden_width, n_hidden, pe_dim) {}

Mat TeacherNet::velocity(const Vec& t, const Mat& x) const {
  return mlp_forward(spec_, params_, input({&t}, x));
}

Mat TeacherNet::jvp_x(const Vec& t, const Mat& x, const Mat& tangent) const {
  require(tangent.rows() == x.rows() && tangent.cols() == x.cols(), "jvp_x: tangent shape");
  const Vec zero = Vec::Zero(x.cols());
  return mlp_forward_tangent(spec_, params_, input({&t}, x), input_tangent({&t}, {&zero}, tangent))
      .tangent;
}

Vec TeacherNet::divergence(const Vec& t, const Mat& x) const {
  return velocity_divergence(t, x).second;
}

std::pair<Mat, Vec> TeacherNet::velocity_divergence(const Vec& t, const Mat& x) const {
  const Eigen::Index n = x.cols();
  Mat tangent = Mat::Zero(spec_.in_dim, dim_ * n);
  for (Eigen::Index i = 0; i < dim_; ++i)
    tangent.block(pe_dim_ + i, i * n, 1, n).setOnes();
  ForwardTangent out = mlp_forward_tangent(spec_, params_, input({&t}, x), tangent);
  Vec tr = Vec::Zero(n);
  for (Eigen::Index i = 0; i < dim_; ++i) tr += out.tangent.block(i, i * n, 1, n).transpose();
  return {std::move(out.value), std::move(tr)};
}

ad::Var TeacherNet::velocity_on(ad::Tape& tape, const ad::MlpVars& vars, const Vec& t,
                                const Mat& x) const {
  return ad::mlp_forward(vars, tape.constant(input({&t}, x)));
}

StudentAvm::StudentAvm(int dim, int hidden_width, int n_hidden, int pe_dim)
    : TimeConditionedNet(2, dim, hidden_width, n_hidden, pe_dim) {}

Mat StudentAvm::velocity(const Vec& s, const Vec& t, const Mat& x) const {
  return mlp_forward(spec_, params_, input({&s, &t}, x));
}

Mat StudentAvm::directional(const Vec& s, const Vec& t, const Mat& x, const Vec& ds,
                            const Vec& dt, const Mat& dx) const {
  return mlp_forward_tangent(spec_, params_, input({&s, &t}, x),
                             input_tangent({&s, &t}, {&ds, &dt}, dx))
      .tangent;
}

std::vector<Mat> StudentAvm::jvp_x_basis(const Vec& s, const Vec& t, const Mat& x) const {
  const Eigen::Index n = x.cols();
  Mat tangent = Mat::Zero(spec_.in_dim, dim_ * n);
  for (Eigen::Index i = 0; i < dim_; ++i)
    tangent.block(2 * pe_dim_ + i, i * n, 1, n).setOnes();
  const Mat out = mlp_forward_tangent(spec_, params_, input({&s, &t}, x), tangent).tangent;
  std::vector<Mat> cols;
  for (Eigen::Index i = 0; i < dim_; ++i) cols.push_back(out.middleCols(i * n, n));
  return cols;
}

ad::Var StudentAvm::velocity_on(ad::Tape& tape, const ad::MlpVars& vars, const Vec& s,
                                const Vec& t, const Mat& x) const {
  return ad::mlp_forward(vars, tape.constant(input({&s, &t}, x)));
}

ad::Dual StudentAvm::directional_on(ad::Tape& tape, const ad::MlpVars& vars, const Vec& s,
                                    const Vec& t, const Mat& x, const Vec& ds, const Vec& dt,
                                    const Mat& dx) const {
  return ad::mlp_forward_dual(vars, tape.constant(input({&s, &t}, x)),
                              tape.constant(input_tangent({&s, &t}, {&ds, &dt}, dx)));
}

namespace {

Vec gap(const Vec& s, const Vec& t) {
  require(s.size() == t.size(), "ttfm: time vectors differ in length");
  return t - s;
}

}  // namespace

Mat Ttfm::apply(const Vec& s, const Vec& t, const Mat& x) const {
  return x + avm_->velocity(s, t, x) * gap(s, t).asDiagonal();
}

Mat Ttfm::apply(double s, double t, const Mat& x) const {
  return apply(Vec::Constant(x.cols(), s), Vec::Constant(x.cols(), t), x);
}

Mat Ttfm::dt_flow(const Vec& s, const Vec& t, const Mat& x) const {
  const Eigen::Index n = x.cols();
  const Vec zero = Vec::Zero(n), one = Vec::Ones(n);
  const Mat dv = avm_->directional(s, t, x, zero, one, Mat::Zero(x.rows(), n));
  return avm_->velocity(s, t, x) + dv * gap(s, t).asDiagonal();
}

Mat Ttfm::ds_flow(const Vec& s, const Vec& t, const Mat& x) const {
  const Eigen::Index n = x.cols();
  const Vec zero = Vec::Zero(n), one = Vec::Ones(n);
  const Mat dv = avm_->directional(s, t, x, one, zero, Mat::Zero(x.rows(), n));
  return -avm_->velocity(s, t, x) + dv * gap(s, t).asDiagonal();
}

Mat Ttfm::jvp_x(const Vec& s, const Vec& t, const Mat& x, const Mat& tangent) const {
  require(tangent.rows() == x.rows() && tangent.cols() == x.cols(), "jvp_x: tangent shape");
  const Vec zero = Vec::Zero(x.cols());
  return tangent + avm_->directional(s, t, x, zero, zero, tangent) * gap(s, t).asDiagonal();
}

Mat Ttfm::jacobian_x(double s, double t, const Vec& x) const {
  return jacobians_x(s, t, Mat(x)).front();
}

std::vector<Mat> Ttfm::jacobians_x(double s, double t, const Mat& x) const {
  const Eigen::Index d = x.rows(), n = x.cols();
  const std::vector<Mat> cols =
      avm_->jvp_x_basis(Vec::Constant(n, s), Vec::Constant(n, t), x);
  std::vector<Mat> out(static_cast<std::size_t>(n), Mat::Identity(d, d));
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < d; ++i)
      out[static_cast<std::size_t>(j)].col(i) += (t - s) * cols[static_cast<std::size_t>(i)].col(j);
  return out;
}

double trace_jac_teacher(const VelocityField& field, double t, const Vec& x) {
  return field.divergence(Vec::Constant(1, t), Mat(x))(0);
}

}  // namespace ttfm::nn
