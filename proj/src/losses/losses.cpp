#include "ttfm/losses/losses.hpp"

#include <cmath>
#include <vector>

#include "ttfm/ode/solvers.hpp"

namespace ttfm::losses {

using nn::ad::MlpVars;
using nn::ad::Tape;
using nn::ad::Var;

void LossSpec::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("loss.tau must satisfy 0 < tau < 1");
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("loss.mu must satisfy 0 <= mu < 1");
  for (double w : term_weights)
    if (!(w >= 0.0)) throw ConfigError("loss.term_weights must be >= 0");
  if (u_strategy == UStrategy::InitialPlusTau && tau >= 0.5)
    throw ConfigError("loss.tau must be < 0.5 with u_strategy initial_plus_tau");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Cfm: return "cfm";
    case LossKind::Itvm: return "itvm";
    case LossKind::Lfmd: return "lfmd";
    case LossKind::Efmd: return "efmd";
    case LossKind::Pid: return "pid";
    case LossKind::TvmOnly: return "tvm_only";
  }
  return "?";
}

std::string to_string(UStrategy u) {
  switch (u) {
    case UStrategy::TerminalMinusTau: return "terminal_minus_tau";
    case UStrategy::InitialPlusTau: return "initial_plus_tau";
    case UStrategy::UniformOnInterval: return "uniform_on_interval";
  }
  return "?";
}

std::string to_string(EfmdSign sign) {
  return sign == EfmdSign::PaperLiteral ? "paper_literal" : "pde_consistent";
}

LossKind loss_kind_from_string(const std::string& s) {
  for (auto k : {LossKind::Cfm, LossKind::Itvm, LossKind::Lfmd, LossKind::Efmd, LossKind::Pid,
                 LossKind::TvmOnly})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown loss kind '" + s + "'");
}

UStrategy u_strategy_from_string(const std::string& s) {
  for (auto u : {UStrategy::TerminalMinusTau, UStrategy::InitialPlusTau,
                 UStrategy::UniformOnInterval})
    if (to_string(u) == s) return u;
  throw ConfigError("unknown u strategy '" + s + "'");
}

EfmdSign efmd_sign_from_string(const std::string& s) {
  for (auto e : {EfmdSign::PaperLiteral, EfmdSign::PdeConsistent})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown efmd sign '" + s + "'");
}

StateSampler path_sampler(const path::PathConfig& cfg, const path::DataSource& data) {
  return [&cfg, &data](const Vec& s, Rng& rng) { return path::sample_ps(cfg, data, rng, s); };
}

PointBatch sample_point_batch(const StateSampler& states, Rng& rng, Eigen::Index n,
                              double s_max) {
  PointBatch b;
  b.s.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) b.s(j) = rng.uniform(0.0, s_max);
  b.xs = states(b.s, rng);
  return b;
}

IntervalBatch sample_interval_batch(const StateSampler& states, Rng& rng, Eigen::Index n,
                                    double gap) {
  IntervalBatch b;
  b.s.resize(n);
  b.t.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) b.s(j) = rng.uniform(0.0, 1.0 - gap);
  for (Eigen::Index j = 0; j < n; ++j) b.t(j) = rng.uniform(b.s(j) + gap, 1.0);
  b.xs = states(b.s, rng);
  return b;
}

TvmBatch sample_tvm_batch(const StateSampler& states, Rng& rng, Eigen::Index n, double tau,
                          UStrategy strategy) {
  TvmBatch b;
  b.s.resize(n);
  b.t.resize(n);
  b.u.resize(n);
  const double gap = strategy == UStrategy::InitialPlusTau ? 2.0 * tau : tau;
  for (Eigen::Index j = 0; j < n; ++j) b.s(j) = rng.uniform(0.0, 1.0 - gap);
  for (Eigen::Index j = 0; j < n; ++j) b.t(j) = rng.uniform(b.s(j) + gap, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    switch (strategy) {
      case UStrategy::TerminalMinusTau: b.u(j) = b.t(j) - tau; break;
      case UStrategy::InitialPlusTau: b.u(j) = b.s(j) + tau; break;
      case UStrategy::UniformOnInterval: b.u(j) = rng.uniform(b.s(j), b.t(j) - tau); break;
    }
  }
  b.xs = states(b.s, rng);
  return b;
}

namespace {

void check_unit(const Vec& v, const char* name) {
  for (Eigen::Index j = 0; j < v.size(); ++j)
    require(v(j) >= 0.0 && v(j) <= 1.0, std::string(name) + " outside [0, 1]");
}

void check_points(const Vec& s, const Mat& xs) {
  require(s.size() == xs.cols() && xs.cols() > 0, "loss: batch must be nonempty with one time per point");
  check_unit(s, "s");
}

void check_interval(const Vec& s, const Vec& t, const Mat& xs, double min_gap) {
  check_points(s, xs);
  require(t.size() == s.size(), "loss: t length mismatch");
  check_unit(t, "t");
  for (Eigen::Index j = 0; j < s.size(); ++j)
    require(t(j) - s(j) >= min_gap - 1e-12, "loss: t must be >= s + gap");
}

// phi = x + (t - s) v as a recorded value.
Var flow(Tape& tape, const Mat& x, Var v, const Vec& s, const Vec& t) {
  return tape.constant(x) + nn::ad::scale_cols(v, t - s);
}

Mat flow_value(const Mat& x, const Mat& v, const Vec& s, const Vec& t) {
  return x + v * (t - s).asDiagonal();
}

LossValue finish(Tape& tape, Var root, std::size_t n_params) {
  tape.backward(root);
  return {root.value()(0, 0), tape.parameter_gradient(n_params)};
}

}  // namespace

Mat heun_target(const nn::VelocityField& teacher, const Vec& s, const Mat& x, double tau) {
  const Mat stepped = ode::solver_step(teacher, ode::SolverKind::Heun, s, tau, x);
  return (stepped - x) / tau;
}

Var cfm_term(Tape& tape, const nn::TeacherNet& net, const MlpVars& eta,
             const path::CoupledBatch& batch) {
  check_points(batch.t, batch.x_t);
  Var v = net.velocity_on(tape, eta, batch.t, batch.x_t);
  return nn::ad::mean_sq_norm(v - tape.constant(batch.v_cond));
}

namespace {

struct Query {
  const Vec* s;
  const Vec* t;
  const Mat* x;
};

// One recorded student forward over all queries, sliced back per query.
std::vector<Var> student_outputs(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta,
                                 const std::vector<Query>& queries) {
  Eigen::Index total = 0;
  for (const Query& q : queries) total += q.x->cols();
  const Eigen::Index d = student.dim();
  Vec s(total), t(total);
  Mat x(d, total);
  Eigen::Index at = 0;
  for (const Query& q : queries) {
    const Eigen::Index n = q.x->cols();
    s.segment(at, n) = *q.s;
    t.segment(at, n) = *q.t;
    x.middleCols(at, n) = *q.x;
    at += n;
  }
  Var v = student.velocity_on(tape, theta, s, t, x);
  std::vector<Var> out;
  if (queries.size() == 1) return {v};
  at = 0;
  for (const Query& q : queries) {
    out.push_back(nn::ad::slice_cols(v, at, q.x->cols()));
    at += q.x->cols();
  }
  return out;
}

void check_iavm(const PointBatch& batch, double tau) {
  check_points(batch.s, batch.xs);
  for (Eigen::Index j = 0; j < batch.s.size(); ++j)
    require(batch.s(j) <= 1.0 - tau + 1e-12, "iavm: s must be <= 1 - tau");
}

Vec check_tvm(const TvmBatch& batch) {
  check_interval(batch.s, batch.t, batch.xs, 0.0);
  require(batch.u.size() == batch.s.size(), "tvm: u length mismatch");
  Vec inv_gap(batch.u.size());
  for (Eigen::Index j = 0; j < batch.u.size(); ++j) {
    require(batch.u(j) >= batch.s(j) - 1e-12, "tvm: u must be >= s");
    const double gap = batch.t(j) - batch.u(j);
    if (!(gap >= 1e-9))
      throw DegenerateIntervalError("tvm: t - u = " + std::to_string(gap) + " is below 1e-9");
    inv_gap(j) = 1.0 / gap;
  }
  return inv_gap;
}

Var iivm_residual(Tape& tape, Var v, const nn::VelocityField& teacher, const PointBatch& batch) {
  const Mat target = teacher.velocity(batch.s, batch.xs);
  return nn::ad::mean_sq_norm(v - tape.constant(target));
}

Var iavm_residual(Tape& tape, Var v, const nn::VelocityField& teacher, const PointBatch& batch,
                  double tau) {
  const Mat target = heun_target(teacher, batch.s, batch.xs, tau);
  return nn::ad::mean_sq_norm(v - tape.constant(target));
}

Var tvm_residual(Tape& tape, Var v_t, Var v_u, const nn::StudentAvm& student, const MlpVars& ema,
                 const TvmBatch& batch, const Vec& inv_gap) {
  Var phi_t = flow(tape, batch.xs, v_t, batch.s, batch.t);
  Var phi_u = flow(tape, batch.xs, v_u, batch.s, batch.u);
  Var fd = nn::ad::scale_cols(phi_t - phi_u, inv_gap);
  // Target v^<theta>_{u,t}(phi^[theta]_{s,u}(x_s)): built from values only.
  const Mat phi_u_stopped = phi_u.value();
  const Mat target = student.velocity_on(tape, ema, batch.u, batch.t, phi_u_stopped).value();
  return nn::ad::mean_sq_norm(fd - tape.constant(target));
}

}  // namespace

Var iivm_term(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta,
              const nn::VelocityField& teacher, const PointBatch& batch) {
  check_points(batch.s, batch.xs);
  Var v = student.velocity_on(tape, theta, batch.s, batch.s, batch.xs);
  return iivm_residual(tape, v, teacher, batch);
}

Var iavm_term(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta,
              const nn::VelocityField& teacher, const PointBatch& batch, double tau) {
  check_iavm(batch, tau);
  const Vec t = batch.s.array() + tau;
  Var v = student.velocity_on(tape, theta, batch.s, t, batch.xs);
  return iavm_residual(tape, v, teacher, batch, tau);
}

Var tvm_term(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta, const MlpVars& ema,
             const TvmBatch& batch) {
  const Vec inv_gap = check_tvm(batch);
  const auto v = student_outputs(tape, student, theta,
                                 {{&batch.s, &batch.t, &batch.xs}, {&batch.s, &batch.u, &batch.xs}});
  return tvm_residual(tape, v[0], v[1], student, ema, batch, inv_gap);
}

Var lfmd_term(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta,
              const nn::VelocityField& teacher, const IntervalBatch& batch) {
  check_interval(batch.s, batch.t, batch.xs, 0.0);
  const Eigen::Index n = batch.xs.cols();
  const Vec gap = batch.t - batch.s;
  nn::ad::Dual d = student.directional_on(tape, theta, batch.s, batch.t, batch.xs, Vec::Zero(n),
                                          Vec::Ones(n), Mat::Zero(batch.xs.rows(), n));
  Var dt_phi = d.value + nn::ad::scale_cols(d.tangent, gap);
  const Mat phi_stopped = flow_value(batch.xs, d.value.value(), batch.s, batch.t);
  const Mat target = teacher.velocity(batch.t, phi_stopped);
  return nn::ad::mean_sq_norm(dt_phi - tape.constant(target));
}

Var efmd_term(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta,
              const nn::VelocityField& teacher, const IntervalBatch& batch, EfmdSign sign) {
  check_interval(batch.s, batch.t, batch.xs, 0.0);
  const Eigen::Index n = batch.xs.cols();
  const Vec gap = batch.t - batch.s;
  const double sgn = sign == EfmdSign::PdeConsistent ? 1.0 : -1.0;
  const Mat w = sgn * teacher.velocity(batch.s, batch.xs);
  // d_s phi +- (d_x phi) w = -v +- w + (t - s) D v[ds = 1, dx = +-w].
  nn::ad::Dual d =
      student.directional_on(tape, theta, batch.s, batch.t, batch.xs, Vec::Ones(n), Vec::Zero(n), w);
  Var residual = tape.constant(w) - d.value + nn::ad::scale_cols(d.tangent, gap);
  return nn::ad::mean_sq_norm(residual);
}

Var pid_term(Tape& tape, const nn::StudentAvm& student, const MlpVars& theta,
             const nn::VelocityField& teacher, const IntervalBatch& batch, double tau) {
  check_interval(batch.s, batch.t, batch.xs, tau);
  const Vec t_prev = batch.t.array() - tau;
  const auto v = student_outputs(tape, student, theta,
                                 {{&batch.s, &batch.t, &batch.xs}, {&batch.s, &t_prev, &batch.xs}});
  Var phi_t = flow(tape, batch.xs, v[0], batch.s, batch.t);
  Var phi_prev = flow(tape, batch.xs, v[1], batch.s, t_prev);
  Var fd = nn::ad::scale(phi_t - phi_prev, 1.0 / tau);
  const Mat target = teacher.velocity(batch.t, phi_t.value());
  return nn::ad::mean_sq_norm(fd - tape.constant(target));
}

LossValue cfm_loss(const nn::TeacherNet& net, const path::CoupledBatch& batch) {
  Tape tape;
  const MlpVars eta = nn::ad::bind(tape, net.params(), true);
  return finish(tape, cfm_term(tape, net, eta, batch), net.params().size());
}

LossValue iivm_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const PointBatch& batch) {
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  return finish(tape, iivm_term(tape, student, theta, teacher, batch), student.params().size());
}

LossValue iavm_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const PointBatch& batch, double tau) {
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  return finish(tape, iavm_term(tape, student, theta, teacher, batch, tau),
                student.params().size());
}

LossValue tvm_loss(const nn::StudentAvm& student, const nn::ParamStore& ema,
                   const TvmBatch& batch) {
  require(ema.same_layout(student.params()), "tvm: EMA layout differs from the student");
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  const MlpVars ema_vars = nn::ad::bind(tape, ema, false);
  return finish(tape, tvm_term(tape, student, theta, ema_vars, batch), student.params().size());
}

LossValue lfmd_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const IntervalBatch& batch) {
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  return finish(tape, lfmd_term(tape, student, theta, teacher, batch), student.params().size());
}

LossValue efmd_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                    const IntervalBatch& batch, EfmdSign sign) {
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  return finish(tape, efmd_term(tape, student, theta, teacher, batch, sign),
                student.params().size());
}

LossValue pid_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                   const IntervalBatch& batch, double tau) {
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  return finish(tape, pid_term(tape, student, theta, teacher, batch, tau),
                student.params().size());
}

LossBatchReport itvm_loss(const nn::StudentAvm& student, const nn::VelocityField& teacher,
                          const nn::ParamStore& ema, const ItvmBatch& batch,
                          const LossSpec& spec) {
  require(ema.same_layout(student.params()), "itvm: EMA layout differs from the student");
  Tape tape;
  const MlpVars theta = nn::ad::bind(tape, student.params(), true);
  const auto& w = spec.term_weights;
  LossBatchReport report;
  // Every active term's student forward goes through one stacked pass.
  std::vector<Query> queries;
  Vec iavm_t, inv_gap;
  if (w[0] > 0.0) {
    check_points(batch.iivm.s, batch.iivm.xs);
    queries.push_back({&batch.iivm.s, &batch.iivm.s, &batch.iivm.xs});
  }
  if (w[1] > 0.0) {
    check_iavm(batch.iavm, spec.tau);
    iavm_t = batch.iavm.s.array() + spec.tau;
    queries.push_back({&batch.iavm.s, &iavm_t, &batch.iavm.xs});
  }
  if (w[2] > 0.0) {
    inv_gap = check_tvm(batch.tvm);
    queries.push_back({&batch.tvm.s, &batch.tvm.t, &batch.tvm.xs});
    queries.push_back({&batch.tvm.s, &batch.tvm.u, &batch.tvm.xs});
  }
  require(!queries.empty(), "itvm: every term weight is zero");
  const std::vector<Var> v = student_outputs(tape, student, theta, queries);
  std::size_t next = 0;
  Var total = tape.constant(Mat::Zero(1, 1));
  auto add_term = [&](const char* name, Var term, double weight, Eigen::Index n) {
    report.per_term[name] = term.value()(0, 0);
    report.n += static_cast<std::size_t>(n);
    total = total + nn::ad::scale(term, weight);
  };
  if (w[0] > 0.0)
    add_term("iivm", iivm_residual(tape, v[next++], teacher, batch.iivm), w[0], batch.iivm.xs.cols());
  if (w[1] > 0.0)
    add_term("iavm", iavm_residual(tape, v[next++], teacher, batch.iavm, spec.tau), w[1],
             batch.iavm.xs.cols());
  if (w[2] > 0.0) {
    const MlpVars ema_vars = nn::ad::bind(tape, ema, false);
    Var v_t = v[next++];
    Var v_u = v[next++];
    add_term("tvm", tvm_residual(tape, v_t, v_u, student, ema_vars, batch.tvm, inv_gap), w[2],
             batch.tvm.xs.cols());
  }
  report.total = total.value()(0, 0);
  // The caller reports the per-term breakdown.
  if (!std::isfinite(report.total)) return report;
  tape.backward(total);
  report.grad = tape.parameter_gradient(student.params().size());
  return report;
}

}  // namespace ttfm::losses
