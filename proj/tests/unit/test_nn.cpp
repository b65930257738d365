#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "ttfm/nn/checkpoint.hpp"
#include "ttfm/nn/encoding.hpp"
#include "ttfm/nn/fields.hpp"
#include "ttfm/nn/mlp.hpp"
#include "ttfm/nn/models.hpp"

using namespace ttfm;
using nn::ad::MlpVars;
using nn::ad::Tape;
using nn::ad::Var;

namespace {

// Small enough to keep the property loops fast, deep enough to exercise every layer kind.
nn::StudentAvm small_student(std::uint64_t seed) {
  nn::StudentAvm net(2, 16, 3, 8);
  net.set_params(test::random_params(net.spec(), seed));
  return net;
}

nn::TeacherNet small_teacher(std::uint64_t seed) {
  nn::TeacherNet net(2, 16, 3, 8);
  net.set_params(test::random_params(net.spec(), seed));
  return net;
}

Vec one(double v) { return Vec::Constant(1, v); }

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("pe_encode at zero and odd width") {
  const Vec pe = nn::pe_encode(0.0, 4);
  CHECK(pe(0) == 0.0);
  CHECK(pe(1) == 0.0);
  CHECK(pe(2) == 1.0);
  CHECK(pe(3) == 1.0);
  CHECK_THROWS_AS(nn::pe_encode(0.5, 3), ConfigError);
}

TEST_CASE("pe_encode matches the naive encoding") {
  for (double t : {0.0, 0.1, 0.37, 0.999, 1.0}) CHECK((nn::pe_encode(t, 256) - test::naive_pe(t, 256)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("pe_encode is injective on a fine grid") {
  // Nearest neighbours on the grid are the only candidates for a collision,
  // since the lowest frequency component sin(t) is strictly increasing on [0, 1].
  const int n = 10000;
  for (int dim : {2, 8, 256}) {
    double min_gap = 1e300;
    Vec prev = nn::pe_encode(0.0, dim);
    for (int i = 1; i <= n; ++i) {
      const Vec cur = nn::pe_encode(static_cast<double>(i) / n, dim);
      min_gap = std::min(min_gap, (cur - prev).norm());
      prev = cur;
    }
    CHECK(min_gap > 0.0);
  }
}

TEST_CASE("pe_encode slope is bounded by the frequency norm") {
  const Vec w = nn::pe_frequencies(256);
  const double bound = w.norm();
  for (double t : {0.0, 0.25, 0.5, 0.9}) {
    for (double h : {1e-2, 1e-4, 1e-6}) {
      const double step = (nn::pe_encode(t + h, 256) - nn::pe_encode(t, 256)).norm();
      CHECK(step <= bound * h * (1 + 1e-9));
    }
    const Vec fd = test::central_diff([&](double h) { return nn::pe_encode(t + h, 256); });
    CHECK(test::rel_err(nn::pe_encode_dt(t, 256), fd) < 1e-8);
  }
}

TEST_CASE("MlpSpec validation") {
  CHECK_NOTHROW((nn::MlpSpec{4, 8, 1, 2}).validate());
  CHECK_THROWS_AS((nn::MlpSpec{4, 8, 0, 2}).validate(), ConfigError);
  CHECK_THROWS_AS((nn::MlpSpec{0, 8, 1, 2}).validate(), ConfigError);
}

TEST_CASE("ParamStore layout and init") {
  const nn::MlpSpec spec{5, 7, 2, 3};
  const nn::ParamStore p = nn::init_params(spec, 1);
  CHECK(p.size() == static_cast<std::size_t>(5 * 7 + 7 + 7 * 7 + 7 + 7 * 3 + 3));
  CHECK(p.n_layers() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const double lim = std::sqrt(6.0 / static_cast<double>(p.layout()[i].cols));
    CHECK(p.weight(i).cwiseAbs().maxCoeff() <= lim);
    CHECK(p.bias(i).isZero());
  }
  CHECK(nn::init_params(spec, 1).values() == p.values());
  CHECK(nn::init_params(spec, 2).values() != p.values());
}

TEST_CASE("ParamStore payload round trip is bit-exact") {
  nn::ParamStore p = test::random_params(nn::MlpSpec{3, 5, 2, 2}, 9);
  p.values()(0) = std::nextafter(1.0, 2.0);
  p.values()(1) = -0.0;
  p.values()(2) = 1e-310;
  std::stringstream buf;
  p.write_payload(buf);
  CHECK(buf.str().size() == p.size() * 8);
  nn::ParamStore q(nn::MlpSpec{3, 5, 2, 2});
  q.read_payload(buf);
  CHECK(std::memcmp(p.values().data(), q.values().data(), p.size() * 8) == 0);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  const nn::StudentAvm net = small_student(4);
  nn::Checkpoint ck;
  ck.kind = "student";
  ck.dim = 2;
  ck.pe_dim = 8;
  ck.mlp = net.spec();
  ck.sigma_min = 0.001;
  ck.seed = 17;
  ck.iteration = 1234;
  ck.extra = {{"note", "x"}};
  ck.payloads = {{"params", net.params()}, {"ema_test", test::random_params(net.spec(), 5)}};
  const std::string bytes = nn::serialize_checkpoint(ck);
  const nn::Checkpoint back = nn::deserialize_checkpoint(bytes);
  CHECK(back.kind == "student");
  CHECK(back.mlp == ck.mlp);
  CHECK(back.iteration == 1234);
  CHECK(back.extra["note"] == "x");
  CHECK(back.payload("params").values() == ck.payload("params").values());
  CHECK(back.payload("ema_test").values() == ck.payload("ema_test").values());
  CHECK(nn::serialize_checkpoint(back) == bytes);
  const nn::StudentAvm rebuilt = nn::student_from_checkpoint(back, "params");
  CHECK(rebuilt.params().values() == net.params().values());
  CHECK_THROWS(nn::deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)));
}

TEST_CASE("zero final layer gives zero output") {
  nn::TeacherNet teacher = small_teacher(1);
  nn::StudentAvm student = small_student(2);
  teacher.params().weight(teacher.params().n_layers() - 1).setZero();
  teacher.params().bias(teacher.params().n_layers() - 1).setZero();
  student.params().weight(student.params().n_layers() - 1).setZero();
  student.params().bias(student.params().n_layers() - 1).setZero();
  Rng rng(3);
  const Mat x = rng.normal_matrix(2, 10);
  const Vec t = Vec::LinSpaced(10, 0.0, 1.0);
  CHECK(teacher.velocity(t, x).isZero(0.0));
  CHECK(student.velocity(t, t.reverse(), x).isZero(0.0));
}

TEST_CASE("forward passes are deterministic and match the naive oracle") {
  const nn::TeacherNet teacher = small_teacher(5);
  const nn::StudentAvm student = small_student(6);
  Rng rng(7);
  const Mat x = rng.normal_matrix(2, 100);
  Vec s(100), t(100);
  for (int j = 0; j < 100; ++j) {
    s(j) = rng.uniform();
    t(j) = rng.uniform();
  }
  const Mat vt = teacher.velocity(t, x);
  const Mat vs = student.velocity(s, t, x);
  CHECK(vt == teacher.velocity(t, x));
  CHECK(vs == student.velocity(s, t, x));
  double max_t = 0.0, max_s = 0.0;
  for (int j = 0; j < 100; ++j) {
    max_t = std::max(max_t, (vt.col(j) - test::naive_teacher(teacher, t(j), x.col(j))).cwiseAbs().maxCoeff());
    max_s = std::max(max_s, (vs.col(j) - test::naive_student(student, s(j), t(j), x.col(j))).cwiseAbs().maxCoeff());
  }
  CHECK(max_t < 1e-12);
  CHECK(max_s < 1e-12);
  CHECK_THROWS_AS(teacher.velocity(Vec::Zero(3), Mat::Zero(3, 3)), DomainError);
}

TEST_CASE("full-width default networks match the naive oracle") {
  nn::StudentAvm student(2, 64, 8, 256);
  student.set_params(test::random_params(student.spec(), 8));
  const Vec x{{0.3, -1.2}};
  const Vec v = student.velocity(one(0.2), one(0.9), x);
  CHECK((v - test::naive_student(student, 0.2, 0.9, x)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ttfm initial condition and algebra") {
  const nn::StudentAvm student = small_student(10);
  const nn::Ttfm f(student);
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Mat x = rng.normal_matrix(2, 1) * 3.0;
    const double s = rng.uniform(), t = rng.uniform();
    CHECK(f.apply(s, s, x) == x);
    const Mat phi = f.apply(s, t, x);
    if (std::abs(t - s) > 1e-3) {
      const Vec v = student.velocity(one(s), one(t), x);
      CHECK(((phi - x) / (t - s) - v).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  nn::StudentAvm c(2, 16, 3, 8);
  test::make_constant(c, Vec{{0.4, -1.5}});
  const Mat x{{1.0}, {2.0}};
  const Mat phi = nn::Ttfm(c).apply(0.2, 0.7, x);
  CHECK(phi(0, 0) == doctest::Approx(1.0 + 0.5 * 0.4).epsilon(1e-15));
  CHECK(phi(1, 0) == doctest::Approx(2.0 - 0.5 * 1.5).epsilon(1e-15));
}

TEST_CASE("grad_params of a constant loss is zero") {
  const nn::StudentAvm student = small_student(12);
  const Vec g = nn::ad::grad_params(student.params(), [](Tape& tape, const MlpVars&) {
    return tape.constant(Mat::Constant(1, 1, 3.0));
  });
  CHECK(g.size() == static_cast<Eigen::Index>(student.params().size()));
  CHECK(g.isZero(0.0));
}

TEST_CASE("grad_params of ||W x||^2 is 2 (W x) x^T") {
  const nn::MlpSpec spec{3, 4, 1, 2};
  const nn::ParamStore p = test::random_params(spec, 13);
  const Vec x{{0.5, -1.0, 2.0}};
  const Vec g = nn::ad::grad_params(p, [&](Tape& tape, const MlpVars& vars) {
    const Var wx = nn::ad::matmul(vars.weights[0], tape.constant(x));
    return nn::ad::mean_sq_norm(wx);
  });
  const Mat expect = 2.0 * (p.weight(0) * x) * x.transpose();
  const Eigen::Map<const Mat> gw(g.data() + p.layout()[0].weight_offset, 4, 3);
  CHECK((gw - expect).cwiseAbs().maxCoeff() < 1e-14);
  // Every other parameter is untouched.
  Vec rest = g;
  rest.segment(static_cast<Eigen::Index>(p.layout()[0].weight_offset), 12).setZero();
  CHECK(rest.isZero(0.0));
}

TEST_CASE("grad_params matches finite differences on a random 3-layer MLP") {
  const nn::MlpSpec spec{4, 8, 2, 3};
  nn::ParamStore p = test::random_params(spec, 14);
  Rng rng(15);
  const Mat input = rng.normal_matrix(4, 6);
  auto loss_value = [&](const nn::ParamStore& q) {
    return nn::mlp_forward(spec, q, input).colwise().squaredNorm().mean();
  };
  const Vec g = nn::ad::grad_params(p, [&](Tape& tape, const MlpVars& vars) {
    return nn::ad::mean_sq_norm(nn::ad::mlp_forward(vars, tape.constant(input)));
  });
  for (int k = 0; k < 20; ++k) {
    const auto i = static_cast<Eigen::Index>(rng.index(p.size()));
    nn::ParamStore plus = p, minus = p;
    plus.values()(i) += 1e-5;
    minus.values()(i) -= 1e-5;
    const double fd = (loss_value(plus) - loss_value(minus)) / 2e-5;
    CHECK(std::abs(fd - g(i)) / std::max(std::abs(g(i)), 1e-8) < 1e-6);
  }
}

TEST_CASE("gradient through a stop-grad view is zero") {
  const nn::StudentAvm student = small_student(16);
  Rng rng(17);
  const Mat x = rng.normal_matrix(2, 4);
  const Vec s = Vec::Constant(4, 0.2), t = Vec::Constant(4, 0.8);
  const Vec g = nn::ad::grad_params(student.params(), [&](Tape& tape, const MlpVars& theta) {
    MlpVars frozen;
    for (Var w : theta.weights) frozen.weights.push_back(tape.detach(w));
    for (Var b : theta.biases) frozen.biases.push_back(tape.detach(b));
    return nn::ad::mean_sq_norm(student.velocity_on(tape, frozen, s, t, x));
  });
  CHECK(g.isZero(0.0));
}

TEST_CASE("non-finite parameters abort gradient evaluation") {
  nn::StudentAvm student = small_student(18);
  student.params().values()(3) = std::nan("");
  const Mat x = Mat::Ones(2, 2);
  const Vec s = Vec::Zero(2), t = Vec::Ones(2);
  CHECK_THROWS_AS(nn::ad::grad_params(student.params(),
                                      [&](Tape& tape, const MlpVars& theta) {
                                        return nn::ad::mean_sq_norm(
                                            student.velocity_on(tape, theta, s, t, x));
                                      }),
                  NonFiniteError);
}

TEST_CASE("dt_flow and ds_flow on a constant average velocity") {
  nn::StudentAvm c(2, 16, 3, 8);
  const Vec cv{{0.7, -0.2}};
  test::make_constant(c, cv);
  const nn::Ttfm f(c);
  const Mat x{{0.3}, {1.1}};
  CHECK((f.dt_flow(one(0.1), one(0.6), x).col(0) - cv).norm() < 1e-15);
  CHECK((f.ds_flow(one(0.1), one(0.6), x).col(0) + cv).norm() < 1e-15);
  const Mat u{{0.5}, {-2.0}};
  CHECK((f.jvp_x(one(0.1), one(0.6), x, u) - u).norm() < 1e-15);
}

TEST_CASE("time derivatives match finite differences") {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    const nn::StudentAvm student = small_student(100 + trial);
    const nn::Ttfm f(student);
    const Vec x = test::random_vec(rng, 2, -2, 2);
    const double s = rng.uniform(0.01, 0.99);
    const double t = trial % 10 == 0 ? s : rng.uniform(0.01, 0.99);
    const Vec dt = f.dt_flow(one(s), one(t), x);
    const Vec ds = f.ds_flow(one(s), one(t), x);
    const Vec fd_t = test::central_diff([&](double h) { return Vec(f.apply(s, t + h, x)); });
    const Vec fd_s = test::central_diff([&](double h) { return Vec(f.apply(s + h, t, x)); });
    CHECK(test::rel_err(dt, fd_t) < 1e-5);
    CHECK(test::rel_err(ds, fd_s) < 1e-5);
    if (s == t) {
      // At the diagonal the product-rule terms cancel: both derivatives reduce to +-v_{t,t}.
      const Vec v = student.velocity(one(t), one(t), x);
      CHECK(test::rel_err(dt, v) < 1e-12);
      CHECK(test::rel_err(ds + dt, Vec::Zero(2), 1.0) < 1e-12);
    }
  }
}

TEST_CASE("jvp_x and jacobian_x match finite differences") {
  Rng rng(20);
  for (int trial = 0; trial < 100; ++trial) {
    const nn::StudentAvm student = small_student(300 + trial);
    const nn::Ttfm f(student);
    const Vec x = test::random_vec(rng, 2, -2, 2);
    const Vec u = test::random_vec(rng, 2, -1, 1);
    const double s = rng.uniform(), t = rng.uniform();
    const Vec jvp = f.jvp_x(one(s), one(t), x, u);
    const Vec fd = test::central_diff([&](double h) { return Vec(f.apply(s, t, x + h * u)); });
    CHECK(test::rel_err(jvp, fd) < 1e-5);
    const Mat jac = f.jacobian_x(s, t, x);
    for (int i = 0; i < 2; ++i) {
      const Vec col = test::central_diff(
          [&](double h) { return Vec(f.apply(s, t, x + h * Vec::Unit(2, i))); });
      CHECK((jac.col(i) - col).cwiseAbs().maxCoeff() < 1e-5);
    }
  }
}

TEST_CASE("jacobian_x closed forms") {
  const nn::StudentAvm student = small_student(21);
  const Vec x{{0.4, 0.1}};
  CHECK(nn::Ttfm(student).jacobian_x(0.3, 0.3, x) == Mat::Identity(2, 2));
  CHECK((nn::Ttfm(student).jvp_x(one(0.3), one(0.3), x, Mat(Vec{{1.0, 2.0}})) - Vec{{1.0, 2.0}}).norm() == 0.0);
  nn::StudentAvm lin(2, 16, 3, 8);
  const Mat a{{0.3, -0.4}, {0.2, 0.5}};
  test::make_linear(lin, a);
  const Mat jac = nn::Ttfm(lin).jacobian_x(0.2, 0.9, x);
  CHECK((jac - (Mat::Identity(2, 2) + 0.7 * a)).cwiseAbs().maxCoeff() < 1e-12);
  const Mat exact = nn::Ttfm(nn::LinearAvm(a)).jacobian_x(0.2, 0.9, x);
  CHECK((exact - (Mat::Identity(2, 2) + 0.7 * a)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("teacher jvp and trace match finite differences") {
  Rng rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const nn::TeacherNet teacher = small_teacher(500 + trial);
    const Vec x = test::random_vec(rng, 2, -2, 2);
    const Vec u = test::random_vec(rng, 2, -1, 1);
    const double t = rng.uniform();
    const Vec jvp = teacher.jvp_x(one(t), x, u);
    const Vec fd = test::central_diff([&](double h) { return Vec(teacher.velocity(one(t), x + h * u)); });
    CHECK(test::rel_err(jvp, fd) < 1e-5);
    double fd_trace = 0.0;
    for (int i = 0; i < 2; ++i)
      fd_trace += test::central_diff([&](double h) {
        return Vec(teacher.velocity(one(t), x + h * Vec::Unit(2, i)));
      })(i);
    CHECK(std::abs(nn::trace_jac_teacher(teacher, t, x) - fd_trace) < 1e-5);
  }
}

TEST_CASE("trace closed forms") {
  nn::TeacherNet c(2, 16, 3, 8);
  test::make_constant(c, Vec{{1.0, 2.0}});
  CHECK(nn::trace_jac_teacher(c, 0.4, Vec{{0.3, 0.3}}) == 0.0);
  nn::TeacherNet lin(2, 16, 3, 8);
  test::make_linear(lin, 0.7 * Mat::Identity(2, 2));
  CHECK(nn::trace_jac_teacher(lin, 0.4, Vec{{0.3, -0.8}}) == doctest::Approx(1.4).epsilon(1e-12));
  CHECK(nn::trace_jac_teacher(nn::LinearField::scalar(0.7, 3), 0.1, Vec::Ones(3)) ==
        doctest::Approx(2.1).epsilon(1e-15));
  CHECK(nn::trace_jac_teacher(nn::ConstantField(Vec::Ones(2)), 0.1, Vec::Ones(2)) == 0.0);
}

TEST_CASE("batched divergence equals the per-point trace") {
  const nn::TeacherNet teacher = small_teacher(23);
  Rng rng(24);
  const Mat x = rng.normal_matrix(2, 7);
  const Vec t = Vec::LinSpaced(7, 0.0, 1.0);
  const auto [v, div] = teacher.velocity_divergence(t, x);
  CHECK((v - teacher.velocity(t, x)).cwiseAbs().maxCoeff() < 1e-14);
  for (int j = 0; j < 7; ++j)
    CHECK(div(j) == doctest::Approx(nn::trace_jac_teacher(teacher, t(j), x.col(j))).epsilon(1e-12));
}

}
