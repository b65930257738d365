#include "ttfm/training/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace ttfm::training {

namespace {

using Clock = std::chrono::steady_clock;

std::array<double, 3> effective_weights(const losses::LossSpec& spec) {
  if (spec.kind == losses::LossKind::TvmOnly) return {0.0, 0.0, spec.term_weights[2]};
  return spec.term_weights;
}

std::string describe(const losses::LossBatchReport& r) {
  std::ostringstream out;
  out << "total=" << r.total;
  for (const auto& [k, v] : r.per_term) out << ' ' << k << '=' << v;
  return out.str();
}

template <typename F>
losses::LossValue with_term_name(const std::string& name, F&& eval) {
  try {
    return eval();
  } catch (const NonFiniteError& e) {
    throw NonFiniteError(std::string(e.what()) + " (" + name + "=nan)");
  }
}

/// Shared loop: `step` evaluates one batch and returns its report.
class Loop {
 public:
  Loop(const TrainConfig& cfg, const TrainHooks& hooks, nn::ParamStore params, bool with_ema_loss)
      : cfg_(cfg), hooks_(hooks), params_(std::move(params)) {
    opt_ = OptimState::zeros(static_cast<Eigen::Index>(params_.size()), cfg.adam);
    ema_test_.decay = cfg.test_ema_decay;
    ema_test_.shadow = params_.values();
    if (with_ema_loss) {
      ema_loss_.decay = cfg.loss.mu;
      ema_loss_.shadow = params_.values();
    }
    with_ema_loss_ = with_ema_loss;
  }

  nn::ParamStore& params() { return params_; }

  nn::ParamStore ema_loss_store() const { return as_store(ema_loss_.shadow); }

  template <typename Step>
  TrainResult run(Step&& step) {
    const std::size_t iters = cfg_.iterations();
    const auto start = Clock::now();
    double window_loss = 0.0;
    std::map<std::string, double> window_terms;
    std::size_t window_n = 0;
    for (std::size_t i = 0; i < iters; ++i) {
      losses::LossBatchReport report;
      try {
        report = step();
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("iteration " + std::to_string(i + 1) + ": " + e.what());
      }
      if (!std::isfinite(report.total))
        throw NonFiniteError("iteration " + std::to_string(i + 1) + ": non-finite loss (" +
                             describe(report) + ")");
      const double lr = lr_at(i + 1, cfg_.adam);
      try {
        adam_step(params_.values(), report.grad, opt_, lr);
      } catch (const NonFiniteError& e) {
        throw NonFiniteError("iteration " + std::to_string(i + 1) + ": " + e.what() + " (" +
                             describe(report) + ")");
      }
      if (with_ema_loss_) ema_update(ema_loss_, params_.values());
      ema_update(ema_test_, params_.values());

      window_loss += report.total;
      for (const auto& [k, v] : report.per_term) window_terms[k] += v;
      ++window_n;
      const std::uint64_t iter = i + 1;
      if (hooks_.on_telemetry && cfg_.eval_every > 0 && iter % cfg_.eval_every == 0) {
        TelemetryRecord rec;
        rec.iter = iter;
        rec.loss = window_loss / static_cast<double>(window_n);
        for (const auto& [k, v] : window_terms) rec.loss_terms[k] = v / static_cast<double>(window_n);
        rec.lr = lr;
        rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        hooks_.on_telemetry(rec);
        window_loss = 0.0;
        window_terms.clear();
        window_n = 0;
      }
      if (cfg_.checkpoint_every > 0 && iter % cfg_.checkpoint_every == 0 && iter != iters)
        checkpoint(iter);
    }
    checkpoint(iters);
    TrainResult result;
    result.params = params_;
    result.ema_test = as_store(ema_test_.shadow);
    if (with_ema_loss_) result.ema_loss = as_store(ema_loss_.shadow);
    result.iterations = iters;
    return result;
  }

 private:
  nn::ParamStore as_store(const Vec& values) const {
    nn::ParamStore s = params_;
    s.values() = values;
    return s;
  }

  void checkpoint(std::uint64_t iter) {
    if (!hooks_.on_checkpoint) return;
    const nn::ParamStore ema_test = as_store(ema_test_.shadow);
    nn::ParamStore ema_loss;
    if (with_ema_loss_) ema_loss = as_store(ema_loss_.shadow);
    hooks_.on_checkpoint(
        TrainSnapshot{iter, &params_, &ema_test, with_ema_loss_ ? &ema_loss : nullptr});
  }

  const TrainConfig& cfg_;
  const TrainHooks& hooks_;
  nn::ParamStore params_;
  OptimState opt_;
  EmaState ema_test_;
  EmaState ema_loss_;
  bool with_ema_loss_ = false;
};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (total_examples % batch_size != 0)
    throw ConfigError("train.total_examples must be a multiple of train.batch_size");
  if (!(test_ema_decay >= 0.0 && test_ema_decay < 1.0))
    throw ConfigError("train.test_ema_decay must lie in [0, 1)");
  if (!(adam.lr_peak > 0.0)) throw ConfigError("train.lr must be > 0");
  loss.validate();
  if (loss.kind == losses::LossKind::Itvm || loss.kind == losses::LossKind::TvmOnly) {
    const auto s = itvm_slices(batch_size, loss);
    if (s[0] + s[1] + s[2] == 0) throw ConfigError("loss.term_weights: no active ITVM term");
  }
}

nlohmann::json to_json(const TelemetryRecord& rec) {
  nlohmann::json j;
  j["iter"] = rec.iter;
  j["loss"] = rec.loss;
  j["loss_terms"] = rec.loss_terms;
  j["lr"] = rec.lr;
  j["wall_ms"] = rec.wall_ms;
  return j;
}

std::array<Eigen::Index, 3> itvm_slices(std::size_t batch_size, const losses::LossSpec& spec) {
  const auto w = effective_weights(spec);
  int active = 0;
  for (double x : w) active += x > 0.0 ? 1 : 0;
  std::array<Eigen::Index, 3> out{0, 0, 0};
  if (active == 0) return out;
  const auto base = static_cast<Eigen::Index>(batch_size) / active;
  auto rem = static_cast<Eigen::Index>(batch_size) % active;
  for (int i = 0; i < 3; ++i) {
    if (w[i] <= 0.0) continue;
    out[i] = base + rem;
    rem = 0;
  }
  return out;
}

TrainResult train_teacher(const nn::TeacherNet& init, const path::PathConfig& path,
                          const path::DataSource& data, const TrainConfig& cfg,
                          const TrainHooks& hooks) {
  cfg.validate();
  path.validate();
  require(data.dim() == init.dim(), "train_teacher: data dimension differs from the network");
  nn::TeacherNet net = init;
  Rng rng(cfg.seed);
  Loop loop(cfg, hooks, net.params(), false);
  const auto n = static_cast<Eigen::Index>(cfg.batch_size);
  return loop.run([&] {
    net.params().values() = loop.params().values();
    const path::CoupledBatch batch = path::sample_coupled(path, data, rng, n);
    const losses::LossValue lv = with_term_name("cfm", [&] { return losses::cfm_loss(net, batch); });
    losses::LossBatchReport r;
    r.total = lv.value;
    r.per_term["cfm"] = lv.value;
    r.n = static_cast<std::size_t>(n);
    r.grad = lv.grad;
    return r;
  });
}

TrainResult distill(const nn::StudentAvm& init, const nn::VelocityField& teacher,
                    const losses::StateSampler& states, const TrainConfig& cfg,
                    const TrainHooks& hooks) {
  cfg.validate();
  require(teacher.dim() == init.dim(), "distill: teacher and student dimensions differ");
  using losses::LossKind;
  const auto& spec = cfg.loss;
  nn::StudentAvm student = init;
  Rng rng(cfg.seed);
  const bool itvm = spec.kind == LossKind::Itvm || spec.kind == LossKind::TvmOnly;
  if (!itvm && spec.kind != LossKind::Lfmd && spec.kind != LossKind::Efmd &&
      spec.kind != LossKind::Pid)
    throw ConfigError("distill: loss kind '" + losses::to_string(spec.kind) +
                      "' is not a distillation loss");
  Loop loop(cfg, hooks, student.params(), itvm);
  const auto n = static_cast<Eigen::Index>(cfg.batch_size);
  const auto slices = itvm_slices(cfg.batch_size, spec);
  losses::LossSpec effective = spec;
  effective.term_weights = effective_weights(spec);

  return loop.run([&] {
    student.params().values() = loop.params().values();
    losses::LossBatchReport r;
    if (itvm) {
      losses::ItvmBatch b;
      if (slices[0] > 0) b.iivm = losses::sample_point_batch(states, rng, slices[0], 1.0);
      if (slices[1] > 0) b.iavm = losses::sample_point_batch(states, rng, slices[1], 1.0 - spec.tau);
      if (slices[2] > 0)
        b.tvm = losses::sample_tvm_batch(states, rng, slices[2], spec.tau, spec.u_strategy);
      return losses::itvm_loss(student, teacher, loop.ema_loss_store(), b, effective);
    }
    losses::LossValue lv;
    std::string name;
    if (spec.kind == LossKind::Pid) {
      const auto b = losses::sample_interval_batch(states, rng, n, spec.tau);
      name = "pid";
      lv = with_term_name(name, [&] { return losses::pid_loss(student, teacher, b, spec.tau); });
    } else if (spec.kind == LossKind::Lfmd) {
      const auto b = losses::sample_interval_batch(states, rng, n, 0.0);
      name = "lfmd";
      lv = with_term_name(name, [&] { return losses::lfmd_loss(student, teacher, b); });
    } else {
      const auto b = losses::sample_interval_batch(states, rng, n, 0.0);
      name = "efmd";
      lv = with_term_name(name,
                          [&] { return losses::efmd_loss(student, teacher, b, spec.efmd_sign); });
    }
    r.total = lv.value;
    r.per_term[name] = lv.value;
    r.n = static_cast<std::size_t>(n);
    r.grad = std::move(lv.grad);
    return r;
  });
}

}  // namespace ttfm::training
