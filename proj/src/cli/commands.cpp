#include "ttfm/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ttfm/cli/manifest.hpp"
#include "ttfm/cli/plot.hpp"
#include "ttfm/losses/losses.hpp"

namespace ttfm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path().empty() ? fs::path(".") : file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

datasets::PointCloud load_data(const RunConfig& cfg) {
  return datasets::PointCloud(datasets::generate(cfg.dataset));
}

std::string iter_tag(std::uint64_t iter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08llu", static_cast<unsigned long long>(iter));
  return buf;
}

nn::Checkpoint make_checkpoint(const std::string& kind, const nn::TimeConditionedNet& net, int dim,
                               const RunConfig& cfg, const training::TrainSnapshot& snap) {
  nn::Checkpoint c;
  c.kind = kind;
  c.dim = dim;
  c.pe_dim = net.pe_dim();
  c.mlp = net.spec();
  c.sigma_min = cfg.path.sigma_min;
  c.seed = cfg.seed;
  c.iteration = snap.iteration;
  // Paths are left out so that identical runs in different directories give identical bytes.
  json run = to_json(cfg);
  run.erase("output_dir");
  run.erase("teacher_checkpoint");
  run.erase("student_checkpoint");
  c.extra = {{"config", run}};
  if (!cfg.teacher_checkpoint.empty() && kind == "student")
    c.extra["teacher_sha256"] = sha256_file(cfg.teacher_checkpoint);
  c.payloads.emplace_back("params", *snap.params);
  c.payloads.emplace_back("ema_test", *snap.ema_test);
  if (snap.ema_loss) c.payloads.emplace_back("ema_loss", *snap.ema_loss);
  return c;
}

/// Runs `train` with telemetry streamed to <stem>_telemetry.jsonl and checkpoints
/// written as <stem>.ckpt (final) and checkpoints/<stem>_<iter>.ckpt (periodic).
template <typename Train>
fs::path run_training(const RunConfig& cfg, const std::string& stem,
                      const nn::TimeConditionedNet& net, int dim, Train&& train) {
  fs::create_directories(cfg.output_dir);
  const fs::path final_path = cfg.output_dir / (stem + ".ckpt");
  std::ofstream telemetry(cfg.output_dir / (stem + "_telemetry.jsonl"), std::ios::binary);
  const std::uint64_t total = cfg.train.iterations();
  training::TrainHooks hooks;
  hooks.on_telemetry = [&](const training::TelemetryRecord& r) {
    telemetry << training::to_json(r).dump() << '\n';
    telemetry.flush();
  };
  hooks.on_checkpoint = [&](const training::TrainSnapshot& snap) {
    const nn::Checkpoint c = make_checkpoint(stem == "teacher" ? "teacher" : "student", net, dim, cfg, snap);
    if (snap.iteration == total) {
      nn::save_checkpoint(c, final_path);
    } else {
      fs::create_directories(cfg.output_dir / "checkpoints");
      nn::save_checkpoint(c, cfg.output_dir / "checkpoints" / (stem + "_" + iter_tag(snap.iteration) + ".ckpt"));
    }
  };
  train(hooks);
  telemetry.close();
  write_manifest(cfg.output_dir);
  return final_path;
}

nn::Checkpoint load_teacher(const RunConfig& cfg, int dim) {
  if (cfg.teacher_checkpoint.empty()) throw ConfigError("teacher_checkpoint: required by this command");
  nn::Checkpoint c = nn::load_checkpoint(cfg.teacher_checkpoint);
  check_compatible(c, "teacher", dim, cfg.path.sigma_min, "teacher_checkpoint");
  return c;
}

nn::Checkpoint load_student(const RunConfig& cfg, int dim) {
  if (cfg.student_checkpoint.empty()) throw ConfigError("student_checkpoint: required by this command");
  nn::Checkpoint c = nn::load_checkpoint(cfg.student_checkpoint);
  check_compatible(c, "student", dim, cfg.path.sigma_min, "student_checkpoint");
  return c;
}


}  // namespace

void check_compatible(const nn::Checkpoint& ckpt, const std::string& kind, int dim,
                      double sigma_min, const std::string& label) {
  std::vector<std::string> issues;
  if (ckpt.kind != kind) issues.push_back("kind: expected " + kind + ", found " + ckpt.kind);
  if (dim > 0 && ckpt.dim != dim)
    issues.push_back("dim: expected " + std::to_string(dim) + ", found " + std::to_string(ckpt.dim));
  if (ckpt.sigma_min != sigma_min) {
    std::ostringstream s;
    s.precision(17);
    s << "sigma_min: expected " << sigma_min << ", found " << ckpt.sigma_min;
    issues.push_back(s.str());
  }
  if (issues.empty()) return;
  std::string msg = label + ": incompatible checkpoint";
  for (const auto& i : issues) msg += "\n  " + i;
  throw ConfigError(msg);
}

fs::path cmd_dataset(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir / "dataset.csv";
  datasets::save_csv(datasets::generate(cfg.dataset), out);
  write_manifest(cfg.output_dir);
  return out;
}

fs::path cmd_train_teacher(const RunConfig& cfg) {
  cfg.validate();
  const datasets::PointCloud data = load_data(cfg);
  const int dim = static_cast<int>(data.dim());
  nn::TeacherNet net(dim, cfg.teacher.hidden_width, cfg.teacher.n_hidden, cfg.teacher.pe_dim);
  net.set_params(nn::init_params(net.spec(), derive_seed(cfg.seed, "teacher.init")));
  training::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "teacher.train");
  return run_training(cfg, "teacher", net, dim, [&](const training::TrainHooks& hooks) {
    training::train_teacher(net, cfg.path, data, tc, hooks);
  });
}

fs::path cmd_distill(const RunConfig& cfg) {
  cfg.validate();
  const datasets::PointCloud data = load_data(cfg);
  const int dim = static_cast<int>(data.dim());
  const nn::Checkpoint tc_ckpt = load_teacher(cfg, dim);
  const nn::TeacherNet teacher = nn::teacher_from_checkpoint(tc_ckpt);
  nn::StudentAvm student(dim, cfg.student.hidden_width, cfg.student.n_hidden, cfg.student.pe_dim);
  student.set_params(nn::init_params(student.spec(), derive_seed(cfg.seed, "student.init")));
  training::TrainConfig tc = cfg.train;
  tc.seed = derive_seed(cfg.seed, "student.train");
  const losses::StateSampler states = losses::path_sampler(cfg.path, data);
  return run_training(cfg, "student", student, dim, [&](const training::TrainHooks& hooks) {
    training::distill(student, teacher, states, tc, hooks);
  });
}

fs::path cmd_sample(const RunConfig& cfg, int nfe, std::size_t n) {
  cfg.validate();
  const nn::Checkpoint sc = load_student(cfg, 0);
  const nn::StudentAvm student = nn::student_from_checkpoint(sc);
  const nn::Ttfm ttfm(student);
  Rng rng(derive_seed(cfg.seed, "sample.nfe" + std::to_string(nfe)));
  const eval::SampleTraces tr =
      eval::sample_student(ttfm, eval::NfeSchedule::uniform(nfe), static_cast<Eigen::Index>(n), rng);
  if (tr.rejected > 0)
    std::fprintf(stderr, "warning: %lld non-finite samples rejected\n",
                 static_cast<long long>(tr.rejected));
  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir / ("samples_nfe" + std::to_string(nfe) + ".csv");
  datasets::save_csv(tr.final(), out);
  write_manifest(cfg.output_dir);
  return out;
}

std::vector<eval::KlReport> cmd_eval_kl(const RunConfig& cfg) {
  cfg.validate();
  const nn::Checkpoint sc = load_student(cfg, 0);
  const nn::Checkpoint tc = load_teacher(cfg, sc.dim);
  const nn::StudentAvm student = nn::student_from_checkpoint(sc);
  const nn::TeacherNet teacher = nn::teacher_from_checkpoint(tc);
  const nn::Ttfm ttfm(student);
  fs::create_directories(cfg.output_dir);
  std::vector<eval::KlReport> reports;
  for (int k : cfg.eval.nfe) {
    Rng rng(derive_seed(cfg.seed, "eval.nfe" + std::to_string(k)));
    eval::KlReport r =
        eval::kl_estimate(ttfm, teacher, eval::NfeSchedule::uniform(k),
                          static_cast<Eigen::Index>(cfg.eval.n_samples), rng, cfg.eval.ode_steps);
    if (!r.warning.empty()) std::fprintf(stderr, "warning: nfe=%d: %s\n", k, r.warning.c_str());
    write_text(cfg.output_dir / ("kl_nfe" + std::to_string(k) + ".json"),
               eval::to_json(r).dump(2) + "\n");
    reports.push_back(std::move(r));
  }
  write_manifest(cfg.output_dir);
  return reports;
}

fs::path cmd_ablate(const RunConfig& cfg, const std::string& axis,
                    const std::vector<std::string>& values) {
  if (axis != "u_strategy" && axis != "tau" && axis != "mu")
    throw ConfigError("ablate: axis must be one of u_strategy, tau, mu");
  if (values.empty()) throw ConfigError("ablate: at least one value is required");
  std::vector<RunConfig> legs;
  for (const auto& v : values) {
    RunConfig leg = cfg;
    auto& l = leg.train.loss;
    try {
      if (axis == "u_strategy") {
        l.u_strategy = losses::u_strategy_from_string(v);
      } else {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        (axis == "tau" ? l.tau : l.mu) = x;
      }
    } catch (const ConfigError& e) {
      throw ConfigError("ablate value '" + v + "': " + e.what());
    } catch (const std::exception&) {
      throw ConfigError("ablate value '" + v + "': expected a number");
    }
    leg.output_dir = cfg.output_dir / (axis + "=" + v);
    leg.validate();
    legs.push_back(std::move(leg));
  }
  std::string summary = axis + ",nfe,estimate,std_error,n,dropped\n";
  for (std::size_t i = 0; i < legs.size(); ++i) {
    RunConfig leg = legs[i];
    leg.student_checkpoint = cmd_distill(leg);
    for (const auto& r : cmd_eval_kl(leg)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, ",%d,%.17g,%.17g,%lld,%lld\n", r.nfe, r.estimate,
                    r.std_error, static_cast<long long>(r.n), static_cast<long long>(r.dropped));
      summary += values[i] + buf;
    }
  }
  const fs::path out = cfg.output_dir / "summary.csv";
  write_text(out, summary);
  write_manifest(cfg.output_dir);
  return out;
}

fs::path cmd_plot(const RunConfig& cfg, const fs::path& input, const fs::path& out) {
  std::string svg;
  if (input.extension() == ".jsonl") {
    std::ifstream in(input);
    if (!in) throw std::runtime_error("cannot read " + input.string());
    std::vector<double> iters, loss;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        const json r = json::parse(line);
        iters.push_back(r.at("iter").get<double>());
        loss.push_back(r.at("loss").get<double>());
      } catch (const json::exception& e) {
        throw FormatError(input.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    }
    svg = loss_curve_svg(iters, loss, input.filename().string());
  } else {
    svg = scatter_svg(datasets::load_csv(input), cfg.seed, input.filename().string());
  }
  const fs::path target = out.is_absolute() || out.has_parent_path() ? out : cfg.output_dir / out;
  write_text(target, svg);
  if (fs::exists(cfg.output_dir)) write_manifest(cfg.output_dir);
  return target;
}

}  // namespace ttfm::cli
