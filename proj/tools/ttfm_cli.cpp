// Command-line entry point: ttfm <verb> [--config f] [--seed n] [--output dir] ...

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ttfm/cli/commands.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run config");
  app->add_option("--seed", c.seed, "Run seed (overrides the config)");
  app->add_option("--output", c.output, "Output directory (overrides the config)");
}

ttfm::cli::RunConfig resolve(const Common& c) {
  ttfm::cli::RunConfig cfg;
  if (!c.config.empty()) cfg = ttfm::cli::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.output.empty()) cfg.output_dir = c.output;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  ttfm::configure_allocator();
  CLI::App app{"Two-timed flow model distillation toolkit"};
  app.require_subcommand(1);

  Common c_dataset, c_teacher, c_distill, c_sample, c_eval, c_ablate, c_plot;

  auto* dataset = app.add_subcommand("dataset", "Generate the configured dataset as CSV");
  add_common(dataset, c_dataset);

  auto* teacher = app.add_subcommand("train-teacher", "Train a flow-matching teacher");
  add_common(teacher, c_teacher);

  auto* distill = app.add_subcommand("distill", "Distill a student from a teacher checkpoint");
  add_common(distill, c_distill);
  std::string distill_teacher;
  distill->add_option("--teacher", distill_teacher, "Teacher checkpoint");

  auto* sample = app.add_subcommand("sample", "Draw samples from a student checkpoint");
  add_common(sample, c_sample);
  std::string sample_student;
  int sample_nfe = 1;
  std::size_t sample_n = 10000;
  sample->add_option("--student", sample_student, "Student checkpoint");
  sample->add_option("--nfe", sample_nfe, "Number of function evaluations")->check(CLI::PositiveNumber);
  sample->add_option("-n,--n", sample_n, "Number of samples");

  auto* eval = app.add_subcommand("eval-kl", "KL estimate of a student against its teacher");
  add_common(eval, c_eval);
  std::string eval_student, eval_teacher;
  std::vector<int> eval_nfe;
  std::optional<std::size_t> eval_n;
  eval->add_option("--student", eval_student, "Student checkpoint");
  eval->add_option("--teacher", eval_teacher, "Teacher checkpoint");
  eval->add_option("--nfe", eval_nfe, "NFE list (overrides eval.nfe)");
  eval->add_option("-n,--n", eval_n, "Samples per NFE (overrides eval.n_samples)");

  auto* ablate = app.add_subcommand("ablate", "Sweep one loss hyperparameter (distill + eval-kl per value)");
  add_common(ablate, c_ablate);
  std::string ablate_axis, ablate_teacher;
  std::vector<std::string> ablate_values;
  ablate->add_option("--axis", ablate_axis, "u_strategy, tau or mu")->required();
  ablate->add_option("--values", ablate_values, "Values to sweep")->required();
  ablate->add_option("--teacher", ablate_teacher, "Teacher checkpoint");

  auto* plot = app.add_subcommand("plot", "SVG scatter (CSV input) or loss curve (JSONL input)");
  add_common(plot, c_plot);
  std::string plot_input, plot_out = "plot.svg";
  plot->add_option("input", plot_input, "Points CSV or telemetry JSONL")->required();
  plot->add_option("--svg", plot_out, "Output SVG file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dataset) {
      std::cout << ttfm::cli::cmd_dataset(resolve(c_dataset)).string() << '\n';
    } else if (*teacher) {
      std::cout << ttfm::cli::cmd_train_teacher(resolve(c_teacher)).string() << '\n';
    } else if (*distill) {
      auto cfg = resolve(c_distill);
      if (!distill_teacher.empty()) cfg.teacher_checkpoint = distill_teacher;
      std::cout << ttfm::cli::cmd_distill(cfg).string() << '\n';
    } else if (*sample) {
      auto cfg = resolve(c_sample);
      if (!sample_student.empty()) cfg.student_checkpoint = sample_student;
      std::cout << ttfm::cli::cmd_sample(cfg, sample_nfe, sample_n).string() << '\n';
    } else if (*eval) {
      auto cfg = resolve(c_eval);
      if (!eval_student.empty()) cfg.student_checkpoint = eval_student;
      if (!eval_teacher.empty()) cfg.teacher_checkpoint = eval_teacher;
      if (!eval_nfe.empty()) cfg.eval.nfe = eval_nfe;
      if (eval_n) cfg.eval.n_samples = *eval_n;
      for (const auto& r : ttfm::cli::cmd_eval_kl(cfg))
        std::cout << ttfm::eval::to_json(r).dump() << '\n';
    } else if (*ablate) {
      auto cfg = resolve(c_ablate);
      if (!ablate_teacher.empty()) cfg.teacher_checkpoint = ablate_teacher;
      std::cout << ttfm::cli::cmd_ablate(cfg, ablate_axis, ablate_values).string() << '\n';
    } else if (*plot) {
      std::cout << ttfm::cli::cmd_plot(resolve(c_plot), plot_input, plot_out).string() << '\n';
    }
  } catch (const ttfm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
