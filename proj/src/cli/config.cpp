#include "ttfm/cli/config.hpp"

#include <fstream>
#include <set>

namespace ttfm::cli {

using nlohmann::json;

namespace {

/// Walks one JSON object, remembering its path and which keys were consumed.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where("") + ": expected an object");
  }

  std::string where(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0) {
          out = v->get<Int>();
          return;
        }
        throw ConfigError(where(key) + ": expected a non-negative integer");
      } else {
        out = v->get<Int>();
      }
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      out = v->get<std::string>();
    }
  }

  void path(const std::string& key, std::filesystem::path& out) {
    std::string s;
    if (has(key)) {
      string(key, s);
      out = s;
    } else {
      get(key);
    }
  }

  template <typename Fn>
  void enumeration(const std::string& key, Fn&& parse) {
    if (const json* v = get(key)) {
      if (!v->is_string()) throw ConfigError(where(key) + ": expected a string");
      try {
        parse(v->get<std::string>());
      } catch (const ConfigError& e) {
        throw ConfigError(where(key) + ": " + e.what());
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + ": unknown field");
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_net(Section& parent, const std::string& key, NetConfig& net) {
  const json* v = parent.get(key);
  if (!v) return;
  Section s(*v, parent.where(key));
  s.integer("hidden_width", net.hidden_width);
  s.integer("n_hidden", net.n_hidden);
  s.integer("pe_dim", net.pe_dim);
  s.finish();
}

json net_json(const NetConfig& n) {
  return {{"hidden_width", n.hidden_width}, {"n_hidden", n.n_hidden}, {"pe_dim", n.pe_dim}};
}

void check_net(const NetConfig& n, const std::string& where) {
  if (n.hidden_width < 1) throw ConfigError(where + ".hidden_width must be >= 1");
  if (n.n_hidden < 1) throw ConfigError(where + ".n_hidden must be >= 1");
  if (n.pe_dim < 2 || n.pe_dim % 2 != 0)
    throw ConfigError(where + ".pe_dim must be a positive even number");
}

}  // namespace

void RunConfig::validate() const {
  if (!(path.sigma_min > 0.0 && path.sigma_min < 1.0))
    throw ConfigError("path.sigma_min must satisfy 0 < sigma_min < 1");
  check_net(teacher, "teacher");
  check_net(student, "student");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.total_examples % train.batch_size != 0)
    throw ConfigError("train.total_examples must be a multiple of train.batch_size");
  if (!(train.adam.lr_peak > 0.0)) throw ConfigError("train.lr must be > 0");
  if (!(train.test_ema_decay >= 0.0 && train.test_ema_decay < 1.0))
    throw ConfigError("train.test_ema_decay must satisfy 0 <= decay < 1");
  train.loss.validate();
  if (eval.nfe.empty()) throw ConfigError("eval.nfe must be nonempty");
  for (int k : eval.nfe)
    if (k < 1) throw ConfigError("eval.nfe entries must be >= 1");
  if (eval.ode_steps < 1) throw ConfigError("eval.ode_steps must be >= 1");
  if (dataset.kind == datasets::DatasetKind::CsvPointCloud) {
    if (dataset.csv_path.empty()) throw ConfigError("dataset.csv_path is required for kind csv");
    if (!std::filesystem::exists(dataset.csv_path))
      throw ConfigError("dataset.csv_path: file not found: " + dataset.csv_path.string());
  } else if (dataset.n_points < 1) {
    throw ConfigError("dataset.n_points must be >= 1");
  }
  if (!teacher_checkpoint.empty() && !std::filesystem::exists(teacher_checkpoint))
    throw ConfigError("teacher_checkpoint: file not found: " + teacher_checkpoint.string());
  if (!student_checkpoint.empty() && !std::filesystem::exists(student_checkpoint))
    throw ConfigError("student_checkpoint: file not found: " + student_checkpoint.string());
}

RunConfig config_from_json(const json& doc) {
  RunConfig cfg;
  Section root(doc, "");
  root.integer("seed", cfg.seed);
  root.path("output_dir", cfg.output_dir);
  root.path("teacher_checkpoint", cfg.teacher_checkpoint);
  root.path("student_checkpoint", cfg.student_checkpoint);

  if (const json* v = root.get("dataset")) {
    Section s(*v, "dataset");
    s.enumeration("kind", [&](const std::string& k) { cfg.dataset.kind = datasets::dataset_kind_from_string(k); });
    s.integer("n_points", cfg.dataset.n_points);
    s.integer("seed", cfg.dataset.seed);
    s.path("csv_path", cfg.dataset.csv_path);
    s.finish();
  }
  if (const json* v = root.get("path")) {
    Section s(*v, "path");
    s.number("sigma_min", cfg.path.sigma_min);
    s.finish();
  }
  read_net(root, "teacher", cfg.teacher);
  read_net(root, "student", cfg.student);

  if (const json* v = root.get("train")) {
    Section s(*v, "train");
    auto& t = cfg.train;
    s.integer("batch_size", t.batch_size);
    if (s.has("iterations") && s.has("total_examples"))
      throw ConfigError("train: give either iterations or total_examples, not both");
    std::size_t iters = 0;
    if (s.has("iterations")) {
      s.integer("iterations", iters);
      t.total_examples = iters * t.batch_size;
    } else {
      s.get("iterations");
      s.integer("total_examples", t.total_examples);
    }
    s.integer("eval_every", t.eval_every);
    s.integer("checkpoint_every", t.checkpoint_every);
    s.number("lr", t.adam.lr_peak);
    s.integer("warmup_iters", t.adam.warmup_iters);
    s.number("beta1", t.adam.beta1);
    s.number("beta2", t.adam.beta2);
    s.number("eps", t.adam.eps);
    s.number("test_ema_decay", t.test_ema_decay);
    s.finish();
  }
  if (const json* v = root.get("loss")) {
    Section s(*v, "loss");
    auto& l = cfg.train.loss;
    s.enumeration("kind", [&](const std::string& k) { l.kind = losses::loss_kind_from_string(k); });
    s.number("tau", l.tau);
    s.number("mu", l.mu);
    s.enumeration("u_strategy", [&](const std::string& k) { l.u_strategy = losses::u_strategy_from_string(k); });
    s.enumeration("efmd_sign", [&](const std::string& k) { l.efmd_sign = losses::efmd_sign_from_string(k); });
    if (const json* w = s.get("term_weights")) {
      if (!w->is_array() || w->size() != 3)
        throw ConfigError("loss.term_weights: expected an array of 3 numbers");
      for (std::size_t i = 0; i < 3; ++i) {
        if (!(*w)[i].is_number())
          throw ConfigError("loss.term_weights[" + std::to_string(i) + "]: expected a number");
        l.term_weights[i] = (*w)[i].get<double>();
      }
    }
    s.finish();
  }
  if (const json* v = root.get("eval")) {
    Section s(*v, "eval");
    if (const json* n = s.get("nfe")) {
      if (!n->is_array()) throw ConfigError("eval.nfe: expected an array of integers");
      cfg.eval.nfe.clear();
      for (std::size_t i = 0; i < n->size(); ++i) {
        if (!(*n)[i].is_number_integer())
          throw ConfigError("eval.nfe[" + std::to_string(i) + "]: expected an integer");
        cfg.eval.nfe.push_back((*n)[i].get<int>());
      }
    }
    s.integer("n_samples", cfg.eval.n_samples);
    s.integer("ode_steps", cfg.eval.ode_steps);
    s.finish();
  }
  root.finish();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.string();
  j["dataset"] = {{"kind", datasets::to_string(cfg.dataset.kind)},
                  {"n_points", cfg.dataset.n_points},
                  {"seed", cfg.dataset.seed},
                  {"csv_path", cfg.dataset.csv_path.string()}};
  j["path"] = {{"sigma_min", cfg.path.sigma_min}};
  j["teacher"] = net_json(cfg.teacher);
  j["student"] = net_json(cfg.student);
  const auto& t = cfg.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"total_examples", t.total_examples},
                {"eval_every", t.eval_every},
                {"checkpoint_every", t.checkpoint_every},
                {"lr", t.adam.lr_peak},
                {"warmup_iters", t.adam.warmup_iters},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"eps", t.adam.eps},
                {"test_ema_decay", t.test_ema_decay}};
  const auto& l = t.loss;
  j["loss"] = {{"kind", losses::to_string(l.kind)},
               {"tau", l.tau},
               {"mu", l.mu},
               {"u_strategy", losses::to_string(l.u_strategy)},
               {"efmd_sign", losses::to_string(l.efmd_sign)},
               {"term_weights", l.term_weights}};
  j["eval"] = {{"nfe", cfg.eval.nfe},
               {"n_samples", cfg.eval.n_samples},
               {"ode_steps", cfg.eval.ode_steps}};
  j["teacher_checkpoint"] = cfg.teacher_checkpoint.string();
  j["student_checkpoint"] = cfg.student_checkpoint.string();
  return j;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot read config file " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace ttfm::cli
