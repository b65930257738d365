#include "ttfm/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace ttfm::nn {

using nlohmann::json;

const ParamStore& Checkpoint::payload(const std::string& name) const {
  for (const auto& [n, p] : payloads)
    if (n == name) return p;
  throw FormatError("checkpoint has no payload named '" + name + "'");
}

bool Checkpoint::has_payload(const std::string& name) const {
  for (const auto& entry : payloads)
    if (entry.first == name) return true;
  return false;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = "ttfm-checkpoint-v1";
  header["kind"] = ckpt.kind;
  header["dim"] = ckpt.dim;
  header["pe_dim"] = ckpt.pe_dim;
  header["mlp"] = {{"in_dim", ckpt.mlp.in_dim},
                   {"hidden_width", ckpt.mlp.hidden_width},
                   {"n_hidden", ckpt.mlp.n_hidden},
                   {"out_dim", ckpt.mlp.out_dim},
                   {"activation", "elu"}};
  header["sigma_min"] = ckpt.sigma_min;
  header["seed"] = ckpt.seed;
  header["iteration"] = ckpt.iteration;
  header["extra"] = ckpt.extra;
  json payloads = json::array();
  for (const auto& [name, store] : ckpt.payloads)
    payloads.push_back({{"name", name}, {"length", store.size()}});
  header["payloads"] = payloads;

  std::ostringstream out(std::ios::binary);
  out << header.dump() << '\n';
  for (const auto& entry : ckpt.payloads) entry.second.write_payload(out);
  return out.str();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos) throw FormatError("checkpoint: missing header line");
  json header;
  try {
    header = json::parse(bytes.substr(0, newline));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  }
  if (header.value("format", "") != "ttfm-checkpoint-v1")
    throw FormatError("checkpoint: unknown format tag");

  Checkpoint ckpt;
  ckpt.kind = header.at("kind").get<std::string>();
  ckpt.dim = header.at("dim").get<int>();
  ckpt.pe_dim = header.at("pe_dim").get<int>();
  const json& m = header.at("mlp");
  ckpt.mlp = MlpSpec{m.at("in_dim").get<int>(), m.at("hidden_width").get<int>(),
                     m.at("n_hidden").get<int>(), m.at("out_dim").get<int>(), Activation::Elu};
  ckpt.sigma_min = header.at("sigma_min").get<double>();
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  ckpt.iteration = header.at("iteration").get<std::uint64_t>();
  ckpt.extra = header.value("extra", json::object());

  std::istringstream in(bytes.substr(newline + 1), std::ios::binary);
  for (const json& p : header.at("payloads")) {
    ParamStore store(ckpt.mlp);
    if (store.size() != p.at("length").get<std::size_t>())
      throw FormatError("checkpoint: payload length does not match the MLP spec");
    store.read_payload(in);
    ckpt.payloads.emplace_back(p.at("name").get<std::string>(), std::move(store));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("checkpoint: trailing bytes after payloads");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_checkpoint(buf.str());
}

TeacherNet teacher_from_checkpoint(const Checkpoint& ckpt, const std::string& payload) {
  if (ckpt.kind != "teacher") throw FormatError("checkpoint is a " + ckpt.kind + ", not a teacher");
  TeacherNet net(ckpt.dim, ckpt.mlp.hidden_width, ckpt.mlp.n_hidden, ckpt.pe_dim);
  net.set_params(ckpt.payload(payload));
  return net;
}

StudentAvm student_from_checkpoint(const Checkpoint& ckpt, const std::string& payload) {
  if (ckpt.kind != "student") throw FormatError("checkpoint is a " + ckpt.kind + ", not a student");
  StudentAvm net(ckpt.dim, ckpt.mlp.hidden_width, ckpt.mlp.n_hidden, ckpt.pe_dim);
  net.set_params(ckpt.payload(payload));
  return net;
}

}  // namespace ttfm::nn
