#include "ttfm/nn/params.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>

#include "ttfm/rng.hpp"

namespace ttfm::nn {

void MlpSpec::validate() const {
  if (in_dim < 1 || hidden_width < 1 || out_dim < 1)
    throw ConfigError("MLP dimensions must be >= 1");
  if (n_hidden < 1) throw ConfigError("MLP needs at least one hidden block");
}

ParamStore::ParamStore(const MlpSpec& spec) {
  spec.validate();
  std::size_t offset = 0;
  for (int i = 0; i < spec.n_layers(); ++i) {
    LayerSlot slot;
    slot.name = "layer" + std::to_string(i);
    slot.cols = i == 0 ? spec.in_dim : spec.hidden_width;
    slot.rows = i == spec.n_hidden ? spec.out_dim : spec.hidden_width;
    slot.weight_offset = offset;
    offset += static_cast<std::size_t>(slot.rows * slot.cols);
    slot.bias_offset = offset;
    offset += static_cast<std::size_t>(slot.rows);
    layout_.push_back(slot);
  }
  values_ = Vec::Zero(static_cast<Eigen::Index>(offset));
}

Eigen::Map<Mat> ParamStore::weight(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.weight_offset, s.rows, s.cols};
}

Eigen::Map<const Mat> ParamStore::weight(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.weight_offset, s.rows, s.cols};
}

Eigen::Map<Vec> ParamStore::bias(std::size_t layer) {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.bias_offset, s.rows};
}

Eigen::Map<const Vec> ParamStore::bias(std::size_t layer) const {
  const auto& s = layout_.at(layer);
  return {values_.data() + s.bias_offset, s.rows};
}

bool ParamStore::same_layout(const ParamStore& other) const {
  if (layout_.size() != other.layout_.size() || size() != other.size()) return false;
  for (std::size_t i = 0; i < layout_.size(); ++i) {
    if (layout_[i].rows != other.layout_[i].rows || layout_[i].cols != other.layout_[i].cols)
      return false;
  }
  return true;
}

void ParamStore::write_payload(std::ostream& out) const {
  std::vector<char> buf(size() * 8);
  for (std::size_t i = 0; i < size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(values_(static_cast<Eigen::Index>(i)));
    for (int b = 0; b < 8; ++b) buf[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void ParamStore::read_payload(std::istream& in) {
  std::vector<char> buf(size() * 8);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    throw FormatError("truncated parameter payload");
  for (std::size_t i = 0; i < size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i * 8 + b])) << (8 * b);
    values_(static_cast<Eigen::Index>(i)) = std::bit_cast<double>(bits);
  }
}

ParamStore init_params(const MlpSpec& spec, std::uint64_t seed) {
  ParamStore store(spec);
  for (std::size_t i = 0; i < store.n_layers(); ++i) {
    Rng rng(derive_seed(seed, store.layout()[i].name));
    auto w = store.weight(i);
    const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.uniform(-bound, bound);
  }
  return store;
}

}  // namespace ttfm::nn
