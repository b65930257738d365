#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ttfm/common.hpp"

namespace ttfm::nn {

enum class Activation { Elu };

/// Fully-connected stack: n_hidden blocks of (linear -> activation), then a linear output layer.
struct MlpSpec {
  int in_dim = 0;
  int hidden_width = 0;
  int n_hidden = 1;
  int out_dim = 0;
  Activation activation = Activation::Elu;

  void validate() const;
  int n_layers() const { return n_hidden + 1; }
  bool operator==(const MlpSpec&) const = default;
};

/// Placement of one linear layer inside a ParamStore.
struct LayerSlot {
  std::string name;
  Eigen::Index rows = 0;  // fan-out
  Eigen::Index cols = 0;  // fan-in
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

/// Flat parameter vector plus the layer map describing it. Layer i stores its
/// rows x cols weight (column-major) followed by its bias.
class ParamStore {
 public:
  ParamStore() = default;
  /// Zero-filled store laid out for `spec`.
  explicit ParamStore(const MlpSpec& spec);

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const std::vector<LayerSlot>& layout() const { return layout_; }
  std::size_t n_layers() const { return layout_.size(); }

  Vec& values() { return values_; }
  const Vec& values() const { return values_; }

  Eigen::Map<Mat> weight(std::size_t layer);
  Eigen::Map<const Mat> weight(std::size_t layer) const;
  Eigen::Map<Vec> bias(std::size_t layer);
  Eigen::Map<const Vec> bias(std::size_t layer) const;

  bool same_layout(const ParamStore& other) const;

  /// Raw little-endian float64 payload, size() * 8 bytes.
  void write_payload(std::ostream& out) const;
  /// Reads size() values into this store.
  void read_payload(std::istream& in);

 private:
  Vec values_;
  std::vector<LayerSlot> layout_;
};

/// He-style fan-in uniform initialization: weights ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
/// biases zero. Layer i draws from Rng(derive_seed(seed, "layer<i>")).
ParamStore init_params(const MlpSpec& spec, std::uint64_t seed);

}  // namespace ttfm::nn
