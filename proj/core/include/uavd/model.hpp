#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uavd/tokenizer.hpp"

namespace uavd {

enum class Precision { kF32, kF64 };

struct ModelConfig {
  int n_layers = 2;
  int d_model = 64;
  int n_heads = 2;
  int d_ff = 256;
  int vocab_size = 0;
  int max_seq_len = 0;
  Precision precision = Precision::kF32;

  /// Throws ConfigError on any violated invariant.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;

  static ModelConfig teacher_preset(int vocab_size, int max_seq_len);
  static ModelConfig student_preset(int vocab_size, int max_seq_len);
};

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class S>
using RowVec = Eigen::Matrix<S, 1, Eigen::Dynamic>;

/// Flat parameter/gradient storage. A fixed base alignment keeps Eigen's
/// vectorized loop splits, and therefore float rounding, identical across runs.
template <class S>
using FlatVec = std::vector<S, Eigen::aligned_allocator<S>>;

struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  bool decay = false;

  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

/// Flat-buffer offsets for one decoder block. Keys carry no bias: softmax is
/// invariant to it, so its gradient is identically zero.
struct LayerSlots {
  std::size_t ln1_g, ln1_b, wq, bq, wk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
};

/// Parameter layout: a pure function of ModelConfig.
struct ParamLayout {
  std::vector<TensorInfo> tensors;
  std::vector<LayerSlots> layers;
  std::size_t tok_emb = 0, pos_emb = 0, lnf_g = 0, lnf_b = 0, w_out = 0, b_out = 0;
  std::size_t total = 0;

  static ParamLayout build(const ModelConfig& cfg);
  const TensorInfo* find(std::string_view name) const;
};

/// Closed-form parameter count of a config.
std::size_t parameter_count(const ModelConfig& cfg);

template <class S>
struct BasicModel {
  ModelConfig config;
  ParamLayout layout;
  FlatVec<S> params;
  long step = 0;

  BasicModel() = default;
  explicit BasicModel(const ModelConfig& cfg);

  /// N(0, 0.02) weights, zero biases, unit norm gains.
  void init(std::uint64_t seed);

  Eigen::Map<const Mat<S>> mat(std::size_t offset, int rows, int cols) const {
    return Eigen::Map<const Mat<S>>(params.data() + offset, rows, cols);
  }
  Eigen::Map<const RowVec<S>> vec(std::size_t offset, int n) const {
    return Eigen::Map<const RowVec<S>>(params.data() + offset, n);
  }
};

using ModelState = BasicModel<float>;
using ModelStateF64 = BasicModel<double>;

template <class To, class From>
BasicModel<To> convert_model(const BasicModel<From>& m) {
  BasicModel<To> out;
  out.config = m.config;
  out.config.precision = sizeof(To) == 8 ? Precision::kF64 : Precision::kF32;
  out.layout = m.layout;
  out.step = m.step;
  out.params.assign(m.params.begin(), m.params.end());
  return out;
}

}  // namespace uavd
