#pragma once

#include <span>
#include <vector>

#include "uavd/model.hpp"

namespace uavd {

template <class S>
struct ForwardResult {
  Mat<S> logits;  // [len x vocab]
  Mat<S> hidden;  // [len x d_model], output of the final norm
};

/// Activations kept for the backward pass.
template <class S>
struct LayerCache {
  Mat<S> x_in, xhat1, a, q, k, v, ctx, x_mid, xhat2, m, u, z;
  RowVec<S> rstd1, rstd2;
  std::vector<Mat<S>> probs;  // per head, causal [len x len]
};

template <class S>
struct ForwardCache {
  std::vector<TokenId> tokens;
  std::vector<LayerCache<S>> layers;
  Mat<S> x_final, xhat_f;
  RowVec<S> rstd_f;
};

/// Test-only fault injection for gradient-check sensitivity.
struct BackwardOptions {
  bool corrupt_gelu_derivative = false;
};

/// Validates token ids and length; throws InputError.
void check_tokens(const ModelConfig& cfg, std::span<const TokenId> tokens);

template <class S>
ForwardResult<S> forward(const BasicModel<S>& model, std::span<const TokenId> tokens, ForwardCache<S>* cache = nullptr);

/// Accumulates parameter gradients into `grad` (same layout as params) given
/// upstream gradients for logits and (optionally) final hidden states.
template <class S>
void backward(const BasicModel<S>& model, const ForwardCache<S>& cache, const Mat<S>& d_logits, const Mat<S>* d_hidden,
              FlatVec<S>& grad, const BackwardOptions& opts = {});

/// Incremental single-sequence decoder with a key/value cache.
template <class S>
class IncrementalDecoder {
 public:
  explicit IncrementalDecoder(const BasicModel<S>& model);

  /// Feeds one token at the next position and returns its logits row.
  RowVec<S> step(TokenId token);
  int position() const { return pos_; }
  void reset();

 private:
  const BasicModel<S>& model_;
  std::vector<Mat<S>> k_cache_, v_cache_;
  int pos_ = 0;
};

}  // namespace uavd
