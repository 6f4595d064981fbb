#include "uavd/generate.hpp"

#include <chrono>

#include "uavd/error.hpp"
#include "uavd/loss.hpp"
#include "uavd/rng.hpp"
#include "uavd/transformer.hpp"

namespace uavd {

GenResult generate(const ModelState& model, std::span<const TokenId> prompt, int max_new, const DecodeOptions& opts) {
  check_tokens(model.config, prompt);
  if (max_new < 1) throw InputError("max_new must be >= 1");
  if (!opts.greedy && !(opts.temperature > 0.0)) throw ConfigError("sampling temperature must be > 0");

  GenResult res;
  Rng rng(opts.seed);
  const auto prefill_start = std::chrono::steady_clock::now();
  IncrementalDecoder<float> dec(model);
  RowVec<float> logits;
  for (TokenId t : prompt) logits = dec.step(t);
  const auto start = std::chrono::steady_clock::now();
  res.timing.prefill_seconds = std::chrono::duration<double>(start - prefill_start).count();

  for (int i = 0; i < max_new && dec.position() < model.config.max_seq_len; ++i) {
    TokenId next;
    if (opts.greedy) {
      Eigen::Index arg;
      logits.maxCoeff(&arg);
      next = static_cast<TokenId>(arg);
    } else {
      RowVec<float> p = softmax_t<float>(logits, opts.temperature);
      double u = rng.uniform(), acc = 0;
      next = static_cast<TokenId>(p.size() - 1);
      for (Eigen::Index j = 0; j < p.size(); ++j) {
        acc += p(j);
        if (u < acc) {
          next = static_cast<TokenId>(j);
          break;
        }
      }
    }
    res.tokens.push_back(next);
    if (next == opts.stop_token || i + 1 == max_new) break;
    // `next` sits at position dec.position(); the sequence may not outgrow the window.
    if (dec.position() + 1 >= model.config.max_seq_len) break;
    logits = dec.step(next);
  }

  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.timing.emitted_tokens = res.tokens.size();
  res.timing.elapsed_seconds = elapsed;
  res.timing.tokens_per_second = elapsed > 0 ? static_cast<double>(res.tokens.size()) / elapsed : 0.0;
  return res;
}

}  // namespace uavd
