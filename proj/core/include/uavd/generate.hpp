#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uavd/model.hpp"

namespace uavd {

struct DecodeOptions {
  bool greedy = true;
  double temperature = 1.0;  // sampling only
  std::uint64_t seed = 0;    // sampling only
  TokenId stop_token = kEos;
};

/// Decode-phase timing; prompt ingestion is reported separately.
struct GenTiming {
  std::size_t emitted_tokens = 0;
  double prefill_seconds = 0;
  double elapsed_seconds = 0;
  double tokens_per_second = 0;
};

struct GenResult {
  std::vector<TokenId> tokens;  // new tokens, including the stop token if emitted
  GenTiming timing;
};

/// Autoregressive continuation with a key/value cache. Halts at the stop token,
/// after `max_new` tokens, or when the context window is full.
GenResult generate(const ModelState& model, std::span<const TokenId> prompt, int max_new,
                   const DecodeOptions& opts = {});

}  // namespace uavd
