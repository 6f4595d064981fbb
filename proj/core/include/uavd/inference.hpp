#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "uavd/dataset.hpp"
#include "uavd/metrics.hpp"
#include "uavd/model.hpp"
#include "uavd/tokenizer.hpp"

namespace uavd {

/// Greedy response for one prompt; decoding stops at EOS, `max_new`, or the
/// end of the context window.
DecodedResponse respond(const ModelState& model, const Tokenizer& tok, std::string_view prompt_context,
                        std::string_view instruction, int max_new);

/// Same, rendered as the text format `evaluate` consumes.
std::string respond_text(const ModelState& model, const Tokenizer& tok, std::string_view prompt_context,
                         std::string_view instruction, int max_new);

/// Greedy responses for every sample of a split, in corpus order.
std::vector<std::string> respond_split(const ModelState& model, const Tokenizer& tok, const Corpus& corpus,
                                       Split split, int max_new);

/// Generates for a split and scores it; token accuracy is teacher-forced.
EvalMetrics evaluate_split(const ModelState& model, const Tokenizer& tok, const Corpus& corpus, Split split,
                           const std::vector<SdkSchema>& schemas, int max_new);

}  // namespace uavd
